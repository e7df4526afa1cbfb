#pragma once

#include <span>
#include <vector>

#include "data/dataset.hpp"

namespace kpfc {

// Conservative keep-out geometry around a denormalized (world-coordinate)
// forecast, for downstream planners.
struct KeepOutBox {
  int frame_index = 0;  // 1-based within the horizon
  float min_x = 0.0f, min_y = 0.0f;
  float max_x = 0.0f, max_y = 0.0f;
  float margin = 0.0f;
};

// Per-frame axis-aligned bounding boxes of the 17 keypoints, inflated by
// `margin` on all sides. frames holds n_frames * 34 floats.
std::vector<KeepOutBox> keepout_boxes(std::span<const float> frames, int n_frames, float margin);
KeepOutBox union_box(const std::vector<KeepOutBox>& boxes);

struct Clearance {
  double distance = 0.0;
  int frame_index = 0;  // 1-based
  int joint_index = 0;  // 0-based
};

// Minimum Euclidean distance from a point to any predicted keypoint over the
// horizon; ties resolve to the lexicographically first (frame, joint).
Clearance min_clearance(std::span<const float> frames, int n_frames, float px, float py);

}  // namespace kpfc
