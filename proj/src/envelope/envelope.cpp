#include "envelope/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kpfc {

std::vector<KeepOutBox> keepout_boxes(std::span<const float> frames, int n_frames, float margin) {
  if (margin < 0.0f) fail(ErrorCode::InvalidArgument, "keepout_boxes: margin must be >= 0");
  if (n_frames < 1 || frames.size() != static_cast<size_t>(n_frames) * kFrameDim)
    fail(ErrorCode::Dimension, "keepout_boxes: frame buffer size disagrees with frame count");
  std::vector<KeepOutBox> boxes(static_cast<size_t>(n_frames));
  for (int f = 0; f < n_frames; ++f) {
    const float* frame = frames.data() + static_cast<size_t>(f) * kFrameDim;
    KeepOutBox box;
    box.frame_index = f + 1;
    box.margin = margin;
    box.min_x = box.max_x = frame[0];
    box.min_y = box.max_y = frame[1];
    for (int j = 1; j < kJoints; ++j) {
      box.min_x = std::min(box.min_x, frame[2 * j]);
      box.max_x = std::max(box.max_x, frame[2 * j]);
      box.min_y = std::min(box.min_y, frame[2 * j + 1]);
      box.max_y = std::max(box.max_y, frame[2 * j + 1]);
    }
    box.min_x -= margin;
    box.min_y -= margin;
    box.max_x += margin;
    box.max_y += margin;
    boxes[static_cast<size_t>(f)] = box;
  }
  return boxes;
}

KeepOutBox union_box(const std::vector<KeepOutBox>& boxes) {
  if (boxes.empty()) fail(ErrorCode::InvalidArgument, "union_box: empty box list");
  KeepOutBox u = boxes.front();
  u.frame_index = 0;
  for (const auto& b : boxes) {
    u.min_x = std::min(u.min_x, b.min_x);
    u.min_y = std::min(u.min_y, b.min_y);
    u.max_x = std::max(u.max_x, b.max_x);
    u.max_y = std::max(u.max_y, b.max_y);
  }
  return u;
}

Clearance min_clearance(std::span<const float> frames, int n_frames, float px, float py) {
  if (n_frames < 1 || frames.size() != static_cast<size_t>(n_frames) * kFrameDim)
    fail(ErrorCode::Dimension, "min_clearance: frame buffer size disagrees with frame count");
  Clearance best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int f = 0; f < n_frames; ++f) {
    const float* frame = frames.data() + static_cast<size_t>(f) * kFrameDim;
    for (int j = 0; j < kJoints; ++j) {
      const double dx = static_cast<double>(frame[2 * j]) - px;
      const double dy = static_cast<double>(frame[2 * j + 1]) - py;
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d < best.distance) {
        best.distance = d;
        best.frame_index = f + 1;
        best.joint_index = j;
      }
    }
  }
  return best;
}

}  // namespace kpfc
