#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core/error.hpp"

namespace kpfc {

inline constexpr int kJoints = 17;
inline constexpr int kCoords = 2;
inline constexpr int kFrameDim = kJoints * kCoords;

using FrameData = std::array<float, kFrameDim>;  // x0,y0,x1,y1,...

struct MotionClip {
  std::string clip_id;
  std::vector<FrameData> frames;
  int behavior = -1;  // optional class label, -1 when absent
  int fps = 30;
};

struct DenormParams {
  float cx = 0.0f;
  float cy = 0.0f;
  float scale = 1.0f;
};

// One training sample: a normalized input segment, normalized target segment,
// and the per-frame centroid/scale needed to map either back to world
// coordinates. Target frames carry their own normalization so the model
// learns per-frame shape dynamics, not global translation.
struct Window {
  int t_in = 0;
  int t_out = 0;
  std::vector<float> input;          // t_in * kFrameDim
  std::vector<float> target;         // t_out * kFrameDim
  std::vector<DenormParams> denorm;  // t_in + t_out entries
  std::string clip_id;
  int start = 0;
};

// JSON Lines, one frame per record:
//   {"clip_id": str, "frame": int, "kp": [[x, y] * 17]}
// Files may interleave clips; frames of a clip must form a contiguous index
// range once sorted.
std::vector<MotionClip> load_clips(const std::string& path);
void save_clips(const std::vector<MotionClip>& clips, const std::string& path);
// sidecar labels: {"clip_id": str, "behavior": int}
void save_labels(const std::vector<MotionClip>& clips, const std::string& path);

struct NormalizedFrame {
  FrameData frame;
  DenormParams params;
};

// Per-frame centering at the keypoint centroid and scaling by the maximum
// keypoint radius. A collapsed frame (radius < 1e-9) keeps scale 1.
NormalizedFrame normalize_frame(std::span<const float, kFrameDim> frame);
void denormalize_frame(std::span<const float, kFrameDim> frame, const DenormParams& params,
                       std::span<float, kFrameDim> out);

// f64 variants; the f32 entry points above delegate to these
std::array<double, kFrameDim> normalize_frame64(std::span<const double, kFrameDim> frame,
                                                double* cx, double* cy, double* scale);

std::vector<Window> make_windows(const MotionClip& clip, int t_in = 60, int t_out = 30, int step = 1);
std::vector<Window> make_windows(const std::vector<MotionClip>& clips, int t_in = 60, int t_out = 30,
                                 int step = 1);

// Seeded shuffle then prefix/suffix split with ceil(n * fraction) training
// windows. by_clip assigns whole clips to the training side until the target
// size is reached, trading exact proportions for zero temporal overlap.
std::pair<std::vector<Window>, std::vector<Window>> split_windows(std::vector<Window> windows,
                                                                  double train_fraction,
                                                                  uint64_t seed,
                                                                  bool by_clip = false);

}  // namespace kpfc
