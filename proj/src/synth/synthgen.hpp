#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "data/dataset.hpp"

namespace kpfc {

// Procedural motion source used for pretraining corpora: a canonical
// skeleton driven by per-joint sinusoidal oscillators plus whole-body sway
// and bounded jitter. Three behavior classes differ in their frequency and
// amplitude priors.
struct JointOscillator {
  float amp = 0.0f;      // unit-pose units
  float freq_hz = 1.0f;  // must stay below Nyquist at 30 FPS
  float phase = 0.0f;    // radians
  float dir_x = 1.0f;    // oscillation direction, unit length
  float dir_y = 0.0f;
};

struct BehaviorSpec {
  int behavior_id = 0;  // 0..2
  std::array<std::array<float, 2>, kJoints> base;
  std::array<JointOscillator, kJoints> osc;
  float sway_amp = 0.0f;
  float sway_freq_hz = 0.5f;
  float noise_sigma = 0.0f;  // per-coordinate jitter, clamped at +-3 sigma
};

enum class CorpusTier { T9K = 9000, T45K = 45000, T90K = 90000 };

// Frequency/amplitude priors: Pretrain is the large corpus distribution,
// RealLike shifts the priors and raises noise so fine-tuning has a genuine
// gap to cross.
enum class SynthProfile { Pretrain, RealLike };

inline constexpr int kBehaviorClasses = 3;

// Upright 17-joint pose with maximum keypoint radius ~1 around the centroid.
const std::array<std::array<float, 2>, kJoints>& canonical_skeleton();

BehaviorSpec sample_behavior_spec(int behavior_id, uint64_t seed, SynthProfile profile);

// joint_t = base + amp * sin(2 pi f t / fps + phase) * dir + sway_t + noise
MotionClip generate_clip(const BehaviorSpec& spec, int length, uint64_t seed,
                         const std::string& clip_id);

std::vector<MotionClip> generate_corpus(CorpusTier tier, uint64_t seed,
                                        SynthProfile profile = SynthProfile::Pretrain,
                                        int clip_len = 90);
// arbitrary-size variant used for desk-scale corpora
std::vector<MotionClip> generate_corpus_n(int count, uint64_t seed, SynthProfile profile,
                                          int clip_len = 90);

}  // namespace kpfc
