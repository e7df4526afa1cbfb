#include "synth/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/rng.hpp"

namespace kpfc {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kFps = 30.0;

// seed-stream salts; corpus clips draw from streams disjoint from direct
// generate_clip callers
constexpr uint64_t kSpecStream = 0xb1a5e5u;
constexpr uint64_t kCorpusClipStream = 0xc11b5u;

// COCO joint order: nose, eyes, ears, shoulders, elbows, wrists, hips,
// knees, ankles. y grows downward.
const std::array<std::array<float, 2>, kJoints> kCanonical = {{
    {0.00f, -0.95f},   // nose
    {-0.05f, -1.00f},  // left eye
    {0.05f, -1.00f},   // right eye
    {-0.12f, -0.95f},  // left ear
    {0.12f, -0.95f},   // right ear
    {-0.30f, -0.60f},  // left shoulder
    {0.30f, -0.60f},   // right shoulder
    {-0.42f, -0.20f},  // left elbow
    {0.42f, -0.20f},   // right elbow
    {-0.48f, 0.15f},   // left wrist
    {0.48f, 0.15f},    // right wrist
    {-0.18f, 0.10f},   // left hip
    {0.18f, 0.10f},    // right hip
    {-0.20f, 0.55f},   // left knee
    {0.20f, 0.55f},    // right knee
    {-0.22f, 1.00f},   // left ankle
    {0.22f, 1.00f},    // right ankle
}};

struct Prior {
  float freq_lo, freq_hi;
  float amp_lo, amp_hi;
  float arm_amp_lo, arm_amp_hi;  // elbows + wrists
  float sway_amp_lo, sway_amp_hi;
  float sway_freq_lo, sway_freq_hi;
  float noise_lo, noise_hi;
};

Prior class_prior(int behavior_id, SynthProfile profile) {
  Prior p{};
  switch (behavior_id) {
    case 0:  // slow full-body sway
      p = {0.3f, 1.0f, 0.03f, 0.10f, 0.05f, 0.12f, 0.06f, 0.15f, 0.2f, 0.5f, 0.002f, 0.006f};
      break;
    case 1:  // energetic arm swings
      p = {1.0f, 2.5f, 0.02f, 0.06f, 0.12f, 0.25f, 0.03f, 0.08f, 0.4f, 0.9f, 0.002f, 0.006f};
      break;
    default:  // fast small-amplitude bounce
      p = {2.0f, 4.5f, 0.01f, 0.05f, 0.03f, 0.08f, 0.02f, 0.05f, 0.8f, 1.6f, 0.003f, 0.008f};
      break;
  }
  if (profile == SynthProfile::RealLike) {
    p.freq_lo *= 1.4f;
    p.freq_hi *= 1.4f;
    p.amp_lo *= 1.25f;
    p.amp_hi *= 1.25f;
    p.arm_amp_lo *= 1.25f;
    p.arm_amp_hi *= 1.25f;
    p.noise_lo *= 3.0f;
    p.noise_hi *= 3.0f;
  }
  return p;
}

bool is_arm_joint(int j) { return j >= 7 && j <= 10; }
}  // namespace

const std::array<std::array<float, 2>, kJoints>& canonical_skeleton() { return kCanonical; }

BehaviorSpec sample_behavior_spec(int behavior_id, uint64_t seed, SynthProfile profile) {
  if (behavior_id < 0 || behavior_id >= kBehaviorClasses)
    fail(ErrorCode::InvalidArgument, "behavior id must be 0..2");
  const Prior prior = class_prior(behavior_id, profile);
  CounterRng rng(seed, kSpecStream);
  BehaviorSpec spec;
  spec.behavior_id = behavior_id;
  spec.base = kCanonical;
  for (int j = 0; j < kJoints; ++j) {
    auto& o = spec.osc[static_cast<size_t>(j)];
    const bool arm = is_arm_joint(j);
    o.amp = static_cast<float>(rng.uniform(arm ? prior.arm_amp_lo : prior.amp_lo,
                                           arm ? prior.arm_amp_hi : prior.amp_hi));
    o.freq_hz = static_cast<float>(rng.uniform(prior.freq_lo, prior.freq_hi));
    o.phase = static_cast<float>(rng.uniform(0.0, kTwoPi));
    const double theta = rng.uniform(0.0, kTwoPi);
    o.dir_x = static_cast<float>(std::cos(theta));
    o.dir_y = static_cast<float>(std::sin(theta));
  }
  spec.sway_amp = static_cast<float>(rng.uniform(prior.sway_amp_lo, prior.sway_amp_hi));
  spec.sway_freq_hz = static_cast<float>(rng.uniform(prior.sway_freq_lo, prior.sway_freq_hi));
  spec.noise_sigma = static_cast<float>(rng.uniform(prior.noise_lo, prior.noise_hi));
  return spec;
}

MotionClip generate_clip(const BehaviorSpec& spec, int length, uint64_t seed,
                         const std::string& clip_id) {
  if (length < 1) fail(ErrorCode::InvalidArgument, "generate_clip: length must be positive");
  for (const auto& o : spec.osc) {
    if (o.amp < 0.0f) fail(ErrorCode::InvalidArgument, "generate_clip: negative amplitude");
    if (!(o.freq_hz > 0.0f && o.freq_hz < 15.0f))
      fail(ErrorCode::InvalidArgument, "generate_clip: frequency must be in (0, 15) Hz");
  }
  if (!(spec.sway_freq_hz > 0.0f && spec.sway_freq_hz < 15.0f))
    fail(ErrorCode::InvalidArgument, "generate_clip: sway frequency must be in (0, 15) Hz");

  MotionClip clip;
  clip.clip_id = clip_id;
  clip.behavior = spec.behavior_id;
  clip.frames.resize(static_cast<size_t>(length));
  CounterRng noise(seed, 0x6e015eu);
  for (int t = 0; t < length; ++t) {
    auto& frame = clip.frames[static_cast<size_t>(t)];
    const double sway_arg = kTwoPi * spec.sway_freq_hz * t / kFps;
    const double sway_x = spec.sway_amp * std::sin(sway_arg);
    const double sway_y = 0.5 * spec.sway_amp * std::cos(sway_arg);
    for (int j = 0; j < kJoints; ++j) {
      const auto& o = spec.osc[static_cast<size_t>(j)];
      const double osc = o.amp * std::sin(kTwoPi * o.freq_hz * t / kFps + o.phase);
      double nx = 0.0, ny = 0.0;
      if (spec.noise_sigma > 0.0f) {
        nx = spec.noise_sigma * std::clamp(noise.normal(), -3.0, 3.0);
        ny = spec.noise_sigma * std::clamp(noise.normal(), -3.0, 3.0);
      }
      frame[static_cast<size_t>(2 * j)] =
          static_cast<float>(spec.base[static_cast<size_t>(j)][0] + osc * o.dir_x + sway_x + nx);
      frame[static_cast<size_t>(2 * j + 1)] =
          static_cast<float>(spec.base[static_cast<size_t>(j)][1] + osc * o.dir_y + sway_y + ny);
    }
  }
  return clip;
}

std::vector<MotionClip> generate_corpus_n(int count, uint64_t seed, SynthProfile profile,
                                          int clip_len) {
  if (count < 0) fail(ErrorCode::InvalidArgument, "generate_corpus: negative count");
  std::vector<MotionClip> clips;
  clips.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int behavior = i % kBehaviorClasses;
    const uint64_t spec_seed = hash3(seed, kSpecStream, static_cast<uint64_t>(i));
    const uint64_t clip_seed = hash3(seed, kCorpusClipStream, static_cast<uint64_t>(i));
    const BehaviorSpec spec = sample_behavior_spec(behavior, spec_seed, profile);
    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06d", i);
    clips.push_back(generate_clip(spec, clip_len, clip_seed, id));
  }
  return clips;
}

std::vector<MotionClip> generate_corpus(CorpusTier tier, uint64_t seed, SynthProfile profile,
                                        int clip_len) {
  return generate_corpus_n(static_cast<int>(tier), seed, profile, clip_len);
}

}  // namespace kpfc
