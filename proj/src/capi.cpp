// C ABI over the forecasting core: opaque handles, status codes, and a
// thread-local last-error message. No exception crosses this boundary.
#include "kpfc.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <string>

#include "bench/latency.hpp"
#include "data/dataset.hpp"
#include "envelope/envelope.hpp"
#include "nn/model.hpp"
#include "synth/synthgen.hpp"
#include "train/checkpoint.hpp"
#include "train/trainer.hpp"

struct kpfc_clips {
  std::vector<kpfc::MotionClip> clips;
  mutable std::vector<float> frame_cache;  // flattened frames of the last queried clip
  mutable size_t cached_index = SIZE_MAX;
};

struct kpfc_windows {
  std::vector<kpfc::Window> windows;
};

struct kpfc_model {
  kpfc::Model model;
};

namespace {

thread_local std::string g_last_error;

kpfc_status map_code(kpfc::ErrorCode code) {
  using kpfc::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return KPFC_ERR_INVALID_ARGUMENT;
    case ErrorCode::Dimension: return KPFC_ERR_DIMENSION;
    case ErrorCode::Parse: return KPFC_ERR_PARSE;
    case ErrorCode::Schema: return KPFC_ERR_SCHEMA;
    case ErrorCode::Io: return KPFC_ERR_IO;
    case ErrorCode::Format: return KPFC_ERR_FORMAT;
    case ErrorCode::Corrupt: return KPFC_ERR_CORRUPT;
    case ErrorCode::Numeric: return KPFC_ERR_NUMERIC;
    case ErrorCode::Contract: return KPFC_ERR_CONTRACT;
  }
  return KPFC_ERR_CONTRACT;
}

template <typename F>
kpfc_status guarded(F&& f) noexcept {
  try {
    f();
    return KPFC_OK;
  } catch (const kpfc::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KPFC_ERR_CONTRACT;
  } catch (...) {
    g_last_error = "unknown failure";
    return KPFC_ERR_CONTRACT;
  }
}

kpfc_status invalid(const char* msg) {
  g_last_error = msg;
  return KPFC_ERR_INVALID_ARGUMENT;
}

kpfc::ArchKind to_arch(kpfc_arch arch) {
  switch (arch) {
    case KPFC_ARCH_MLP: return kpfc::ArchKind::MLP;
    case KPFC_ARCH_LSTM: return kpfc::ArchKind::LSTM;
    case KPFC_ARCH_CNNLSTM: return kpfc::ArchKind::CNNLSTM;
    case KPFC_ARCH_TRANSFORMER: return kpfc::ArchKind::TRANSFORMER;
  }
  kpfc::fail(kpfc::ErrorCode::InvalidArgument, "unknown architecture value");
}

kpfc_arch from_arch(kpfc::ArchKind arch) { return static_cast<kpfc_arch>(static_cast<int>(arch)); }

}  // namespace

extern "C" {

const char* kpfc_version(void) { return "0.1.0"; }

const char* kpfc_status_name(kpfc_status status) {
  switch (status) {
    case KPFC_OK: return "ok";
    case KPFC_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case KPFC_ERR_DIMENSION: return "dimension";
    case KPFC_ERR_PARSE: return "parse";
    case KPFC_ERR_SCHEMA: return "schema";
    case KPFC_ERR_IO: return "io";
    case KPFC_ERR_FORMAT: return "format";
    case KPFC_ERR_CORRUPT: return "corrupt";
    case KPFC_ERR_NUMERIC: return "numeric";
    case KPFC_ERR_CONTRACT: return "contract";
  }
  return "unknown";
}

const char* kpfc_last_error(void) { return g_last_error.c_str(); }

const char* kpfc_arch_name(kpfc_arch arch) {
  switch (arch) {
    case KPFC_ARCH_MLP:
    case KPFC_ARCH_LSTM:
    case KPFC_ARCH_CNNLSTM:
    case KPFC_ARCH_TRANSFORMER: return kpfc::arch_name(to_arch(arch));
  }
  return "unknown";
}

kpfc_status kpfc_arch_from_name(const char* name, kpfc_arch* out) {
  if (!name || !out) return invalid("kpfc_arch_from_name: null argument");
  return guarded([&] { *out = from_arch(kpfc::arch_from_name(name)); });
}

/* ---- clips ------------------------------------------------------------- */

kpfc_status kpfc_clips_load(const char* path, kpfc_clips** out) {
  if (!path || !out) return invalid("kpfc_clips_load: null argument");
  return guarded([&] {
    auto handle = std::make_unique<kpfc_clips>();
    handle->clips = kpfc::load_clips(path);
    *out = handle.release();
  });
}

kpfc_status kpfc_clips_save(const kpfc_clips* clips, const char* path) {
  if (!clips || !path) return invalid("kpfc_clips_save: null argument");
  return guarded([&] { kpfc::save_clips(clips->clips, path); });
}

kpfc_status kpfc_clips_save_labels(const kpfc_clips* clips, const char* path) {
  if (!clips || !path) return invalid("kpfc_clips_save_labels: null argument");
  return guarded([&] { kpfc::save_labels(clips->clips, path); });
}

size_t kpfc_clips_count(const kpfc_clips* clips) { return clips ? clips->clips.size() : 0; }

const char* kpfc_clips_id(const kpfc_clips* clips, size_t index) {
  if (!clips || index >= clips->clips.size()) return nullptr;
  return clips->clips[index].clip_id.c_str();
}

size_t kpfc_clips_frame_count(const kpfc_clips* clips, size_t index) {
  if (!clips || index >= clips->clips.size()) return 0;
  return clips->clips[index].frames.size();
}

const float* kpfc_clips_frames(const kpfc_clips* clips, size_t index) {
  if (!clips || index >= clips->clips.size()) return nullptr;
  if (clips->cached_index != index) {
    const auto& frames = clips->clips[index].frames;
    clips->frame_cache.resize(frames.size() * kpfc::kFrameDim);
    for (size_t f = 0; f < frames.size(); ++f)
      std::copy(frames[f].begin(), frames[f].end(),
                clips->frame_cache.begin() + static_cast<int64_t>(f * kpfc::kFrameDim));
    clips->cached_index = index;
  }
  return clips->frame_cache.data();
}

int kpfc_clips_behavior(const kpfc_clips* clips, size_t index) {
  if (!clips || index >= clips->clips.size()) return -1;
  return clips->clips[index].behavior;
}

void kpfc_clips_free(kpfc_clips* clips) { delete clips; }

kpfc_status kpfc_synth_generate(int clip_count, uint64_t seed, kpfc_synth_profile profile,
                                int clip_len, kpfc_clips** out) {
  if (!out) return invalid("kpfc_synth_generate: null output");
  return guarded([&] {
    auto handle = std::make_unique<kpfc_clips>();
    handle->clips = kpfc::generate_corpus_n(
        clip_count, seed,
        profile == KPFC_SYNTH_REAL_LIKE ? kpfc::SynthProfile::RealLike : kpfc::SynthProfile::Pretrain,
        clip_len);
    *out = handle.release();
  });
}

/* ---- windows ------------------------------------------------------------ */

kpfc_status kpfc_windows_build(const kpfc_clips* clips, int t_in, int t_out, int step,
                               kpfc_windows** out) {
  if (!clips || !out) return invalid("kpfc_windows_build: null argument");
  return guarded([&] {
    auto handle = std::make_unique<kpfc_windows>();
    handle->windows = kpfc::make_windows(clips->clips, t_in, t_out, step);
    *out = handle.release();
  });
}

size_t kpfc_windows_count(const kpfc_windows* windows) {
  return windows ? windows->windows.size() : 0;
}

kpfc_status kpfc_windows_split(const kpfc_windows* windows, double train_fraction, uint64_t seed,
                               int by_clip, kpfc_windows** train_out, kpfc_windows** test_out) {
  if (!windows || !train_out || !test_out) return invalid("kpfc_windows_split: null argument");
  return guarded([&] {
    auto [train, test] = kpfc::split_windows(windows->windows, train_fraction, seed, by_clip != 0);
    auto train_handle = std::make_unique<kpfc_windows>();
    auto test_handle = std::make_unique<kpfc_windows>();
    train_handle->windows = std::move(train);
    test_handle->windows = std::move(test);
    *train_out = train_handle.release();
    *test_out = test_handle.release();
  });
}

void kpfc_windows_free(kpfc_windows* windows) { delete windows; }

/* ---- models ------------------------------------------------------------- */

kpfc_status kpfc_model_build(kpfc_arch arch, uint64_t seed, kpfc_model** out) {
  if (!out) return invalid("kpfc_model_build: null output");
  return guarded([&] {
    auto handle = std::make_unique<kpfc_model>();
    handle->model = kpfc::Model::build(to_arch(arch), seed);
    *out = handle.release();
  });
}

kpfc_status kpfc_model_load(const char* path, kpfc_model** out) {
  if (!path || !out) return invalid("kpfc_model_load: null argument");
  return guarded([&] {
    auto handle = std::make_unique<kpfc_model>();
    handle->model = kpfc::load_checkpoint(path).model;
    *out = handle.release();
  });
}

kpfc_status kpfc_model_save(const kpfc_model* model, const char* path) {
  if (!model || !path) return invalid("kpfc_model_save: null argument");
  return guarded([&] { kpfc::save_checkpoint(model->model, nullptr, path); });
}

kpfc_arch kpfc_model_arch(const kpfc_model* model) {
  return model ? from_arch(model->model.kind()) : KPFC_ARCH_MLP;
}

int64_t kpfc_model_param_count(const kpfc_model* model) {
  return model ? model->model.param_count() : 0;
}

kpfc_status kpfc_model_forward(kpfc_model* model, const float* input, float* output) {
  if (!model || !input || !output) return invalid("kpfc_model_forward: null argument");
  return guarded([&] {
    auto& m = model->model;
    const auto& h = m.hyper();
    m.set_mode(kpfc::Mode::Eval);
    kpfc::Tensor x = kpfc::Tensor::from(
        {1, h.t_in, h.joints, h.coords},
        std::vector<float>(input, input + static_cast<size_t>(h.t_in) * kpfc::kFrameDim));
    kpfc::Tensor y = m.forward(nullptr, x);
    std::copy(y.data().begin(), y.data().end(), output);
  });
}

kpfc_status kpfc_model_forecast(kpfc_model* model, const float* frames, float* out) {
  if (!model || !frames || !out) return invalid("kpfc_model_forecast: null argument");
  return guarded([&] {
    auto& m = model->model;
    const auto& h = m.hyper();
    std::vector<float> normalized(static_cast<size_t>(h.t_in) * kpfc::kFrameDim);
    kpfc::DenormParams last{};
    for (int f = 0; f < h.t_in; ++f) {
      std::span<const float, kpfc::kFrameDim> in_frame(frames + static_cast<size_t>(f) * kpfc::kFrameDim,
                                                       kpfc::kFrameDim);
      auto norm = kpfc::normalize_frame(in_frame);
      std::copy(norm.frame.begin(), norm.frame.end(),
                normalized.begin() + static_cast<int64_t>(f) * kpfc::kFrameDim);
      last = norm.params;
    }
    m.set_mode(kpfc::Mode::Eval);
    kpfc::Tensor x = kpfc::Tensor::from({1, h.t_in, h.joints, h.coords}, std::move(normalized));
    kpfc::Tensor y = m.forward(nullptr, x);
    // hold the last observed centroid/scale over the horizon: the model
    // predicts per-frame-normalized shape, true future centroids are unknown
    for (int f = 0; f < h.t_out; ++f) {
      std::span<const float, kpfc::kFrameDim> pred(y.raw() + static_cast<size_t>(f) * kpfc::kFrameDim,
                                                   kpfc::kFrameDim);
      std::span<float, kpfc::kFrameDim> dst(out + static_cast<size_t>(f) * kpfc::kFrameDim,
                                            kpfc::kFrameDim);
      kpfc::denormalize_frame(pred, last, dst);
    }
  });
}

void kpfc_model_free(kpfc_model* model) { delete model; }

/* ---- training ----------------------------------------------------------- */

void kpfc_train_config_defaults(kpfc_arch arch, kpfc_train_config* out) {
  if (!out) return;
  kpfc::TrainConfig cfg;
  switch (arch) {
    case KPFC_ARCH_MLP:
    case KPFC_ARCH_LSTM:
    case KPFC_ARCH_CNNLSTM:
    case KPFC_ARCH_TRANSFORMER: cfg = kpfc::TrainConfig::defaults(to_arch(arch)); break;
    default: cfg = kpfc::TrainConfig{};
  }
  out->lr = cfg.lr;
  out->epochs = cfg.epochs;
  out->batch_size = cfg.batch_size;
  out->weight_decay = cfg.weight_decay;
  out->beta1 = cfg.beta1;
  out->beta2 = cfg.beta2;
  out->eps = cfg.eps;
  out->seed = cfg.seed;
  out->checkpoint_every = cfg.checkpoint_every;
}

kpfc_status kpfc_train(kpfc_model* model, const kpfc_windows* train_windows,
                       const kpfc_windows* eval_windows_or_null, const kpfc_train_config* config,
                       const char* checkpoint_path, kpfc_epoch_callback callback, void* user) {
  if (!model || !train_windows || !config) return invalid("kpfc_train: null argument");
  return guarded([&] {
    kpfc::TrainConfig cfg;
    cfg.lr = config->lr;
    cfg.epochs = config->epochs;
    cfg.batch_size = config->batch_size;
    cfg.weight_decay = config->weight_decay;
    cfg.beta1 = config->beta1;
    cfg.beta2 = config->beta2;
    cfg.eps = config->eps;
    cfg.seed = config->seed;
    cfg.checkpoint_every = config->checkpoint_every;
    static const std::vector<kpfc::Window> kEmpty;
    const auto& eval = eval_windows_or_null ? eval_windows_or_null->windows : kEmpty;
    kpfc::EpochCallback cb;
    if (callback)
      cb = [callback, user](int epoch, double mse, double rmse) { callback(epoch, mse, rmse, user); };
    kpfc::train(model->model, train_windows->windows, eval, cfg, cb,
                checkpoint_path ? checkpoint_path : "");
  });
}

/* ---- evaluation ---------------------------------------------------------- */

kpfc_status kpfc_evaluate(kpfc_model* model, const kpfc_windows* windows,
                          kpfc_metrics_report* out) {
  if (!model || !windows || !out) return invalid("kpfc_evaluate: null argument");
  return guarded([&] {
    const kpfc::MetricsReport report = kpfc::evaluate(model->model, windows->windows);
    out->rmse_x100 = report.rmse_x100;
    out->fid = report.fid;
    out->n = report.n_samples;
  });
}

/* ---- latency -------------------------------------------------------------- */

kpfc_status kpfc_bench(kpfc_model* model, int warmup, int iters, uint64_t seed,
                       kpfc_latency_report* out) {
  if (!model || !out) return invalid("kpfc_bench: null argument");
  return guarded([&] {
    const kpfc::LatencyReport r = kpfc::measure_latency(model->model, warmup, iters, seed);
    out->arch = from_arch(r.arch);
    out->params = r.params;
    out->mean_ms = r.mean_ms;
    out->p50_ms = r.p50_ms;
    out->p99_ms = r.p99_ms;
    out->fps = r.fps;
    out->warmup = r.warmup;
    out->iters = r.iters;
  });
}

size_t kpfc_report_table(const kpfc_latency_report* reports, size_t count, char* buf, size_t cap) {
  try {
    std::vector<kpfc::LatencyReport> rows;
    rows.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      const auto& r = reports[i];
      kpfc::LatencyReport lr;
      lr.arch = to_arch(r.arch);
      lr.params = r.params;
      lr.mean_ms = r.mean_ms;
      lr.p50_ms = r.p50_ms;
      lr.p99_ms = r.p99_ms;
      lr.fps = r.fps;
      lr.warmup = r.warmup;
      lr.iters = r.iters;
      rows.push_back(lr);
    }
    const std::string table = kpfc::report_table(rows);
    if (buf && cap > 0) {
      const size_t n = std::min(cap - 1, table.size());
      std::memcpy(buf, table.data(), n);
      buf[n] = '\0';
    }
    return table.size();
  } catch (...) {
    if (buf && cap > 0) buf[0] = '\0';
    return 0;
  }
}

/* ---- envelopes ------------------------------------------------------------ */

kpfc_status kpfc_keepout_boxes(const float* frames, int n_frames, float margin, kpfc_box* boxes,
                               kpfc_box* union_out) {
  if (!frames || !boxes || !union_out) return invalid("kpfc_keepout_boxes: null argument");
  return guarded([&] {
    const auto result = kpfc::keepout_boxes(
        std::span<const float>(frames, static_cast<size_t>(n_frames > 0 ? n_frames : 0) * kpfc::kFrameDim),
        n_frames, margin);
    for (size_t i = 0; i < result.size(); ++i) {
      boxes[i] = {result[i].frame_index, result[i].min_x, result[i].min_y, result[i].max_x,
                  result[i].max_y};
    }
    const kpfc::KeepOutBox u = kpfc::union_box(result);
    *union_out = {0, u.min_x, u.min_y, u.max_x, u.max_y};
  });
}

kpfc_status kpfc_min_clearance(const float* frames, int n_frames, float px, float py,
                               double* distance, int* frame_index, int* joint_index) {
  if (!frames || !distance || !frame_index || !joint_index)
    return invalid("kpfc_min_clearance: null argument");
  return guarded([&] {
    const kpfc::Clearance c = kpfc::min_clearance(
        std::span<const float>(frames, static_cast<size_t>(n_frames > 0 ? n_frames : 0) * kpfc::kFrameDim),
        n_frames, px, py);
    *distance = c.distance;
    *frame_index = c.frame_index;
    *joint_index = c.joint_index;
  });
}

/* ---- normalization helpers ------------------------------------------------ */

kpfc_status kpfc_normalize_frame(const float* frame, float* out, float* cx, float* cy,
                                 float* scale) {
  if (!frame || !out || !cx || !cy || !scale) return invalid("kpfc_normalize_frame: null argument");
  return guarded([&] {
    std::span<const float, kpfc::kFrameDim> in(frame, kpfc::kFrameDim);
    const auto norm = kpfc::normalize_frame(in);
    std::copy(norm.frame.begin(), norm.frame.end(), out);
    *cx = norm.params.cx;
    *cy = norm.params.cy;
    *scale = norm.params.scale;
  });
}

kpfc_status kpfc_denormalize_frame(const float* frame, float cx, float cy, float scale,
                                   float* out) {
  if (!frame || !out) return invalid("kpfc_denormalize_frame: null argument");
  return guarded([&] {
    std::span<const float, kpfc::kFrameDim> in(frame, kpfc::kFrameDim);
    std::span<float, kpfc::kFrameDim> dst(out, kpfc::kFrameDim);
    kpfc::denormalize_frame(in, kpfc::DenormParams{cx, cy, scale}, dst);
  });
}

}  // extern "C"
