// kpfc command line: synth, train, pretrain-finetune, eval, bench, forecast,
// envelope. Talks to the core exclusively through the C API in kpfc.h.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
// Diagnostics go to stderr with an `error[<code>]:` prefix; stdout carries
// data only when an output path is `-`.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kpfc.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(kpfc_status st) {
  switch (st) {
    case KPFC_OK: return 0;
    case KPFC_ERR_PARSE:
    case KPFC_ERR_SCHEMA:
    case KPFC_ERR_IO:
    case KPFC_ERR_FORMAT:
    case KPFC_ERR_CORRUPT: return 2;
    case KPFC_ERR_NUMERIC: return 3;
    default: return 1;
  }
}

[[noreturn]] void die(kpfc_status st) {
  const int code = exit_code_for(st);
  std::fprintf(stderr, "error[%d]: %s\n", code, kpfc_last_error());
  std::exit(code);
}

[[noreturn]] void die_usage(const std::string& msg) {
  std::fprintf(stderr, "error[1]: %s\n", msg.c_str());
  std::exit(1);
}

[[noreturn]] void die_data(const std::string& msg) {
  std::fprintf(stderr, "error[2]: %s\n", msg.c_str());
  std::exit(2);
}

void check(kpfc_status st) {
  if (st != KPFC_OK) die(st);
}

struct ClipsDeleter {
  void operator()(kpfc_clips* p) const { kpfc_clips_free(p); }
};
struct WindowsDeleter {
  void operator()(kpfc_windows* p) const { kpfc_windows_free(p); }
};
struct ModelDeleter {
  void operator()(kpfc_model* p) const { kpfc_model_free(p); }
};
using ClipsPtr = std::unique_ptr<kpfc_clips, ClipsDeleter>;
using WindowsPtr = std::unique_ptr<kpfc_windows, WindowsDeleter>;
using ModelPtr = std::unique_ptr<kpfc_model, ModelDeleter>;

std::string resolve_clips_path(const std::string& data) {
  fs::path p(data);
  if (fs::is_directory(p)) p /= "clips.jsonl";
  if (!fs::exists(p)) die_data("no clip file at " + p.string());
  return p.string();
}

ClipsPtr load_clips_checked(const std::string& data) {
  kpfc_clips* clips = nullptr;
  check(kpfc_clips_load(resolve_clips_path(data).c_str(), &clips));
  return ClipsPtr(clips);
}

ModelPtr load_model_checked(const std::string& ckpt) {
  kpfc_model* model = nullptr;
  check(kpfc_model_load(ckpt.c_str(), &model));
  return ModelPtr(model);
}

kpfc_arch parse_arch(const std::string& name) {
  kpfc_arch arch;
  if (kpfc_arch_from_name(name.c_str(), &arch) != KPFC_OK)
    die_usage("unknown architecture '" + name + "' (expected mlp|lstm|cnn-lstm|transformer)");
  return arch;
}

// stdout when path is "-", file otherwise
class OutStream {
 public:
  explicit OutStream(const std::string& path) {
    if (path == "-") {
      out_ = &std::cout;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) die_data("cannot write " + path);
      out_ = &file_;
    }
  }
  std::ostream& get() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_ = nullptr;
};

struct TrainFlags {
  std::string config_path;
  double lr = -1.0;
  int epochs = -1;
  int batch_size = -1;
  double weight_decay = -1.0;
  int64_t seed = -1;
  int checkpoint_every = -1;
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config mirroring the training fields");
  cmd->add_option("--lr", flags.lr, "learning rate");
  cmd->add_option("--epochs", flags.epochs, "training epochs");
  cmd->add_option("--batch-size", flags.batch_size, "mini-batch size");
  cmd->add_option("--weight-decay", flags.weight_decay, "L2 coefficient");
  cmd->add_option("--seed", flags.seed, "run seed");
  cmd->add_option("--checkpoint-every", flags.checkpoint_every, "checkpoint cadence in epochs");
}

// defaults(arch) -> config file -> explicit flags
kpfc_train_config resolve_config(kpfc_arch arch, const TrainFlags& flags) {
  kpfc_train_config cfg;
  kpfc_train_config_defaults(arch, &cfg);
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) die_data("cannot open config " + flags.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      die_data("config " + flags.config_path + ": " + e.what());
    }
    cfg.lr = j.value("lr", cfg.lr);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.eps = j.value("eps", cfg.eps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  }
  if (flags.lr >= 0.0) cfg.lr = flags.lr;
  if (flags.epochs >= 0) cfg.epochs = flags.epochs;
  if (flags.batch_size >= 0) cfg.batch_size = flags.batch_size;
  if (flags.weight_decay >= 0.0) cfg.weight_decay = flags.weight_decay;
  if (flags.seed >= 0) cfg.seed = static_cast<uint64_t>(flags.seed);
  if (flags.checkpoint_every >= 0) cfg.checkpoint_every = flags.checkpoint_every;
  return cfg;
}

void log_epoch(int epoch, double mse, double rmse, void*) {
  if (rmse == rmse)  // NaN when no eval split
    std::fprintf(stderr, "epoch %d: train mse %.6f, eval rmse*100 %.4f\n", epoch, mse, rmse);
  else
    std::fprintf(stderr, "epoch %d: train mse %.6f\n", epoch, mse);
}

WindowsPtr build_windows_checked(const kpfc_clips* clips) {
  kpfc_windows* windows = nullptr;
  check(kpfc_windows_build(clips, KPFC_T_IN, KPFC_T_OUT, 1, &windows));
  return WindowsPtr(windows);
}

json frames_to_json(const float* frames, int n_frames) {
  json out = json::array();
  for (int f = 0; f < n_frames; ++f) {
    json frame = json::array();
    for (int j = 0; j < KPFC_JOINTS; ++j)
      frame.push_back({frames[f * KPFC_FRAME_DIM + 2 * j], frames[f * KPFC_FRAME_DIM + 2 * j + 1]});
    out.push_back(std::move(frame));
  }
  return out;
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& tier, uint64_t seed, const std::string& out_dir,
              const std::string& profile, int clip_len) {
  int count = 0;
  if (tier == "9k") count = 9000;
  else if (tier == "45k") count = 45000;
  else if (tier == "90k") count = 90000;
  else die_usage("unknown tier '" + tier + "' (expected 9k|45k|90k)");
  kpfc_synth_profile prof;
  if (profile == "pretrain") prof = KPFC_SYNTH_PRETRAIN;
  else if (profile == "real-like") prof = KPFC_SYNTH_REAL_LIKE;
  else die_usage("unknown profile '" + profile + "' (expected pretrain|real-like)");

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) die_data("cannot create directory " + out_dir);

  kpfc_clips* clips = nullptr;
  check(kpfc_synth_generate(count, seed, prof, clip_len, &clips));
  ClipsPtr guard(clips);
  const fs::path dir(out_dir);
  check(kpfc_clips_save(clips, (dir / "clips.jsonl").string().c_str()));
  check(kpfc_clips_save_labels(clips, (dir / "labels.jsonl").string().c_str()));
  std::fprintf(stderr, "wrote %d clips to %s\n", count, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& arch_name, const std::string& data, const std::string& out,
              const TrainFlags& flags, double train_frac, bool split_by_clip) {
  const kpfc_arch arch = parse_arch(arch_name);
  const kpfc_train_config cfg = resolve_config(arch, flags);

  ClipsPtr clips = load_clips_checked(data);
  WindowsPtr windows = build_windows_checked(clips.get());
  if (kpfc_windows_count(windows.get()) == 0) die_data("no training windows in " + data);

  kpfc_windows *train_w = nullptr, *test_w = nullptr;
  check(kpfc_windows_split(windows.get(), train_frac, cfg.seed, split_by_clip ? 1 : 0, &train_w,
                           &test_w));
  WindowsPtr train_guard(train_w), test_guard(test_w);
  std::fprintf(stderr, "windows: %zu train / %zu eval\n", kpfc_windows_count(train_w),
               kpfc_windows_count(test_w));

  kpfc_model* model = nullptr;
  check(kpfc_model_build(arch, cfg.seed, &model));
  ModelPtr model_guard(model);
  check(kpfc_train(model, train_w, kpfc_windows_count(test_w) > 0 ? test_w : nullptr, &cfg,
                   out.c_str(), log_epoch, nullptr));
  check(kpfc_model_save(model, out.c_str()));
  std::fprintf(stderr, "saved checkpoint %s\n", out.c_str());
  return 0;
}

int cmd_pretrain_finetune(const std::string& arch_name, const std::string& synth_dir,
                          const std::string& real_dir, const std::string& out,
                          const TrainFlags& flags, int pre_epochs, int fine_epochs,
                          double train_frac) {
  const kpfc_arch arch = parse_arch(arch_name);
  kpfc_train_config cfg_pre = resolve_config(arch, flags);
  kpfc_train_config cfg_fine = cfg_pre;
  if (pre_epochs >= 0) cfg_pre.epochs = pre_epochs;
  if (fine_epochs >= 0) cfg_fine.epochs = fine_epochs;

  ClipsPtr synth_clips = load_clips_checked(synth_dir);
  WindowsPtr synth_windows = build_windows_checked(synth_clips.get());
  if (kpfc_windows_count(synth_windows.get()) == 0) die_data("no windows in " + synth_dir);

  ClipsPtr real_clips = load_clips_checked(real_dir);
  WindowsPtr real_windows = build_windows_checked(real_clips.get());
  if (kpfc_windows_count(real_windows.get()) == 0) die_data("no windows in " + real_dir);
  kpfc_windows *real_train = nullptr, *real_eval = nullptr;
  check(kpfc_windows_split(real_windows.get(), train_frac, cfg_fine.seed, 0, &real_train,
                           &real_eval));
  WindowsPtr train_guard(real_train), eval_guard(real_eval);

  kpfc_model* model = nullptr;
  check(kpfc_model_build(arch, cfg_pre.seed, &model));
  ModelPtr model_guard(model);
  if (cfg_pre.epochs > 0) {
    std::fprintf(stderr, "pretraining on %zu windows for %d epochs\n",
                 kpfc_windows_count(synth_windows.get()), cfg_pre.epochs);
    check(kpfc_train(model, synth_windows.get(), nullptr, &cfg_pre, nullptr, log_epoch, nullptr));
  }
  std::fprintf(stderr, "fine-tuning on %zu windows for %d epochs\n",
               kpfc_windows_count(real_train), cfg_fine.epochs);
  check(kpfc_train(model, real_train, kpfc_windows_count(real_eval) > 0 ? real_eval : nullptr,
                   &cfg_fine, nullptr, log_epoch, nullptr));
  check(kpfc_model_save(model, out.c_str()));
  std::fprintf(stderr, "saved checkpoint %s\n", out.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& json_out) {
  ModelPtr model = load_model_checked(ckpt);
  ClipsPtr clips = load_clips_checked(data);
  WindowsPtr windows = build_windows_checked(clips.get());
  kpfc_metrics_report report;
  check(kpfc_evaluate(model.get(), windows.get(), &report));
  const json j = {{"rmse_x100", report.rmse_x100}, {"fid", report.fid}, {"n", report.n}};
  if (!json_out.empty()) {
    OutStream out(json_out);
    out.get() << j.dump() << "\n";
  }
  std::fprintf(stderr, "rmse*100 %.4f  fid %.4f  n %lld\n", report.rmse_x100, report.fid,
               static_cast<long long>(report.n));
  return 0;
}

int cmd_bench(const std::string& arch_name, const std::string& ckpt, int warmup, int iters,
              uint64_t seed, const std::string& json_out) {
  std::vector<kpfc_latency_report> reports;
  auto bench_one = [&](ModelPtr model) {
    kpfc_latency_report r;
    check(kpfc_bench(model.get(), warmup, iters, seed, &r));
    reports.push_back(r);
  };
  if (!ckpt.empty()) {
    bench_one(load_model_checked(ckpt));
  } else if (arch_name == "all") {
    for (kpfc_arch arch : {KPFC_ARCH_CNNLSTM, KPFC_ARCH_LSTM, KPFC_ARCH_MLP, KPFC_ARCH_TRANSFORMER}) {
      kpfc_model* m = nullptr;
      check(kpfc_model_build(arch, seed, &m));
      bench_one(ModelPtr(m));
    }
  } else {
    kpfc_model* m = nullptr;
    check(kpfc_model_build(parse_arch(arch_name), seed, &m));
    bench_one(ModelPtr(m));
  }

  std::vector<char> table(4096);
  const size_t need = kpfc_report_table(reports.data(), reports.size(), table.data(), table.size());
  if (need >= table.size()) {
    table.resize(need + 1);
    kpfc_report_table(reports.data(), reports.size(), table.data(), table.size());
  }
  std::fputs(table.data(), stdout);

  if (!json_out.empty()) {
    json arr = json::array();
    for (const auto& r : reports)
      arr.push_back({{"arch", kpfc_arch_name(r.arch)},
                     {"params", r.params},
                     {"mean_ms", r.mean_ms},
                     {"p50_ms", r.p50_ms},
                     {"p99_ms", r.p99_ms},
                     {"fps", r.fps},
                     {"warmup", r.warmup},
                     {"iters", r.iters}});
    OutStream out(json_out);
    out.get() << arr.dump(2) << "\n";
  }
  return 0;
}

int cmd_forecast(const std::string& ckpt, const std::string& in_path, const std::string& out_path) {
  ModelPtr model = load_model_checked(ckpt);
  kpfc_clips* clips = nullptr;
  check(kpfc_clips_load(in_path.c_str(), &clips));
  ClipsPtr guard(clips);
  OutStream out(out_path);

  std::vector<float> pred(static_cast<size_t>(KPFC_T_OUT) * KPFC_FRAME_DIM);
  for (size_t c = 0; c < kpfc_clips_count(clips); ++c) {
    const size_t n = kpfc_clips_frame_count(clips, c);
    if (n < KPFC_T_IN) continue;
    const float* base = kpfc_clips_frames(clips, c);
    std::vector<float> frames(base, base + n * KPFC_FRAME_DIM);
    const std::string id = kpfc_clips_id(clips, c);
    for (size_t t = KPFC_T_IN - 1; t < n; ++t) {
      const float* window = frames.data() + (t - (KPFC_T_IN - 1)) * KPFC_FRAME_DIM;
      check(kpfc_model_forecast(model.get(), window, pred.data()));
      json line = {{"clip_id", id},
                   {"frame", t},
                   {"pred", frames_to_json(pred.data(), KPFC_T_OUT)}};
      out.get() << line.dump() << "\n";
    }
  }
  return 0;
}

int cmd_envelope(const std::string& ckpt, const std::string& in_path, double margin,
                 const std::string& out_path) {
  if (margin < 0.0) die_usage("--margin must be >= 0");
  ModelPtr model = load_model_checked(ckpt);
  kpfc_clips* clips = nullptr;
  check(kpfc_clips_load(in_path.c_str(), &clips));
  ClipsPtr guard(clips);
  OutStream out(out_path);

  std::vector<float> pred(static_cast<size_t>(KPFC_T_OUT) * KPFC_FRAME_DIM);
  std::vector<kpfc_box> boxes(KPFC_T_OUT);
  kpfc_box union_box;
  for (size_t c = 0; c < kpfc_clips_count(clips); ++c) {
    const size_t n = kpfc_clips_frame_count(clips, c);
    if (n < KPFC_T_IN) continue;
    const float* base = kpfc_clips_frames(clips, c);
    const float* window = base + (n - KPFC_T_IN) * KPFC_FRAME_DIM;
    check(kpfc_model_forecast(model.get(), window, pred.data()));
    check(kpfc_keepout_boxes(pred.data(), KPFC_T_OUT, static_cast<float>(margin), boxes.data(),
                             &union_box));
    const std::string id = kpfc_clips_id(clips, c);
    for (const auto& b : boxes) {
      json line = {{"clip_id", id},
                   {"frame", b.frame_index},
                   {"min", {b.min_x, b.min_y}},
                   {"max", {b.max_x, b.max_y}}};
      out.get() << line.dump() << "\n";
    }
    json uline = {{"clip_id", id},
                  {"union", {{"min", {union_box.min_x, union_box.min_y}},
                             {"max", {union_box.max_x, union_box.max_y}}}}};
    out.get() << uline.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keypoint motion forecasting toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("kpfc ") + kpfc_version());

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic motion corpus");
  std::string synth_tier;
  uint64_t synth_seed = 0;
  std::string synth_out;
  std::string synth_profile = "pretrain";
  int synth_clip_len = 90;
  synth->add_option("--tier", synth_tier, "corpus size: 9k|45k|90k")->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--profile", synth_profile, "pretrain|real-like");
  synth->add_option("--clip-len", synth_clip_len, "frames per clip (>= 90 keeps one window)");

  // train
  auto* train = app.add_subcommand("train", "train a forecaster from scratch");
  std::string train_arch, train_data, train_out;
  TrainFlags train_flags;
  double train_frac = 0.8;
  bool split_by_clip = false;
  train->add_option("--arch", train_arch, "mlp|lstm|cnn-lstm|transformer")->required();
  train->add_option("--data", train_data, "clip file or directory with clips.jsonl")->required();
  train->add_option("--out", train_out, "checkpoint path")->required();
  add_train_flags(train, train_flags);
  train->add_option("--train-frac", train_frac, "train split fraction");
  train->add_flag("--split-by-clip", split_by_clip,
                  "assign whole clips to one side (avoids temporal leakage)");

  // pretrain-finetune
  auto* pf = app.add_subcommand("pretrain-finetune", "pretrain on synthetic, fine-tune on real");
  std::string pf_arch, pf_synth, pf_real, pf_out;
  TrainFlags pf_flags;
  int pf_pre_epochs = -1, pf_fine_epochs = -1;
  double pf_train_frac = 0.8;
  pf->add_option("--arch", pf_arch, "mlp|lstm|cnn-lstm|transformer")->required();
  pf->add_option("--synth", pf_synth, "synthetic corpus directory")->required();
  pf->add_option("--real", pf_real, "target corpus directory")->required();
  pf->add_option("--out", pf_out, "checkpoint path")->required();
  add_train_flags(pf, pf_flags);
  pf->add_option("--pre-epochs", pf_pre_epochs, "pretraining epochs");
  pf->add_option("--fine-epochs", pf_fine_epochs, "fine-tuning epochs");
  pf->add_option("--train-frac", pf_train_frac, "real split fraction");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate RMSE and FID on a corpus");
  std::string eval_ckpt, eval_data, eval_json;
  eval->add_option("--ckpt", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--data", eval_data, "clip file or directory")->required();
  eval->add_option("--json", eval_json, "metrics JSON output path (- for stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "measure single-sample inference latency");
  std::string bench_arch = "all", bench_ckpt, bench_json;
  int bench_warmup = 100, bench_iters = 1000;
  uint64_t bench_seed = 0;
  bench->add_option("--arch", bench_arch, "mlp|lstm|cnn-lstm|transformer|all");
  bench->add_option("--ckpt", bench_ckpt, "bench a trained checkpoint instead");
  bench->add_option("--warmup", bench_warmup, "untimed iterations");
  bench->add_option("--iters", bench_iters, "timed iterations");
  bench->add_option("--seed", bench_seed, "input seed");
  bench->add_option("--json", bench_json, "report JSON output path (- for stdout)");

  // forecast
  auto* forecast = app.add_subcommand("forecast", "stream denormalized 1 s forecasts");
  std::string fc_ckpt, fc_in, fc_out;
  forecast->add_option("--ckpt", fc_ckpt, "checkpoint path")->required();
  forecast->add_option("--in", fc_in, "input clip JSONL")->required();
  forecast->add_option("--out", fc_out, "output JSONL (- for stdout)")->required();

  // envelope
  auto* envelope = app.add_subcommand("envelope", "keep-out boxes over the forecast horizon");
  std::string env_ckpt, env_in, env_out;
  double env_margin = -1.0;
  envelope->add_option("--ckpt", env_ckpt, "checkpoint path")->required();
  envelope->add_option("--in", env_in, "input clip JSONL")->required();
  envelope->add_option("--margin", env_margin, "box inflation in world units")->required();
  envelope->add_option("--out", env_out, "output JSONL (- for stdout)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << "kpfc " << kpfc_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error[1]: %s\n", e.what());
    return 1;
  }

  if (synth->parsed())
    return cmd_synth(synth_tier, synth_seed, synth_out, synth_profile, synth_clip_len);
  if (train->parsed())
    return cmd_train(train_arch, train_data, train_out, train_flags, train_frac, split_by_clip);
  if (pf->parsed())
    return cmd_pretrain_finetune(pf_arch, pf_synth, pf_real, pf_out, pf_flags, pf_pre_epochs,
                                 pf_fine_epochs, pf_train_frac);
  if (eval->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_json);
  if (bench->parsed())
    return cmd_bench(bench_arch, bench_ckpt, bench_warmup, bench_iters, bench_seed, bench_json);
  if (forecast->parsed()) return cmd_forecast(fc_ckpt, fc_in, fc_out);
  if (envelope->parsed()) return cmd_envelope(env_ckpt, env_in, env_margin, env_out);
  return 1;
}
