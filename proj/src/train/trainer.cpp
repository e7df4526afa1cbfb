#include "train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "train/checkpoint.hpp"

namespace kpfc {

TrainConfig TrainConfig::defaults(ArchKind kind) {
  TrainConfig cfg;
  switch (kind) {
    case ArchKind::MLP: cfg.lr = 2e-3; break;
    case ArchKind::LSTM:
    case ArchKind::CNNLSTM: cfg.lr = 1e-3; break;
    case ArchKind::TRANSFORMER: cfg.lr = 5e-4; break;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) fail(ErrorCode::InvalidArgument, "config: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    fail(ErrorCode::InvalidArgument, "config: betas must be in [0, 1)");
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "config: batch size must be >= 1");
  if (epochs < 0) fail(ErrorCode::InvalidArgument, "config: epochs must be >= 0");
  if (!(eps > 0.0)) fail(ErrorCode::InvalidArgument, "config: eps must be positive");
  if (weight_decay < 0.0) fail(ErrorCode::InvalidArgument, "config: weight decay must be >= 0");
}

void AdamState::init_like(const Model& model) {
  m.clear();
  v.clear();
  t = 0;
  for (const auto& e : model.entries()) {
    const size_t n = e.learnable ? static_cast<size_t>(e.tensor.numel()) : 0;
    m.emplace_back(n, 0.0f);
    v.emplace_back(n, 0.0f);
  }
}

void adam_step(Model& model, AdamState& state, const TrainConfig& cfg) {
  if (!state.initialized()) state.init_like(model);
  auto& entries = model.entries();
  if (state.m.size() != entries.size())
    fail(ErrorCode::Contract, "adam_step: state does not match parameter store");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < entries.size(); ++i) {
    if (!entries[i].learnable) continue;
    auto& tensor = entries[i].tensor;
    auto grad = tensor.grad();
    if (grad.size() != tensor.data().size() || grad.empty())
      fail(ErrorCode::Contract, "adam_step: missing gradient for " + entries[i].name);
    auto data = tensor.data();
    auto& mi = state.m[i];
    auto& vi = state.v[i];
    for (size_t j = 0; j < data.size(); ++j) {
      const double g = static_cast<double>(grad[j]) + cfg.weight_decay * data[j];
      mi[j] = static_cast<float>(cfg.beta1 * mi[j] + (1.0 - cfg.beta1) * g);
      vi[j] = static_cast<float>(cfg.beta2 * vi[j] + (1.0 - cfg.beta2) * g * g);
      const double mhat = mi[j] / bc1;
      const double vhat = vi[j] / bc2;
      data[j] = static_cast<float>(data[j] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

namespace {
Tensor gather_batch(const std::vector<Window>& windows, const std::vector<size_t>& order,
                    size_t begin, size_t end, bool targets, const ModelHyper& h) {
  const int b = static_cast<int>(end - begin);
  const int frames = targets ? h.t_out : h.t_in;
  Tensor out = Tensor::zeros({b, frames, h.joints, h.coords});
  const size_t per = static_cast<size_t>(frames) * kFrameDim;
  for (size_t i = begin; i < end; ++i) {
    const Window& w = windows[order[i]];
    const auto& src = targets ? w.target : w.input;
    if (src.size() != per)
      fail(ErrorCode::Dimension, "window span does not match model input geometry");
    std::copy(src.begin(), src.end(), out.raw() + (i - begin) * per);
  }
  return out;
}
}  // namespace

TrainHistory train(Model& model, const std::vector<Window>& train_windows,
                   const std::vector<Window>& eval_windows, const TrainConfig& cfg,
                   const EpochCallback& callback, const std::string& checkpoint_path) {
  cfg.validate();
  if (train_windows.empty()) fail(ErrorCode::InvalidArgument, "train: empty training set");
  const ModelHyper& h = model.hyper();
  const size_t n = train_windows.size();

  AdamState state;
  state.init_like(model);
  model.set_stream_seed(cfg.seed);
  model.set_step(0);

  TrainHistory history;
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    CounterRng shuffle(hash3(cfg.seed, 0xe90c4u, static_cast<uint64_t>(epoch)));
    for (size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    model.set_mode(Mode::Train);
    double loss_sum = 0.0;
    int64_t sample_count = 0;
    int step_in_epoch = 0;
    for (size_t begin = 0; begin < n; begin += static_cast<size_t>(cfg.batch_size)) {
      const size_t end = std::min(n, begin + static_cast<size_t>(cfg.batch_size));
      Tensor x = gather_batch(train_windows, order, begin, end, false, h);
      Tensor y = gather_batch(train_windows, order, begin, end, true, h);
      model.zero_grad();
      Tape<float> tape;
      Tensor pred = model.forward(&tape, x);
      Tensor loss = ops::mse_loss(&tape, pred, y);
      const double loss_val = loss.item();
      ++step_in_epoch;
      if (!std::isfinite(loss_val))
        fail(ErrorCode::Numeric, "training diverged at epoch " + std::to_string(epoch) + " step " +
                                     std::to_string(step_in_epoch));
      backward(loss, tape);
      adam_step(model, state, cfg);
      model.set_step(model.step() + 1);
      loss_sum += loss_val * static_cast<double>(end - begin);
      sample_count += static_cast<int64_t>(end - begin);
    }
    history.train_mse.push_back(loss_sum / static_cast<double>(sample_count));

    double eval_rmse = std::numeric_limits<double>::quiet_NaN();
    if (!eval_windows.empty()) {
      model.set_mode(Mode::Eval);
      eval_rmse = evaluate_rmse_x100(model, eval_windows);
      history.eval_rmse_x100.push_back(eval_rmse);
    }
    history.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (callback) callback(epoch, history.train_mse.back(), eval_rmse);
    if (cfg.checkpoint_every > 0 && !checkpoint_path.empty() && epoch % cfg.checkpoint_every == 0)
      save_checkpoint(model, &state, checkpoint_path);
  }
  model.set_mode(Mode::Eval);
  return history;
}

PretrainResult pretrain_finetune(ArchKind kind, const std::vector<Window>& synth_windows,
                                 const std::vector<Window>& real_train,
                                 const std::vector<Window>& real_eval, const TrainConfig& cfg_pre,
                                 const TrainConfig& cfg_fine) {
  PretrainResult result{Model::build(kind, cfg_pre.seed), {}, {}};
  if (cfg_pre.epochs > 0)
    result.pretrain = train(result.model, synth_windows, {}, cfg_pre);
  result.finetune = train(result.model, real_train, real_eval, cfg_fine);
  return result;
}

std::vector<float> predict_all(Model& model, const std::vector<Window>& windows, int batch_size) {
  if (batch_size < 1) fail(ErrorCode::InvalidArgument, "predict_all: batch size must be >= 1");
  const ModelHyper& h = model.hyper();
  const size_t per = static_cast<size_t>(h.t_out) * kFrameDim;
  std::vector<float> preds(windows.size() * per);
  model.set_mode(Mode::Eval);
  std::vector<size_t> order(windows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (size_t begin = 0; begin < windows.size(); begin += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(windows.size(), begin + static_cast<size_t>(batch_size));
    Tensor x = gather_batch(windows, order, begin, end, false, h);
    Tensor out = model.forward(nullptr, x);
    std::copy(out.data().begin(), out.data().end(), preds.begin() + static_cast<int64_t>(begin * per));
  }
  return preds;
}

double evaluate_rmse_x100(Model& model, const std::vector<Window>& windows, int batch_size) {
  if (windows.empty()) fail(ErrorCode::InvalidArgument, "evaluate: empty window set");
  const std::vector<float> preds = predict_all(model, windows, batch_size);
  std::vector<float> targets;
  targets.reserve(preds.size());
  for (const auto& w : windows) targets.insert(targets.end(), w.target.begin(), w.target.end());
  return rmse_x100(preds, targets);
}

MetricsReport evaluate(Model& model, const std::vector<Window>& windows, int batch_size) {
  if (windows.size() < 2)
    fail(ErrorCode::InvalidArgument, "evaluate: need at least 2 windows for distribution metrics");
  const ModelHyper& h = model.hyper();
  const int feature_dim = h.t_out * kFrameDim;
  const std::vector<float> preds = predict_all(model, windows, batch_size);
  std::vector<float> targets;
  targets.reserve(preds.size());
  for (const auto& w : windows) targets.insert(targets.end(), w.target.begin(), w.target.end());
  MetricsReport report;
  report.rmse_x100 = rmse_x100(preds, targets);
  report.fid = motion_fid(preds, static_cast<int64_t>(windows.size()), targets,
                          static_cast<int64_t>(windows.size()), feature_dim);
  report.n_samples = static_cast<int64_t>(windows.size());
  return report;
}

}  // namespace kpfc
