#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "metrics/metrics.hpp"
#include "nn/model.hpp"

namespace kpfc {

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints

  // per-architecture learning rates; everything else is shared
  static TrainConfig defaults(ArchKind kind);
  void validate() const;
};

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  int64_t t = 0;

  void init_like(const Model& model);
  bool initialized() const { return !m.empty(); }
};

// Coupled L2 Adam: g <- grad + wd * param, then standard bias-corrected
// moment update. Expects gradients populated for every learnable parameter.
void adam_step(Model& model, AdamState& state, const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_mse;       // one entry per epoch
  std::vector<double> eval_rmse_x100;  // empty when no eval set given
  std::vector<double> epoch_seconds;
};

using EpochCallback = std::function<void(int epoch, double train_mse, double eval_rmse_x100)>;

// Seeded-shuffle mini-batch MSE training. The last partial batch is kept.
// The model is left in eval mode. Identical (seed, data, config) produce
// bitwise-identical parameters.
TrainHistory train(Model& model, const std::vector<Window>& train_windows,
                   const std::vector<Window>& eval_windows, const TrainConfig& cfg,
                   const EpochCallback& callback = {}, const std::string& checkpoint_path = {});

struct PretrainResult {
  Model model;
  TrainHistory pretrain;
  TrainHistory finetune;
};

// build -> train on the synthetic corpus -> keep parameters, fresh optimizer
// moments -> continue on the real training split
PretrainResult pretrain_finetune(ArchKind kind, const std::vector<Window>& synth_windows,
                                 const std::vector<Window>& real_train,
                                 const std::vector<Window>& real_eval, const TrainConfig& cfg_pre,
                                 const TrainConfig& cfg_fine);

// batched eval-mode predictions, concatenated in window order [N, t_out*34]
std::vector<float> predict_all(Model& model, const std::vector<Window>& windows,
                               int batch_size = 64);
double evaluate_rmse_x100(Model& model, const std::vector<Window>& windows, int batch_size = 64);
MetricsReport evaluate(Model& model, const std::vector<Window>& windows, int batch_size = 64);

}  // namespace kpfc
