#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace kpfc {

enum class ArchKind { MLP = 0, LSTM = 1, CNNLSTM = 2, TRANSFORMER = 3 };
enum class Mode { Train, Eval };

const char* arch_name(ArchKind kind);
ArchKind arch_from_name(const std::string& name);

// Architecture constants. Defaults are the deployed sizes; tests shrink them
// through build(kind, hyper, seed) to keep gradient checks fast.
struct ModelHyper {
  int t_in = 60;
  int t_out = 30;
  int joints = 17;
  int coords = 2;

  std::vector<int> mlp_widths = {1024, 512, 256, 128};
  double mlp_dropout = 0.3;

  int lstm_hidden = 128;
  int lstm_layers = 2;
  double lstm_dropout = 0.2;

  std::vector<int> conv_channels = {64, 128, 256};
  int conv_kernel = 3;
  int conv_padding = 1;
  double conv_dropout = 0.2;

  int tf_dmodel = 256;
  int tf_heads = 8;
  int tf_layers = 4;
  int tf_ffn = 1024;
  double tf_dropout = 0.1;

  int input_dim() const { return joints * coords; }
  int output_dim() const { return t_out * joints * coords; }
};

// A forecaster: an architecture tag plus a named, ordered parameter store.
// Forward maps a normalized [B, t_in, 17, 2] window to [B, t_out, 17, 2] in
// one head application. Train-mode stochasticity (dropout masks) is a pure
// function of (stream_seed, dropout site, step).
template <typename T>
class ModelT {
 public:
  struct Entry {
    std::string name;
    TensorT<T> tensor;
    bool learnable = true;
  };

  static ModelT build(ArchKind kind, uint64_t seed) { return build(kind, ModelHyper{}, seed); }
  static ModelT build(ArchKind kind, const ModelHyper& hyper, uint64_t seed);

  TensorT<T> forward(Tape<T>* tape, const TensorT<T>& x);

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& e : entries_)
      if (e.learnable) n += e.tensor.numel();
    return n;
  }

  ArchKind kind() const { return kind_; }
  const ModelHyper& hyper() const { return hyper_; }
  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  uint64_t stream_seed() const { return stream_seed_; }
  void set_stream_seed(uint64_t s) { stream_seed_ = s; }
  int64_t step() const { return step_; }
  void set_step(int64_t s) { step_ = s; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  bool has_param(const std::string& name) const { return index_.count(name) > 0; }
  TensorT<T>& param(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorCode::Contract, "unknown parameter: " + name);
    return entries_[it->second].tensor;
  }
  const TensorT<T>& param(const std::string& name) const {
    return const_cast<ModelT*>(this)->param(name);
  }

  void zero_grad() {
    for (auto& e : entries_) e.tensor.zero_grad();
  }

  template <typename U>
  ModelT<U> cast() const {
    ModelT<U> m;
    m.kind_ = kind_;
    m.hyper_ = hyper_;
    m.mode_ = mode_;
    m.stream_seed_ = stream_seed_;
    m.step_ = step_;
    for (const auto& e : entries_) {
      std::vector<U> data(e.tensor.data().begin(), e.tensor.data().end());
      typename ModelT<U>::Entry ne;
      ne.name = e.name;
      ne.tensor = TensorT<U>::from(e.tensor.shape(), std::move(data));
      ne.learnable = e.learnable;
      m.index_[ne.name] = m.entries_.size();
      m.entries_.push_back(std::move(ne));
    }
    return m;
  }

  // Construction helper shared by build() and checkpoint loading.
  TensorT<T>& add_entry(const std::string& name, Shape shape, bool learnable) {
    if (index_.count(name)) fail(ErrorCode::Contract, "duplicate parameter name: " + name);
    Entry e;
    e.name = name;
    e.tensor = TensorT<T>::zeros(std::move(shape));
    e.learnable = learnable;
    index_[name] = entries_.size();
    entries_.push_back(std::move(e));
    return entries_.back().tensor;
  }

  static ModelT skeleton(ArchKind kind, const ModelHyper& hyper) {
    ModelT m;
    m.kind_ = kind;
    m.hyper_ = hyper;
    m.declare_params();
    return m;
  }

 private:
  template <typename U>
  friend class ModelT;

  void declare_params();
  void init_params(uint64_t seed);
  uint64_t mask_key(int site) const { return hash3(stream_seed_, static_cast<uint64_t>(site), static_cast<uint64_t>(step_)); }

  TensorT<T> forward_mlp(Tape<T>* tape, const TensorT<T>& x);
  TensorT<T> forward_lstm(Tape<T>* tape, const TensorT<T>& x);
  TensorT<T> forward_cnnlstm(Tape<T>* tape, const TensorT<T>& x);
  TensorT<T> forward_transformer(Tape<T>* tape, const TensorT<T>& x);

  ops::LstmParamsT<T> lstm_params(const std::string& prefix) {
    return {param(prefix + ".w_ih"), param(prefix + ".w_hh"), param(prefix + ".b_ih"),
            param(prefix + ".b_hh")};
  }

  ArchKind kind_ = ArchKind::MLP;
  ModelHyper hyper_;
  Mode mode_ = Mode::Eval;
  uint64_t stream_seed_ = 0;
  int64_t step_ = 0;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, size_t> index_;
  std::vector<int64_t> init_fans_;  // per entry: >0 uniform fan-in, 0 zeros, -1 ones
  TensorT<T> pe_;                   // sinusoidal table, parameter-free, built lazily
};

using Model = ModelT<float>;

extern template class ModelT<float>;
extern template class ModelT<double>;

}  // namespace kpfc
