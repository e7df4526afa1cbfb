#include "nn/model.hpp"

#include <cmath>

namespace kpfc {

const char* arch_name(ArchKind kind) {
  switch (kind) {
    case ArchKind::MLP: return "mlp";
    case ArchKind::LSTM: return "lstm";
    case ArchKind::CNNLSTM: return "cnn-lstm";
    case ArchKind::TRANSFORMER: return "transformer";
  }
  fail(ErrorCode::Contract, "unknown architecture tag");
}

ArchKind arch_from_name(const std::string& name) {
  if (name == "mlp") return ArchKind::MLP;
  if (name == "lstm") return ArchKind::LSTM;
  if (name == "cnn-lstm" || name == "cnnlstm") return ArchKind::CNNLSTM;
  if (name == "transformer") return ArchKind::TRANSFORMER;
  fail(ErrorCode::InvalidArgument, "unknown architecture name: " + name);
}

namespace {
// init tags carried alongside declaration order: >0 uniform with that fan-in,
// 0 zeros, -1 ones
struct Declared {
  std::string name;
  Shape shape;
  bool learnable;
  int64_t fan;
};

std::vector<Declared> declarations(ArchKind kind, const ModelHyper& h) {
  std::vector<Declared> d;
  auto weight = [&](const std::string& n, Shape s, int64_t fan) { d.push_back({n, std::move(s), true, fan}); };
  auto zeros = [&](const std::string& n, Shape s, bool learnable = true) { d.push_back({n, std::move(s), learnable, 0}); };
  auto ones = [&](const std::string& n, Shape s, bool learnable = true) { d.push_back({n, std::move(s), learnable, -1}); };
  auto batchnorm = [&](const std::string& prefix, int c) {
    ones(prefix + ".gamma", {c});
    zeros(prefix + ".beta", {c});
    zeros(prefix + ".running_mean", {c}, false);
    ones(prefix + ".running_var", {c}, false);
  };
  auto lstm_stack = [&](int in_dim) {
    for (int l = 0; l < h.lstm_layers; ++l) {
      const int i = l == 0 ? in_dim : h.lstm_hidden;
      const int g4 = 4 * h.lstm_hidden;
      const std::string p = "lstm.l" + std::to_string(l);
      weight(p + ".w_ih", {g4, i}, i);
      weight(p + ".w_hh", {g4, h.lstm_hidden}, h.lstm_hidden);
      zeros(p + ".b_ih", {g4});
      zeros(p + ".b_hh", {g4});
    }
  };

  int head_in = 0;
  switch (kind) {
    case ArchKind::MLP: {
      int prev = h.t_in * h.input_dim();
      for (size_t i = 0; i < h.mlp_widths.size(); ++i) {
        const int w = h.mlp_widths[i];
        const std::string fc = "mlp.fc" + std::to_string(i);
        weight(fc + ".w", {prev, w}, prev);
        zeros(fc + ".b", {w});
        batchnorm("mlp.bn" + std::to_string(i), w);
        prev = w;
      }
      head_in = prev;
      break;
    }
    case ArchKind::LSTM: {
      lstm_stack(h.input_dim());
      head_in = h.lstm_hidden;
      break;
    }
    case ArchKind::CNNLSTM: {
      int prev = h.input_dim();
      for (size_t i = 0; i < h.conv_channels.size(); ++i) {
        const int c = h.conv_channels[i];
        const std::string cv = "cnn.conv" + std::to_string(i);
        weight(cv + ".w", {c, prev, h.conv_kernel}, static_cast<int64_t>(prev) * h.conv_kernel);
        zeros(cv + ".b", {c});
        batchnorm("cnn.bn" + std::to_string(i), c);
        prev = c;
      }
      lstm_stack(prev);
      head_in = h.lstm_hidden;
      break;
    }
    case ArchKind::TRANSFORMER: {
      const int dm = h.tf_dmodel;
      weight("tf.in_proj.w", {h.input_dim(), dm}, h.input_dim());
      zeros("tf.in_proj.b", {dm});
      for (int l = 0; l < h.tf_layers; ++l) {
        const std::string p = "tf.l" + std::to_string(l);
        weight(p + ".attn.in_w", {3 * dm, dm}, dm);
        zeros(p + ".attn.in_b", {3 * dm});
        weight(p + ".attn.out_w", {dm, dm}, dm);
        zeros(p + ".attn.out_b", {dm});
        ones(p + ".norm1.gamma", {dm});
        zeros(p + ".norm1.beta", {dm});
        weight(p + ".ffn.w1", {dm, h.tf_ffn}, dm);
        zeros(p + ".ffn.b1", {h.tf_ffn});
        weight(p + ".ffn.w2", {h.tf_ffn, dm}, h.tf_ffn);
        zeros(p + ".ffn.b2", {dm});
        ones(p + ".norm2.gamma", {dm});
        zeros(p + ".norm2.beta", {dm});
      }
      head_in = dm;
      break;
    }
  }
  weight("head.w", {head_in, h.output_dim()}, head_in);
  zeros("head.b", {h.output_dim()});
  return d;
}
}  // namespace

template <typename T>
void ModelT<T>::declare_params() {
  for (auto& decl : declarations(kind_, hyper_)) {
    add_entry(decl.name, decl.shape, decl.learnable);
    init_fans_.push_back(decl.fan);
  }
}

template <typename T>
void ModelT<T>::init_params(uint64_t seed) {
  CounterRng rng(seed, 0x5eedu);
  for (size_t i = 0; i < entries_.size(); ++i) {
    auto data = entries_[i].tensor.data();
    const int64_t fan = init_fans_[i];
    if (fan > 0) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan));
      for (auto& v : data) v = static_cast<T>(rng.uniform(-bound, bound));
    } else if (fan < 0) {
      for (auto& v : data) v = T(1);
    }
  }
}

template <typename T>
ModelT<T> ModelT<T>::build(ArchKind kind, const ModelHyper& hyper, uint64_t seed) {
  ModelT m = skeleton(kind, hyper);
  m.init_params(seed);
  m.stream_seed_ = seed;
  return m;
}

template <typename T>
TensorT<T> ModelT<T>::forward(Tape<T>* tape, const TensorT<T>& x) {
  const auto& h = hyper_;
  const bool shape4 = x.ndim() == 4 && x.dim(1) == h.t_in && x.dim(2) == h.joints && x.dim(3) == h.coords;
  const bool shape3 = x.ndim() == 3 && x.dim(1) == h.t_in && x.dim(2) == h.input_dim();
  if (!shape4 && !shape3)
    fail(ErrorCode::Dimension, std::string("forward: expected [B,") + std::to_string(h.t_in) + "," +
                                   std::to_string(h.joints) + "," + std::to_string(h.coords) +
                                   "], got " + shape_str(x.shape()));
  TensorT<T> out;
  switch (kind_) {
    case ArchKind::MLP: out = forward_mlp(tape, x); break;
    case ArchKind::LSTM: out = forward_lstm(tape, x); break;
    case ArchKind::CNNLSTM: out = forward_cnnlstm(tape, x); break;
    case ArchKind::TRANSFORMER: out = forward_transformer(tape, x); break;
  }
  if (!out.all_finite()) fail(ErrorCode::Numeric, "forward produced non-finite values");
  return out;
}

template <typename T>
TensorT<T> ModelT<T>::forward_mlp(Tape<T>* tape, const TensorT<T>& x) {
  const auto& h = hyper_;
  const int b = x.dim(0);
  const bool train = mode_ == Mode::Train;
  TensorT<T> cur = ops::reshape(tape, x, {b, h.t_in * h.input_dim()});
  for (size_t i = 0; i < h.mlp_widths.size(); ++i) {
    const std::string fc = "mlp.fc" + std::to_string(i);
    const std::string bn = "mlp.bn" + std::to_string(i);
    cur = ops::linear(tape, cur, param(fc + ".w"), param(fc + ".b"));
    cur = ops::activation(tape, cur, ops::Act::Relu);
    cur = ops::dropout(tape, cur, h.mlp_dropout, train, mask_key(static_cast<int>(i)));
    cur = ops::batchnorm1d(tape, cur, param(bn + ".gamma"), param(bn + ".beta"),
                           param(bn + ".running_mean"), param(bn + ".running_var"), train);
  }
  cur = ops::linear(tape, cur, param("head.w"), param("head.b"));
  return ops::reshape(tape, cur, {b, h.t_out, h.joints, h.coords});
}

template <typename T>
TensorT<T> ModelT<T>::forward_lstm(Tape<T>* tape, const TensorT<T>& x) {
  const auto& h = hyper_;
  const int b = x.dim(0);
  const bool train = mode_ == Mode::Train;
  TensorT<T> cur = ops::reshape(tape, x, {b, h.t_in, h.input_dim()});
  TensorT<T> feat;
  for (int l = 0; l < h.lstm_layers; ++l) {
    auto out = ops::lstm_layer(tape, cur, lstm_params("lstm.l" + std::to_string(l)));
    feat = out.h_last;
    if (l + 1 < h.lstm_layers) {
      cur = ops::dropout(tape, out.outputs, h.lstm_dropout, train, mask_key(l));
    } else {
      cur = out.outputs;
    }
  }
  TensorT<T> head = ops::linear(tape, feat, param("head.w"), param("head.b"));
  return ops::reshape(tape, head, {b, h.t_out, h.joints, h.coords});
}

template <typename T>
TensorT<T> ModelT<T>::forward_cnnlstm(Tape<T>* tape, const TensorT<T>& x) {
  const auto& h = hyper_;
  const int b = x.dim(0);
  const bool train = mode_ == Mode::Train;
  TensorT<T> cur = ops::reshape(tape, x, {b, h.t_in, h.input_dim()});
  cur = ops::swap_axes(tape, cur, 1, 2);  // [B, C, L]
  for (size_t i = 0; i < h.conv_channels.size(); ++i) {
    const std::string cv = "cnn.conv" + std::to_string(i);
    const std::string bn = "cnn.bn" + std::to_string(i);
    cur = ops::conv1d(tape, cur, param(cv + ".w"), param(cv + ".b"), h.conv_padding);
    cur = ops::activation(tape, cur, ops::Act::Relu);
    cur = ops::batchnorm1d(tape, cur, param(bn + ".gamma"), param(bn + ".beta"),
                           param(bn + ".running_mean"), param(bn + ".running_var"), train);
    cur = ops::dropout(tape, cur, h.conv_dropout, train, mask_key(static_cast<int>(i)));
  }
  cur = ops::swap_axes(tape, cur, 1, 2);  // [B, L, C]
  TensorT<T> feat;
  for (int l = 0; l < h.lstm_layers; ++l) {
    auto out = ops::lstm_layer(tape, cur, lstm_params("lstm.l" + std::to_string(l)));
    feat = out.h_last;
    cur = out.outputs;
  }
  TensorT<T> head = ops::linear(tape, feat, param("head.w"), param("head.b"));
  return ops::reshape(tape, head, {b, h.t_out, h.joints, h.coords});
}

template <typename T>
TensorT<T> ModelT<T>::forward_transformer(Tape<T>* tape, const TensorT<T>& x) {
  const auto& h = hyper_;
  const int b = x.dim(0);
  const int dm = h.tf_dmodel;
  const bool train = mode_ == Mode::Train;
  if (!pe_.defined()) pe_ = ops::positional_encoding<T>(h.t_in, dm);

  TensorT<T> cur = ops::reshape(tape, x, {b * h.t_in, h.input_dim()});
  cur = ops::linear(tape, cur, param("tf.in_proj.w"), param("tf.in_proj.b"));
  cur = ops::reshape(tape, cur, {b, h.t_in, dm});
  cur = ops::add_positional(tape, cur, pe_);
  for (int l = 0; l < h.tf_layers; ++l) {
    const std::string p = "tf.l" + std::to_string(l);
    ops::AttentionParamsT<T> attn{param(p + ".attn.in_w"), param(p + ".attn.in_b"),
                                  param(p + ".attn.out_w"), param(p + ".attn.out_b")};
    TensorT<T> a = ops::multihead_self_attention(tape, cur, attn, h.tf_heads);
    a = ops::dropout(tape, a, h.tf_dropout, train, mask_key(2 * l));
    cur = ops::layer_norm(tape, ops::add(tape, cur, a), param(p + ".norm1.gamma"),
                          param(p + ".norm1.beta"));
    TensorT<T> f = ops::reshape(tape, cur, {b * h.t_in, dm});
    f = ops::linear(tape, f, param(p + ".ffn.w1"), param(p + ".ffn.b1"));
    f = ops::activation(tape, f, ops::Act::Relu);
    f = ops::linear(tape, f, param(p + ".ffn.w2"), param(p + ".ffn.b2"));
    f = ops::reshape(tape, f, {b, h.t_in, dm});
    f = ops::dropout(tape, f, h.tf_dropout, train, mask_key(2 * l + 1));
    cur = ops::layer_norm(tape, ops::add(tape, cur, f), param(p + ".norm2.gamma"),
                          param(p + ".norm2.beta"));
  }
  TensorT<T> feat = ops::select_timestep(tape, cur, h.t_in - 1);
  TensorT<T> head = ops::linear(tape, feat, param("head.w"), param("head.b"));
  return ops::reshape(tape, head, {b, h.t_out, h.joints, h.coords});
}

template class ModelT<float>;
template class ModelT<double>;

}  // namespace kpfc
