#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "core/blas.hpp"
#include "core/tensor.hpp"

// Forward ops with taped backward rules. Every op validates shapes, computes
// the forward value, and, when a tape is supplied and any input requires
// gradients, appends one closure that accumulates into the inputs' grad
// buffers. Layouts are row-major throughout.
namespace kpfc::ops {

enum class Act { Relu, Tanh, Sigmoid };

template <typename T>
bool track(Tape<T>* tape, std::initializer_list<const TensorT<T>*> inputs) {
  if (!tape) return false;
  for (const auto* t : inputs)
    if (t->defined() && t->requires_grad()) return true;
  return false;
}

// ---------------------------------------------------------------------------
// linear: y = x * w + b, x [N,I], w [I,O], b [O]
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> linear(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1)
    fail(ErrorCode::Dimension, "linear: expected x [N,I], w [I,O], b [O]");
  const int n = x.dim(0), i = x.dim(1), o = w.dim(1);
  if (w.dim(0) != i || b.dim(0) != o)
    fail(ErrorCode::Dimension, "linear: inner dimensions disagree, x " + shape_str(x.shape()) +
                                   " w " + shape_str(w.shape()));
  TensorT<T> y = TensorT<T>::zeros({n, o});
  gemm<T>(false, false, n, o, i, T(1), x.raw(), i, w.raw(), o, T(0), y.raw(), o);
  for (int r = 0; r < n; ++r) {
    T* row = y.raw() + static_cast<int64_t>(r) * o;
    const T* bias = b.raw();
    for (int c = 0; c < o; ++c) row[c] += bias[c];
  }
  if (track(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), wi = w.impl(), bi = b.impl(), yi = y.impl();
    tape->record([xi, wi, bi, yi, n, i, o] {
      yi->ensure_grad();
      const T* dy = yi->grad.data();
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm<T>(false, true, n, i, o, T(1), dy, o, wi->data.data(), o, T(1), xi->grad.data(), i);
      }
      if (wi->requires_grad) {
        wi->ensure_grad();
        gemm<T>(true, false, i, o, n, T(1), xi->data.data(), i, dy, o, T(1), wi->grad.data(), o);
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < o; ++c) bi->grad[static_cast<size_t>(c)] += dy[static_cast<int64_t>(r) * o + c];
      }
    });
  }
  return y;
}

// y = x * w^T + b, x [N,I], w [O,I], b [O] — for parameter stores that keep
// fused projection matrices in [out,in] layout.
template <typename T>
TensorT<T> linear_wt(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1)
    fail(ErrorCode::Dimension, "linear_wt: expected x [N,I], w [O,I], b [O]");
  const int n = x.dim(0), i = x.dim(1), o = w.dim(0);
  if (w.dim(1) != i || b.dim(0) != o)
    fail(ErrorCode::Dimension, "linear_wt: inner dimensions disagree");
  TensorT<T> y = TensorT<T>::zeros({n, o});
  gemm<T>(false, true, n, o, i, T(1), x.raw(), i, w.raw(), i, T(0), y.raw(), o);
  for (int r = 0; r < n; ++r) {
    T* row = y.raw() + static_cast<int64_t>(r) * o;
    for (int c = 0; c < o; ++c) row[c] += b.raw()[c];
  }
  if (track(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), wi = w.impl(), bi = b.impl(), yi = y.impl();
    tape->record([xi, wi, bi, yi, n, i, o] {
      yi->ensure_grad();
      const T* dy = yi->grad.data();
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm<T>(false, false, n, i, o, T(1), dy, o, wi->data.data(), i, T(1), xi->grad.data(), i);
      }
      if (wi->requires_grad) {
        wi->ensure_grad();
        gemm<T>(true, false, o, i, n, T(1), dy, o, xi->data.data(), i, T(1), wi->grad.data(), i);
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < o; ++c) bi->grad[static_cast<size_t>(c)] += dy[static_cast<int64_t>(r) * o + c];
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// elementwise activations
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> activation(Tape<T>* tape, const TensorT<T>& x, Act kind) {
  TensorT<T> y = TensorT<T>::zeros(x.shape());
  const T* in = x.raw();
  T* out = y.raw();
  const int64_t n = x.numel();
  switch (kind) {
    case Act::Relu:
      for (int64_t j = 0; j < n; ++j) out[j] = in[j] > T(0) ? in[j] : T(0);
      break;
    case Act::Tanh:
      for (int64_t j = 0; j < n; ++j) out[j] = std::tanh(in[j]);
      break;
    case Act::Sigmoid:
      for (int64_t j = 0; j < n; ++j) out[j] = T(1) / (T(1) + std::exp(-in[j]));
      break;
  }
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi, kind, n] {
      yi->ensure_grad();
      xi->ensure_grad();
      const T* dy = yi->grad.data();
      const T* yv = yi->data.data();
      const T* xv = xi->data.data();
      T* dx = xi->grad.data();
      switch (kind) {
        case Act::Relu:
          // subgradient at the kink is taken as 0
          for (int64_t j = 0; j < n; ++j) dx[j] += xv[j] > T(0) ? dy[j] : T(0);
          break;
        case Act::Tanh:
          for (int64_t j = 0; j < n; ++j) dx[j] += dy[j] * (T(1) - yv[j] * yv[j]);
          break;
        case Act::Sigmoid:
          for (int64_t j = 0; j < n; ++j) dx[j] += dy[j] * yv[j] * (T(1) - yv[j]);
          break;
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// inverted dropout; the mask is a pure function of mask_key, so a forward
// pass is reproducible given (seed, layer, step)
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> dropout(Tape<T>* tape, const TensorT<T>& x, double p, bool train, uint64_t mask_key) {
  if (p < 0.0 || p >= 1.0) fail(ErrorCode::InvalidArgument, "dropout: p must be in [0, 1)");
  if (!train || p == 0.0) return x;
  const int64_t n = x.numel();
  auto mask = std::make_shared<std::vector<T>>(static_cast<size_t>(n));
  CounterRng rng(mask_key);
  const T scale = static_cast<T>(1.0 / (1.0 - p));
  for (int64_t j = 0; j < n; ++j) (*mask)[static_cast<size_t>(j)] = rng.next_double() >= p ? scale : T(0);
  TensorT<T> y = TensorT<T>::zeros(x.shape());
  const T* in = x.raw();
  T* out = y.raw();
  for (int64_t j = 0; j < n; ++j) out[j] = in[j] * (*mask)[static_cast<size_t>(j)];
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi, mask, n] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (int64_t j = 0; j < n; ++j)
        xi->grad[static_cast<size_t>(j)] += yi->grad[static_cast<size_t>(j)] * (*mask)[static_cast<size_t>(j)];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// batchnorm over channel axis of [B,C] or [B,C,L]
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> batchnorm1d(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& gamma,
                       const TensorT<T>& beta, TensorT<T>& running_mean, TensorT<T>& running_var,
                       bool train, double momentum = 0.1, double eps = 1e-5) {
  if (x.ndim() != 2 && x.ndim() != 3)
    fail(ErrorCode::Dimension, "batchnorm1d: expected [B,C] or [B,C,L], got " + shape_str(x.shape()));
  const int b = x.dim(0), c = x.dim(1);
  const int l = x.ndim() == 3 ? x.dim(2) : 1;
  if (gamma.dim(0) != c || beta.dim(0) != c || running_mean.dim(0) != c || running_var.dim(0) != c)
    fail(ErrorCode::Dimension, "batchnorm1d: parameter size must equal channel count");
  if (train && b < 2)
    fail(ErrorCode::InvalidArgument, "batchnorm1d: degenerate batch, train mode requires B >= 2");

  const int64_t reduce_n = static_cast<int64_t>(b) * l;
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(c));
  std::vector<T> mean(static_cast<size_t>(c));

  auto idx = [c, l](int bb, int cc, int ll) {
    return (static_cast<int64_t>(bb) * c + cc) * l + ll;
  };

  if (train) {
    for (int ch = 0; ch < c; ++ch) {
      double sum = 0.0, sq = 0.0;
      for (int bb = 0; bb < b; ++bb)
        for (int ll = 0; ll < l; ++ll) {
          double v = x.raw()[idx(bb, ch, ll)];
          sum += v;
          sq += v * v;
        }
      double mu = sum / static_cast<double>(reduce_n);
      double var = sq / static_cast<double>(reduce_n) - mu * mu;
      if (var < 0.0) var = 0.0;
      mean[static_cast<size_t>(ch)] = static_cast<T>(mu);
      (*inv_std)[static_cast<size_t>(ch)] = static_cast<T>(1.0 / std::sqrt(var + eps));
      double unbiased = reduce_n > 1 ? var * static_cast<double>(reduce_n) / (reduce_n - 1) : var;
      running_mean.raw()[ch] = static_cast<T>((1.0 - momentum) * running_mean.raw()[ch] + momentum * mu);
      running_var.raw()[ch] = static_cast<T>((1.0 - momentum) * running_var.raw()[ch] + momentum * unbiased);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean[static_cast<size_t>(ch)] = running_mean.raw()[ch];
      (*inv_std)[static_cast<size_t>(ch)] =
          static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.raw()[ch]) + eps));
    }
  }

  TensorT<T> y = TensorT<T>::zeros(x.shape());
  for (int bb = 0; bb < b; ++bb)
    for (int ch = 0; ch < c; ++ch) {
      const T m = mean[static_cast<size_t>(ch)];
      const T is = (*inv_std)[static_cast<size_t>(ch)];
      const T g = gamma.raw()[ch], bt = beta.raw()[ch];
      for (int ll = 0; ll < l; ++ll) {
        const int64_t j = idx(bb, ch, ll);
        const T xh = (x.raw()[j] - m) * is;
        (*xhat)[static_cast<size_t>(j)] = xh;
        y.raw()[j] = g * xh + bt;
      }
    }

  if (track(tape, {&x, &gamma, &beta})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), yi = y.impl();
    tape->record([xi, gi, bi, yi, xhat, inv_std, b, c, l, reduce_n, train, idx] {
      yi->ensure_grad();
      const T* dy = yi->grad.data();
      for (int ch = 0; ch < c; ++ch) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int bb = 0; bb < b; ++bb)
          for (int ll = 0; ll < l; ++ll) {
            const int64_t j = idx(bb, ch, ll);
            sum_dy += dy[j];
            sum_dy_xhat += static_cast<double>(dy[j]) * (*xhat)[static_cast<size_t>(j)];
          }
        if (gi->requires_grad) {
          gi->ensure_grad();
          gi->grad[static_cast<size_t>(ch)] += static_cast<T>(sum_dy_xhat);
        }
        if (bi->requires_grad) {
          bi->ensure_grad();
          bi->grad[static_cast<size_t>(ch)] += static_cast<T>(sum_dy);
        }
        if (xi->requires_grad) {
          xi->ensure_grad();
          const T g = gi->data[static_cast<size_t>(ch)];
          const T is = (*inv_std)[static_cast<size_t>(ch)];
          if (train) {
            const double scale = static_cast<double>(g) * is / static_cast<double>(reduce_n);
            for (int bb = 0; bb < b; ++bb)
              for (int ll = 0; ll < l; ++ll) {
                const int64_t j = idx(bb, ch, ll);
                xi->grad[static_cast<size_t>(j)] += static_cast<T>(
                    scale * (static_cast<double>(reduce_n) * dy[j] - sum_dy -
                             (*xhat)[static_cast<size_t>(j)] * sum_dy_xhat));
              }
          } else {
            for (int bb = 0; bb < b; ++bb)
              for (int ll = 0; ll < l; ++ll) {
                const int64_t j = idx(bb, ch, ll);
                xi->grad[static_cast<size_t>(j)] += dy[j] * g * is;
              }
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// layer norm over the last axis
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> layer_norm(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& gamma,
                      const TensorT<T>& beta, double eps = 1e-5) {
  const int d = x.dim(x.ndim() - 1);
  if (gamma.dim(0) != d || beta.dim(0) != d)
    fail(ErrorCode::Dimension, "layer_norm: parameter size must equal last axis");
  const int64_t rows = x.numel() / d;
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(x.numel()));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(rows));
  TensorT<T> y = TensorT<T>::zeros(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = x.raw() + r * d;
    double sum = 0.0;
    for (int j = 0; j < d; ++j) sum += row[j];
    const double mu = sum / d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double dv = row[j] - mu;
      var += dv * dv;
    }
    var /= d;
    const T is = static_cast<T>(1.0 / std::sqrt(var + eps));
    (*inv_std)[static_cast<size_t>(r)] = is;
    for (int j = 0; j < d; ++j) {
      const T xh = static_cast<T>((row[j] - mu) * is);
      (*xhat)[static_cast<size_t>(r * d + j)] = xh;
      y.raw()[r * d + j] = gamma.raw()[j] * xh + beta.raw()[j];
    }
  }
  if (track(tape, {&x, &gamma, &beta})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl(), yi = y.impl();
    tape->record([xi, gi, bi, yi, xhat, inv_std, rows, d] {
      yi->ensure_grad();
      const T* dy = yi->grad.data();
      if (gi->requires_grad) gi->ensure_grad();
      if (bi->requires_grad) bi->ensure_grad();
      if (xi->requires_grad) xi->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const T* dyr = dy + r * d;
        const T* xh = xhat->data() + r * d;
        if (gi->requires_grad || bi->requires_grad) {
          for (int j = 0; j < d; ++j) {
            if (gi->requires_grad) gi->grad[static_cast<size_t>(j)] += dyr[j] * xh[j];
            if (bi->requires_grad) bi->grad[static_cast<size_t>(j)] += dyr[j];
          }
        }
        if (xi->requires_grad) {
          double sum_g = 0.0, sum_gx = 0.0;
          for (int j = 0; j < d; ++j) {
            const double gj = static_cast<double>(dyr[j]) * gi->data[static_cast<size_t>(j)];
            sum_g += gj;
            sum_gx += gj * xh[j];
          }
          const double is = (*inv_std)[static_cast<size_t>(r)];
          for (int j = 0; j < d; ++j) {
            const double gj = static_cast<double>(dyr[j]) * gi->data[static_cast<size_t>(j)];
            xi->grad[static_cast<size_t>(r * d + j)] +=
                static_cast<T>(is * (gj - sum_g / d - xh[j] * sum_gx / d));
          }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// softmax over the last axis
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> softmax_lastdim(Tape<T>* tape, const TensorT<T>& x) {
  const int m = x.dim(x.ndim() - 1);
  const int64_t rows = x.numel() / m;
  TensorT<T> y = TensorT<T>::zeros(x.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const T* row = x.raw() + r * m;
    T* out = y.raw() + r * m;
    T mx = row[0];
    for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      out[j] = std::exp(row[j] - mx);
      sum += out[j];
    }
    const T inv = static_cast<T>(1.0 / sum);
    for (int j = 0; j < m; ++j) out[j] *= inv;
  }
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi, rows, m] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (int64_t r = 0; r < rows; ++r) {
        const T* yr = yi->data.data() + r * m;
        const T* dyr = yi->grad.data() + r * m;
        double dot = 0.0;
        for (int j = 0; j < m; ++j) dot += static_cast<double>(dyr[j]) * yr[j];
        for (int j = 0; j < m; ++j)
          xi->grad[static_cast<size_t>(r * m + j)] += static_cast<T>(yr[j] * (dyr[j] - dot));
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> reshape(Tape<T>* tape, const TensorT<T>& x, Shape new_shape) {
  if (shape_numel(new_shape) != x.numel())
    fail(ErrorCode::Dimension, "reshape: element count mismatch for " + shape_str(new_shape));
  TensorT<T> y = TensorT<T>::from(std::move(new_shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (size_t j = 0; j < xi->grad.size(); ++j) xi->grad[j] += yi->grad[j];
    });
  }
  return y;
}

namespace detail {
template <typename T>
void permute_two_axes(const T* src, T* dst, const Shape& src_shape, int a, int b) {
  const int nd = static_cast<int>(src_shape.size());
  std::vector<int64_t> src_strides(static_cast<size_t>(nd), 1);
  for (int j = nd - 2; j >= 0; --j)
    src_strides[static_cast<size_t>(j)] = src_strides[static_cast<size_t>(j + 1)] * src_shape[static_cast<size_t>(j + 1)];
  Shape dst_shape = src_shape;
  std::swap(dst_shape[static_cast<size_t>(a)], dst_shape[static_cast<size_t>(b)]);
  std::vector<int64_t> walk = src_strides;
  std::swap(walk[static_cast<size_t>(a)], walk[static_cast<size_t>(b)]);
  // iterate destination in order, gather from source
  std::vector<int> ix(static_cast<size_t>(nd), 0);
  const int64_t n = shape_numel(src_shape);
  int64_t src_off = 0;
  for (int64_t j = 0; j < n; ++j) {
    dst[j] = src[src_off];
    for (int k = nd - 1; k >= 0; --k) {
      ix[static_cast<size_t>(k)]++;
      src_off += walk[static_cast<size_t>(k)];
      if (ix[static_cast<size_t>(k)] < dst_shape[static_cast<size_t>(k)]) break;
      src_off -= walk[static_cast<size_t>(k)] * dst_shape[static_cast<size_t>(k)];
      ix[static_cast<size_t>(k)] = 0;
    }
  }
}
}  // namespace detail

template <typename T>
TensorT<T> swap_axes(Tape<T>* tape, const TensorT<T>& x, int a, int b) {
  const int nd = x.ndim();
  if (a < 0 || b < 0 || a >= nd || b >= nd) fail(ErrorCode::Dimension, "swap_axes: axis out of range");
  Shape out_shape = x.shape();
  std::swap(out_shape[static_cast<size_t>(a)], out_shape[static_cast<size_t>(b)]);
  TensorT<T> y = TensorT<T>::zeros(out_shape);
  detail::permute_two_axes(x.raw(), y.raw(), x.shape(), a, b);
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    Shape yshape = out_shape;
    tape->record([xi, yi, yshape, a, b] {
      yi->ensure_grad();
      xi->ensure_grad();
      std::vector<T> back(yi->grad.size());
      detail::permute_two_axes(yi->grad.data(), back.data(), yshape, a, b);
      for (size_t j = 0; j < back.size(); ++j) xi->grad[j] += back[j];
    });
  }
  return y;
}

template <typename T>
TensorT<T> slice_lastdim(Tape<T>* tape, const TensorT<T>& x, int start, int len) {
  const int m = x.dim(x.ndim() - 1);
  if (start < 0 || len <= 0 || start + len > m) fail(ErrorCode::Dimension, "slice_lastdim: range out of bounds");
  const int64_t rows = x.numel() / m;
  Shape out_shape = x.shape();
  out_shape.back() = len;
  TensorT<T> y = TensorT<T>::zeros(out_shape);
  for (int64_t r = 0; r < rows; ++r)
    std::copy_n(x.raw() + r * m + start, len, y.raw() + r * len);
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi, rows, m, start, len] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < len; ++j)
          xi->grad[static_cast<size_t>(r * m + start + j)] += yi->grad[static_cast<size_t>(r * len + j)];
    });
  }
  return y;
}

template <typename T>
TensorT<T> select_timestep(Tape<T>* tape, const TensorT<T>& x, int t) {
  if (x.ndim() != 3) fail(ErrorCode::Dimension, "select_timestep: expected [B,T,D]");
  const int b = x.dim(0), tt = x.dim(1), d = x.dim(2);
  if (t < 0 || t >= tt) fail(ErrorCode::Dimension, "select_timestep: index out of range");
  TensorT<T> y = TensorT<T>::zeros({b, d});
  for (int bb = 0; bb < b; ++bb)
    std::copy_n(x.raw() + (static_cast<int64_t>(bb) * tt + t) * d, d, y.raw() + static_cast<int64_t>(bb) * d);
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi, b, tt, d, t] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (int bb = 0; bb < b; ++bb)
        for (int j = 0; j < d; ++j)
          xi->grad[static_cast<size_t>((static_cast<int64_t>(bb) * tt + t) * d + j)] +=
              yi->grad[static_cast<size_t>(static_cast<int64_t>(bb) * d + j)];
    });
  }
  return y;
}

template <typename T>
TensorT<T> add(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& y) {
  if (x.shape() != y.shape()) fail(ErrorCode::Dimension, "add: shape mismatch");
  TensorT<T> z = TensorT<T>::zeros(x.shape());
  const int64_t n = x.numel();
  for (int64_t j = 0; j < n; ++j) z.raw()[j] = x.raw()[j] + y.raw()[j];
  if (track(tape, {&x, &y})) {
    z.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl(), zi = z.impl();
    tape->record([xi, yi, zi, n] {
      zi->ensure_grad();
      if (xi->requires_grad) {
        xi->ensure_grad();
        for (int64_t j = 0; j < n; ++j) xi->grad[static_cast<size_t>(j)] += zi->grad[static_cast<size_t>(j)];
      }
      if (yi->requires_grad) {
        yi->ensure_grad();
        for (int64_t j = 0; j < n; ++j) yi->grad[static_cast<size_t>(j)] += zi->grad[static_cast<size_t>(j)];
      }
    });
  }
  return z;
}

// x [B,T,D] + table [T,D] broadcast over the batch; the table is a constant
template <typename T>
TensorT<T> add_positional(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& table) {
  if (x.ndim() != 3 || table.ndim() != 2 || x.dim(1) != table.dim(0) || x.dim(2) != table.dim(1))
    fail(ErrorCode::Dimension, "add_positional: expected x [B,T,D] and table [T,D]");
  const int b = x.dim(0);
  const int64_t td = static_cast<int64_t>(x.dim(1)) * x.dim(2);
  TensorT<T> y = TensorT<T>::zeros(x.shape());
  for (int bb = 0; bb < b; ++bb)
    for (int64_t j = 0; j < td; ++j) y.raw()[bb * td + j] = x.raw()[bb * td + j] + table.raw()[j];
  if (track(tape, {&x})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), yi = y.impl();
    tape->record([xi, yi] {
      yi->ensure_grad();
      xi->ensure_grad();
      for (size_t j = 0; j < xi->grad.size(); ++j) xi->grad[j] += yi->grad[j];
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// batched matmul: a [N,P,K] x b [N,K,Q] (or b [N,Q,K] with trans_b) -> [N,P,Q]
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> matmul_batched(Tape<T>* tape, const TensorT<T>& a, const TensorT<T>& b, bool trans_b,
                          T alpha = T(1)) {
  if (a.ndim() != 3 || b.ndim() != 3 || a.dim(0) != b.dim(0))
    fail(ErrorCode::Dimension, "matmul_batched: expected matching 3D batches");
  const int n = a.dim(0), p = a.dim(1), k = a.dim(2);
  const int q = trans_b ? b.dim(1) : b.dim(2);
  if ((trans_b ? b.dim(2) : b.dim(1)) != k) fail(ErrorCode::Dimension, "matmul_batched: inner dims disagree");
  TensorT<T> y = TensorT<T>::zeros({n, p, q});
  const int64_t a_sz = static_cast<int64_t>(p) * k, b_sz = static_cast<int64_t>(k) * q,
                y_sz = static_cast<int64_t>(p) * q;
  for (int i = 0; i < n; ++i)
    gemm<T>(false, trans_b, p, q, k, alpha, a.raw() + i * a_sz, k, b.raw() + i * b_sz,
            trans_b ? k : q, T(0), y.raw() + i * y_sz, q);
  if (track(tape, {&a, &b})) {
    y.set_requires_grad(true);
    auto ai = a.impl(), bi = b.impl(), yi = y.impl();
    tape->record([ai, bi, yi, n, p, k, q, trans_b, alpha, a_sz, b_sz, y_sz] {
      yi->ensure_grad();
      for (int i = 0; i < n; ++i) {
        const T* dy = yi->grad.data() + i * y_sz;
        if (ai->requires_grad) {
          ai->ensure_grad();
          // da = alpha * dy * b   (trans_b)  or  alpha * dy * b^T
          gemm<T>(false, !trans_b, p, k, q, alpha, dy, q, bi->data.data() + i * b_sz,
                  trans_b ? k : q, T(1), ai->grad.data() + i * a_sz, k);
        }
        if (bi->requires_grad) {
          bi->ensure_grad();
          if (trans_b)  // db = alpha * dy^T * a -> [Q,K]
            gemm<T>(true, false, q, k, p, alpha, dy, q, ai->data.data() + i * a_sz, k, T(1),
                    bi->grad.data() + i * b_sz, k);
          else  // db = alpha * a^T * dy -> [K,Q]
            gemm<T>(true, false, k, q, p, alpha, ai->data.data() + i * a_sz, k, dy, q, T(1),
                    bi->grad.data() + i * b_sz, q);
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// conv1d, stride 1, cross-correlation: x [B,Cin,L], w [Cout,Cin,K], b [Cout]
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> conv1d(Tape<T>* tape, const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b,
                  int padding) {
  if (x.ndim() != 3 || w.ndim() != 3 || b.ndim() != 1)
    fail(ErrorCode::Dimension, "conv1d: expected x [B,Cin,L], w [Cout,Cin,K], b [Cout]");
  if (padding < 0) fail(ErrorCode::InvalidArgument, "conv1d: padding must be >= 0");
  const int bs = x.dim(0), cin = x.dim(1), l = x.dim(2);
  const int cout = w.dim(0), k = w.dim(2);
  if (w.dim(1) != cin || b.dim(0) != cout) fail(ErrorCode::Dimension, "conv1d: channel dims disagree");
  const int lp = l + 2 * padding - k + 1;
  if (lp < 1) fail(ErrorCode::Dimension, "conv1d: kernel larger than padded input");

  const int ck = cin * k;
  auto cols = std::make_shared<std::vector<T>>(static_cast<size_t>(bs) * ck * lp, T(0));
  for (int bb = 0; bb < bs; ++bb) {
    T* col = cols->data() + static_cast<int64_t>(bb) * ck * lp;
    const T* xb = x.raw() + static_cast<int64_t>(bb) * cin * l;
    for (int c = 0; c < cin; ++c)
      for (int kk = 0; kk < k; ++kk) {
        T* dst = col + static_cast<int64_t>(c * k + kk) * lp;
        for (int pos = 0; pos < lp; ++pos) {
          const int src = pos + kk - padding;
          dst[pos] = (src >= 0 && src < l) ? xb[static_cast<int64_t>(c) * l + src] : T(0);
        }
      }
  }

  TensorT<T> y = TensorT<T>::zeros({bs, cout, lp});
  for (int bb = 0; bb < bs; ++bb) {
    gemm<T>(false, false, cout, lp, ck, T(1), w.raw(), ck,
            cols->data() + static_cast<int64_t>(bb) * ck * lp, lp, T(0),
            y.raw() + static_cast<int64_t>(bb) * cout * lp, lp);
    for (int c = 0; c < cout; ++c) {
      T* row = y.raw() + (static_cast<int64_t>(bb) * cout + c) * lp;
      for (int pos = 0; pos < lp; ++pos) row[pos] += b.raw()[c];
    }
  }

  if (track(tape, {&x, &w, &b})) {
    y.set_requires_grad(true);
    auto xi = x.impl(), wi = w.impl(), bi = b.impl(), yi = y.impl();
    tape->record([xi, wi, bi, yi, cols, bs, cin, l, cout, k, lp, ck, padding] {
      yi->ensure_grad();
      std::vector<T> dcol(static_cast<size_t>(ck) * lp);
      for (int bb = 0; bb < bs; ++bb) {
        const T* dyb = yi->grad.data() + static_cast<int64_t>(bb) * cout * lp;
        if (bi->requires_grad) {
          bi->ensure_grad();
          for (int c = 0; c < cout; ++c) {
            double s = 0.0;
            for (int pos = 0; pos < lp; ++pos) s += dyb[static_cast<int64_t>(c) * lp + pos];
            bi->grad[static_cast<size_t>(c)] += static_cast<T>(s);
          }
        }
        if (wi->requires_grad) {
          wi->ensure_grad();
          gemm<T>(false, true, cout, ck, lp, T(1), dyb, lp,
                  cols->data() + static_cast<int64_t>(bb) * ck * lp, lp, T(1), wi->grad.data(), ck);
        }
        if (xi->requires_grad) {
          xi->ensure_grad();
          gemm<T>(true, false, ck, lp, cout, T(1), wi->data.data(), ck, dyb, lp, T(0), dcol.data(), lp);
          T* dxb = xi->grad.data() + static_cast<int64_t>(bb) * cin * l;
          for (int c = 0; c < cin; ++c)
            for (int kk = 0; kk < k; ++kk) {
              const T* src = dcol.data() + static_cast<int64_t>(c * k + kk) * lp;
              for (int pos = 0; pos < lp; ++pos) {
                const int dst = pos + kk - padding;
                if (dst >= 0 && dst < l) dxb[static_cast<int64_t>(c) * l + dst] += src[pos];
              }
            }
        }
      }
    });
  }
  return y;
}

// ---------------------------------------------------------------------------
// LSTM layer, gate order (input, forget, cell, output)
// ---------------------------------------------------------------------------
template <typename T>
struct LstmParamsT {
  TensorT<T> w_ih;  // [4H, I]
  TensorT<T> w_hh;  // [4H, H]
  TensorT<T> b_ih;  // [4H]
  TensorT<T> b_hh;  // [4H]
};

template <typename T>
struct LstmOutT {
  TensorT<T> outputs;  // [B, T, H]
  TensorT<T> h_last;   // [B, H]
  TensorT<T> c_last;   // [B, H]
};

template <typename T>
LstmOutT<T> lstm_layer(Tape<T>* tape, const TensorT<T>& x, const LstmParamsT<T>& p,
                       const TensorT<T>* h0 = nullptr, const TensorT<T>* c0 = nullptr) {
  if (x.ndim() != 3) fail(ErrorCode::Dimension, "lstm_layer: expected x [B,T,I]");
  const int b = x.dim(0), t_len = x.dim(1), in = x.dim(2);
  if (p.w_ih.ndim() != 2 || p.w_ih.dim(1) != in || p.w_ih.dim(0) % 4 != 0)
    fail(ErrorCode::Dimension, "lstm_layer: w_ih must be [4H,I] with matching input size");
  const int h = p.w_ih.dim(0) / 4;
  const int g4 = 4 * h;
  if (p.w_hh.dim(0) != g4 || p.w_hh.dim(1) != h || p.b_ih.dim(0) != g4 || p.b_hh.dim(0) != g4)
    fail(ErrorCode::Dimension, "lstm_layer: gate parameter shapes disagree");
  if (h0 && (h0->ndim() != 2 || h0->dim(0) != b || h0->dim(1) != h))
    fail(ErrorCode::Dimension, "lstm_layer: h0 must be [B,H]");
  if (c0 && (c0->ndim() != 2 || c0->dim(0) != b || c0->dim(1) != h))
    fail(ErrorCode::Dimension, "lstm_layer: c0 must be [B,H]");

  const int64_t bt = static_cast<int64_t>(b) * t_len;
  // one input projection for all timesteps, then the recurrence adds h * w_hh^T
  auto acts = std::make_shared<std::vector<T>>(static_cast<size_t>(bt) * g4);
  gemm<T>(false, true, static_cast<int>(bt), g4, in, T(1), x.raw(), in, p.w_ih.raw(), in, T(0),
          acts->data(), g4);
  for (int64_t r = 0; r < bt; ++r) {
    T* row = acts->data() + r * g4;
    for (int j = 0; j < g4; ++j) row[j] += p.b_ih.raw()[j] + p.b_hh.raw()[j];
  }

  auto tanh_c = std::make_shared<std::vector<T>>(static_cast<size_t>(bt) * h);
  auto c_hist = std::make_shared<std::vector<T>>(static_cast<size_t>(bt) * h);
  TensorT<T> outputs = TensorT<T>::zeros({b, t_len, h});
  std::vector<T> hbuf(static_cast<size_t>(b) * h, T(0));
  std::vector<T> cbuf(static_cast<size_t>(b) * h, T(0));
  if (h0) std::copy_n(h0->raw(), hbuf.size(), hbuf.data());
  if (c0) std::copy_n(c0->raw(), cbuf.size(), cbuf.data());
  std::vector<T> c0_saved = cbuf;

  const int64_t row_stride = static_cast<int64_t>(t_len) * g4;
  for (int t = 0; t < t_len; ++t) {
    // acts rows for step t across the batch live at stride T*4H
    gemm<T>(false, true, b, g4, h, T(1), hbuf.data(), h, p.w_hh.raw(), h, T(1),
            acts->data() + static_cast<int64_t>(t) * g4, static_cast<int>(row_stride));
    for (int bb = 0; bb < b; ++bb) {
      T* g = acts->data() + (static_cast<int64_t>(bb) * t_len + t) * g4;
      T* cv = cbuf.data() + static_cast<int64_t>(bb) * h;
      T* hv = hbuf.data() + static_cast<int64_t>(bb) * h;
      T* out = outputs.raw() + (static_cast<int64_t>(bb) * t_len + t) * h;
      T* tc = tanh_c->data() + (static_cast<int64_t>(bb) * t_len + t) * h;
      T* ch = c_hist->data() + (static_cast<int64_t>(bb) * t_len + t) * h;
      for (int j = 0; j < h; ++j) {
        const T ig = T(1) / (T(1) + std::exp(-g[j]));
        const T fg = T(1) / (T(1) + std::exp(-g[h + j]));
        const T gg = std::tanh(g[2 * h + j]);
        const T og = T(1) / (T(1) + std::exp(-g[3 * h + j]));
        g[j] = ig;
        g[h + j] = fg;
        g[2 * h + j] = gg;
        g[3 * h + j] = og;
        const T c_new = fg * cv[j] + ig * gg;
        cv[j] = c_new;
        ch[j] = c_new;
        const T tch = std::tanh(c_new);
        tc[j] = tch;
        hv[j] = og * tch;
        out[j] = hv[j];
      }
    }
  }

  LstmOutT<T> result;
  result.outputs = outputs;
  result.h_last = TensorT<T>::from({b, h}, hbuf);
  result.c_last = TensorT<T>::from({b, h}, cbuf);

  if (track(tape, {&x, &p.w_ih, &p.w_hh, &p.b_ih, &p.b_hh})) {
    result.outputs.set_requires_grad(true);
    result.h_last.set_requires_grad(true);
    result.c_last.set_requires_grad(true);
    auto xi = x.impl(), wii = p.w_ih.impl(), whi = p.w_hh.impl(), bii = p.b_ih.impl(),
         bhi = p.b_hh.impl();
    auto oi = result.outputs.impl(), hi = result.h_last.impl(), ci = result.c_last.impl();
    auto c0v = std::make_shared<std::vector<T>>(std::move(c0_saved));
    std::shared_ptr<std::vector<T>> h0v;
    if (h0) h0v = std::make_shared<std::vector<T>>(h0->data().begin(), h0->data().end());
    tape->record([xi, wii, whi, bii, bhi, oi, hi, ci, acts, tanh_c, c_hist, c0v, h0v, b, t_len, in,
                  h, g4, bt, row_stride] {
      oi->ensure_grad();
      hi->ensure_grad();
      ci->ensure_grad();
      std::vector<T> dh(hi->grad.begin(), hi->grad.end());
      std::vector<T> dc(ci->grad.begin(), ci->grad.end());
      std::vector<T> dacts(static_cast<size_t>(bt) * g4, T(0));
      std::vector<T> dh_prev(static_cast<size_t>(b) * h);
      const bool want_whh = whi->requires_grad;
      if (want_whh) whi->ensure_grad();
      for (int t = t_len - 1; t >= 0; --t) {
        for (int bb = 0; bb < b; ++bb) {
          const int64_t r = static_cast<int64_t>(bb) * t_len + t;
          const T* g = acts->data() + r * g4;
          const T* tc = tanh_c->data() + r * h;
          const T* cp = t > 0 ? c_hist->data() + (r - 1) * h : c0v->data() + static_cast<int64_t>(bb) * h;
          T* dgr = dacts.data() + r * g4;
          for (int j = 0; j < h; ++j) {
            const T dhj = dh[static_cast<size_t>(bb) * h + j] + oi->grad[static_cast<size_t>(r * h + j)];
            const T ig = g[j], fg = g[h + j], gg = g[2 * h + j], og = g[3 * h + j];
            const T do_ = dhj * tc[j];
            T dcj = dc[static_cast<size_t>(bb) * h + j] + dhj * og * (T(1) - tc[j] * tc[j]);
            dgr[j] = dcj * gg * ig * (T(1) - ig);
            dgr[h + j] = dcj * cp[j] * fg * (T(1) - fg);
            dgr[2 * h + j] = dcj * ig * (T(1) - gg * gg);
            dgr[3 * h + j] = do_ * og * (T(1) - og);
            dc[static_cast<size_t>(bb) * h + j] = dcj * fg;
          }
        }
        // dh_prev = dG_t * w_hh, accumulate dw_hh += dG_t^T * h_prev
        gemm<T>(false, false, b, h, g4, T(1), dacts.data() + static_cast<int64_t>(t) * g4,
                static_cast<int>(row_stride), whi->data.data(), h, T(0), dh_prev.data(), h);
        if (want_whh) {
          if (t > 0) {
            gemm<T>(true, false, g4, h, b, T(1), dacts.data() + static_cast<int64_t>(t) * g4,
                    static_cast<int>(row_stride), oi->data.data() + static_cast<int64_t>(t - 1) * h,
                    static_cast<int>(static_cast<int64_t>(t_len) * h), T(1), whi->grad.data(), h);
          } else if (h0v) {
            gemm<T>(true, false, g4, h, b, T(1), dacts.data(), static_cast<int>(row_stride),
                    h0v->data(), h, T(1), whi->grad.data(), h);
          }
        }
        std::swap(dh, dh_prev);  // next iteration's gemm overwrites dh_prev
      }
      if (wii->requires_grad) {
        wii->ensure_grad();
        gemm<T>(true, false, g4, in, static_cast<int>(bt), T(1), dacts.data(), g4, xi->data.data(),
                in, T(1), wii->grad.data(), in);
      }
      if (bii->requires_grad || bhi->requires_grad) {
        std::vector<double> colsum(static_cast<size_t>(g4), 0.0);
        for (int64_t r = 0; r < bt; ++r)
          for (int j = 0; j < g4; ++j) colsum[static_cast<size_t>(j)] += dacts[static_cast<size_t>(r * g4 + j)];
        if (bii->requires_grad) {
          bii->ensure_grad();
          for (int j = 0; j < g4; ++j) bii->grad[static_cast<size_t>(j)] += static_cast<T>(colsum[static_cast<size_t>(j)]);
        }
        if (bhi->requires_grad) {
          bhi->ensure_grad();
          for (int j = 0; j < g4; ++j) bhi->grad[static_cast<size_t>(j)] += static_cast<T>(colsum[static_cast<size_t>(j)]);
        }
      }
      if (xi->requires_grad) {
        xi->ensure_grad();
        gemm<T>(false, false, static_cast<int>(bt), in, g4, T(1), dacts.data(), g4,
                wii->data.data(), in, T(1), xi->grad.data(), in);
      }
    });
  }
  return result;
}

// ---------------------------------------------------------------------------
// multi-head self attention, encoder style (no causal mask)
// ---------------------------------------------------------------------------
template <typename T>
struct AttentionParamsT {
  TensorT<T> in_w;   // [3D, D] fused q/k/v projection
  TensorT<T> in_b;   // [3D]
  TensorT<T> out_w;  // [D, D]
  TensorT<T> out_b;  // [D]
};

template <typename T>
TensorT<T> multihead_self_attention(Tape<T>* tape, const TensorT<T>& x,
                                    const AttentionParamsT<T>& p, int heads) {
  if (x.ndim() != 3) fail(ErrorCode::Dimension, "attention: expected x [B,T,D]");
  const int b = x.dim(0), t = x.dim(1), d = x.dim(2);
  if (heads < 1 || d % heads != 0)
    fail(ErrorCode::InvalidArgument, "attention: model dim must be divisible by head count");
  if (p.in_w.dim(0) != 3 * d || p.in_w.dim(1) != d || p.out_w.dim(0) != d || p.out_w.dim(1) != d)
    fail(ErrorCode::Dimension, "attention: projection shapes disagree with model dim");
  const int dh = d / heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  TensorT<T> x2 = reshape(tape, x, {b * t, d});
  TensorT<T> qkv = linear_wt(tape, x2, p.in_w, p.in_b);  // [BT, 3D]
  auto split_heads = [&](int offset) {
    TensorT<T> s = slice_lastdim(tape, qkv, offset, d);
    TensorT<T> s4 = reshape(tape, s, {b, t, heads, dh});
    TensorT<T> sw = swap_axes(tape, s4, 1, 2);  // [B, h, T, dh]
    return reshape(tape, sw, {b * heads, t, dh});
  };
  TensorT<T> q = split_heads(0);
  TensorT<T> k = split_heads(d);
  TensorT<T> v = split_heads(2 * d);
  TensorT<T> scores = matmul_batched(tape, q, k, /*trans_b=*/true, scale);  // [Bh, T, T]
  TensorT<T> attn = softmax_lastdim(tape, scores);
  TensorT<T> ctx = matmul_batched(tape, attn, v, /*trans_b=*/false);  // [Bh, T, dh]
  TensorT<T> ctx4 = reshape(tape, ctx, {b, heads, t, dh});
  TensorT<T> merged = swap_axes(tape, ctx4, 1, 2);  // [B, T, h, dh]
  TensorT<T> ctx2 = reshape(tape, merged, {b * t, d});
  TensorT<T> out = linear_wt(tape, ctx2, p.out_w, p.out_b);
  return reshape(tape, out, {b, t, d});
}

// ---------------------------------------------------------------------------
// sinusoidal position table [T, D]
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> positional_encoding(int t_len, int d) {
  if (d % 2 != 0) fail(ErrorCode::InvalidArgument, "positional_encoding: dimension must be even");
  if (t_len < 1 || d < 2) fail(ErrorCode::InvalidArgument, "positional_encoding: degenerate size");
  TensorT<T> pe = TensorT<T>::zeros({t_len, d});
  for (int pos = 0; pos < t_len; ++pos)
    for (int j = 0; j < d / 2; ++j) {
      const double rate = std::pow(10000.0, 2.0 * j / d);
      pe.raw()[static_cast<int64_t>(pos) * d + 2 * j] = static_cast<T>(std::sin(pos / rate));
      pe.raw()[static_cast<int64_t>(pos) * d + 2 * j + 1] = static_cast<T>(std::cos(pos / rate));
    }
  return pe;
}

// ---------------------------------------------------------------------------
// mean squared error over all elements
// ---------------------------------------------------------------------------
template <typename T>
TensorT<T> mse_loss(Tape<T>* tape, const TensorT<T>& pred, const TensorT<T>& target) {
  if (pred.shape() != target.shape())
    fail(ErrorCode::Dimension, "mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                                   shape_str(target.shape()));
  const int64_t n = pred.numel();
  double acc = 0.0;
  for (int64_t j = 0; j < n; ++j) {
    const double dv = static_cast<double>(pred.raw()[j]) - target.raw()[j];
    acc += dv * dv;
  }
  TensorT<T> loss = TensorT<T>::from({1}, {static_cast<T>(acc / static_cast<double>(n))});
  if (track(tape, {&pred, &target})) {
    loss.set_requires_grad(true);
    auto pi = pred.impl(), ti = target.impl(), li = loss.impl();
    tape->record([pi, ti, li, n] {
      li->ensure_grad();
      const T go = li->grad[0];
      const T inv = static_cast<T>(2.0 / static_cast<double>(n));
      if (pi->requires_grad) {
        pi->ensure_grad();
        for (int64_t j = 0; j < n; ++j)
          pi->grad[static_cast<size_t>(j)] += go * inv * (pi->data[static_cast<size_t>(j)] - ti->data[static_cast<size_t>(j)]);
      }
      if (ti->requires_grad) {
        ti->ensure_grad();
        for (int64_t j = 0; j < n; ++j)
          ti->grad[static_cast<size_t>(j)] -= go * inv * (pi->data[static_cast<size_t>(j)] - ti->data[static_cast<size_t>(j)]);
      }
    });
  }
  return loss;
}

}  // namespace kpfc::ops
