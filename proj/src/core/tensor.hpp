#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace kpfc {

using Shape = std::vector<int>;

inline int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) fail(ErrorCode::Dimension, "tensor extents must be positive");
    n *= d;
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major tensor. Data is contiguous; the gradient buffer is
// allocated lazily and always matches the data shape. Handles share the
// underlying buffer, which is what gives tape closures stable node
// identity for gradient accumulation.
template <typename T>
struct TensorImplT {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until touched
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

template <typename T>
class TensorT {
 public:
  TensorT() = default;

  static TensorT zeros(Shape shape, bool requires_grad = false) {
    TensorT t;
    t.impl_ = std::make_shared<TensorImplT<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->data.assign(static_cast<size_t>(shape_numel(t.impl_->shape)), T(0));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static TensorT full(Shape shape, T value, bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.impl_->data) v = value;
    return t;
  }

  static TensorT from(Shape shape, std::vector<T> data, bool requires_grad = false) {
    if (static_cast<int64_t>(data.size()) != shape_numel(shape))
      fail(ErrorCode::Dimension, "tensor data size does not match shape " + shape_str(shape));
    TensorT t;
    t.impl_ = std::make_shared<TensorImplT<T>>();
    t.impl_->shape = std::move(shape);
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static TensorT uniform(Shape shape, CounterRng& rng, T lo, T hi, bool requires_grad = false) {
    TensorT t = zeros(std::move(shape), requires_grad);
    for (auto& v : t.impl_->data) v = static_cast<T>(rng.uniform(lo, hi));
    return t;
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }

  std::span<T> data() { return impl_->data; }
  std::span<const T> data() const { return impl_->data; }
  T* raw() { return impl_->data.data(); }
  const T* raw() const { return impl_->data.data(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  // Zeros if backward never reached this node.
  std::span<T> grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  std::span<const T> grad() const {
    const_cast<TensorImplT<T>*>(impl_.get())->ensure_grad();
    return impl_->grad;
  }
  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  T item() const {
    if (numel() != 1) fail(ErrorCode::Contract, "item() requires a single-element tensor");
    return impl_->data[0];
  }

  bool all_finite() const {
    for (T v : impl_->data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  TensorT clone() const {
    TensorT t;
    t.impl_ = std::make_shared<TensorImplT<T>>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
  }

  std::shared_ptr<TensorImplT<T>> impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImplT<T>> impl_;
};

// Wengert list. Ops append their backward rule as they execute, so entries
// are topologically ordered by construction and one reverse sweep visits
// every recorded node exactly once.
template <typename T>
class Tape {
 public:
  void record(std::function<void()> backward_fn) { entries_.push_back(std::move(backward_fn)); }
  size_t size() const { return entries_.size(); }

  void run_backward() {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  }

  void clear() { entries_.clear(); }

 private:
  std::vector<std::function<void()>> entries_;
};

// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, accumulating
// into the grad buffers of every requires_grad leaf.
template <typename T>
void backward(TensorT<T>& loss, Tape<T>& tape) {
  if (loss.numel() != 1) fail(ErrorCode::Contract, "backward: loss must be a scalar");
  loss.grad()[0] += T(1);
  tape.run_backward();
}

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace kpfc
