#pragma once

#include <doctest.h>

#include <vector>

#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace kpfc::testing {

template <typename T>
TensorT<T> rand_tensor(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  CounterRng rng(seed, 0x7e57u);
  return TensorT<T>::uniform(shape, rng, static_cast<T>(lo), static_cast<T>(hi));
}

inline Tensor randf(Shape shape, uint64_t seed, double lo = -1.0, double hi = 1.0) {
  return rand_tensor<float>(std::move(shape), seed, lo, hi);
}

template <typename F>
ErrorCode error_code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a kpfc::Error");
  return ErrorCode::Contract;
}

// fixed-value target of the same scalar type as the leaves, derived from a
// seed so f32/f64 instantiations see identical values
template <typename T>
TensorT<T> fixed_target(const TensorT<T>& like, uint64_t seed) {
  CounterRng rng(seed, 0x7a26e7u);
  TensorT<T> t = TensorT<T>::zeros(like.shape());
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return t;
}

}  // namespace kpfc::testing
