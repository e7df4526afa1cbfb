#pragma once

#include <cstring>
#include <vector>

#include "core/ops.hpp"
#include "core/tensor.hpp"

namespace kpfc {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int64_t checked = 0;
  int64_t excluded = 0;  // coordinates skipped at non-smooth points (relu kinks)
};

// Compares taped f32 gradients against central finite differences of the
// same function instantiated at f64. Fn must be a polymorphic callable
//   TensorT<S> fn(Tape<S>*, std::vector<TensorT<S>>& leaves)
// returning a scalar, deterministic for fixed leaves (dropout is fine as
// long as its mask key is fixed). Coordinates where the one-sided
// difference quotients disagree strongly (a kink crossed the step) are
// excluded from the comparison.
template <typename Fn>
GradCheckResult grad_check(Fn&& fn, const std::vector<Tensor>& init, double step = 1e-3) {
  if (step <= 0.0) fail(ErrorCode::InvalidArgument, "grad_check: step must be positive");

  std::vector<Tensor> leaves;
  leaves.reserve(init.size());
  for (const auto& t : init) {
    Tensor c = t.clone();
    c.set_requires_grad(true);
    leaves.push_back(c);
  }

  // determinism contract: two evaluations must agree bit for bit
  const float v1 = fn(static_cast<Tape<float>*>(nullptr), leaves).item();
  const float v2 = fn(static_cast<Tape<float>*>(nullptr), leaves).item();
  if (std::memcmp(&v1, &v2, sizeof(float)) != 0)
    fail(ErrorCode::Contract, "grad_check: function is not deterministic");

  Tape<float> tape;
  Tensor loss = fn(&tape, leaves);
  if (loss.numel() != 1) fail(ErrorCode::Contract, "grad_check: function must return a scalar");
  backward(loss, tape);
  std::vector<std::vector<float>> analytic;
  for (auto& l : leaves) analytic.emplace_back(l.grad().begin(), l.grad().end());

  std::vector<TensorD> leaves64;
  for (const auto& t : init) {
    std::vector<double> d(t.data().begin(), t.data().end());
    leaves64.push_back(TensorD::from(t.shape(), std::move(d)));
  }
  auto eval64 = [&]() -> double {
    return fn(static_cast<Tape<double>*>(nullptr), leaves64).item();
  };
  const double f0 = eval64();

  GradCheckResult result;
  for (size_t li = 0; li < leaves64.size(); ++li) {
    auto vals = leaves64[li].data();
    for (int64_t j = 0; j < leaves64[li].numel(); ++j) {
      const double saved = vals[j];
      vals[j] = saved + step;
      const double fp = eval64();
      vals[j] = saved - step;
      const double fm = eval64();
      vals[j] = saved;

      const double dplus = (fp - f0) / step;
      const double dminus = (f0 - fm) / step;
      const double scale = std::max({std::abs(dplus), std::abs(dminus), 1e-8});
      if (std::abs(dplus - dminus) > 0.25 * scale) {
        ++result.excluded;
        continue;
      }
      const double central = (fp - fm) / (2.0 * step);
      const double a = analytic[li][static_cast<size_t>(j)];
      const double rel = std::abs(a - central) / std::max({std::abs(a), std::abs(central), 1e-8});
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace kpfc
