#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "data/dataset.hpp"

namespace kpfc {

struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // unbiased, symmetric PSD up to rounding
};

struct MetricsReport {
  double rmse_x100 = 0.0;
  double fid = 0.0;
  int64_t n_samples = 0;
};

//  100 * sqrt(mean squared error) over all elements, f64 accumulation
double rmse_x100(std::span<const float> preds, std::span<const float> targets);

// rows of `samples` are observations
GaussianStats gaussian_stats(const Eigen::MatrixXd& samples);

// symmetric PSD square root via eigendecomposition with negative
// eigenvalues clamped to zero; input asymmetry beyond tolerance is a
// contract violation
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s, double sym_tol = 1e-9);

// ||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2), clamped at 0.
// Near-singular covariances are regularized by eps*I with
// eps = 1e-6 * max(1, tr/F); well-conditioned inputs are left untouched so
// the analytic closed forms hold to f64 accuracy.
double frechet_distance(const GaussianStats& a, const GaussianStats& b);

// FID over raw flattened normalized sequences (feature dim = t_out * 34)
double motion_fid(std::span<const float> preds, int64_t n, std::span<const float> refs, int64_t m,
                  int feature_dim);

enum class BaselineKind { CopyLast, ConstVelocity };

// forecasting oracles: repeat the last observed frame, or extrapolate each
// joint with the last inter-frame velocity
std::vector<float> baseline_predict(const Window& window, BaselineKind kind);

std::string metrics_report_json(const MetricsReport& report);

}  // namespace kpfc
