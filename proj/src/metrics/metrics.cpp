#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace kpfc {

double rmse_x100(std::span<const float> preds, std::span<const float> targets) {
  if (preds.size() != targets.size() || preds.empty())
    fail(ErrorCode::Dimension, "rmse: prediction and target sizes differ");
  double acc = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = static_cast<double>(preds[i]) - targets[i];
    acc += d * d;
  }
  return 100.0 * std::sqrt(acc / static_cast<double>(preds.size()));
}

GaussianStats gaussian_stats(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) fail(ErrorCode::InvalidArgument, "gaussian_stats: need at least 2 samples");
  GaussianStats stats;
  stats.mean = samples.colwise().mean();
  Eigen::MatrixXd centered = samples.rowwise() - stats.mean.transpose();
  stats.cov = (centered.adjoint() * centered) / static_cast<double>(n - 1);
  return stats;
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& s, double sym_tol) {
  if (s.rows() != s.cols()) fail(ErrorCode::Dimension, "sqrtm_psd: matrix must be square");
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if (asym > sym_tol * scale)
    fail(ErrorCode::Contract, "sqrtm_psd: input asymmetry " + std::to_string(asym) +
                                  " exceeds tolerance");
  const Eigen::MatrixXd sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  if (eig.info() != Eigen::Success) fail(ErrorCode::Numeric, "sqrtm_psd: eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {
// add eps*I only when the spectrum is effectively singular; keeps the
// closed-form cases exact while stabilizing N < F covariance fits
Eigen::MatrixXd regularized(const Eigen::MatrixXd& cov) {
  const double f = static_cast<double>(cov.rows());
  const double tr_scale = std::max(1.0, cov.trace() / f);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() < 1e-8 * tr_scale)
    return cov + (1e-6 * tr_scale) * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
  return cov;
}
}  // namespace

double frechet_distance(const GaussianStats& a, const GaussianStats& b) {
  if (a.mean.size() != b.mean.size() || a.cov.rows() != b.cov.rows())
    fail(ErrorCode::Dimension, "frechet_distance: feature dimensions differ");
  const Eigen::MatrixXd ca = regularized(a.cov);
  const Eigen::MatrixXd cb = regularized(b.cov);
  const Eigen::MatrixXd root_a = sqrtm_psd(ca);
  const Eigen::MatrixXd inner = root_a * cb * root_a;
  const Eigen::MatrixXd cross = sqrtm_psd(0.5 * (inner + inner.transpose()));
  const double mean_term = (a.mean - b.mean).squaredNorm();
  const double d = mean_term + ca.trace() + cb.trace() - 2.0 * cross.trace();
  return std::max(0.0, d);
}

double motion_fid(std::span<const float> preds, int64_t n, std::span<const float> refs, int64_t m,
                  int feature_dim) {
  if (n < 2 || m < 2) fail(ErrorCode::InvalidArgument, "motion_fid: need at least 2 sequences per side");
  if (preds.size() != static_cast<size_t>(n) * feature_dim ||
      refs.size() != static_cast<size_t>(m) * feature_dim)
    fail(ErrorCode::Dimension, "motion_fid: buffer sizes disagree with counts");
  Eigen::MatrixXd pm(n, feature_dim), rm(m, feature_dim);
  for (int64_t i = 0; i < n; ++i)
    for (int j = 0; j < feature_dim; ++j) pm(i, j) = preds[static_cast<size_t>(i * feature_dim + j)];
  for (int64_t i = 0; i < m; ++i)
    for (int j = 0; j < feature_dim; ++j) rm(i, j) = refs[static_cast<size_t>(i * feature_dim + j)];
  return frechet_distance(gaussian_stats(pm), gaussian_stats(rm));
}

std::vector<float> baseline_predict(const Window& window, BaselineKind kind) {
  if (window.t_in < 2) fail(ErrorCode::InvalidArgument, "baseline_predict: need at least 2 input frames");
  std::vector<float> out(static_cast<size_t>(window.t_out) * kFrameDim);
  const float* last = window.input.data() + static_cast<size_t>(window.t_in - 1) * kFrameDim;
  const float* prev = window.input.data() + static_cast<size_t>(window.t_in - 2) * kFrameDim;
  for (int f = 0; f < window.t_out; ++f) {
    float* dst = out.data() + static_cast<size_t>(f) * kFrameDim;
    for (int j = 0; j < kFrameDim; ++j) {
      if (kind == BaselineKind::CopyLast) {
        dst[j] = last[j];
      } else {
        dst[j] = last[j] + static_cast<float>(f + 1) * (last[j] - prev[j]);
      }
    }
  }
  return out;
}

std::string metrics_report_json(const MetricsReport& report) {
  nlohmann::json j = {{"rmse_x100", report.rmse_x100}, {"fid", report.fid}, {"n", report.n_samples}};
  return j.dump();
}

}  // namespace kpfc
