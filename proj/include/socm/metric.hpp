#pragma once

#include <Eigen/Dense>

#include "socm/stats.hpp"
#include "socm/tensor_io.hpp"

namespace socm {

inline constexpr double kUnitNormTolerance = 1e-6;
/// Negative eigenvalues down to -kEigenFloorRelative * trace are rounding and get zeroed.
inline constexpr double kEigenFloorRelative = 1e-10;
inline constexpr double kSymmetryTolerance = 1e-8;

/// Per-pair result. `socm` is computed from the clamped `d_sigma`.
struct PairStats {
  double d_mu = 0.0;
  double d_sigma = 0.0;
  double socm = 0.0;
  double d_sigma_raw = 0.0;  // before clamping into [0, 1]
  bool clamped = false;      // d_sigma_raw > 1, i.e. tr(S1) + tr(S2) exceeded the bound
  double trace_sum = 0.0;
};

struct CovarianceDistance {
  double value = 0.0;  // clamped to [0, 1]
  double raw = 0.0;
  bool clamped = false;
};

/// ||mu1 - mu2||^2 / 4 for unit-norm means. Throws PreconditionError if either
/// norm is off by more than kUnitNormTolerance.
[[nodiscard]] double d_mu(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2);

/// Unscaled Bures-Wasserstein distance tr(S1 + S2 - 2 (S1^1/2 S2 S1^1/2)^1/2),
/// evaluated densely through symmetric eigendecompositions. O(d^3).
[[nodiscard]] double bures_wasserstein_dense(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2);

/// Same quantity from the covariance factors: tr S1 + tr S2 - 2 * nuclear(B1^T B2).
/// Not floored, so it can dip a few ulps below zero.
[[nodiscard]] double bures_wasserstein_factored(const GaussianSummary& g1, const GaussianSummary& g2);

/// Scaled covariance distance through the factored path.
[[nodiscard]] CovarianceDistance d_sigma(const GaussianSummary& g1, const GaussianSummary& g2);

/// (1 - d_mu) * d_sigma. Both inputs must lie in [0, 1].
[[nodiscard]] double socm(double d_mu, double d_sigma);

/// Full pair statistics from summaries of already-normalized lists.
[[nodiscard]] PairStats pair_stats(const GaussianSummary& g1, const GaussianSummary& g2);

/// Normalizes both lists, summarizes them and scores the pair.
[[nodiscard]] PairStats socm_pair(const TokenMatrix& x1, const TokenMatrix& x2);

/// Squared 2-Wasserstein distance between N(mu1, S1) and N(mu2, S2).
[[nodiscard]] double w2_gaussian_squared(const GaussianSummary& g1, const GaussianSummary& g2);

}  // namespace socm
