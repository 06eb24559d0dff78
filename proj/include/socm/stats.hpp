#pragma once

#include <Eigen/Dense>

#include "socm/tensor_io.hpp"

namespace socm {

/// Means with norm at or below this are treated as degenerate.
inline constexpr double kMeanNormFloor = 1e-12;

/// Gaussian view of a token list: mean plus population covariance kept in
/// factored form, Sigma = factor * factor^T with factor column j = (x_j - mu) / sqrt(n).
struct GaussianSummary {
  Eigen::VectorXd mean;
  Eigen::MatrixXd factor;
  double trace = 0.0;

  [[nodiscard]] Eigen::Index dim() const noexcept { return mean.size(); }
  /// Materializes the d x d covariance. Only meant for small d.
  [[nodiscard]] Eigen::MatrixXd covariance() const { return factor * factor.transpose(); }
};

[[nodiscard]] Eigen::VectorXd mean_pool(const Eigen::MatrixXd& tokens);
[[nodiscard]] Eigen::VectorXd mean_pool(const TokenMatrix& x);

[[nodiscard]] GaussianSummary summarize(const Eigen::MatrixXd& tokens);
[[nodiscard]] GaussianSummary summarize(const TokenMatrix& x);

/// Divides every token by ||mu(X)||, giving a list whose mean has unit norm.
/// Throws DegenerateMeanError when ||mu(X)|| <= kMeanNormFloor.
[[nodiscard]] TokenMatrix normalize_list(const TokenMatrix& x);
[[nodiscard]] Eigen::MatrixXd normalize_list(const Eigen::MatrixXd& tokens);

/// Mean squared distance of the columns to their mean (= trace of the covariance).
[[nodiscard]] double spread(const Eigen::MatrixXd& m);

/// spread(X) / ||mu(X)||^2. Throws DegenerateMeanError on a vanishing mean.
[[nodiscard]] double concentration(const Eigen::MatrixXd& m);

/// (1/n^2) sum_{j,k} cos(x_j, x_k), diagonal included.
/// Throws UndefinedRatioError if any column has zero norm.
[[nodiscard]] double avg_pairwise_cosine(const Eigen::MatrixXd& m);

/// Average cosine over distinct pairs j < k. Requires n >= 2.
[[nodiscard]] double avg_offdiagonal_cosine(const Eigen::MatrixXd& m);

}  // namespace socm
