#include "socm/stats.hpp"

#include <cmath>
#include <string>

#include "socm/errors.hpp"

namespace socm {
namespace {

double checked_mean_norm(const Eigen::VectorXd& mu) {
  const double norm = mu.norm();
  if (!(norm > kMeanNormFloor))
    throw DegenerateMeanError("mean norm " + std::to_string(norm) + " is at or below the floor " +
                              std::to_string(kMeanNormFloor));
  return norm;
}

Eigen::MatrixXd unit_columns(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd u(m.rows(), m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double norm = m.col(j).norm();
    if (!(norm > 0.0))
      throw UndefinedRatioError("cosine undefined: token " + std::to_string(j) + " has zero norm");
    u.col(j) = m.col(j) / norm;
  }
  return u;
}

}  // namespace

Eigen::VectorXd mean_pool(const Eigen::MatrixXd& tokens) {
  if (tokens.cols() < 1) throw PreconditionError("mean_pool needs at least one token");
  return tokens.rowwise().mean();
}

Eigen::VectorXd mean_pool(const TokenMatrix& x) { return mean_pool(x.values); }

GaussianSummary summarize(const Eigen::MatrixXd& tokens) {
  GaussianSummary g;
  g.mean = mean_pool(tokens);
  const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.cols()));
  g.factor = (tokens.colwise() - g.mean) * scale;
  g.trace = g.factor.squaredNorm();
  return g;
}

GaussianSummary summarize(const TokenMatrix& x) { return summarize(x.values); }

Eigen::MatrixXd normalize_list(const Eigen::MatrixXd& tokens) {
  const double norm = checked_mean_norm(mean_pool(tokens));
  return tokens / norm;
}

TokenMatrix normalize_list(const TokenMatrix& x) {
  return TokenMatrix{x.text_id, normalize_list(x.values)};
}

double spread(const Eigen::MatrixXd& m) {
  if (m.cols() < 1) throw PreconditionError("spread needs at least one column");
  const Eigen::VectorXd mu = m.rowwise().mean();
  return (m.colwise() - mu).squaredNorm() / static_cast<double>(m.cols());
}

double concentration(const Eigen::MatrixXd& m) {
  const double norm = checked_mean_norm(mean_pool(m));
  return spread(m) / (norm * norm);
}

double avg_pairwise_cosine(const Eigen::MatrixXd& m) {
  if (m.cols() < 1) throw PreconditionError("cosine needs at least one column");
  const Eigen::MatrixXd u = unit_columns(m);
  // sum_{j,k} <u_j, u_k> = ||sum_j u_j||^2
  const double n = static_cast<double>(m.cols());
  return u.rowwise().sum().squaredNorm() / (n * n);
}

double avg_offdiagonal_cosine(const Eigen::MatrixXd& m) {
  if (m.cols() < 2) throw PreconditionError("distinct-pair cosine needs n >= 2");
  const Eigen::MatrixXd u = unit_columns(m);
  const Eigen::MatrixXd gram = u.transpose() * u;
  const Eigen::Index n = m.cols();
  double total = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) total += gram(j, k);
  return total / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace socm
