#include "socm/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SVD>

#include "socm/errors.hpp"

namespace socm {
namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b)
    throw ShapeError(std::string(what) + ": dimension mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
}

// Symmetric eigendecomposition of a PSD matrix with rounding-level negative
// eigenvalues zeroed.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> psd_eigen(const Eigen::MatrixXd& s,
                                                         Eigen::VectorXd& eigenvalues,
                                                         const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success)
    throw NumericError(std::string("eigendecomposition failed for ") + what);
  eigenvalues = solver.eigenvalues();
  const double floor = -kEigenFloorRelative * std::max(s.trace(), 0.0);
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i) < floor)
      throw NumericError(std::string(what) + " is not positive semidefinite: eigenvalue " +
                         std::to_string(eigenvalues(i)));
    eigenvalues(i) = std::max(eigenvalues(i), 0.0);
  }
  // below numerical rank: square roots of these would only amplify rounding
  const double rank_tol = static_cast<double>(std::max<Eigen::Index>(s.rows(), 1)) *
                          std::numeric_limits<double>::epsilon() *
                          (eigenvalues.size() ? eigenvalues.maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) <= rank_tol) eigenvalues(i) = 0.0;
  return solver;
}

Eigen::MatrixXd checked_symmetric(const Eigen::MatrixXd& s, const char* what) {
  if (s.rows() != s.cols()) throw ShapeError(std::string(what) + " must be square");
  if (!s.allFinite()) throw NumericError(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, s.size() ? s.cwiseAbs().maxCoeff() : 0.0);
  if (s.size() && (s - s.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale)
    throw PreconditionError(std::string(what) + " is not symmetric");
  return 0.5 * (s + s.transpose());
}

void check_unit(const Eigen::VectorXd& mu, const char* what) {
  if (!mu.allFinite()) throw NumericError(std::string(what) + " has non-finite entries");
  const double norm = mu.norm();
  if (std::abs(norm - 1.0) > kUnitNormTolerance)
    throw PreconditionError(std::string(what) + " must have unit norm, got " +
                            std::to_string(norm));
}

}  // namespace

double d_mu(const Eigen::VectorXd& mu1, const Eigen::VectorXd& mu2) {
  require_same_dim(mu1.size(), mu2.size(), "d_mu");
  check_unit(mu1, "mu1");
  check_unit(mu2, "mu2");
  return std::clamp((mu1 - mu2).squaredNorm() / 4.0, 0.0, 1.0);
}

double bures_wasserstein_dense(const Eigen::MatrixXd& s1_in, const Eigen::MatrixXd& s2_in) {
  require_same_dim(s1_in.rows(), s2_in.rows(), "bures_wasserstein_dense");
  const Eigen::MatrixXd s1 = checked_symmetric(s1_in, "S1");
  const Eigen::MatrixXd s2 = checked_symmetric(s2_in, "S2");

  Eigen::VectorXd ev1;
  const auto eig1 = psd_eigen(s1, ev1, "S1");
  Eigen::VectorXd ev2;
  psd_eigen(s2, ev2, "S2");

  const Eigen::MatrixXd& v1 = eig1.eigenvectors();
  const Eigen::MatrixXd root1 = v1 * ev1.cwiseSqrt().asDiagonal() * v1.transpose();
  Eigen::MatrixXd inner = root1 * s2 * root1;
  inner = 0.5 * (inner + inner.transpose()).eval();

  Eigen::VectorXd ev_inner;
  psd_eigen(inner, ev_inner, "S1^1/2 S2 S1^1/2");
  const double cross = ev_inner.cwiseSqrt().sum();
  const double result = ev1.sum() + ev2.sum() - 2.0 * cross;
  if (!std::isfinite(result)) throw NumericError("Bures-Wasserstein distance is not finite");
  return std::max(result, 0.0);
}

double bures_wasserstein_factored(const GaussianSummary& g1, const GaussianSummary& g2) {
  require_same_dim(g1.dim(), g2.dim(), "d_sigma");
  require_same_dim(g1.factor.rows(), g2.factor.rows(), "d_sigma factor");
  if (!g1.factor.allFinite() || !g2.factor.allFinite())
    throw NumericError("covariance factor has non-finite entries");
  // Nonzero eigenvalues of S1 S2 are the squared singular values of B1^T B2, so
  // tr (S1^1/2 S2 S1^1/2)^1/2 is the nuclear norm of that n1 x n2 matrix.
  const Eigen::MatrixXd cross = g1.factor.transpose() * g2.factor;
  double nuclear = 0.0;
  if (cross.size() > 0) nuclear = Eigen::BDCSVD<Eigen::MatrixXd>(cross).singularValues().sum();
  const double result = g1.trace + g2.trace - 2.0 * nuclear;
  if (!std::isfinite(result)) throw NumericError("Bures-Wasserstein distance is not finite");
  return result;
}

CovarianceDistance d_sigma(const GaussianSummary& g1, const GaussianSummary& g2) {
  CovarianceDistance out;
  out.raw = std::max(bures_wasserstein_factored(g1, g2), 0.0) / 4.0;
  out.clamped = out.raw > 1.0;
  out.value = std::min(out.raw, 1.0);
  return out;
}

double socm(double d_mu, double d_sigma) {
  if (!(d_mu >= 0.0 && d_mu <= 1.0) || !(d_sigma >= 0.0 && d_sigma <= 1.0))
    throw PreconditionError("socm inputs must lie in [0, 1], got d_mu=" + std::to_string(d_mu) +
                            ", d_sigma=" + std::to_string(d_sigma));
  return (1.0 - d_mu) * d_sigma;
}

PairStats pair_stats(const GaussianSummary& g1, const GaussianSummary& g2) {
  PairStats p;
  p.d_mu = d_mu(g1.mean, g2.mean);
  const CovarianceDistance ds = d_sigma(g1, g2);
  p.d_sigma = ds.value;
  p.d_sigma_raw = ds.raw;
  p.clamped = ds.clamped;
  p.socm = socm(p.d_mu, p.d_sigma);
  p.trace_sum = g1.trace + g2.trace;
  return p;
}

PairStats socm_pair(const TokenMatrix& x1, const TokenMatrix& x2) {
  require_same_dim(x1.dim(), x2.dim(), "socm_pair");
  return pair_stats(summarize(normalize_list(x1.values)), summarize(normalize_list(x2.values)));
}

double w2_gaussian_squared(const GaussianSummary& g1, const GaussianSummary& g2) {
  require_same_dim(g1.dim(), g2.dim(), "w2_gaussian_squared");
  // dense route, independent of the factored path used by d_sigma
  return (g1.mean - g2.mean).squaredNorm() + bures_wasserstein_dense(g1.covariance(), g2.covariance());
}

}  // namespace socm
