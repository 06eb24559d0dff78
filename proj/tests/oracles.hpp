#pragma once

// Slow reference implementations used only by the tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace oracle {

inline Eigen::MatrixXd gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = n01(rng);
  return m;
}

inline Eigen::VectorXd mean_loop(const Eigen::MatrixXd& x) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) mu(i) += x(i, j);
  return mu / static_cast<double>(x.cols());
}

inline Eigen::MatrixXd covariance_loop(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mu = mean_loop(x);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Eigen::VectorXd c = x.col(j) - mu;
    s += c * c.transpose();
  }
  return s / static_cast<double>(x.cols());
}

inline double spread_loop(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd mu = mean_loop(x);
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) s += (x.col(j) - mu).squaredNorm();
  return s / static_cast<double>(x.cols());
}

inline double cosine_loop(const Eigen::MatrixXd& x, bool include_diagonal) {
  const Eigen::Index n = x.cols();
  double total = 0.0;
  double count = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!include_diagonal && j == k) continue;
      total += x.col(j).dot(x.col(k)) / (x.col(j).norm() * x.col(k).norm());
      count += 1.0;
    }
  return total / count;
}

// tr(S1) + tr(S2) - 2 sum sqrt(eig(S1 S2)); the eigenvalues of S1 S2 are real and
// nonnegative for PSD inputs. Accurate when S1 S2 is well conditioned.
inline double bures_eigs(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& s2) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(s1 * s2, false);
  double fidelity = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    fidelity += std::sqrt(std::max(es.eigenvalues()(i).real(), 0.0));
  return s1.trace() + s2.trace() - 2.0 * fidelity;
}

// Largest singular value by power iteration on M^T M.
inline double power_norm(const Eigen::MatrixXd& m, int iters = 5000) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols());
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd w = m.transpose() * (m * v);
    const double nrm = w.norm();
    if (nrm == 0.0) return 0.0;
    v = w / nrm;
    sigma = std::sqrt(nrm);
  }
  return sigma;
}

}  // namespace oracle
