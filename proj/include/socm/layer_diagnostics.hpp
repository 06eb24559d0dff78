#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "socm/tensor_io.hpp"

namespace socm {

/// Averages of the per-text diagnostics for one layer.
struct LayerProfile {
  std::uint32_t layer_index = 0;
  double avg_lambda = 0.0;
  double avg_r = 0.0;
  double avg_c = 0.0;
  double avg_concentration = 0.0;
  double avg_cosine = 0.0;
  std::size_t text_count = 0;  // texts used
  std::size_t skipped = 0;     // texts dropped as degenerate
  std::vector<double> avg_head_lambda;  // per head, over used texts
};

/// Largest singular value.
[[nodiscard]] double operator_norm(const Eigen::MatrixXd& m);

/// ||W_o W_v||_op for one head without forming the d x d product.
[[nodiscard]] double head_projection_norm(const Eigen::MatrixXd& output_proj,
                                          const Eigen::MatrixXd& value_proj);

/// ||P A||_F^2 / (n - 1) with P the n x n centering matrix.
/// Throws PreconditionError for n < 2 or rows that do not sum to 1.
[[nodiscard]] double attention_spread_factor(const Eigen::MatrixXd& attention);

/// ||W_ov||_op^2 * ||P A||_F^2 / (n - 1).
[[nodiscard]] double lambda_head(const Eigen::MatrixXd& attention, const Eigen::MatrixXd& w_ov);

/// spread(H) / ||mu(Y)||^2.
[[nodiscard]] double r_ratio(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& residual);

/// concentration(X) / concentration(Y). Throws UndefinedRatioError when Y has no spread.
[[nodiscard]] double c_ratio(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& output);

/// Diagnostics of one record; Y is rebuilt as H + attn_out.
struct TextDiagnostics {
  double lambda = 0.0;  // mean over heads
  std::vector<double> head_lambda;
  double r = 0.0;
  double c = 0.0;
  double concentration = 0.0;
  double cosine = 0.0;
};
[[nodiscard]] TextDiagnostics diagnose(const LayerDumpRecord& record);

/// Per-layer averages over texts (texts weighted equally), ordered by layer index.
/// Texts whose diagnostics hit a degenerate case are skipped and counted.
[[nodiscard]] std::vector<LayerProfile> layer_profiles(std::span<const LayerDumpRecord> records,
                                                       unsigned parallelism = 1);

[[nodiscard]] std::string layer_profiles_csv(std::span<const LayerProfile> profiles);

}  // namespace socm
