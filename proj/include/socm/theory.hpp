#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "socm/random.hpp"
#include "socm/tensor_io.hpp"

namespace socm {

enum class TransformKind { identity, uniform_scale, layernorm };
enum class AttentionKind { softmax, uniform, identity };

[[nodiscard]] std::string to_string(TransformKind kind);
[[nodiscard]] std::string to_string(AttentionKind kind);
[[nodiscard]] TransformKind parse_transform_kind(const std::string& s);
[[nodiscard]] AttentionKind parse_attention_kind(const std::string& s);

/// Per-token map g applied column by column after the residual connection.
struct TokenTransform {
  TransformKind kind = TransformKind::identity;
  double scale = 1.0;  // uniform_scale
  double gamma = 1.0;  // layernorm, shared across dimensions
  double beta = 0.0;

  [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& y) const;
};

/// Layernorm with scalar gain/bias: gamma * (y - mean(y)) / rms(y - mean(y)) + beta, per column.
[[nodiscard]] Eigen::MatrixXd layernorm_columns(const Eigen::MatrixXd& y, double gamma, double beta);

/// Single-head layer H -> Z = W_o W_v H A^T -> Y = Z + H -> X = g(Y), with
/// H columns i.i.d. N(eta, c I).
struct SyntheticConfig {
  Eigen::Index d = 16;
  Eigen::Index n = 8;
  Eigen::Index value_dim = 0;  // 0 means d
  Eigen::VectorXd eta;         // empty means 2 * ones / sqrt(d)
  double c = 0.5;
  AttentionKind attention = AttentionKind::softmax;
  double attention_temperature = 1.0;  // softmax logits ~ N(0, temperature^2)
  std::uint64_t attention_seed = 1;
  std::uint64_t projection_seed = 2;
  double projection_scale = 1.0;
  TokenTransform transform;
  std::size_t trials = 10000;
  std::uint64_t rng_seed = 3;

  /// Throws ConfigurationError on invalid settings.
  void validate() const;
  [[nodiscard]] Eigen::VectorXd resolved_eta() const;
  [[nodiscard]] Eigen::Index resolved_value_dim() const { return value_dim > 0 ? value_dim : d; }
};

/// Fixed attention and projections shared by every trial of a config.
struct LayerModel {
  Eigen::MatrixXd attention;  // n x n, row-stochastic
  Eigen::MatrixXd value_proj;
  Eigen::MatrixXd output_proj;
  Eigen::MatrixXd w_ov;
  double lambda = 0.0;
  double projection_scale = 1.0;  // scale applied to output_proj, after any rescaling
  int rescale_steps = 0;
};

[[nodiscard]] LayerModel build_layer_model(const SyntheticConfig& cfg);

/// Halves the output projection until lambda < 1. Throws ConfigurationError
/// if that takes more than `max_steps` halvings.
void constrain_lambda(LayerModel& model, int max_steps = 64);

struct LayerSample {
  Eigen::MatrixXd hidden;     // H
  Eigen::MatrixXd attention;  // Z
  Eigen::MatrixXd residual;   // Y
  Eigen::MatrixXd output;     // X
};

[[nodiscard]] LayerSample simulate_trial(const SyntheticConfig& cfg, const LayerModel& model,
                                         std::size_t trial);

/// Runs cfg.trials independent draws of H through the layer.
[[nodiscard]] std::vector<LayerSample> simulate_layer(const SyntheticConfig& cfg);

/// Monte Carlo check of E[S(X)]/E[||mu(X)||^2] <= C (1 + sqrt(lambda))^2 r.
struct BoundReport {
  double lambda = 0.0;
  double r = 0.0;
  double c_const = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.05;
  bool holds = false;
  double mean_spread_h = 0.0;
  double expected_spread_h = 0.0;  // c d (n - 1) / n
  double spread_h_rel_error = 0.0;
  double mean_spread_z = 0.0;
  double projection_scale = 1.0;
  int rescale_steps = 0;
  std::size_t trials = 0;
};

[[nodiscard]] BoundReport verify_theorem1(const SyntheticConfig& cfg, double slack = 0.05,
                                          unsigned parallelism = 1);

struct Theorem2Config {
  double epsilon = 0.1;
  std::size_t trials = 1000;
  Eigen::Index d = 16;
  Eigen::Index min_tokens = 2;
  Eigen::Index max_tokens = 12;
  std::uint64_t seed = 4;
};

struct Theorem2Report {
  double epsilon = 0.0;
  std::size_t trials = 0;
  double max_socm = 0.0;
  double max_d_sigma = 0.0;
  double max_concentration = 0.0;
  std::size_t violations = 0;  // pairs with socm >= epsilon / 2
  bool passed = false;
};

/// Token list with mean `unit_mean` and concentration exactly `target`
/// (up to rounding), scaled by `overall_scale`.
[[nodiscard]] TokenMatrix concentrated_list(std::mt19937_64& rng, const Eigen::VectorXd& unit_mean,
                                            Eigen::Index n, double target, double overall_scale);

[[nodiscard]] Theorem2Report verify_theorem2(const Theorem2Config& cfg, unsigned parallelism = 1);

/// Two lists sharing the mean e1 whose covariances live on orthogonal axes,
/// each with concentration `target`. Their SOCM is target / 2. Needs d >= 3.
[[nodiscard]] std::pair<TokenMatrix, TokenMatrix> orthogonal_covariance_pair(Eigen::Index d,
                                                                            double target);

struct TraceBoundCase {
  Eigen::Index n = 2;
  Eigen::Index d = 16;
  double gamma = 1.0;
  double beta = 0.0;
  double target_cos = 1.0 / 3.0;
  std::uint64_t seed = 5;
};

struct TraceBoundReport {
  TraceBoundCase input;
  double realized_cos = 0.0;  // mean over j < k
  double trace = 0.0;         // tr Sigma(X_norm)
  double formula = 0.0;       // (n-1)(1-c)/(1+(n-1)c) at the realized c
  double abs_error = 0.0;
  bool below_two = false;
  bool passed = false;
};

[[nodiscard]] double trace_bound_formula(Eigen::Index n, double mean_cos);

/// Post-layernorm token list (shared gamma, beta) with every distinct-pair
/// cosine equal to `target_cos`. Throws ConfigurationError when infeasible.
[[nodiscard]] Eigen::MatrixXd layernorm_list_with_cosine(const TraceBoundCase& bound_case);

[[nodiscard]] TraceBoundReport verify_trace_bound(const TraceBoundCase& bound_case);

struct GridReport {
  std::size_t steps = 101;
  bool boundary_max = false;  // (a) socm == 1 exactly at (0, 1) and nowhere else
  bool boundary_zero = false; // (b) socm == 0 exactly where d_mu == 1 or d_sigma == 0
  bool monotone_mu = false;   // (c)
  bool monotone_sigma = false;  // (d)
  bool interaction = false;   // (e) mixed difference <= 0
  std::size_t violations[5] = {0, 0, 0, 0, 0};
  double corner_00 = 0.0;  // socm(d_mu=0, d_sigma=0)
  double corner_01 = 0.0;  // socm(0, 1)
  double corner_10 = 0.0;
  double corner_11 = 0.0;

  [[nodiscard]] bool passed() const {
    return boundary_max && boundary_zero && monotone_mu && monotone_sigma && interaction;
  }
};

/// Evaluates socm on a steps x steps grid over [0, 1]^2 and checks the five properties.
[[nodiscard]] GridReport property_grid(std::size_t steps = 101);

}  // namespace socm
