#include "socm/theory.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "socm/errors.hpp"
#include "socm/layer_diagnostics.hpp"
#include "socm/metric.hpp"
#include "socm/parallel.hpp"
#include "socm/stats.hpp"

namespace socm {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::identity: return "identity";
    case TransformKind::uniform_scale: return "uniform_scale";
    case TransformKind::layernorm: return "layernorm";
  }
  return "unknown";
}

std::string to_string(AttentionKind kind) {
  switch (kind) {
    case AttentionKind::softmax: return "softmax";
    case AttentionKind::uniform: return "uniform";
    case AttentionKind::identity: return "identity";
  }
  return "unknown";
}

TransformKind parse_transform_kind(const std::string& s) {
  if (s == "identity") return TransformKind::identity;
  if (s == "uniform_scale") return TransformKind::uniform_scale;
  if (s == "layernorm") return TransformKind::layernorm;
  throw ConfigurationError("unknown transform kind '" + s + "'");
}

AttentionKind parse_attention_kind(const std::string& s) {
  if (s == "softmax") return AttentionKind::softmax;
  if (s == "uniform") return AttentionKind::uniform;
  if (s == "identity") return AttentionKind::identity;
  throw ConfigurationError("unknown attention kind '" + s + "'");
}

Eigen::MatrixXd layernorm_columns(const Eigen::MatrixXd& y, double gamma, double beta) {
  Eigen::MatrixXd x(y.rows(), y.cols());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const Eigen::VectorXd centered = y.col(j).array() - y.col(j).mean();
    const double rms = std::sqrt(centered.squaredNorm() / static_cast<double>(y.rows()));
    if (!(rms > 0.0)) throw NumericError("layernorm of a constant vector");
    x.col(j) = (gamma / rms) * centered.array() + beta;
  }
  return x;
}

Eigen::MatrixXd TokenTransform::apply(const Eigen::MatrixXd& y) const {
  switch (kind) {
    case TransformKind::identity: return y;
    case TransformKind::uniform_scale: return scale * y;
    case TransformKind::layernorm: return layernorm_columns(y, gamma, beta);
  }
  return y;
}

void SyntheticConfig::validate() const {
  if (d < 2 || n < 2) throw ConfigurationError("synthetic layer needs d, n >= 2");
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigurationError("noise variance c must be positive");
  if (trials < 1) throw ConfigurationError("trials must be >= 1");
  if (value_dim < 0) throw ConfigurationError("value_dim must be non-negative");
  if (eta.size() != 0 && eta.size() != d) throw ConfigurationError("eta must have d entries");
  if (eta.size() != 0 && !(eta.norm() > 0.0)) throw ConfigurationError("eta must be nonzero");
  if (!(projection_scale >= 0.0)) throw ConfigurationError("projection_scale must be >= 0");
  if (transform.kind == TransformKind::uniform_scale && !(transform.scale > 0.0))
    throw ConfigurationError("uniform-scale transform needs s > 0");
}

Eigen::VectorXd SyntheticConfig::resolved_eta() const {
  if (eta.size() == d) return eta;
  return Eigen::VectorXd::Constant(d, 2.0 / std::sqrt(static_cast<double>(d)));
}

LayerModel build_layer_model(const SyntheticConfig& cfg) {
  cfg.validate();
  LayerModel model;
  const Eigen::Index n = cfg.n;
  switch (cfg.attention) {
    case AttentionKind::uniform:
      model.attention = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
      break;
    case AttentionKind::identity:
      model.attention = Eigen::MatrixXd::Identity(n, n);
      break;
    case AttentionKind::softmax: {
      auto rng = make_rng(cfg.attention_seed, 0);
      const Eigen::MatrixXd logits = cfg.attention_temperature * standard_normal(rng, n, n);
      model.attention.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double top = logits.row(i).maxCoeff();
        Eigen::RowVectorXd e = (logits.row(i).array() - top).exp();
        model.attention.row(i) = e / e.sum();
      }
      break;
    }
  }
  const Eigen::Index dv = cfg.resolved_value_dim();
  auto rng = make_rng(cfg.projection_seed, 0);
  model.value_proj = standard_normal(rng, dv, cfg.d) / std::sqrt(static_cast<double>(cfg.d));
  model.output_proj = standard_normal(rng, cfg.d, dv) *
                      (cfg.projection_scale / std::sqrt(static_cast<double>(dv)));
  model.projection_scale = cfg.projection_scale;
  model.w_ov = model.output_proj * model.value_proj;
  model.lambda = lambda_head(model.attention, model.w_ov);
  return model;
}

void constrain_lambda(LayerModel& model, int max_steps) {
  while (!(model.lambda < 1.0)) {
    if (model.rescale_steps >= max_steps)
      throw ConfigurationError("lambda still " + std::to_string(model.lambda) + " after " +
                               std::to_string(max_steps) + " projection rescalings");
    model.output_proj *= 0.5;
    model.projection_scale *= 0.5;
    model.w_ov = model.output_proj * model.value_proj;
    model.lambda = lambda_head(model.attention, model.w_ov);
    ++model.rescale_steps;
  }
}

LayerSample simulate_trial(const SyntheticConfig& cfg, const LayerModel& model, std::size_t trial) {
  auto rng = make_rng(cfg.rng_seed, trial);
  LayerSample s;
  s.hidden = std::sqrt(cfg.c) * standard_normal(rng, cfg.d, cfg.n);
  s.hidden.colwise() += cfg.resolved_eta();
  s.attention = model.w_ov * s.hidden * model.attention.transpose();
  s.residual = s.attention + s.hidden;
  s.output = cfg.transform.apply(s.residual);
  return s;
}

std::vector<LayerSample> simulate_layer(const SyntheticConfig& cfg) {
  const LayerModel model = build_layer_model(cfg);
  std::vector<LayerSample> samples;
  samples.reserve(cfg.trials);
  for (std::size_t t = 0; t < cfg.trials; ++t) samples.push_back(simulate_trial(cfg, model, t));
  return samples;
}

BoundReport verify_theorem1(const SyntheticConfig& cfg, double slack, unsigned parallelism) {
  LayerModel model = build_layer_model(cfg);
  constrain_lambda(model);

  // Per trial: S(H), S(Z), S(Y), S(X), ||mu(Y)||^2, ||mu(X)||^2.
  std::vector<std::array<double, 6>> per_trial(cfg.trials);
  parallel_for(cfg.trials, parallelism, [&](std::size_t t) {
    const LayerSample s = simulate_trial(cfg, model, t);
    per_trial[t] = {spread(s.hidden),           spread(s.attention),
                    spread(s.residual),         spread(s.output),
                    mean_pool(s.residual).squaredNorm(), mean_pool(s.output).squaredNorm()};
  });
  std::array<double, 6> sum{};
  for (const auto& row : per_trial)
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += row[k];

  const double trials = static_cast<double>(cfg.trials);
  BoundReport rep;
  rep.trials = cfg.trials;
  rep.slack = slack;
  rep.lambda = model.lambda;
  rep.projection_scale = model.projection_scale;
  rep.rescale_steps = model.rescale_steps;
  rep.mean_spread_h = sum[0] / trials;
  rep.mean_spread_z = sum[1] / trials;
  rep.expected_spread_h = cfg.c * static_cast<double>(cfg.d) * static_cast<double>(cfg.n - 1) /
                          static_cast<double>(cfg.n);
  rep.spread_h_rel_error = std::abs(rep.mean_spread_h - rep.expected_spread_h) / rep.expected_spread_h;
  if (!(sum[4] > 0.0) || !(sum[5] > 0.0) || !(sum[2] > 0.0))
    throw NumericError("theorem 1 estimates are degenerate (zero mean norm or zero spread)");
  rep.r = sum[0] / sum[4];
  const double ratio_y = sum[2] / sum[4];
  rep.lhs = sum[3] / sum[5];
  rep.c_const = rep.lhs / ratio_y;
  const double amp = 1.0 + std::sqrt(rep.lambda);
  rep.rhs = rep.c_const * amp * amp * rep.r;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + slack);
  return rep;
}

TokenMatrix concentrated_list(std::mt19937_64& rng, const Eigen::VectorXd& unit_mean,
                              Eigen::Index n, double target, double overall_scale) {
  Eigen::MatrixXd noise = standard_normal(rng, unit_mean.size(), n);
  const Eigen::VectorXd row_mean = noise.rowwise().mean();
  noise.colwise() -= row_mean;
  const double s = spread(noise);
  if (s > 0.0) noise *= std::sqrt(target / s);
  Eigen::MatrixXd x = noise;
  x.colwise() += unit_mean;
  return TokenMatrix{0, overall_scale * x};
}

namespace {

Eigen::VectorXd random_unit(std::mt19937_64& rng, Eigen::Index d) {
  Eigen::VectorXd v;
  do {
    v = standard_normal(rng, d, 1).col(0);
  } while (!(v.norm() > 1e-8));
  return v.normalized();
}

}  // namespace

Theorem2Report verify_theorem2(const Theorem2Config& cfg, unsigned parallelism) {
  if (!(cfg.epsilon > 0.0)) throw ConfigurationError("epsilon must be positive");
  if (cfg.d < 1 || cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens)
    throw ConfigurationError("invalid theorem 2 generator dimensions");

  struct Outcome {
    double socm, d_sigma, conc;
  };
  std::vector<Outcome> outcomes(cfg.trials);
  parallel_for(cfg.trials, parallelism, [&](std::size_t t) {
    auto rng = make_rng(cfg.seed, t);
    std::uniform_int_distribution<Eigen::Index> tokens(cfg.min_tokens, cfg.max_tokens);
    std::uniform_real_distribution<double> fraction(0.5, 0.999);
    std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
    std::bernoulli_distribution shared_mean(0.5);

    const Eigen::VectorXd mu1 = random_unit(rng, cfg.d);
    // Half of the pairs share the mean, which maximizes 1 - d_mu.
    const Eigen::VectorXd mu2 = shared_mean(rng) ? mu1 : random_unit(rng, cfg.d);
    const Eigen::Index n1 = tokens(rng);
    const Eigen::Index n2 = tokens(rng);
    const double target1 = cfg.epsilon * fraction(rng);
    const double target2 = cfg.epsilon * fraction(rng);
    const TokenMatrix x1 = concentrated_list(rng, mu1, n1, target1, std::exp(log_scale(rng)));
    const TokenMatrix x2 = concentrated_list(rng, mu2, n2, target2, std::exp(log_scale(rng)));
    const double c1 = concentration(x1.values);
    const double c2 = concentration(x2.values);
    if (!(c1 < cfg.epsilon) || !(c2 < cfg.epsilon))
      throw NumericError("generator missed the concentration target at trial " + std::to_string(t));
    const PairStats p = socm_pair(x1, x2);
    outcomes[t] = {p.socm, p.d_sigma, std::max(c1, c2)};
  });

  Theorem2Report rep;
  rep.epsilon = cfg.epsilon;
  rep.trials = cfg.trials;
  for (const Outcome& o : outcomes) {
    rep.max_socm = std::max(rep.max_socm, o.socm);
    rep.max_d_sigma = std::max(rep.max_d_sigma, o.d_sigma);
    rep.max_concentration = std::max(rep.max_concentration, o.conc);
    if (!(o.socm < cfg.epsilon / 2.0)) ++rep.violations;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

std::pair<TokenMatrix, TokenMatrix> orthogonal_covariance_pair(Eigen::Index d, double target) {
  if (d < 3) throw ConfigurationError("orthogonal covariance pair needs d >= 3");
  if (!(target >= 0.0)) throw ConfigurationError("target concentration must be >= 0");
  // Tokens e1 +- a e2 and e1 +- a e3: mean e1, spread a^2 along one axis each.
  const double a = std::sqrt(target);
  Eigen::MatrixXd x1 = Eigen::MatrixXd::Zero(d, 2);
  Eigen::MatrixXd x2 = Eigen::MatrixXd::Zero(d, 2);
  x1.row(0).setOnes();
  x2.row(0).setOnes();
  x1(1, 0) = a;
  x1(1, 1) = -a;
  x2(2, 0) = a;
  x2(2, 1) = -a;
  return {TokenMatrix{0, x1}, TokenMatrix{1, x2}};
}

double trace_bound_formula(Eigen::Index n, double mean_cos) {
  const double m = static_cast<double>(n - 1);
  return m * (1.0 - mean_cos) / (1.0 + m * mean_cos);
}

Eigen::MatrixXd layernorm_list_with_cosine(const TraceBoundCase& bound_case) {
  const Eigen::Index n = bound_case.n;
  const Eigen::Index d = bound_case.d;
  if (n < 2) throw ConfigurationError("trace bound construction needs n >= 2");
  if (d < n + 1) throw ConfigurationError("trace bound construction needs d >= n + 1");
  if (!(bound_case.gamma != 0.0)) throw ConfigurationError("gamma must be nonzero");
  const double g2 = bound_case.gamma * bound_case.gamma;
  const double b2 = bound_case.beta * bound_case.beta;
  // With x = gamma z + beta 1, z centered and ||z||^2 = d:
  // cos(x_j, x_k) = (gamma^2 <z_j, z_k>/d + beta^2) / (gamma^2 + beta^2).
  const double rho = (bound_case.target_cos * (g2 + b2) - b2) / g2;
  const double rho_min = -1.0 / static_cast<double>(n - 1);
  if (!(rho >= rho_min - 1e-12 && rho <= 1.0 + 1e-12))
    throw ConfigurationError("cosine " + std::to_string(bound_case.target_cos) +
                             " is infeasible for n = " + std::to_string(n) + " with these gamma, beta");

  auto rng = make_rng(bound_case.seed, 0);
  // Orthonormal q_1..q_n orthogonal to the all-ones direction.
  Eigen::MatrixXd basis(d, n + 1);
  basis.col(0).setOnes();
  basis.rightCols(n) = standard_normal(rng, d, n);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = (qr.householderQ() * Eigen::MatrixXd::Identity(d, n + 1)).rightCols(n);

  // Shared direction w plus simplex vertices s_j (unit, pairwise -1/(n-1), all orthogonal to w).
  const Eigen::VectorXd w = q.rowwise().sum() / std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd centered = q.colwise() - q.rowwise().mean();
  const Eigen::MatrixXd simplex =
      centered * std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
  const double a2 = std::clamp((rho * static_cast<double>(n - 1) + 1.0) / static_cast<double>(n), 0.0, 1.0);
  const double a = std::sqrt(a2);
  const double b = std::sqrt(1.0 - a2);
  Eigen::MatrixXd z = (b * simplex).colwise() + a * w;
  z *= std::sqrt(static_cast<double>(d));

  // Pre-layernorm states with arbitrary per-token offset and scale; layernorm removes both.
  std::uniform_real_distribution<double> offset(-3.0, 3.0);
  std::uniform_real_distribution<double> log_scale(-1.0, 1.0);
  Eigen::MatrixXd y(d, n);
  for (Eigen::Index j = 0; j < n; ++j)
    y.col(j) = std::exp(log_scale(rng)) * z.col(j).array() + offset(rng);
  return layernorm_columns(y, bound_case.gamma, bound_case.beta);
}

TraceBoundReport verify_trace_bound(const TraceBoundCase& bound_case) {
  TraceBoundReport rep;
  rep.input = bound_case;
  const Eigen::MatrixXd x = layernorm_list_with_cosine(bound_case);
  rep.realized_cos = avg_offdiagonal_cosine(x);
  if (std::abs(rep.realized_cos - bound_case.target_cos) > 1e-3)
    throw NumericError("realized cosine " + std::to_string(rep.realized_cos) +
                       " misses the target " + std::to_string(bound_case.target_cos));
  rep.trace = summarize(normalize_list(x)).trace;
  rep.formula = trace_bound_formula(bound_case.n, rep.realized_cos);
  rep.abs_error = std::abs(rep.trace - rep.formula);
  rep.below_two = rep.trace < 2.0;
  rep.passed = rep.abs_error <= 1e-3;
  return rep;
}

GridReport property_grid(std::size_t steps) {
  if (steps < 2) throw ConfigurationError("grid needs at least 2 steps");
  GridReport rep;
  rep.steps = steps;
  const std::size_t last = steps - 1;
  auto coord = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(last); };
  // value[i][j] = socm(d_mu = coord(i), d_sigma = coord(j))
  std::vector<double> value(steps * steps);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return value[i * steps + j]; };
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j < steps; ++j) at(i, j) = socm(coord(i), coord(j));

  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j < steps; ++j) {
      const double v = at(i, j);
      if ((v == 1.0) != (i == 0 && j == last)) ++rep.violations[0];
      if ((v == 0.0) != (i == last || j == 0)) ++rep.violations[1];
      if (i + 1 < steps && at(i + 1, j) > v) ++rep.violations[2];
      if (j + 1 < steps && at(i, j + 1) < v) ++rep.violations[3];
      if (i + 1 < steps && j + 1 < steps) {
        const double mixed = (at(i + 1, j + 1) - at(i + 1, j)) - (at(i, j + 1) - v);
        if (mixed > 0.0) ++rep.violations[4];
      }
    }
  }
  rep.boundary_max = rep.violations[0] == 0;
  rep.boundary_zero = rep.violations[1] == 0;
  rep.monotone_mu = rep.violations[2] == 0;
  rep.monotone_sigma = rep.violations[3] == 0;
  rep.interaction = rep.violations[4] == 0;
  rep.corner_00 = at(0, 0);
  rep.corner_01 = at(0, last);
  rep.corner_10 = at(last, 0);
  rep.corner_11 = at(last, last);
  return rep;
}

}  // namespace socm
