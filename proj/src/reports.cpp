#include "socm/reports.hpp"

#include <cmath>

#include "socm/errors.hpp"

namespace socm {
namespace {

using ojson = nlohmann::ordered_json;

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("config key '") + key + "': " + e.what());
  }
}

SyntheticConfig synthetic_defaults() {
  SyntheticConfig cfg;
  cfg.d = 16;
  cfg.n = 8;
  cfg.c = 0.5;
  cfg.trials = 10000;
  return cfg;
}

Theorem1Case parse_theorem1(const nlohmann::json& j, std::size_t index) {
  if (!j.is_object()) throw ConfigurationError("theorem1 entries must be objects");
  Theorem1Case tc;
  SyntheticConfig& cfg = tc.config;
  cfg = synthetic_defaults();
  tc.label = value_or<std::string>(j, "label", "theorem1-" + std::to_string(index));
  cfg.d = value_or<Eigen::Index>(j, "d", cfg.d);
  cfg.n = value_or<Eigen::Index>(j, "n", cfg.n);
  cfg.value_dim = value_or<Eigen::Index>(j, "value_dim", cfg.value_dim);
  cfg.c = value_or<double>(j, "c", cfg.c);
  if (j.contains("eta")) {
    const auto eta = value_or<std::vector<double>>(j, "eta", {});
    cfg.eta = Eigen::Map<const Eigen::VectorXd>(eta.data(), static_cast<Eigen::Index>(eta.size()));
  } else if (j.contains("eta_norm")) {
    const double norm = value_or<double>(j, "eta_norm", 2.0);
    cfg.eta = Eigen::VectorXd::Constant(cfg.d, norm / std::sqrt(static_cast<double>(cfg.d)));
  }
  cfg.attention = parse_attention_kind(value_or<std::string>(j, "attention", "softmax"));
  cfg.attention_temperature = value_or<double>(j, "attention_temperature", cfg.attention_temperature);
  cfg.attention_seed = value_or<std::uint64_t>(j, "attention_seed", cfg.attention_seed);
  cfg.projection_seed = value_or<std::uint64_t>(j, "projection_seed", cfg.projection_seed);
  cfg.projection_scale = value_or<double>(j, "projection_scale", cfg.projection_scale);
  cfg.trials = value_or<std::size_t>(j, "trials", cfg.trials);
  cfg.rng_seed = value_or<std::uint64_t>(j, "rng_seed", cfg.rng_seed);
  if (j.contains("transform")) {
    const auto& t = j.at("transform");
    cfg.transform.kind = parse_transform_kind(value_or<std::string>(t, "kind", "identity"));
    cfg.transform.scale = value_or<double>(t, "scale", cfg.transform.scale);
    cfg.transform.gamma = value_or<double>(t, "gamma", cfg.transform.gamma);
    cfg.transform.beta = value_or<double>(t, "beta", cfg.transform.beta);
  }
  tc.slack = value_or<double>(j, "slack", tc.slack);
  tc.enforce = value_or<bool>(j, "enforce", cfg.transform.kind != TransformKind::layernorm);
  cfg.validate();
  return tc;
}

Theorem2Config parse_theorem2(const nlohmann::json& j) {
  Theorem2Config c;
  c.epsilon = value_or<double>(j, "epsilon", c.epsilon);
  c.trials = value_or<std::size_t>(j, "trials", c.trials);
  c.d = value_or<Eigen::Index>(j, "d", c.d);
  c.min_tokens = value_or<Eigen::Index>(j, "min_tokens", c.min_tokens);
  c.max_tokens = value_or<Eigen::Index>(j, "max_tokens", c.max_tokens);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

TraceBoundCase parse_trace_case(const nlohmann::json& j) {
  TraceBoundCase c;
  c.n = value_or<Eigen::Index>(j, "n", c.n);
  c.d = value_or<Eigen::Index>(j, "d", c.d);
  c.gamma = value_or<double>(j, "gamma", c.gamma);
  c.beta = value_or<double>(j, "beta", c.beta);
  c.target_cos = value_or<double>(j, "target_cos", c.target_cos);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  return c;
}

}  // namespace

ojson to_json(const CorpusReport& r) {
  ojson j;
  j["model_label"] = r.model_label;
  j["text_count"] = r.text_count;
  j["sample_size"] = r.sample_size;
  j["seed"] = r.seed;
  j["rng_algorithm"] = kRngAlgorithm;
  j["pair_count"] = r.pair_count;
  j["used_pairs"] = r.used_pairs;
  j["skipped_pairs"] = r.skipped_pairs;
  j["skipped_texts"] = r.skipped_texts;
  j["mean_socm"] = optional_number(r.mean_socm);
  j["mean_d_mu"] = optional_number(r.mean_d_mu);
  j["mean_d_sigma"] = optional_number(r.mean_d_sigma);
  j["clamped_count"] = r.clamped_count;
  j["histogram"] = r.histogram;
  return j;
}

ojson to_json(const SyntheticConfig& cfg) {
  ojson j;
  j["d"] = cfg.d;
  j["n"] = cfg.n;
  j["value_dim"] = cfg.resolved_value_dim();
  const Eigen::VectorXd eta = cfg.resolved_eta();
  j["eta"] = std::vector<double>(eta.data(), eta.data() + eta.size());
  j["c"] = cfg.c;
  j["attention"] = to_string(cfg.attention);
  j["attention_temperature"] = cfg.attention_temperature;
  j["attention_seed"] = cfg.attention_seed;
  j["projection_seed"] = cfg.projection_seed;
  j["projection_scale"] = cfg.projection_scale;
  j["transform"] = {{"kind", to_string(cfg.transform.kind)},
                    {"scale", cfg.transform.scale},
                    {"gamma", cfg.transform.gamma},
                    {"beta", cfg.transform.beta}};
  j["trials"] = cfg.trials;
  j["rng_seed"] = cfg.rng_seed;
  return j;
}

ojson to_json(const BoundReport& r) {
  ojson j;
  j["lambda"] = r.lambda;
  j["r"] = r.r;
  j["C"] = r.c_const;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["holds"] = r.holds;
  j["mean_spread_h"] = r.mean_spread_h;
  j["expected_spread_h"] = r.expected_spread_h;
  j["spread_h_rel_error"] = r.spread_h_rel_error;
  j["mean_spread_z"] = r.mean_spread_z;
  j["projection_scale"] = r.projection_scale;
  j["rescale_steps"] = r.rescale_steps;
  j["trials"] = r.trials;
  return j;
}

ojson to_json(const Theorem2Report& r) {
  ojson j;
  j["epsilon"] = r.epsilon;
  j["bound"] = r.epsilon / 2.0;
  j["trials"] = r.trials;
  j["max_socm"] = r.max_socm;
  j["max_d_sigma"] = r.max_d_sigma;
  j["max_concentration"] = r.max_concentration;
  j["violations"] = r.violations;
  j["passed"] = r.passed;
  return j;
}

ojson to_json(const TraceBoundReport& r) {
  ojson j;
  j["n"] = r.input.n;
  j["d"] = r.input.d;
  j["gamma"] = r.input.gamma;
  j["beta"] = r.input.beta;
  j["target_cos"] = r.input.target_cos;
  j["seed"] = r.input.seed;
  j["realized_cos"] = r.realized_cos;
  j["trace"] = r.trace;
  j["formula"] = r.formula;
  j["abs_error"] = r.abs_error;
  j["below_two"] = r.below_two;
  j["passed"] = r.passed;
  return j;
}

ojson to_json(const GridReport& r) {
  ojson j;
  j["steps"] = r.steps;
  j["a_boundary_max"] = r.boundary_max;
  j["b_boundary_zero"] = r.boundary_zero;
  j["c_monotone_d_mu"] = r.monotone_mu;
  j["d_monotone_d_sigma"] = r.monotone_sigma;
  j["e_interaction"] = r.interaction;
  j["violations"] = std::vector<std::size_t>(std::begin(r.violations), std::end(r.violations));
  j["corners"] = {{"d_mu=0,d_sigma=0", r.corner_00},
                  {"d_mu=0,d_sigma=1", r.corner_01},
                  {"d_mu=1,d_sigma=0", r.corner_10},
                  {"d_mu=1,d_sigma=1", r.corner_11}};
  j["passed"] = r.passed();
  return j;
}

ReportSummary parse_report_summary(const nlohmann::json& report) {
  if (!report.is_object() || !report.contains("model_label") || !report.contains("mean_socm"))
    throw ValidationError("report JSON lacks model_label or mean_socm");
  ReportSummary s;
  try {
    s.model_label = report.at("model_label").get<std::string>();
    if (report.at("mean_socm").is_null())
      throw ValidationError("report for '" + s.model_label + "' has no usable pairs");
    s.mean_socm = report.at("mean_socm").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  return s;
}

VerifyConfig default_verify_config() {
  VerifyConfig cfg;
  auto add = [&](std::string label, SyntheticConfig sc, bool enforce) {
    cfg.theorem1.push_back(Theorem1Case{std::move(label), std::move(sc), 0.05, enforce});
  };
  SyntheticConfig base = synthetic_defaults();
  add("softmax-identity", base, true);
  SyntheticConfig scaled = base;
  scaled.transform = TokenTransform{TransformKind::uniform_scale, 2.5, 1.0, 0.0};
  add("softmax-uniform-scale", scaled, true);
  SyntheticConfig uniform = base;
  uniform.attention = AttentionKind::uniform;
  add("uniform-attention-identity", uniform, true);
  SyntheticConfig ln = base;
  ln.transform = TokenTransform{TransformKind::layernorm, 1.0, 1.0, 0.1};
  add("softmax-layernorm", ln, false);

  for (double eps : {0.5, 0.1, 0.01}) {
    Theorem2Config t;
    t.epsilon = eps;
    t.trials = 1000;
    cfg.theorem2.push_back(t);
  }

  cfg.trace_bound = {
      TraceBoundCase{2, 16, 1.0, 0.0, 1.0 / 3.0, 5},
      TraceBoundCase{10, 32, 1.0, 0.0, 1.0 / 3.0, 6},
      TraceBoundCase{100, 128, 1.0, 0.0, 1.0 / 3.0, 7},
      TraceBoundCase{5, 16, 1.0, 0.0, 1.0, 8},
      TraceBoundCase{8, 16, 0.8, 0.3, 0.6, 9},
  };
  return cfg;
}

VerifyConfig parse_verify_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigurationError("verify config must be a JSON object");
  VerifyConfig cfg = default_verify_config();
  if (j.contains("property_grid"))
    cfg.grid_steps = value_or<std::size_t>(j.at("property_grid"), "steps", cfg.grid_steps);
  cfg.spread_tolerance = value_or<double>(j, "spread_tolerance", cfg.spread_tolerance);
  if (j.contains("theorem1")) {
    cfg.theorem1.clear();
    std::size_t i = 0;
    for (const auto& item : j.at("theorem1")) cfg.theorem1.push_back(parse_theorem1(item, i++));
  }
  if (j.contains("theorem2")) {
    cfg.theorem2.clear();
    for (const auto& item : j.at("theorem2")) cfg.theorem2.push_back(parse_theorem2(item));
  }
  if (j.contains("trace_bound")) {
    cfg.trace_bound.clear();
    for (const auto& item : j.at("trace_bound")) cfg.trace_bound.push_back(parse_trace_case(item));
  }
  return cfg;
}

ojson run_verification(const VerifyConfig& cfg, unsigned parallelism) {
  ojson out;
  out["rng_algorithm"] = kRngAlgorithm;
  bool all = true;

  const GridReport grid = property_grid(cfg.grid_steps);
  out["property_grid"] = to_json(grid);
  all = all && grid.passed();

  ojson t1 = ojson::array();
  for (const Theorem1Case& tc : cfg.theorem1) {
    const BoundReport rep = verify_theorem1(tc.config, tc.slack, parallelism);
    const bool spread_ok = rep.spread_h_rel_error <= cfg.spread_tolerance;
    const bool passed = !tc.enforce || (rep.holds && spread_ok);
    ojson entry;
    entry["label"] = tc.label;
    entry["config"] = to_json(tc.config);
    entry["report"] = to_json(rep);
    entry["spread_h_within_tolerance"] = spread_ok;
    entry["enforced"] = tc.enforce;
    entry["passed"] = passed;
    t1.push_back(std::move(entry));
    all = all && passed;
  }
  out["theorem1"] = std::move(t1);

  ojson t2 = ojson::array();
  for (const Theorem2Config& tc : cfg.theorem2) {
    const Theorem2Report rep = verify_theorem2(tc, parallelism);
    ojson entry = to_json(rep);
    entry["seed"] = tc.seed;
    entry["d"] = tc.d;
    t2.push_back(std::move(entry));
    all = all && rep.passed;
  }
  out["theorem2"] = std::move(t2);

  ojson tb = ojson::array();
  for (const TraceBoundCase& tc : cfg.trace_bound) {
    const TraceBoundReport rep = verify_trace_bound(tc);
    tb.push_back(to_json(rep));
    all = all && rep.passed;
  }
  out["trace_bound"] = std::move(tb);
  out["passed"] = all;
  return out;
}

}  // namespace socm
