#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "socm/harness.hpp"
#include "socm/theory.hpp"

namespace socm {

[[nodiscard]] nlohmann::ordered_json to_json(const CorpusReport& report);
[[nodiscard]] nlohmann::ordered_json to_json(const BoundReport& report);
[[nodiscard]] nlohmann::ordered_json to_json(const Theorem2Report& report);
[[nodiscard]] nlohmann::ordered_json to_json(const TraceBoundReport& report);
[[nodiscard]] nlohmann::ordered_json to_json(const GridReport& report);
[[nodiscard]] nlohmann::ordered_json to_json(const SyntheticConfig& cfg);

/// Reads back the fields `correlate` needs from a report written by `compute`.
struct ReportSummary {
  std::string model_label;
  double mean_socm = 0.0;
};
[[nodiscard]] ReportSummary parse_report_summary(const nlohmann::json& report);

struct Theorem1Case {
  std::string label;
  SyntheticConfig config;
  double slack = 0.05;
  bool enforce = true;  // false: report the bound without requiring it to hold
};

/// Everything `verify` runs. Missing keys in a config file fall back to the
/// defaults below; an explicit empty list disables a section.
struct VerifyConfig {
  std::size_t grid_steps = 101;
  std::vector<Theorem1Case> theorem1;
  std::vector<Theorem2Config> theorem2;
  std::vector<TraceBoundCase> trace_bound;
  double spread_tolerance = 0.02;  // relative, E[S(H)] vs c d (n-1)/n
};

[[nodiscard]] VerifyConfig default_verify_config();
[[nodiscard]] VerifyConfig parse_verify_config(const nlohmann::json& j);

/// Runs every check; `passed` in the result is the conjunction of all enforced checks.
[[nodiscard]] nlohmann::ordered_json run_verification(const VerifyConfig& cfg, unsigned parallelism);

}  // namespace socm
