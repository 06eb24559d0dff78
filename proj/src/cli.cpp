#include "socm/cli.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "socm/errors.hpp"
#include "socm/format.hpp"
#include "socm/harness.hpp"
#include "socm/layer_diagnostics.hpp"
#include "socm/parallel.hpp"
#include "socm/reports.hpp"
#include "socm/tensor_io.hpp"

namespace socm {
namespace {

namespace fs = std::filesystem;

struct RunConfig {
  std::string input;
  std::vector<std::string> inputs;
  std::string layer_input;
  std::string out;
  std::string scatter;
  std::string label;
  std::string scores;
  std::string texts;
  std::string config;
  std::string pairs = "all";
  std::uint64_t seed = 0;
  std::optional<std::size_t> sample_size;
  unsigned parallelism = 0;
  bool verbose = false;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

// Writes to `path`, or to stdout when the path is empty.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty())
    out << text;
  else
    write_text(path, text);
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw ValidationError(std::string(flag) + " is required");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw IoError(std::string(flag) + ": no such file " + path);
}

void require_writable_dir(const std::string& path) {
  if (path.empty()) return;
  const fs::path parent = fs::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty() && !fs::is_directory(parent, ec))
    throw IoError("output directory does not exist: " + parent.string());
}

unsigned threads(const RunConfig& rc) { return rc.parallelism > 0 ? rc.parallelism : default_parallelism(); }

std::uint32_t parse_id(const std::string& s) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError("bad text id '" + s + "'");
  return v;
}

std::string default_scatter_path(const std::string& out) {
  fs::path p(out);
  p.replace_extension(".scatter.csv");
  return p.string();
}

int cmd_compute(const RunConfig& rc, std::ostream& err) {
  require_file(rc.input, "--input");
  if (rc.out.empty()) throw ValidationError("--out is required");
  const std::string scatter = rc.scatter.empty() ? default_scatter_path(rc.out) : rc.scatter;
  require_writable_dir(rc.out);
  require_writable_dir(scatter);

  const std::vector<TokenMatrix> dump = read_token_dump(rc.input);
  if (rc.verbose) err << "read " << dump.size() << " texts from " << rc.input << '\n';
  const std::size_t sample = rc.sample_size.value_or(dump.size());
  PairIndex index = sample_pairs(dump.size(), sample, rc.seed);
  if (rc.pairs != "all") {
    std::size_t count = 0;
    const auto [ptr, ec] = std::from_chars(rc.pairs.data(), rc.pairs.data() + rc.pairs.size(), count);
    if (ec != std::errc() || ptr != rc.pairs.data() + rc.pairs.size())
      throw ValidationError("--pairs must be 'all' or a count, got '" + rc.pairs + "'");
    index = subsample_pairs(index, count, rc.seed);
  }
  if (rc.verbose) err << "scoring " << index.pairs.size() << " pairs\n";

  const std::string label = rc.label.empty() ? fs::path(rc.input).stem().string() : rc.label;
  const CorpusResult result = average_socm(dump, index, label, threads(rc));
  nlohmann::ordered_json report = to_json(result.report);
  report["pairs_mode"] = rc.pairs;
  write_text(rc.out, report.dump(2) + "\n");
  write_text(scatter, scatter_csv(result.pairs));
  if (rc.verbose)
    err << "used " << result.report.used_pairs << " pairs, skipped " << result.report.skipped_pairs
        << "\n";
  return kExitOk;
}

int cmd_layers(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require_file(rc.layer_input, "--layer-input");
  require_writable_dir(rc.out);
  const std::vector<LayerDumpRecord> records = read_layer_dump(rc.layer_input);
  if (records.empty()) throw ValidationError("layer dump has no records");
  if (rc.verbose) err << "read " << records.size() << " layer records\n";
  const std::vector<LayerProfile> profiles = layer_profiles(records, threads(rc));
  if (rc.verbose)
    for (const LayerProfile& p : profiles) {
      err << "layer " << p.layer_index << " head lambda:";
      for (double l : p.avg_head_lambda) err << ' ' << format_double(l);
      err << '\n';
    }
  emit(rc.out, layer_profiles_csv(profiles), out);
  return kExitOk;
}

int cmd_verify(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  VerifyConfig cfg = default_verify_config();
  if (!rc.config.empty()) {
    require_file(rc.config, "--config");
    cfg = parse_verify_config(parse_json(read_text(rc.config), rc.config));
  }
  require_writable_dir(rc.out);
  if (rc.verbose)
    err << "verifying: " << cfg.theorem1.size() << " bound configs, " << cfg.theorem2.size()
        << " epsilon blocks, " << cfg.trace_bound.size() << " trace cases\n";
  const nlohmann::ordered_json result = run_verification(cfg, threads(rc));
  emit(rc.out, result.dump(2) + "\n", out);
  const bool passed = result.at("passed").get<bool>();
  if (!passed) err << "verification failed\n";
  return passed ? kExitOk : kExitCheckFailed;
}

int cmd_correlate(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  if (rc.inputs.empty()) throw ValidationError("--input needs at least one report");
  require_file(rc.scores, "--scores");
  require_writable_dir(rc.out);

  std::map<std::string, double> socm_by_label;
  for (const std::string& path : rc.inputs) {
    require_file(path, "--input");
    const ReportSummary s = parse_report_summary(parse_json(read_text(path), path));
    if (!socm_by_label.emplace(s.model_label, s.mean_socm).second)
      throw ValidationError("duplicate model label '" + s.model_label + "'");
  }
  const std::vector<ScoreRow> scores = parse_scores_csv(read_text(rc.scores));

  std::vector<std::string> labels;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const ScoreRow& row : scores) {
    const auto it = socm_by_label.find(row.model_label);
    if (it == socm_by_label.end()) {
      if (rc.verbose) err << "no report for '" << row.model_label << "', ignored\n";
      continue;
    }
    if (std::find(labels.begin(), labels.end(), row.model_label) != labels.end())
      throw ValidationError("duplicate score for '" + row.model_label + "'");
    labels.push_back(row.model_label);
    xs.push_back(it->second);
    ys.push_back(row.score);
  }
  if (labels.size() < 2) throw ValidationError("need at least two models present in both reports and scores");
  const double rho = spearman(xs, ys);

  std::ostringstream csv;
  csv << "model_label,mean_socm,score,spearman_rho\n";
  for (std::size_t i = 0; i < labels.size(); ++i)
    csv << labels[i] << ',' << format_double(xs[i]) << ',' << format_double(ys[i]) << ','
        << format_double(rho) << '\n';
  emit(rc.out, csv.str(), out);
  if (rc.verbose) err << "spearman rho " << format_double(rho) << " over " << labels.size() << " models\n";
  return kExitOk;
}

int cmd_project(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  require_file(rc.input, "--input");
  require_writable_dir(rc.out);
  const auto comma = rc.texts.find(',');
  if (comma == std::string::npos) throw ValidationError("--texts takes two ids, e.g. 3,17");
  const std::uint32_t first = parse_id(rc.texts.substr(0, comma));
  const std::uint32_t second = parse_id(rc.texts.substr(comma + 1));

  const std::vector<TokenMatrix> dump = read_token_dump(rc.input);
  auto find = [&](std::uint32_t id) -> const TokenMatrix& {
    const auto it = std::find_if(dump.begin(), dump.end(), [&](const TokenMatrix& t) { return t.text_id == id; });
    if (it == dump.end()) throw ValidationError("text id " + std::to_string(id) + " not in dump");
    return *it;
  };
  const Projection p = pca_project_uncentered(find(first), find(second));
  if (rc.verbose)
    err << "top singular values " << format_double(p.singular_values(0)) << ' '
        << format_double(p.singular_values.size() > 1 ? p.singular_values(1) : 0.0) << '\n';
  emit(rc.out, projection_csv(p), out);
  return kExitOk;
}

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--parallelism", rc.parallelism, "Worker threads (default: all cores)");
  sub->add_flag("--verbose,-v", rc.verbose, "Progress on stderr");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Second-order collapse diagnostics for token-embedding dumps"};
  app.require_subcommand(1);
  RunConfig rc;

  auto* compute = app.add_subcommand("compute", "Average SOCM over text pairs of a token dump");
  compute->add_option("--input", rc.input, "Token dump")->required();
  compute->add_option("--out", rc.out, "Report JSON")->required();
  compute->add_option("--scatter", rc.scatter, "Per-pair CSV (default: <out>.scatter.csv)");
  compute->add_option("--label", rc.label, "Model label (default: input file stem)");
  compute->add_option("--seed", rc.seed, "Sampling seed");
  compute->add_option("--sample-size", rc.sample_size, "Texts to sample (default: all)");
  compute->add_option("--pairs", rc.pairs, "'all' or a number of pairs to keep");
  add_common(compute, rc);

  auto* layers = app.add_subcommand("layers", "Layer-wise concentration profile of a layer dump");
  layers->add_option("--layer-input", rc.layer_input, "Layer dump")->required();
  layers->add_option("--out", rc.out, "Profile CSV (default: stdout)");
  add_common(layers, rc);

  auto* verify = app.add_subcommand("verify", "Run the synthetic checks");
  verify->add_option("--config", rc.config, "Verification config JSON (default: built-in)");
  verify->add_option("--out", rc.out, "Verification JSON (default: stdout)");
  add_common(verify, rc);

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of mean SOCM with scores");
  correlate->add_option("--input", rc.inputs, "Report JSON files")->required();
  correlate->add_option("--scores", rc.scores, "CSV of model_label,score")->required();
  correlate->add_option("--out", rc.out, "Correlation CSV (default: stdout)");
  add_common(correlate, rc);

  auto* project = app.add_subcommand("project", "Uncentered PCA projection of two texts");
  project->add_option("--input", rc.input, "Token dump")->required();
  project->add_option("--texts", rc.texts, "Two text ids, comma separated")->required();
  project->add_option("--out", rc.out, "Projection CSV (default: stdout)");
  add_common(project, rc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (compute->parsed()) return cmd_compute(rc, err);
    if (layers->parsed()) return cmd_layers(rc, out, err);
    if (verify->parsed()) return cmd_verify(rc, out, err);
    if (correlate->parsed()) return cmd_correlate(rc, out, err);
    if (project->parsed()) return cmd_project(rc, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::numeric ? kExitNumeric : kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumeric;
  }
  return kExitInput;
}

}  // namespace socm
