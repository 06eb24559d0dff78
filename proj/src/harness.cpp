#include "socm/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/SVD>

#include "socm/errors.hpp"
#include "socm/format.hpp"
#include "socm/parallel.hpp"
#include "socm/random.hpp"
#include "socm/stats.hpp"

namespace socm {

PairIndex sample_pairs(std::size_t text_count, std::size_t sample_size, std::uint64_t seed) {
  if (sample_size > text_count)
    throw PreconditionError("sample size " + std::to_string(sample_size) + " exceeds text count " +
                            std::to_string(text_count));
  if (text_count > std::numeric_limits<std::uint32_t>::max())
    throw PreconditionError("text count does not fit in 32 bits");
  PairIndex index;
  index.sample_seed = seed;
  index.text_count = text_count;

  std::vector<std::uint32_t> all(text_count);
  std::iota(all.begin(), all.end(), 0u);
  auto rng = make_rng(seed, 0);
  // std::sample keeps the relative order of the population, so `sampled` is sorted.
  std::sample(all.begin(), all.end(), std::back_inserter(index.sampled), sample_size, rng);

  const std::size_t k = index.sampled.size();
  index.pairs.reserve(k * (k - (k > 0 ? 1 : 0)) / 2);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a + 1; b < k; ++b) index.pairs.emplace_back(index.sampled[a], index.sampled[b]);
  return index;
}

PairIndex subsample_pairs(const PairIndex& index, std::size_t count, std::uint64_t seed) {
  if (count > index.pairs.size())
    throw PreconditionError("requested " + std::to_string(count) + " pairs but only " +
                            std::to_string(index.pairs.size()) + " exist");
  PairIndex out;
  out.sampled = index.sampled;
  out.sample_seed = index.sample_seed;
  out.text_count = index.text_count;
  out.pairs.reserve(count);
  auto rng = make_rng(seed, 1);
  std::sample(index.pairs.begin(), index.pairs.end(), std::back_inserter(out.pairs), count, rng);
  return out;
}

CorpusResult average_socm(std::span<const TokenMatrix> dump, const PairIndex& index,
                          const std::string& model_label, unsigned parallelism) {
  for (const auto& [i, j] : index.pairs) {
    if (i >= dump.size() || j >= dump.size())
      throw PreconditionError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                              ") is out of range for a dump of " + std::to_string(dump.size()) +
                              " texts");
    if (i >= j) throw PreconditionError("pairs must satisfy i < j");
  }

  std::vector<char> involved(dump.size(), 0);
  for (const auto& [i, j] : index.pairs) involved[i] = involved[j] = 1;
  Eigen::Index dim = -1;
  for (std::size_t t = 0; t < dump.size(); ++t) {
    if (!involved[t]) continue;
    if (dim < 0) dim = dump[t].dim();
    if (dump[t].dim() != dim)
      throw ShapeError("text " + std::to_string(dump[t].text_id) + " has dimension " +
                       std::to_string(dump[t].dim()) + ", expected " + std::to_string(dim));
  }

  // Each text is normalized and summarized once; degenerate means leave an empty slot.
  std::vector<std::optional<GaussianSummary>> summaries(dump.size());
  parallel_for(dump.size(), parallelism, [&](std::size_t t) {
    if (!involved[t]) return;
    try {
      summaries[t] = summarize(normalize_list(dump[t].values));
    } catch (const DegenerateMeanError&) {
      summaries[t].reset();
    }
  });

  std::vector<std::optional<PairStats>> stats(index.pairs.size());
  parallel_for(index.pairs.size(), parallelism, [&](std::size_t k) {
    const auto& [i, j] = index.pairs[k];
    if (summaries[i] && summaries[j]) stats[k] = pair_stats(*summaries[i], *summaries[j]);
  });

  CorpusResult result;
  CorpusReport& rep = result.report;
  rep.model_label = model_label;
  rep.text_count = dump.size();
  rep.sample_size = index.sampled.size();
  rep.seed = index.sample_seed;
  rep.pair_count = index.pairs.size();
  for (std::size_t t = 0; t < dump.size(); ++t)
    if (involved[t] && !summaries[t]) ++rep.skipped_texts;

  double sum_socm = 0.0;
  double sum_mu = 0.0;
  double sum_sigma = 0.0;
  result.pairs.reserve(index.pairs.size());
  for (std::size_t k = 0; k < index.pairs.size(); ++k) {
    if (!stats[k]) {
      ++rep.skipped_pairs;
      continue;
    }
    const PairStats& p = *stats[k];
    const auto& [i, j] = index.pairs[k];
    result.pairs.push_back(PairRecord{i, j, dump[i].text_id, dump[j].text_id, p});
    ++rep.used_pairs;
    sum_socm += p.socm;
    sum_mu += p.d_mu;
    sum_sigma += p.d_sigma;
    if (p.clamped) ++rep.clamped_count;
    const auto bin = std::min(static_cast<std::size_t>(p.socm * kHistogramBins), kHistogramBins - 1);
    ++rep.histogram[bin];
  }
  if (rep.used_pairs > 0) {
    const double n = static_cast<double>(rep.used_pairs);
    rep.mean_socm = sum_socm / n;
    rep.mean_d_mu = sum_mu / n;
    rep.mean_d_sigma = sum_sigma / n;
  }
  return result;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    // Positions start..end-1 hold ranks start+1..end.
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw PreconditionError("spearman inputs differ in length");
  if (xs.size() < 2) throw PreconditionError("spearman needs at least two observations");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw PreconditionError("spearman inputs must be finite");

  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean_rank = (n + 1.0) / 2.0;
  double num = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean_rank;
    const double b = ry[i] - mean_rank;
    num += a * b;
    dx += a * a;
    dy += b * b;
  }
  if (dx == 0.0 || dy == 0.0) throw UndefinedRatioError("spearman undefined for a constant sequence");
  return std::clamp(num / std::sqrt(dx * dy), -1.0, 1.0);
}

Projection pca_project_uncentered(const TokenMatrix& x1, const TokenMatrix& x2) {
  if (x1.dim() != x2.dim()) throw ShapeError("projection inputs differ in dimension");
  const Eigen::Index d = x1.dim();
  const Eigen::Index n1 = x1.tokens();
  const Eigen::Index n2 = x2.tokens();
  if (n1 + n2 < 2) throw PreconditionError("projection needs at least two tokens in total");

  Eigen::MatrixXd rows(n1 + n2, d);  // one token per row
  rows.topRows(n1) = x1.values.transpose();
  rows.bottomRows(n2) = x2.values.transpose();
  if (!rows.allFinite()) throw NumericError("projection input has non-finite entries");

  const Eigen::BDCSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeThinV);
  Projection out;
  out.singular_values = svd.singularValues();
  if (out.singular_values.size() == 0 || !(out.singular_values(0) > 0.0))
    throw NumericError("projection input has rank 0");

  out.components = Eigen::MatrixXd::Zero(d, 2);
  const Eigen::Index k = std::min<Eigen::Index>(2, svd.matrixV().cols());
  out.components.leftCols(k) = svd.matrixV().leftCols(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    out.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, c) < 0.0) out.components.col(c) *= -1.0;
  }

  const Eigen::MatrixXd coords = rows * out.components;
  out.points.reserve(static_cast<std::size_t>(n1 + n2 + 2));
  for (Eigen::Index t = 0; t < n1 + n2; ++t) {
    const bool first = t < n1;
    out.points.push_back(ProjectedPoint{first ? t : t - n1, first ? x1.text_id : x2.text_id,
                                        coords(t, 0), coords(t, 1), false});
  }
  for (const TokenMatrix* x : {&x1, &x2}) {
    const Eigen::RowVectorXd p = mean_pool(x->values).transpose() * out.components;
    out.points.push_back(ProjectedPoint{-1, x->text_id, p(0), p(1), true});
  }
  return out;
}

std::string projection_csv(const Projection& projection) {
  std::ostringstream out;
  out << "token_id,text_id,pc1,pc2,is_mean\n";
  for (const ProjectedPoint& p : projection.points)
    out << p.token_id << ',' << p.text_id << ',' << format_double(p.pc1) << ','
        << format_double(p.pc2) << ',' << (p.is_mean ? 1 : 0) << '\n';
  return out.str();
}

std::string scatter_csv(std::span<const PairRecord> pairs) {
  std::ostringstream out;
  out << "text_id_1,text_id_2,d_mu,d_sigma,socm,clamped\n";
  for (const PairRecord& r : pairs)
    out << r.first_text_id << ',' << r.second_text_id << ',' << format_double(r.stats.d_mu) << ','
        << format_double(r.stats.d_sigma) << ',' << format_double(r.stats.socm) << ','
        << (r.stats.clamped ? 1 : 0) << '\n';
  return out.str();
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::vector<ScoreRow> parse_scores_csv(const std::string& text) {
  std::vector<ScoreRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool first_data = true;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ValidationError("scores line " + std::to_string(line_no) + " has no comma");
    std::string label = trim(line.substr(0, comma));
    const auto score = parse_number(trim(line.substr(comma + 1)));
    if (!score) {
      if (first_data) {
        first_data = false;
        continue;  // header
      }
      throw ValidationError("scores line " + std::to_string(line_no) + " has a non-numeric score");
    }
    first_data = false;
    if (label.empty()) throw ValidationError("scores line " + std::to_string(line_no) + " has no label");
    rows.push_back(ScoreRow{std::move(label), *score});
  }
  return rows;
}

}  // namespace socm
