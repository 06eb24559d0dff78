#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "socm/metric.hpp"
#include "socm/tensor_io.hpp"

namespace socm {

/// Pairs (i, j), i < j, over positions in a token dump, in lexicographic order.
struct PairIndex {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  std::vector<std::uint32_t> sampled;  // sorted text positions drawn from the dump
  std::uint64_t sample_seed = 0;
  std::size_t text_count = 0;
};

/// Draws `sample_size` distinct positions out of `text_count` and enumerates all
/// C(sample_size, 2) pairs among them.
[[nodiscard]] PairIndex sample_pairs(std::size_t text_count, std::size_t sample_size,
                                     std::uint64_t seed);

/// Keeps `count` of the pairs, chosen uniformly with `seed`, still in lexicographic order.
[[nodiscard]] PairIndex subsample_pairs(const PairIndex& index, std::size_t count,
                                        std::uint64_t seed);

inline constexpr std::size_t kHistogramBins = 100;

struct PairRecord {
  std::uint32_t first = 0;  // dump positions
  std::uint32_t second = 0;
  std::uint32_t first_text_id = 0;
  std::uint32_t second_text_id = 0;
  PairStats stats;
};

/// Aggregate statistics over the used pairs. Means are nullopt when no pair was usable.
struct CorpusReport {
  std::string model_label;
  std::size_t text_count = 0;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::size_t pair_count = 0;
  std::size_t used_pairs = 0;
  std::size_t skipped_pairs = 0;
  std::size_t skipped_texts = 0;
  std::optional<double> mean_socm;
  std::optional<double> mean_d_mu;
  std::optional<double> mean_d_sigma;
  std::size_t clamped_count = 0;
  std::array<std::size_t, kHistogramBins> histogram{};
};

struct CorpusResult {
  CorpusReport report;
  std::vector<PairRecord> pairs;  // used pairs only, in PairIndex order
};

/// Scores every pair of `pairs` against `dump`. Texts with a degenerate mean
/// make their pairs skipped. Output does not depend on `parallelism`.
[[nodiscard]] CorpusResult average_socm(std::span<const TokenMatrix> dump, const PairIndex& pairs,
                                        const std::string& model_label, unsigned parallelism = 1);

/// Spearman rank correlation with average ranks for ties.
/// Throws UndefinedRatioError if either input is constant.
[[nodiscard]] double spearman(std::span<const double> xs, std::span<const double> ys);

/// 1-based ranks, ties get the mean of the ranks they span.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> values);

struct ProjectedPoint {
  std::int64_t token_id = 0;  // -1 for a text mean
  std::uint32_t text_id = 0;
  double pc1 = 0.0;
  double pc2 = 0.0;
  bool is_mean = false;
};

struct Projection {
  Eigen::MatrixXd components;  // d x 2
  Eigen::VectorXd singular_values;
  std::vector<ProjectedPoint> points;  // tokens of x1, tokens of x2, mean of x1, mean of x2
};

/// Projects both token clouds and their means onto the top two principal
/// directions of the raw (not mean-subtracted) token matrix. Each direction
/// is signed so its largest-magnitude loading is positive.
[[nodiscard]] Projection pca_project_uncentered(const TokenMatrix& x1, const TokenMatrix& x2);

[[nodiscard]] std::string projection_csv(const Projection& projection);
/// One row per pair: text ids, d_mu, d_sigma, socm, clamped.
[[nodiscard]] std::string scatter_csv(std::span<const PairRecord> pairs);

struct ScoreRow {
  std::string model_label;
  double score = 0.0;
};

/// Two-column CSV (model_label, score). A first line whose score field is not
/// numeric is taken as a header.
[[nodiscard]] std::vector<ScoreRow> parse_scores_csv(const std::string& text);

}  // namespace socm
