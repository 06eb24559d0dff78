#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace socm {

/// One text's token embeddings. Column j of `values` is token j; d = rows, n = cols.
struct TokenMatrix {
  std::uint32_t text_id = 0;
  Eigen::MatrixXd values;

  [[nodiscard]] Eigen::Index dim() const noexcept { return values.rows(); }
  [[nodiscard]] Eigen::Index tokens() const noexcept { return values.cols(); }
};

/// Attention pattern and projection slices of one head.
///   attention:   n x n, row-stochastic (row i = weights token i puts on every token)
///   value_proj:  d_v x d
///   output_proj: d x d_v
struct HeadRecord {
  Eigen::MatrixXd attention;
  Eigen::MatrixXd value_proj;
  Eigen::MatrixXd output_proj;
};

/// Captured state of one transformer layer for one text. All d x n.
struct LayerDumpRecord {
  std::uint32_t text_id = 0;
  std::uint32_t layer_index = 0;
  Eigen::MatrixXd hidden;    // H, layer input
  Eigen::MatrixXd attn_out;  // attention branch after output projection
  Eigen::MatrixXd output;    // X, layer output
  std::vector<HeadRecord> heads;

  [[nodiscard]] Eigen::Index dim() const noexcept { return hidden.rows(); }
  [[nodiscard]] Eigen::Index tokens() const noexcept { return hidden.cols(); }
};

enum class PayloadKind : std::uint32_t { token = 1, layer = 2 };

inline constexpr char kDumpMagic[8] = {'S', 'O', 'C', 'M', 'D', 'M', 'P', '1'};
inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr double kRowSumTolerance = 1e-4;

struct DumpHeader {
  std::uint32_t version = kDumpVersion;
  std::uint32_t record_count = 0;
  PayloadKind payload_kind = PayloadKind::token;
};

// Validation throws ValidationError / ShapeError on the first broken invariant.
void validate(const TokenMatrix& record);
void validate(const LayerDumpRecord& record);

// In-memory codecs. Decoders throw FormatError / CorruptionError / ValidationError
// on any malformed input and never read out of bounds.
[[nodiscard]] std::vector<std::uint8_t> encode_token_dump(std::span<const TokenMatrix> records);
[[nodiscard]] std::vector<TokenMatrix> decode_token_dump(std::span<const std::uint8_t> bytes);
[[nodiscard]] std::vector<std::uint8_t> encode_layer_dump(std::span<const LayerDumpRecord> records);
[[nodiscard]] std::vector<LayerDumpRecord> decode_layer_dump(std::span<const std::uint8_t> bytes);

/// Parses only the 20-byte header.
[[nodiscard]] DumpHeader decode_header(std::span<const std::uint8_t> bytes);

[[nodiscard]] std::vector<TokenMatrix> read_token_dump(const std::filesystem::path& path);
void write_token_dump(std::span<const TokenMatrix> records, const std::filesystem::path& path);
[[nodiscard]] std::vector<LayerDumpRecord> read_layer_dump(const std::filesystem::path& path);
void write_layer_dump(std::span<const LayerDumpRecord> records, const std::filesystem::path& path);

}  // namespace socm
