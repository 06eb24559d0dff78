#include "socm/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "socm/errors.hpp"

namespace socm {
namespace {

constexpr std::size_t kHeaderBytes = 8 + 3 * sizeof(std::uint32_t);
constexpr float kFloatMax = std::numeric_limits<float>::max();

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + " contains a non-finite entry");
  // Entries outside the f32 range would turn into inf on disk.
  if (m.size() > 0 && m.cwiseAbs().maxCoeff() > kFloatMax)
    throw ValidationError(std::string(what) + " has an entry outside the 32-bit float range");
}

// Little-endian writer.
class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

  // Column-major walk, so a d x n token matrix is written token by token.
  void column_major(const Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) f32(m(i, j));
  }
  void row_major(const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f32(m(i, j));
  }
  void header(PayloadKind kind, std::size_t count) {
    if (count > std::numeric_limits<std::uint32_t>::max())
      throw ValidationError("too many records for a single dump: " + std::to_string(count));
    bytes(kDumpMagic, sizeof(kDumpMagic));
    u32(kDumpVersion);
    u32(static_cast<std::uint32_t>(count));
    u32(static_cast<std::uint32_t>(kind));
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

// Bounds-checked little-endian reader over an in-memory buffer.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  [[nodiscard]] std::size_t offset() const noexcept { return pos_; }
  [[nodiscard]] std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void need(std::uint64_t count, const char* what) const {
    if (count > remaining())
      throw CorruptionError(std::string("truncated payload while reading ") + what, pos_);
  }

  void skip(std::size_t count) {
    need(count, "header");
    pos_ += count;
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f32_unchecked() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return static_cast<double>(std::bit_cast<float>(v));
  }

  // Checks the whole block fits before allocating, so hostile sizes cannot
  // trigger huge allocations.
  Eigen::MatrixXd matrix(std::uint32_t rows, std::uint32_t cols, bool column_major,
                         const char* what) {
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    if (count > remaining() / 4)
      throw CorruptionError(std::string("truncated payload while reading ") + what, pos_);
    Eigen::MatrixXd m(rows, cols);
    if (column_major) {
      for (std::uint32_t j = 0; j < cols; ++j)
        for (std::uint32_t i = 0; i < rows; ++i) m(i, j) = f32_unchecked();
    } else {
      for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = f32_unchecked();
    }
    return m;
  }

  void expect_end() const {
    if (remaining() != 0)
      throw CorruptionError(std::to_string(remaining()) + " trailing bytes after last record", pos_);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

DumpHeader parse_header(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("file too short for a dump header");
  if (std::memcmp(bytes.data(), kDumpMagic, sizeof(kDumpMagic)) != 0)
    throw FormatError("bad magic, expected SOCMDMP1");
  Reader in(bytes.subspan(8));
  DumpHeader header;
  header.version = in.u32("version");
  if (header.version != kDumpVersion)
    throw FormatError("unsupported dump version " + std::to_string(header.version));
  header.record_count = in.u32("record_count");
  const std::uint32_t kind = in.u32("payload_kind");
  if (kind != static_cast<std::uint32_t>(PayloadKind::token) &&
      kind != static_cast<std::uint32_t>(PayloadKind::layer))
    throw FormatError("unknown payload kind " + std::to_string(kind));
  header.payload_kind = static_cast<PayloadKind>(kind);
  return header;
}

Reader open_payload(std::span<const std::uint8_t> bytes, PayloadKind expected, DumpHeader& header) {
  header = parse_header(bytes);
  if (header.payload_kind != expected)
    throw FormatError(expected == PayloadKind::token ? "expected a token dump, found a layer dump"
                                                     : "expected a layer dump, found a token dump");
  Reader in(bytes);
  in.skip(kHeaderBytes);
  return in;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return bytes;
}

void spit(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::uint32_t checked_u32(Eigen::Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max())
    throw ValidationError(std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void validate(const TokenMatrix& record) {
  if (record.dim() < 1) throw ValidationError("token matrix needs d >= 1");
  if (record.tokens() < 1)
    throw ValidationError("token matrix for text " + std::to_string(record.text_id) +
                          " has no tokens");
  require_finite(record.values, "token matrix");
}

void validate(const LayerDumpRecord& r) {
  const std::string where =
      " (text " + std::to_string(r.text_id) + ", layer " + std::to_string(r.layer_index) + ")";
  const Eigen::Index d = r.dim();
  const Eigen::Index n = r.tokens();
  if (d < 1 || n < 1) throw ValidationError("layer record needs d, n >= 1" + where);
  if (r.attn_out.rows() != d || r.attn_out.cols() != n || r.output.rows() != d ||
      r.output.cols() != n)
    throw ShapeError("hidden " + shape_str(r.hidden) + ", attn_out " + shape_str(r.attn_out) +
                     " and output " + shape_str(r.output) + " must share a shape" + where);
  require_finite(r.hidden, "hidden states");
  require_finite(r.attn_out, "attention output");
  require_finite(r.output, "layer output");
  if (r.heads.empty()) throw ValidationError("layer record has no heads" + where);
  for (std::size_t h = 0; h < r.heads.size(); ++h) {
    const HeadRecord& head = r.heads[h];
    const std::string hw = " in head " + std::to_string(h) + where;
    if (head.attention.rows() != n || head.attention.cols() != n)
      throw ShapeError("attention is " + shape_str(head.attention) + ", expected " +
                       std::to_string(n) + "x" + std::to_string(n) + hw);
    if (head.value_proj.cols() != d || head.output_proj.rows() != d ||
        head.value_proj.rows() != head.output_proj.cols() || head.value_proj.rows() < 1)
      throw ShapeError("projection slices " + shape_str(head.value_proj) + " and " +
                       shape_str(head.output_proj) + " do not compose to a d x d map" + hw);
    require_finite(head.attention, "attention");
    require_finite(head.value_proj, "value projection");
    require_finite(head.output_proj, "output projection");
    const Eigen::VectorXd sums = head.attention.rowwise().sum();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(sums(i) - 1.0) > kRowSumTolerance)
        throw ValidationError("attention row " + std::to_string(i) + " sums to " +
                              std::to_string(sums(i)) + hw);
    }
  }
}

DumpHeader decode_header(std::span<const std::uint8_t> bytes) { return parse_header(bytes); }

std::vector<std::uint8_t> encode_token_dump(std::span<const TokenMatrix> records) {
  Writer out;
  out.header(PayloadKind::token, records.size());
  for (const TokenMatrix& r : records) {
    validate(r);
    out.u32(r.text_id);
    out.u32(checked_u32(r.tokens(), "token count"));
    out.u32(checked_u32(r.dim(), "dimension"));
    out.column_major(r.values);
  }
  return out.take();
}

std::vector<TokenMatrix> decode_token_dump(std::span<const std::uint8_t> bytes) {
  DumpHeader header;
  Reader in = open_payload(bytes, PayloadKind::token, header);
  std::vector<TokenMatrix> records;
  records.reserve(std::min<std::size_t>(header.record_count, in.remaining() / 12));
  for (std::uint32_t k = 0; k < header.record_count; ++k) {
    const std::size_t start = in.offset();
    TokenMatrix r;
    r.text_id = in.u32("text_id");
    const std::uint32_t n = in.u32("token count");
    const std::uint32_t d = in.u32("dimension");
    if (n == 0 || d == 0)
      throw ValidationError("record " + std::to_string(k) + " at offset " + std::to_string(start) +
                            " has n=" + std::to_string(n) + ", d=" + std::to_string(d));
    r.values = in.matrix(d, n, true, "token values");
    validate(r);
    records.push_back(std::move(r));
  }
  in.expect_end();
  return records;
}

std::vector<std::uint8_t> encode_layer_dump(std::span<const LayerDumpRecord> records) {
  Writer out;
  out.header(PayloadKind::layer, records.size());
  for (const LayerDumpRecord& r : records) {
    validate(r);
    out.u32(r.text_id);
    out.u32(r.layer_index);
    out.u32(checked_u32(r.tokens(), "token count"));
    out.u32(checked_u32(r.dim(), "dimension"));
    out.u32(checked_u32(static_cast<Eigen::Index>(r.heads.size()), "head count"));
    out.column_major(r.hidden);
    out.column_major(r.attn_out);
    out.column_major(r.output);
    for (const HeadRecord& head : r.heads) {
      out.row_major(head.attention);
      out.u32(checked_u32(head.value_proj.rows(), "value rows"));
      out.u32(checked_u32(head.value_proj.cols(), "value cols"));
      out.row_major(head.value_proj);
      out.u32(checked_u32(head.output_proj.rows(), "output rows"));
      out.u32(checked_u32(head.output_proj.cols(), "output cols"));
      out.row_major(head.output_proj);
    }
  }
  return out.take();
}

std::vector<LayerDumpRecord> decode_layer_dump(std::span<const std::uint8_t> bytes) {
  DumpHeader header;
  Reader in = open_payload(bytes, PayloadKind::layer, header);
  std::vector<LayerDumpRecord> records;
  records.reserve(std::min<std::size_t>(header.record_count, in.remaining() / 20));
  for (std::uint32_t k = 0; k < header.record_count; ++k) {
    const std::size_t start = in.offset();
    LayerDumpRecord r;
    r.text_id = in.u32("text_id");
    r.layer_index = in.u32("layer_index");
    const std::uint32_t n = in.u32("token count");
    const std::uint32_t d = in.u32("dimension");
    const std::uint32_t head_count = in.u32("head count");
    if (n == 0 || d == 0 || head_count == 0)
      throw ValidationError("layer record " + std::to_string(k) + " at offset " +
                            std::to_string(start) + " has n=" + std::to_string(n) +
                            ", d=" + std::to_string(d) + ", heads=" + std::to_string(head_count));
    r.hidden = in.matrix(d, n, true, "hidden states");
    r.attn_out = in.matrix(d, n, true, "attention output");
    r.output = in.matrix(d, n, true, "layer output");
    // Every head carries at least its n x n attention block plus four size words.
    const std::uint64_t min_head_bytes = static_cast<std::uint64_t>(n) * n * 4 + 16;
    if (head_count > in.remaining() / min_head_bytes)
      throw CorruptionError("truncated payload while reading heads", in.offset());
    r.heads.reserve(head_count);
    for (std::uint32_t h = 0; h < head_count; ++h) {
      HeadRecord head;
      head.attention = in.matrix(n, n, false, "attention");
      const std::uint32_t vr = in.u32("value rows");
      const std::uint32_t vc = in.u32("value cols");
      head.value_proj = in.matrix(vr, vc, false, "value projection");
      const std::uint32_t orows = in.u32("output rows");
      const std::uint32_t ocols = in.u32("output cols");
      head.output_proj = in.matrix(orows, ocols, false, "output projection");
      r.heads.push_back(std::move(head));
    }
    validate(r);
    records.push_back(std::move(r));
  }
  in.expect_end();
  return records;
}

std::vector<TokenMatrix> read_token_dump(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return decode_token_dump(bytes);
}

void write_token_dump(std::span<const TokenMatrix> records, const std::filesystem::path& path) {
  spit(encode_token_dump(records), path);
}

std::vector<LayerDumpRecord> read_layer_dump(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return decode_layer_dump(bytes);
}

void write_layer_dump(std::span<const LayerDumpRecord> records,
                      const std::filesystem::path& path) {
  spit(encode_layer_dump(records), path);
}

}  // namespace socm
