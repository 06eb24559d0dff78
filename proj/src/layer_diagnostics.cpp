#include "socm/layer_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "socm/errors.hpp"
#include "socm/format.hpp"
#include "socm/parallel.hpp"
#include "socm/stats.hpp"
#include "socm/tensor_io.hpp"

namespace socm {
namespace {

// Concentration of Y below this counts as zero spread.
constexpr double kSpreadRatioFloor = 1e-20;

}  // namespace

double operator_norm(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) throw NumericError("operator_norm: non-finite entries");
  if (m.size() == 0) return 0.0;
  return Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

double head_projection_norm(const Eigen::MatrixXd& output_proj, const Eigen::MatrixXd& value_proj) {
  if (output_proj.cols() != value_proj.rows())
    throw ShapeError("output projection columns must match value projection rows");
  const Eigen::Index d = value_proj.cols();
  const Eigen::Index dv = value_proj.rows();
  if (dv >= d) return operator_norm(output_proj * value_proj);
  // W_v^T = Q R with orthonormal Q, so ||W_o W_v|| = ||W_o R^T Q^T|| = ||W_o R^T||.
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(value_proj.transpose());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(dv).triangularView<Eigen::Upper>();
  return operator_norm(output_proj * r.transpose());
}

double attention_spread_factor(const Eigen::MatrixXd& attention) {
  const Eigen::Index n = attention.rows();
  if (attention.cols() != n) throw ShapeError("attention matrix must be square");
  if (n < 2) throw UndefinedRatioError("attention spread factor is undefined for n = 1");
  const Eigen::VectorXd sums = attention.rowwise().sum();
  if ((sums.array() - 1.0).abs().maxCoeff() > kRowSumTolerance)
    throw PreconditionError("attention rows must sum to 1");
  // P A subtracts the mean row from every row.
  const Eigen::RowVectorXd mean_row = attention.colwise().mean();
  const double frob2 = (attention.rowwise() - mean_row).squaredNorm();
  return frob2 / static_cast<double>(n - 1);
}

double lambda_head(const Eigen::MatrixXd& attention, const Eigen::MatrixXd& w_ov) {
  const double op = operator_norm(w_ov);
  return op * op * attention_spread_factor(attention);
}

double r_ratio(const Eigen::MatrixXd& hidden, const Eigen::MatrixXd& residual) {
  const double mu_norm = mean_pool(residual).norm();
  if (!(mu_norm > kMeanNormFloor))
    throw DegenerateMeanError("r_ratio: residual mean norm at or below the floor");
  return spread(hidden) / (mu_norm * mu_norm);
}

double c_ratio(const Eigen::MatrixXd& residual, const Eigen::MatrixXd& output) {
  const double conc_y = concentration(residual);
  if (!(conc_y > kSpreadRatioFloor))
    throw UndefinedRatioError("c_ratio: residual stream has zero spread");
  return concentration(output) / conc_y;
}

TextDiagnostics diagnose(const LayerDumpRecord& record) {
  validate(record);
  TextDiagnostics out;
  const Eigen::MatrixXd residual = record.hidden + record.attn_out;
  out.head_lambda.reserve(record.heads.size());
  for (const HeadRecord& head : record.heads) {
    const double op = head_projection_norm(head.output_proj, head.value_proj);
    out.head_lambda.push_back(op * op * attention_spread_factor(head.attention));
  }
  out.lambda = std::accumulate(out.head_lambda.begin(), out.head_lambda.end(), 0.0) /
               static_cast<double>(out.head_lambda.size());
  out.r = r_ratio(record.hidden, residual);
  out.c = c_ratio(residual, record.output);
  out.concentration = concentration(record.output);
  out.cosine = avg_pairwise_cosine(record.output);
  return out;
}

std::vector<LayerProfile> layer_profiles(std::span<const LayerDumpRecord> records,
                                         unsigned parallelism) {
  if (records.empty()) throw ValidationError("layer_profiles: no records");

  // Fixed (layer, text) order keeps the sums independent of file order.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].layer_index != records[b].layer_index)
      return records[a].layer_index < records[b].layer_index;
    return records[a].text_id < records[b].text_id;
  });

  std::map<std::uint32_t, std::vector<std::size_t>> by_layer;
  for (std::size_t idx : order) by_layer[records[idx].layer_index].push_back(idx);

  std::optional<std::set<std::uint32_t>> text_set;
  for (const auto& [layer, members] : by_layer) {
    std::set<std::uint32_t> ids;
    for (std::size_t idx : members) {
      if (!ids.insert(records[idx].text_id).second)
        throw ValidationError("text " + std::to_string(records[idx].text_id) +
                              " appears twice in layer " + std::to_string(layer));
      if (records[idx].heads.size() != records[members.front()].heads.size())
        throw ValidationError("head count varies within layer " + std::to_string(layer));
    }
    if (!text_set) text_set = std::move(ids);
    else if (*text_set != ids)
      throw ValidationError("layer " + std::to_string(layer) + " covers a different set of texts");
  }

  std::vector<std::optional<TextDiagnostics>> diag(records.size());
  parallel_for(records.size(), parallelism, [&](std::size_t i) {
    try {
      diag[i] = diagnose(records[i]);
    } catch (const NumericError&) {
      diag[i].reset();  // degenerate text, counted as skipped
    }
  });

  std::vector<LayerProfile> profiles;
  for (const auto& [layer, members] : by_layer) {
    LayerProfile p;
    p.layer_index = layer;
    p.avg_head_lambda.assign(records[members.front()].heads.size(), 0.0);
    for (std::size_t idx : members) {
      if (!diag[idx]) {
        ++p.skipped;
        continue;
      }
      const TextDiagnostics& t = *diag[idx];
      ++p.text_count;
      p.avg_lambda += t.lambda;
      p.avg_r += t.r;
      p.avg_c += t.c;
      p.avg_concentration += t.concentration;
      p.avg_cosine += t.cosine;
      for (std::size_t h = 0; h < t.head_lambda.size(); ++h) p.avg_head_lambda[h] += t.head_lambda[h];
    }
    if (p.text_count == 0)
      throw NumericError("layer " + std::to_string(layer) + ": all " + std::to_string(p.skipped) +
                         " texts are degenerate");
    const double n = static_cast<double>(p.text_count);
    p.avg_lambda /= n;
    p.avg_r /= n;
    p.avg_c /= n;
    p.avg_concentration /= n;
    p.avg_cosine /= n;
    for (double& v : p.avg_head_lambda) v /= n;
    profiles.push_back(std::move(p));
  }
  return profiles;
}

std::string layer_profiles_csv(std::span<const LayerProfile> profiles) {
  std::ostringstream out;
  out << "layer,avg_lambda,avg_r,avg_c,avg_concentration,avg_cosine,text_count,skipped\n";
  for (const LayerProfile& p : profiles) {
    out << p.layer_index << ',' << format_double(p.avg_lambda) << ',' << format_double(p.avg_r)
        << ',' << format_double(p.avg_c) << ',' << format_double(p.avg_concentration) << ','
        << format_double(p.avg_cosine) << ',' << p.text_count << ',' << p.skipped << '\n';
  }
  return out.str();
}

}  // namespace socm
