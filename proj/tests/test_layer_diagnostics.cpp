#include <gtest/gtest.h>

#include "oracles.hpp"
#include "socm/errors.hpp"
#include "socm/layer_diagnostics.hpp"
#include "socm/stats.hpp"
#include "socm/theory.hpp"

using namespace socm;

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd a = logits;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    a.row(i) = (a.row(i).array() - a.row(i).maxCoeff()).exp();
    a.row(i) /= a.row(i).sum();
  }
  return a;
}

double lambda_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& w_ov) {
  const Eigen::Index n = a.rows();
  const Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const double op = oracle::power_norm(w_ov);
  return op * op * (p * a).squaredNorm() / static_cast<double>(n - 1);
}

LayerDumpRecord record_from(const SyntheticConfig& cfg, const LayerModel& model, std::size_t trial,
                            std::uint32_t text_id, std::uint32_t layer) {
  const LayerSample s = simulate_trial(cfg, model, trial);
  LayerDumpRecord r;
  r.text_id = text_id;
  r.layer_index = layer;
  r.hidden = s.hidden;
  r.attn_out = s.attention;
  r.output = s.output;
  r.heads.push_back(HeadRecord{model.attention, model.value_proj, model.output_proj});
  return r;
}

}  // namespace

TEST(OperatorNorm, Examples) {
  EXPECT_NEAR(operator_norm(Eigen::MatrixXd::Identity(4, 4)), 1.0, 1e-15);
  Eigen::MatrixXd m(2, 2);
  m << 3, 0, 0, 1;
  EXPECT_NEAR(operator_norm(m), 3.0, 1e-15);
}

TEST(OperatorNorm, MatchesPowerIteration) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::MatrixXd m = oracle::gaussian(rng, 2 + rep % 7, 1 + rep % 5);
    const double want = oracle::power_norm(m);
    EXPECT_NEAR(operator_norm(m), want, 1e-8 * want);
  }
}

TEST(OperatorNorm, FactoredHeadNorm) {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index d = 4 + rep % 9;
    const Eigen::Index dv = 1 + rep % 12;
    const Eigen::MatrixXd wv = oracle::gaussian(rng, dv, d);
    const Eigen::MatrixXd wo = oracle::gaussian(rng, d, dv);
    const double want = oracle::power_norm(wo * wv);
    EXPECT_NEAR(head_projection_norm(wo, wv), want, 1e-8 * want);
  }
  EXPECT_THROW((void)head_projection_norm(Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(3, 3)), ShapeError);
}

TEST(Lambda, Examples) {
  EXPECT_NEAR(lambda_head(Eigen::MatrixXd::Constant(5, 5, 0.2), Eigen::MatrixXd::Identity(3, 3)), 0.0, 1e-15);
  EXPECT_NEAR(lambda_head(Eigen::MatrixXd::Identity(5, 5), Eigen::MatrixXd::Identity(3, 3)), 1.0, 1e-14);
}

TEST(Lambda, MatchesDenseCentering) {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::Index n = 2 + rep % 9;
    const Eigen::MatrixXd a = softmax_rows(oracle::gaussian(rng, n, n));
    const Eigen::MatrixXd w = oracle::gaussian(rng, 6, 6) / 3.0;
    const double want = lambda_oracle(a, w);
    EXPECT_NEAR(lambda_head(a, w), want, 1e-8 * std::max(want, 1e-12));
  }
}

TEST(Lambda, Preconditions) {
  EXPECT_THROW((void)attention_spread_factor(Eigen::MatrixXd::Ones(1, 1)), UndefinedRatioError);
  EXPECT_THROW((void)attention_spread_factor(Eigen::MatrixXd::Constant(2, 2, 0.45)), PreconditionError);
  EXPECT_THROW((void)attention_spread_factor(Eigen::MatrixXd::Ones(2, 3)), ShapeError);
}

TEST(RRatio, Examples) {
  EXPECT_EQ(r_ratio(Eigen::MatrixXd::Ones(3, 4), Eigen::MatrixXd::Ones(3, 4)), 0.0);
  Eigen::MatrixXd h(2, 2);
  h << 1, -1, 0, 0;
  Eigen::MatrixXd y(2, 2);
  y << 2, 2, 0, 0;
  EXPECT_DOUBLE_EQ(r_ratio(h, y), 0.25);
  EXPECT_THROW((void)r_ratio(h, h), DegenerateMeanError);
}

TEST(RRatio, MatchesPrimitives) {
  std::mt19937_64 rng(34);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::MatrixXd h = oracle::gaussian(rng, 5, 6);
    const Eigen::MatrixXd y = h + Eigen::MatrixXd::Constant(5, 6, 1.0);
    EXPECT_NEAR(r_ratio(h, y), oracle::spread_loop(h) / oracle::mean_loop(y).squaredNorm(), 1e-12);
  }
}

TEST(CRatio, Examples) {
  std::mt19937_64 rng(35);
  const Eigen::MatrixXd y = oracle::gaussian(rng, 4, 5) + Eigen::MatrixXd::Ones(4, 5);
  EXPECT_NEAR(c_ratio(y, y), 1.0, 1e-14);
  EXPECT_NEAR(c_ratio(y, 2.0 * y), 1.0, 1e-14);
  const Eigen::MatrixXd x = oracle::gaussian(rng, 4, 5) + Eigen::MatrixXd::Ones(4, 5);
  const double want = (oracle::spread_loop(x) / oracle::mean_loop(x).squaredNorm()) /
                      (oracle::spread_loop(y) / oracle::mean_loop(y).squaredNorm());
  EXPECT_NEAR(c_ratio(y, x), want, 1e-12 * want);
  EXPECT_THROW((void)c_ratio(Eigen::MatrixXd::Ones(2, 3), x.topRows(2)), UndefinedRatioError);
}

TEST(Profiles, UniformAttentionGivesZeroLambda) {
  LayerDumpRecord r;
  r.hidden = Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd::Ones(3, 3);
  r.attn_out = Eigen::MatrixXd::Zero(3, 3);
  r.output = r.hidden;
  r.heads.push_back(HeadRecord{Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0), Eigen::MatrixXd::Identity(3, 3),
                               Eigen::MatrixXd::Identity(3, 3)});
  const std::vector<LayerDumpRecord> recs{r};
  const auto profiles = layer_profiles(recs);
  ASSERT_EQ(profiles.size(), 1u);
  EXPECT_NEAR(profiles[0].avg_lambda, 0.0, 1e-15);
  EXPECT_NEAR(profiles[0].avg_c, 1.0, 1e-14);
  EXPECT_EQ(profiles[0].text_count, 1u);
}

TEST(Profiles, IdenticalTextsAverageToSingle) {
  SyntheticConfig cfg;
  cfg.d = 6;
  cfg.n = 5;
  const LayerModel model = build_layer_model(cfg);
  const LayerDumpRecord a = record_from(cfg, model, 0, 0, 0);
  LayerDumpRecord b = a;
  b.text_id = 1;
  const std::vector<LayerDumpRecord> one{a};
  const std::vector<LayerDumpRecord> two{a, b};
  const auto p1 = layer_profiles(one);
  const auto p2 = layer_profiles(two);
  EXPECT_NEAR(p1[0].avg_lambda, p2[0].avg_lambda, 1e-15);
  EXPECT_NEAR(p1[0].avg_r, p2[0].avg_r, 1e-15);
  EXPECT_NEAR(p1[0].avg_c, p2[0].avg_c, 1e-15);
  EXPECT_NEAR(p1[0].avg_cosine, p2[0].avg_cosine, 1e-15);
  EXPECT_EQ(p2[0].text_count, 2u);
}

TEST(Profiles, SyntheticRecordsMatchOracles) {
  SyntheticConfig cfg;
  cfg.d = 8;
  cfg.n = 6;
  const LayerModel model = build_layer_model(cfg);
  std::vector<LayerDumpRecord> recs;
  for (std::uint32_t layer = 0; layer < 3; ++layer)
    for (std::uint32_t t = 0; t < 4; ++t) recs.push_back(record_from(cfg, model, layer * 4 + t, t, layer));
  std::reverse(recs.begin(), recs.end());  // file order must not matter

  const auto profiles = layer_profiles(recs, 3);
  ASSERT_EQ(profiles.size(), 3u);
  const double lam = lambda_oracle(model.attention, model.output_proj * model.value_proj);
  EXPECT_NEAR(model.lambda, lam, 1e-8 * lam);
  for (std::uint32_t layer = 0; layer < 3; ++layer) {
    const LayerProfile& p = profiles[layer];
    EXPECT_EQ(p.layer_index, layer);
    EXPECT_NEAR(p.avg_lambda, lam, 1e-8 * lam);
    double r = 0.0, c = 0.0, conc = 0.0, cosine = 0.0;
    for (std::uint32_t t = 0; t < 4; ++t) {
      const LayerSample s = simulate_trial(cfg, model, layer * 4 + t);
      const Eigen::MatrixXd y = s.hidden + s.attention;
      r += oracle::spread_loop(s.hidden) / oracle::mean_loop(y).squaredNorm();
      const double cx = oracle::spread_loop(s.output) / oracle::mean_loop(s.output).squaredNorm();
      c += cx / (oracle::spread_loop(y) / oracle::mean_loop(y).squaredNorm());
      conc += cx;
      cosine += oracle::cosine_loop(s.output, true);
    }
    EXPECT_NEAR(p.avg_r, r / 4, 1e-12);
    EXPECT_NEAR(p.avg_c, c / 4, 1e-12);  // identity transform, so 1
    EXPECT_NEAR(p.avg_c, 1.0, 1e-12);
    EXPECT_NEAR(p.avg_concentration, conc / 4, 1e-12);
    EXPECT_NEAR(p.avg_cosine, cosine / 4, 1e-12);
  }
  // thread count does not change the result
  const auto serial = layer_profiles(recs, 1);
  EXPECT_EQ(layer_profiles_csv(serial), layer_profiles_csv(profiles));
}

TEST(Profiles, MultiHeadAveragesHeads) {
  LayerDumpRecord r;
  r.hidden = Eigen::MatrixXd::Identity(3, 3) + Eigen::MatrixXd::Ones(3, 3);
  r.attn_out = Eigen::MatrixXd::Zero(3, 3);
  r.output = r.hidden;
  r.heads.push_back(HeadRecord{Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3),
                               Eigen::MatrixXd::Identity(3, 3)});
  r.heads.push_back(HeadRecord{Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0), Eigen::MatrixXd::Identity(3, 3),
                               Eigen::MatrixXd::Identity(3, 3)});
  const std::vector<LayerDumpRecord> recs{r};
  const auto p = layer_profiles(recs);
  EXPECT_NEAR(p[0].avg_lambda, 0.5, 1e-14);
  ASSERT_EQ(p[0].avg_head_lambda.size(), 2u);
  EXPECT_NEAR(p[0].avg_head_lambda[0], 1.0, 1e-14);
}

TEST(Profiles, DegenerateTextsSkipped) {
  LayerDumpRecord good;
  good.text_id = 0;
  good.hidden = Eigen::MatrixXd::Identity(2, 2) + Eigen::MatrixXd::Ones(2, 2);
  good.attn_out = Eigen::MatrixXd::Zero(2, 2);
  good.output = good.hidden;
  good.heads.push_back(HeadRecord{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                                  Eigen::MatrixXd::Identity(2, 2)});
  LayerDumpRecord flat = good;  // Y has no spread, c undefined
  flat.text_id = 1;
  flat.hidden = Eigen::MatrixXd::Ones(2, 2);
  flat.output = flat.hidden;
  const std::vector<LayerDumpRecord> recs{good, flat};
  const auto p = layer_profiles(recs);
  EXPECT_EQ(p[0].text_count, 1u);
  EXPECT_EQ(p[0].skipped, 1u);

  const std::vector<LayerDumpRecord> only_flat{flat};
  EXPECT_THROW((void)layer_profiles(only_flat), NumericError);
}

TEST(Profiles, InputErrors) {
  EXPECT_THROW((void)layer_profiles({}), ValidationError);
  LayerDumpRecord r;
  r.hidden = Eigen::MatrixXd::Identity(2, 2) + Eigen::MatrixXd::Ones(2, 2);
  r.attn_out = Eigen::MatrixXd::Zero(2, 2);
  r.output = r.hidden;
  r.heads.push_back(HeadRecord{Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(2, 2),
                               Eigen::MatrixXd::Identity(2, 2)});
  LayerDumpRecord other_layer = r;
  other_layer.layer_index = 1;
  other_layer.text_id = 5;
  const std::vector<LayerDumpRecord> mismatched{r, other_layer};
  EXPECT_THROW((void)layer_profiles(mismatched), ValidationError);
  const std::vector<LayerDumpRecord> duplicate{r, r};
  EXPECT_THROW((void)layer_profiles(duplicate), ValidationError);
}

TEST(Profiles, CsvHeader) {
  LayerProfile p;
  p.layer_index = 2;
  p.avg_lambda = 0.5;
  p.text_count = 3;
  const std::vector<LayerProfile> ps{p};
  EXPECT_EQ(layer_profiles_csv(ps),
            "layer,avg_lambda,avg_r,avg_c,avg_concentration,avg_cosine,text_count,skipped\n"
            "2,0.5,0,0,0,0,3,0\n");
}
