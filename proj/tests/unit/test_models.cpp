#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "dsel/checkpoint.hpp"
#include "dsel/models.hpp"
#include "dsel/selection.hpp"
#include "support.hpp"

using namespace dsel;
using namespace dsel::testing;

namespace {

MainModelSpec byte_lm_spec() {
  MainModelSpec s;
  s.kind = ModelKind::kByteWindowLm;
  s.hidden = {64, 64};
  return s;
}

MainModelSpec small_byte_lm() {
  MainModelSpec s;
  s.kind = ModelKind::kByteWindowLm;
  s.context = 3;
  s.embed_dim = 4;
  s.hidden = {8};
  return s;
}

MainModelSpec mlp_spec(FeatureLoss loss, std::size_t classes = 0) {
  MainModelSpec s;
  s.input_dim = 3;
  s.hidden = {5, 4};
  s.feature_loss = loss;
  s.num_classes = classes;
  return s;
}

// Weighting-net scores of one batch as a differentiable "loss", so the
// generic FD harness checks scores_vjp.
double score_sum(const Scorer& net, const ParamVector& alpha, Batch batch,
                 std::span<const double> cot) {
  const auto s = net.scores(alpha, batch);
  return std::inner_product(s.begin(), s.end(), cot.begin(), 0.0);
}

ParamVector fd_scores(const Scorer& net, ParamVector alpha, Batch batch,
                      std::span<const double> cot, double h) {
  ParamVector out(alpha.layout_ptr());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double keep = alpha[k];
    alpha[k] = keep + h;
    const double up = score_sum(net, alpha, batch, cot);
    alpha[k] = keep - h;
    const double down = score_sum(net, alpha, batch, cot);
    alpha[k] = keep;
    out[k] = (up - down) / (2 * h);
  }
  return out;
}

}  // namespace

TEST(MainModelTest, UniformOutputGivesLn256) {
  const MainModel m(byte_lm_spec());
  ParamVector th = m.init(3);
  for (double& v : th.segment("w2")) v = 0.0;
  const auto batch = random_bytes(16, 8, 1);
  EXPECT_NEAR(evaluate(m, th, batch), std::log(256.0), 1e-12);
  const auto p = m.next_byte_distribution(th, batch[0]);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
}

TEST(MainModelTest, NextByteDistributionIsProbability) {
  const MainModel m(byte_lm_spec());
  const ParamVector th = jitter(m.init(5), 0.3, 9);
  for (const Example& ex : random_bytes(10, 8, 2)) {
    const auto p = m.next_byte_distribution(th, ex);
    ASSERT_EQ(p.size(), 256u);
    for (double v : p) EXPECT_GT(v, 0.0);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(MainModelTest, InitLossConcentratesNearLn256) {
  const MainModel m(byte_lm_spec());
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto batch = random_bytes(256, 8, 100 + seed);
    EXPECT_NEAR(evaluate(m, m.init(seed), batch), std::log(256.0), 0.1);
  }
}

TEST(MainModelTest, MseZeroWhenPredictionMatches) {
  MainModelSpec s = mlp_spec(FeatureLoss::kMeanSquaredError);
  s.hidden = {};
  const MainModel m(s);
  ParamVector th(m.layout_ptr());
  th.segment("w0")[0] = 2.0;
  th.segment("b0")[0] = -1.0;
  std::vector<Example> batch;
  for (int i = 0; i < 5; ++i)
    batch.push_back(Example{i, FeaturePayload{{double(i), 7.0, -3.0}, 2.0 * i - 1.0}});
  EXPECT_EQ(evaluate(m, th, batch), 0.0);
}

TEST(MainModelTest, LossDecreasesMonotonicallyOnSeparableSet) {
  MainModelSpec s = mlp_spec(FeatureLoss::kCrossEntropy, 2);
  s.input_dim = 2;
  s.hidden = {};
  const MainModel m(s);
  std::vector<Example> batch;
  for (int i = 0; i < 20; ++i) {
    const double x0 = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + 0.1 * i);
    batch.push_back(Example{i, FeaturePayload{{x0, 0.3 * (i % 5)}, i % 2 == 0 ? 1.0 : 0.0}});
  }
  ParamVector th = m.init(1);
  double prev = evaluate(m, th, batch);
  for (int step = 0; step < 50; ++step) {
    axpy_inplace(-0.1, grad(m, th, batch), th);
    const double now = evaluate(m, th, batch);
    EXPECT_LT(now, prev) << "step " << step;
    prev = now;
  }
}

TEST(MainModelTest, WrongExampleKindIsContractError) {
  const MainModel lm(small_byte_lm());
  const auto features = random_features(2, 3, 1);
  EXPECT_THROW(evaluate(lm, lm.init(1), features), ContractError);
  const MainModel mlp(mlp_spec(FeatureLoss::kMeanSquaredError));
  const auto bytes = random_bytes(2, 3, 1);
  EXPECT_THROW(evaluate(mlp, mlp.init(1), bytes), ContractError);
}

TEST(MainModelTest, InvalidSpecIsConfigError) {
  MainModelSpec s = mlp_spec(FeatureLoss::kMeanSquaredError);
  s.input_dim = 0;
  EXPECT_THROW(MainModel{s}, ConfigError);
  s = mlp_spec(FeatureLoss::kCrossEntropy, 1);
  EXPECT_THROW(MainModel{s}, ConfigError);
}

TEST(MainModelTest, InitDeterministicAndSeedSensitive) {
  const MainModel m(byte_lm_spec());
  EXPECT_EQ(m.init(7), m.init(7));
  const ParamVector a = m.init(7), b = m.init(8);
  EXPECT_NE(dot(a, a), dot(a, b));
}

TEST(MainModelTest, ByteLmGradMatchesFiniteDifferences) {
  const MainModel m(byte_lm_spec());
  const ParamVector th = m.init(11);
  const auto batch = random_bytes(8, 8, 12);
  const ParamVector g = grad(m, th, batch);
  const ParamVector fd = finite_diff_grad(m, th, batch, 1e-4);
  EXPECT_LT(max_rel_error(g, fd), 1e-4);
}

TEST(MainModelTest, ByteLmHvpMatchesFiniteDifferenceOfGrad) {
  const MainModel m(byte_lm_spec());
  const ParamVector th = m.init(21);
  const ParamVector v = jitter(ParamVector(m.layout_ptr()), 1.0, 22);
  const auto batch = random_bytes(8, 8, 23);
  const double h = 1e-4;
  const ParamVector up = grad(m, axpy(h, v, th), batch);
  const ParamVector down = grad(m, axpy(-h, v, th), batch);
  const ParamVector fd = scale(0.5 / h, axpy(-1.0, down, up));
  EXPECT_LT(max_rel_error(hvp(m, th, v, batch), fd), 1e-3);
}

// Property: every main-model loss matches central differences.
TEST(MainModelTest, GradMatchesFiniteDifferencesAcrossSeeds) {
  const MainModel mse(mlp_spec(FeatureLoss::kMeanSquaredError));
  const MainModel ce(mlp_spec(FeatureLoss::kCrossEntropy, 3));
  const MainModel lm(small_byte_lm());
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto fb = random_features(6, 3, seed);
    const auto cb = random_features(6, 3, seed, 3);
    const auto bb = random_bytes(6, 3, seed);
    for (auto [model, batch] : {std::pair<const MainModel*, const std::vector<Example>*>{&mse, &fb},
                                {&ce, &cb},
                                {&lm, &bb}}) {
      const ParamVector th = jitter(model->init(seed), 0.2, seed + 50);
      const ParamVector g = grad(*model, th, *batch);
      const ParamVector fd = finite_diff_grad(*model, th, *batch, 1e-4);
      EXPECT_LT(max_rel_error(g, fd), 1e-4) << "seed " << seed;
    }
  }
}

TEST(WeightingNetTest, FreshNetScoresZeroAndWeightsUniform) {
  WeightingNetSpec s;
  s.input_dim = 3;
  const WeightingNet net(s);
  const ParamVector alpha = net.init(4);
  const auto batch = random_features(7, 3, 5);
  for (double v : net.scores(alpha, batch)) EXPECT_EQ(v, 0.0);
  for (double w : normalize(net.scores(alpha, batch))) EXPECT_EQ(w, 1.0 / 7.0);

  WeightingNetSpec b;
  b.input = ScoreInput::kBytes;
  const WeightingNet bytes(b);
  const auto bb = random_bytes(5, 8, 6);
  for (double v : bytes.scores(bytes.init(1), bb)) EXPECT_EQ(v, 0.0);
}

TEST(WeightingNetTest, ScoringIsPure) {
  WeightingNetSpec s;
  s.input_dim = 3;
  const WeightingNet net(s);
  const ParamVector alpha = jitter(net.init(4), 0.5, 1);
  auto batch = random_features(3, 3, 5);
  batch[2] = batch[0];
  batch[2].id = 99;
  const auto sc = net.scores(alpha, batch);
  EXPECT_EQ(sc[0], sc[2]);
  EXPECT_EQ(net.score(alpha, batch[1]), sc[1]);
}

TEST(WeightingNetTest, ScoresRespectClamp) {
  WeightingNetSpec s;
  s.input_dim = 3;
  s.clamp = 20.0;
  const WeightingNet net(s);
  const ParamVector alpha = jitter(net.init(4), 100.0, 1);
  for (double v : net.scores(alpha, random_features(50, 3, 5))) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_LE(std::abs(v), 20.0);
  }
}

TEST(WeightingNetTest, ScoreGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    WeightingNetSpec fs;
    fs.input_dim = 3;
    fs.hidden = 6;
    WeightingNetSpec bs;
    bs.input = ScoreInput::kBytes;
    bs.hidden = 6;
    bs.embed_dim = 3;
    const WeightingNet fnet(fs), bnet(bs);
    const auto fb = random_features(5, 3, seed);
    const auto bb = random_bytes(5, 4, seed);
    const std::vector<double> cot{0.3, -1.0, 0.5, 2.0, -0.7};
    for (auto [net, batch] : {std::pair<const WeightingNet*, const std::vector<Example>*>{&fnet, &fb},
                              {&bnet, &bb}}) {
      const ParamVector alpha = jitter(net->init(seed), 0.5, seed + 7);
      const ParamVector g = net->scores_vjp(alpha, *batch, cot);
      EXPECT_LT(max_rel_error(g, fd_scores(*net, alpha, *batch, cot, 1e-5)), 1e-4) << seed;
    }
  }
}

TEST(DomainClassifierTest, ProbabilitiesInOpenUnitInterval) {
  WeightingNetSpec s;
  s.input_dim = 3;
  const DomainClassifier clf(s);
  const ParamVector alpha = jitter(clf.init(2), 3.0, 3);
  for (double p : clf.prob_specific(alpha, random_features(40, 3, 4))) {
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(DomainClassifierTest, BceGradientMatchesFiniteDifferences) {
  WeightingNetSpec s;
  s.input_dim = 3;
  s.hidden = 5;
  const DomainClassifier clf(s);
  const auto batch = random_features(6, 3, 9);
  const std::vector<double> labels{1, 0, 1, 0, 0, 1};
  ParamVector alpha = jitter(clf.init(2), 0.5, 3);
  const ParamVector g = clf.bce(alpha, batch, labels).grad;
  ParamVector fd(alpha.layout_ptr());
  const double h = 1e-5;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    const double keep = alpha[k];
    alpha[k] = keep + h;
    const double up = clf.bce(alpha, batch, labels).value;
    alpha[k] = keep - h;
    const double down = clf.bce(alpha, batch, labels).value;
    alpha[k] = keep;
    fd[k] = (up - down) / (2 * h);
  }
  EXPECT_LT(max_rel_error(g, fd), 1e-4);
}

TEST(CheckpointTest, RoundTripBitExact) {
  const MainModel m(byte_lm_spec());
  const ParamVector th = jitter(m.init(1), 1e-3, 2);
  const auto dir = std::filesystem::temp_directory_path() / "dsel_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "theta", th);
  const ParamVector back = load_checkpoint(dir / "theta", m.layout());
  EXPECT_EQ(back, th);
  EXPECT_EQ(back.layout(), m.layout());
  const MainModel other(small_byte_lm());
  EXPECT_THROW(load_checkpoint(dir / "theta", other.layout()), ConfigError);
  std::filesystem::remove_all(dir);
}
