#include <gtest/gtest.h>

#include <cmath>

#include "dsel/pipelines.hpp"

namespace dsel {
namespace {

std::vector<double> vec(const ParamVector& p) { return {p.values().begin(), p.values().end()}; }

TrainConfig small_quadratic() {
  TrainConfig c;
  c.task = TaskKind::kQuadratic;
  c.seed = 3;
  c.data_seed = 3;
  c.T = 60;
  c.n_generic = 1000;
  c.n_specific = 64;
  c.n_heldout = 200;
  c.b_small = 8;
  c.b_large = 32;
  c.eval_every = 20;
  c.snapshot_every = 10;
  return c;
}

const Task& quad_task() {
  static const Task task = build_task(small_quadratic());
  return task;
}

TEST(Pipelines, ZeroStepsEmitsNothing) {
  TrainConfig c = small_quadratic();
  c.T = 0;
  const RunResult r = pretrain_bilevel(quad_task(), c);
  EXPECT_TRUE(r.metrics.empty());
  EXPECT_TRUE(r.theta_trace.empty());
  EXPECT_EQ(format_metrics(r.metrics), metrics_header() + "\n");
}

TEST(Pipelines, EvalRowsAtCadenceAndLastStep) {
  TrainConfig c = small_quadratic();
  c.T = 50;
  const RunResult r = pretrain_uniform(quad_task(), c);
  ASSERT_EQ(r.metrics.size(), 3u);
  EXPECT_EQ(r.metrics[0].step, 20u);
  EXPECT_EQ(r.metrics[2].step, 50u);
  EXPECT_EQ(r.metrics[0].phase, "uniform:pretrain");
  EXPECT_FALSE(r.metrics[0].sar.has_value());
}

class ReductionIdentity : public ::testing::TestWithParam<Method> {};

TEST_P(ReductionIdentity, FrozenWeightingReproducesUniformTrajectory) {
  TrainConfig c = small_quadratic();
  c.method = GetParam();
  c.eta_alpha = 0.0;
  const RunResult base = pretrain_uniform(quad_task(), c);
  const RunResult r = pretrain_bilevel(quad_task(), c);
  ASSERT_EQ(r.theta_trace.size(), base.theta_trace.size());
  EXPECT_EQ(r.theta_trace, base.theta_trace);
  EXPECT_EQ(vec(r.theta), vec(base.theta));
}

INSTANTIATE_TEST_SUITE_P(AllMethods, ReductionIdentity,
                         ::testing::Values(Method::kDds, Method::kSoba, Method::kAnograd,
                                           Method::kLtr, Method::kMwn),
                         [](const auto& info) { return std::string(method_name(info.param)); });

TEST(Pipelines, MainUpdateCountIsIndependentOfLargeBatch) {
  TrainConfig c = small_quadratic();
  c.method = Method::kSoba;
  for (std::size_t b_large : {8u, 32u, 128u}) {
    c.b_large = b_large;
    const RunResult r = pretrain_bilevel(quad_task(), c);
    EXPECT_EQ(r.main_update_counts.forward, 0u) << b_large;
    EXPECT_EQ(r.main_update_counts.backward, c.b_small * c.T) << b_large;
  }
}

TEST(Pipelines, SameSeedIsDeterministic) {
  TrainConfig c = small_quadratic();
  const RunResult a = pretrain_bilevel(quad_task(), c);
  const RunResult b = pretrain_bilevel(quad_task(), c);
  EXPECT_EQ(format_metrics(a.metrics), format_metrics(b.metrics));
  EXPECT_EQ(a.theta_trace, b.theta_trace);
  c.seed = 4;
  EXPECT_NE(pretrain_bilevel(quad_task(), c).theta_trace, a.theta_trace);
}

TEST(Pipelines, TrajectoryRecordsSnapshotsInOrder) {
  const TrainConfig c = small_quadratic();
  const RunResult r = pretrain_bilevel(quad_task(), c);
  ASSERT_EQ(r.trajectory.size(), 6u);
  EXPECT_EQ(r.trajectory.snapshots().front().t, 10u);
  EXPECT_EQ(r.trajectory.snapshots().back().t, 60u);
  ASSERT_TRUE(r.alpha.has_value());
  EXPECT_EQ(vec(r.trajectory.final_alpha()), vec(*r.alpha));
}

TEST(Pipelines, TrajectoryRejectsNonIncreasingSteps) {
  WeightTrajectory t;
  t.push(5, ParamVector::flat({1.0}));
  EXPECT_THROW(t.push(5, ParamVector::flat({1.0})), ContractError);
}

TEST(Pipelines, NoMethodIsAConfigError) {
  TrainConfig c = small_quadratic();
  c.method = Method::kNone;
  EXPECT_THROW(pretrain_bilevel(quad_task(), c), ConfigError);
}

TEST(Pipelines, MixingWithZeroLambdaIsUniform) {
  TrainConfig c = small_quadratic();
  c.lambda = 0.0;
  EXPECT_EQ(mixing(quad_task(), c).theta_trace, pretrain_uniform(quad_task(), c).theta_trace);
}

TEST(Pipelines, MixingWithFullLambdaTrainsOnSpecificOnly) {
  TrainConfig c = small_quadratic();
  c.lambda = 1.0;
  const RunResult r = mixing(quad_task(), c);
  const RunResult u = pretrain_uniform(quad_task(), c);
  EXPECT_NE(r.theta_trace, u.theta_trace);
  EXPECT_LT(r.metrics.back().heldout_specific_loss, u.metrics.back().heldout_specific_loss);
}

TEST(Pipelines, MixingSweepLabelsArms) {
  const auto sweep = mixing_sweep(quad_task(), small_quadratic());
  ASSERT_EQ(sweep.size(), 4u);
  EXPECT_EQ(sweep[1].second.arm, "mixing_0.1");
  EXPECT_EQ(sweep[1].second.metrics.front().phase, "mixing_0.1:pretrain");
}

TEST(Pipelines, CdsKeepAllReducesToUniform) {
  TrainConfig c = small_quadratic();
  c.keep_fraction = 1.0;
  c.finetune_steps = 10;
  const RunResult r = cds_pipeline(quad_task(), c);
  EXPECT_EQ(r.kept.size(), quad_task().data.generic.size());
  EXPECT_EQ(r.theta_trace, pretrain_uniform(quad_task(), c).theta_trace);
}

TEST(Pipelines, CdsKeepsRequestedFraction) {
  TrainConfig c = small_quadratic();
  c.keep_fraction = 0.1;
  c.finetune_steps = 20;
  const RunResult r = cds_pipeline(quad_task(), c);
  EXPECT_EQ(r.kept.size(), 100u);
  EXPECT_TRUE(std::is_sorted(r.kept.begin(), r.kept.end()));
  EXPECT_EQ(r.theta_trace.size(), c.T);
}

TEST(Pipelines, CdsNeedsFinetuning) {
  TrainConfig c = small_quadratic();
  c.finetune_steps = 0;
  EXPECT_THROW(cds_pipeline(quad_task(), c), ConfigError);
}

TEST(Pipelines, ClassifierKeepAllReducesToUniform) {
  TrainConfig c = small_quadratic();
  c.keep_fraction = 1.0;
  c.classifier_steps = 20;
  const RunResult r = classifier_pipeline(quad_task(), c);
  EXPECT_EQ(r.theta_trace, pretrain_uniform(quad_task(), c).theta_trace);
  ASSERT_TRUE(r.classifier_accuracy.has_value());
}

TEST(Pipelines, ClassifierGateRejectsWeakClassifier) {
  TrainConfig c = small_quadratic();
  c.classifier_steps = 0;
  c.classifier_min_accuracy = 0.9;
  EXPECT_THROW(classifier_pipeline(quad_task(), c), ConfigError);
}

TEST(Pipelines, ClassifierSelectsTargetDomain) {
  TrainConfig c = small_quadratic();
  c.classifier_steps = 300;
  c.keep_fraction = 0.05;
  const RunResult r = classifier_pipeline(quad_task(), c);
  const auto tags = quad_task().data.generic.domain_tags_for_diagnostics();
  std::size_t hits = 0;
  for (std::size_t p : r.kept) hits += tags[p] == quad_task().data.target_tag;
  EXPECT_GT(static_cast<double>(hits) / static_cast<double>(r.kept.size()), 0.5);
}

TEST(Pipelines, FinetuneZeroStepsLeavesThetaUnchanged) {
  TrainConfig c = small_quadratic();
  c.finetune_steps = 0;
  const RunResult pre = pretrain_uniform(quad_task(), c);
  const RunResult ft = finetune(quad_task(), c, pre.theta, "uniform", c.T);
  EXPECT_EQ(vec(ft.theta), vec(pre.theta));
  EXPECT_TRUE(ft.metrics.empty());
}

TEST(Pipelines, FinetuneNeverIncreasesHeldOutLoss) {
  TrainConfig c = small_quadratic();
  c.finetune_steps = 200;
  c.finetune_lr = 0.05;
  const RunResult pre = pretrain_uniform(quad_task(), c);
  const RunResult ft = finetune(quad_task(), c, pre.theta, "uniform", c.T);
  EXPECT_LE(heldout_specific_loss(quad_task(), ft.theta), heldout_specific_loss(quad_task(), pre.theta));
  ASSERT_FALSE(ft.metrics.empty());
  EXPECT_EQ(ft.metrics.front().phase, "uniform:finetune");
  EXPECT_GT(ft.metrics.front().step, c.T);
}

TEST(Pipelines, CurriculumSingleSnapshotFinalEqualsShuffled) {
  TrainConfig c = small_quadratic();
  c.snapshot_every = 1000;  // only the last step is recorded
  const RunResult r = pretrain_bilevel(quad_task(), c);
  ASSERT_EQ(r.trajectory.size(), 1u);
  const RunResult fin = curriculum_ablation(quad_task(), c, r.trajectory, "final");
  const RunResult shf = curriculum_ablation(quad_task(), c, r.trajectory, "shuffled");
  EXPECT_EQ(fin.theta_trace, shf.theta_trace);
  EXPECT_EQ(fin.arm, "curriculum_final");
}

TEST(Pipelines, CurriculumRejectsBadInput) {
  const TrainConfig c = small_quadratic();
  EXPECT_THROW(curriculum_ablation(quad_task(), c, WeightTrajectory{}, "final"), ConfigError);
  WeightTrajectory wrong;
  wrong.push(1, ParamVector::flat({0.0, 1.0}));
  EXPECT_THROW(curriculum_ablation(quad_task(), c, wrong, "final"), ConfigError);
  const RunResult r = pretrain_bilevel(quad_task(), c);
  EXPECT_THROW(curriculum_ablation(quad_task(), c, r.trajectory, "reversed"), ConfigError);
}

TEST(Pipelines, TransferWithUntrainedNetIsUniform) {
  TrainConfig c = small_quadratic();
  c.eta_alpha = 0.0;
  const RunResult small = pretrain_bilevel(quad_task(), c);
  TrainConfig large = c;
  large.hidden = {16, 16};
  const Task big = build_task(large);
  const RunResult t = transfer_weights(big, large, small.trajectory, scorer_spec(quad_task(), c.method));
  EXPECT_EQ(t.theta_trace, pretrain_uniform(big, large).theta_trace);
}

TEST(Pipelines, TransferRejectsSpecMismatch) {
  TrainConfig c = small_quadratic();
  const RunResult small = pretrain_bilevel(quad_task(), c);
  TrainConfig other = c;
  other.input_dim = 6;
  const Task big = build_task(other);
  EXPECT_THROW(transfer_weights(big, other, small.trajectory, scorer_spec(quad_task(), c.method)),
               ConfigError);
}

TEST(Pipelines, KeepFractionRoundingToZeroIsAConfigError) {
  TrainConfig c = small_quadratic();
  c.keep_fraction = 1e-6;
  c.classifier_steps = 1;
  EXPECT_THROW(classifier_pipeline(quad_task(), c), ConfigError);
}

TEST(Pipelines, WeightStatsPresentOnTaggedData) {
  const RunResult r = pretrain_bilevel(quad_task(), small_quadratic());
  const MetricsRow& row = r.metrics.back();
  ASSERT_TRUE(row.mean_target_weight && row.mean_distractor_weight && row.weight_entropy);
  EXPECT_LE(*row.weight_entropy, std::log(200.0) + 1e-12);
  const double n_t = static_cast<double>(quad_task().data.heldout_generic.size());
  EXPECT_GT(*row.mean_target_weight * n_t, 0.0);
}

TEST(Pipelines, HashParamsDistinguishesSignedZero) {
  EXPECT_NE(hash_params(ParamVector::flat({0.0})), hash_params(ParamVector::flat({-0.0})));
  EXPECT_EQ(hash_params(ParamVector::flat({1.5, 2.0})), hash_params(ParamVector::flat({1.5, 2.0})));
}

}  // namespace
}  // namespace dsel
