#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dsel/config.hpp"
#include "dsel/data.hpp"
#include "dsel/errors.hpp"
#include "dsel/loss.hpp"
#include "dsel/metrics.hpp"
#include "dsel/models.hpp"

namespace dsel {

// Data plus the architectures every pipeline of one configuration shares.
struct Task {
  TaskData data;
  MainModelSpec main_spec;
  WeightingNetSpec example_net;  // scores raw examples (all methods except mwn)
  WeightingNetSpec loss_net;     // scores one scalar loss (mwn)
};

// Generates or loads the data. Relative paths resolve against `base_dir`.
Task build_task(const TrainConfig& cfg, const std::filesystem::path& base_dir = ".");

// Scorer architecture used by `method`.
const WeightingNetSpec& scorer_spec(const Task& task, Method method);

struct Snapshot {
  std::uint64_t t = 0;
  ParamVector alpha;
};

// Weighting parameters recorded during training, by strictly increasing step.
class WeightTrajectory {
 public:
  void push(std::uint64_t t, ParamVector alpha);
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  bool empty() const { return snapshots_.empty(); }
  std::size_t size() const { return snapshots_.size(); }
  const ParamVector& final_alpha() const;

 private:
  std::vector<Snapshot> snapshots_;
};

struct RunResult {
  std::string arm;
  ParamVector theta;
  ParamVector momentum;
  std::optional<ParamVector> alpha;  // weighting parameters at the end, if any
  WeightTrajectory trajectory;
  std::vector<MetricsRow> metrics;
  std::vector<std::string> events;
  // Examples pushed through the main-model update alone (not scoring, outer
  // updates or evaluation).
  EvalCounts main_update_counts;
  std::vector<std::uint64_t> theta_trace;  // hash of theta after each step
  std::uint64_t last_step = 0;
  std::vector<std::size_t> kept;  // cds / classifier: kept generic positions
  std::optional<double> classifier_accuracy;
};

// Non-finite state during training. Carries the last finite parameters.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, std::uint64_t step, ParamVector last_good_theta,
                  std::optional<ParamVector> alpha)
      : NumericError(what + " at step " + std::to_string(step)),
        step_(step),
        theta_(std::move(last_good_theta)),
        alpha_(std::move(alpha)) {}

  std::uint64_t step() const { return step_; }
  const ParamVector& last_good_theta() const { return theta_; }
  const std::optional<ParamVector>& alpha() const { return alpha_; }

 private:
  std::uint64_t step_;
  ParamVector theta_;
  std::optional<ParamVector> alpha_;
};

// Online bilevel selection: score a large generic batch, filter it down to
// b_small, update the main model with uniform weights, then update the
// weighting model on an independent uniform sub-batch.
RunResult pretrain_bilevel(const Task& task, const TrainConfig& cfg);

// Same loop with constant uniform weights.
RunResult pretrain_uniform(const Task& task, const TrainConfig& cfg);

// Each filtered batch carries ceil(lambda * b_small) specific examples.
RunResult mixing(const Task& task, const TrainConfig& cfg);

inline constexpr double kLambdaGrid[] = {0.0, 0.1, 0.25, 0.5};
std::vector<std::pair<double, RunResult>> mixing_sweep(
    const Task& task, const TrainConfig& cfg, std::span<const double> grid = kLambdaGrid);

// Contrastive data selection: pretrain, fine-tune a copy, keep the generic
// examples whose loss improved most, resume pretraining on them.
RunResult cds_pipeline(const Task& task, const TrainConfig& cfg);

// Generic-vs-specific classifier; keep generic examples most likely specific.
RunResult classifier_pipeline(const Task& task, const TrainConfig& cfg);

// Momentum SGD on the specific set with early stopping on the held-out
// specific loss. Returns the best parameters seen, the initial ones included.
// Metrics rows are numbered from `step_offset`.
RunResult finetune(const Task& task, const TrainConfig& cfg, const ParamVector& theta,
                   const std::string& arm, std::uint64_t step_offset = 0);

// Retrains a fresh main model with frozen weights taken from `trajectory`:
// the final snapshot ("final") or a seeded permutation of the snapshots
// ("shuffled").
RunResult curriculum_ablation(const Task& task, const TrainConfig& cfg,
                              const WeightTrajectory& trajectory, const std::string& mode);

// Trains the main model of `large` with the final weights of a run on a
// smaller model. The weighting-net spec must match exactly.
RunResult transfer_weights(const Task& large, const TrainConfig& large_cfg,
                           const WeightTrajectory& trajectory,
                           const WeightingNetSpec& trajectory_spec);

double heldout_specific_loss(const Task& task, const ParamVector& theta);

// FNV-1a over the raw bytes of the values.
std::uint64_t hash_params(const ParamVector& p);

}  // namespace dsel
