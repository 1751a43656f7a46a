#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsel/models.hpp"
#include "dsel/outer.hpp"
#include "dsel/selection.hpp"

namespace dsel {

enum class TaskKind { kQuadratic, kText, kCsv };

// Every run option. Text form is `key = value` per line, `#` starts a
// comment, unknown keys are errors. Lists are comma separated.
struct TrainConfig {
  // task
  TaskKind task = TaskKind::kQuadratic;
  std::uint64_t seed = 0;       // training randomness (batches, filters, init)
  std::uint64_t data_seed = 0;  // dataset generation

  // selection
  Method method = Method::kSoba;
  std::vector<std::string> baselines;  // uniform | mixing | cds | classifier
  FilterRule filter_rule = FilterRule::kWithoutReplacement;

  // Algorithm 1
  std::size_t b_small = 16;
  std::size_t b_large = 128;
  std::size_t T = 2000;
  double lr = 0.01;
  double momentum = 0.9;
  std::optional<double> rho;  // unset: equal to lr
  double eta_alpha = 1.0;
  double eta_v = 0.01;
  double v_clip = 100.0;
  double score_clamp = 20.0;

  // baselines
  double lambda = 0.1;
  double keep_fraction = 0.1;
  std::size_t cds_pretrain_steps = 0;  // 0: T / 2
  std::size_t classifier_steps = 500;
  double classifier_lr = 0.1;
  double classifier_min_accuracy = 0.0;

  // fine-tuning
  std::size_t finetune_steps = 0;
  double finetune_lr = 0.01;
  std::size_t finetune_eval_every = 10;
  std::size_t patience = 3;

  // cadence
  std::size_t eval_every = 100;
  std::size_t snapshot_every = 50;
  std::size_t diag_every = 0;  // 0: no alignment diagnostics during training
  std::size_t diag_trials = 1000;

  // curriculum replay
  std::string curriculum_mode = "final";  // final | shuffled

  // quadratic mixture
  std::size_t input_dim = 4;
  std::size_t n_distractors = 1;
  double target_fraction = 0.05;
  double noise = 0.1;
  double mean_scale = 2.0;
  std::size_t n_generic = 10000;
  std::size_t n_specific = 200;
  std::size_t n_heldout = 1000;

  // text mixture
  std::string corpus_a = "data/corpus_a.txt";
  std::string corpus_b = "data/corpus_b.txt";
  double text_mix = 0.95;
  std::size_t window = 8;

  // feature CSV
  std::string csv_generic;
  std::string csv_specific;
  std::string csv_heldout_specific;
  std::string csv_heldout_generic;

  // models
  std::vector<std::size_t> hidden;  // main model hidden widths
  std::size_t embed_dim = 16;
  std::size_t weight_hidden = 32;
  std::size_t weight_embed = 16;
  FeatureLoss feature_loss = FeatureLoss::kMeanSquaredError;

  double effective_rho() const { return rho.value_or(lr); }
  OuterConfig outer() const { return {effective_rho(), eta_alpha, eta_v, v_clip}; }

  // Checks cross-field invariants; throws ConfigError.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

// Applies one `key=value` override. Throws ConfigError on unknown keys.
void apply_override(TrainConfig& cfg, std::string_view assignment);

// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const TrainConfig& cfg);

const char* task_name(TaskKind kind);

}  // namespace dsel
