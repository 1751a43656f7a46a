#include "dsel/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "dsel/diagnostics.hpp"
#include "dsel/outer.hpp"
#include "dsel/rng.hpp"
#include "dsel/selection.hpp"

namespace dsel {
namespace {

// Fine-tuning draws live far from the pretraining counters of the same stream.
constexpr std::uint64_t kFinetuneCounterBase = std::uint64_t{1} << 40;

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t counter) {
  return stream_rng(seed, Stream::kInit, counter)();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

Dataset with_role(const Dataset& d, Role role) {
  std::vector<Example> ex(d.examples().begin(), d.examples().end());
  const auto tags = d.domain_tags_for_diagnostics();
  return Dataset(role, std::move(ex), std::vector<int>(tags.begin(), tags.end()));
}

// Splits off the last fifth of `d` as the held-out part.
std::pair<Dataset, Dataset> tail_split(const Dataset& d, Role heldout_role) {
  if (d.size() < 2) throw ConfigError("csv data set too small to split off a held-out tail");
  const std::size_t cut = d.size() - std::max<std::size_t>(1, d.size() / 5);
  std::vector<std::size_t> head(cut), tail(d.size() - cut);
  std::iota(head.begin(), head.end(), 0);
  std::iota(tail.begin(), tail.end(), cut);
  return {d.subset(head), with_role(d.subset(tail), heldout_role)};
}

bool any_of_method(Method m, std::initializer_list<Method> set) {
  return std::find(set.begin(), set.end(), m) != set.end();
}

bool learns_alpha(Method m) {
  return any_of_method(m, {Method::kDds, Method::kSoba, Method::kAnograd, Method::kMwn});
}

// Weighting source for one loop.
struct Weighting {
  Method method = Method::kNone;  // outer update rule; none means frozen or uniform
  bool scored = false;            // weights come from the scorer
  bool loss_inputs = false;       // scorer sees per-example losses (mwn)
  std::optional<ParamVector> alpha;
  // Frozen weights for step t; overrides `alpha` when set.
  std::function<const ParamVector&(std::uint64_t)> alpha_at;
};

struct LoopPlan {
  std::string arm;
  std::string phase = "pretrain";
  Weighting weighting;
  double lambda = 0.0;
  const Dataset* generic = nullptr;
  std::uint64_t first_step = 1;
  std::uint64_t last_step = 0;
  ParamVector theta;
  ParamVector momentum;
  bool record_trajectory = false;
};

class Loop {
 public:
  Loop(const Task& task, const TrainConfig& cfg)
      : task_(task),
        cfg_(cfg),
        main_(task.main_spec),
        outer_(task.main_spec),
        eval_(task.main_spec),
        example_net_(task.example_net),
        loss_net_(task.loss_net) {}

  ParamVector init_theta() const { return main_.init(derived_seed(cfg_.seed, 0)); }
  ParamVector init_alpha(bool loss_inputs) const {
    return net(loss_inputs).init(derived_seed(cfg_.seed, 1));
  }
  const WeightingNet& net(bool loss_inputs) const {
    return loss_inputs ? loss_net_ : example_net_;
  }

  RunResult run(LoopPlan plan);

  // Weights over `batch` under the current weighting, normalized.
  std::vector<double> weights(const Weighting& w, const ParamVector* alpha, const ParamVector& theta,
                              Batch batch, const DifferentiableLoss& model) const;

  MetricsRow evaluate_row(const std::string& label, std::uint64_t step, const ParamVector& theta,
                          const Weighting& w, const ParamVector* alpha, const Dataset& generic) const;

 private:
  const Task& task_;
  const TrainConfig& cfg_;
  MainModel main_;   // main-model update only
  MainModel outer_;  // scoring inputs, outer updates, LTR weights
  MainModel eval_;   // evaluation and diagnostics
  WeightingNet example_net_;
  WeightingNet loss_net_;
};

std::vector<double> Loop::weights(const Weighting& w, const ParamVector* alpha,
                                  const ParamVector& theta, Batch batch,
                                  const DifferentiableLoss& model) const {
  if (!w.scored) return normalize(std::vector<double>(batch.size(), 0.0));
  if (w.loss_inputs) {
    const auto inputs = mwn_inputs(model, theta, batch);
    return normalize(loss_net_.scores(*alpha, inputs));
  }
  return normalize(example_net_.scores(*alpha, batch));
}

MetricsRow Loop::evaluate_row(const std::string& label, std::uint64_t step,
                              const ParamVector& theta, const Weighting& w,
                              const ParamVector* alpha, const Dataset& generic) const {
  const TaskData& d = task_.data;
  MetricsRow row;
  row.step = step;
  row.phase = label;
  row.heldout_specific_loss = evaluate(eval_, theta, d.heldout_specific.examples());
  row.heldout_generic_loss = evaluate(eval_, theta, d.heldout_generic.examples());
  const auto wts = weights(w, alpha, theta, d.heldout_generic.examples(), eval_);
  row.weight_entropy = weight_entropy(wts);
  if (d.heldout_generic.has_domain_tags()) {
    const auto tags = d.heldout_generic.domain_tags_for_diagnostics();
    double t_sum = 0.0, o_sum = 0.0;
    std::size_t t_n = 0, o_n = 0;
    for (std::size_t i = 0; i < wts.size(); ++i) {
      if (tags[i] == d.target_tag) {
        t_sum += wts[i];
        ++t_n;
      } else {
        o_sum += wts[i];
        ++o_n;
      }
    }
    if (t_n > 0) row.mean_target_weight = t_sum / static_cast<double>(t_n);
    if (o_n > 0) row.mean_distractor_weight = o_sum / static_cast<double>(o_n);
  }
  if (cfg_.diag_every > 0 && step % cfg_.diag_every == 0) {
    const AlignmentOptions opts{cfg_.diag_trials, cfg_.b_small, derived_seed(cfg_.seed, 2 + step)};
    const auto rep = sar_gar(eval_, theta, generic, d.specific, opts);
    row.sar = rep.sar;
    row.gar = rep.gar;
  }
  return row;
}

RunResult Loop::run(LoopPlan plan) {
  const TrainConfig& c = cfg_;
  const Dataset& generic = plan.generic ? *plan.generic : task_.data.generic;
  const Dataset& specific = task_.data.specific;
  if (generic.empty() || specific.empty()) throw ConfigError("training pools must be nonempty");
  Weighting& w = plan.weighting;

  RunResult r;
  r.arm = plan.arm;
  r.theta = std::move(plan.theta);
  r.momentum = std::move(plan.momentum);
  OuterState state;
  if (w.alpha) state.alpha = *w.alpha;
  const OuterConfig ocfg = c.outer();
  const std::string label = plan.arm + ":" + plan.phase;
  const std::size_t k_spec =
      plan.lambda > 0.0 ? static_cast<std::size_t>(std::ceil(plan.lambda * c.b_small)) : 0;
  const std::size_t n_gen = c.b_small - std::min(k_spec, c.b_small);
  const std::vector<double> uniform(c.b_small, 1.0 / static_cast<double>(c.b_small));
  main_.reset_counts();

  for (std::uint64_t t = plan.first_step; t <= plan.last_step; ++t) try {
    const auto gpos = sample(generic.size(), c.b_large, c.seed, Stream::kGenericBatch, t);
    const auto big = gather(generic.examples(), gpos);
    const auto spos = sample(specific.size(), c.b_small, c.seed, Stream::kSpecificBatch, t);
    const auto spec = gather(specific.examples(), spos);

    const ParamVector* alpha = w.alpha_at ? &w.alpha_at(t) : (w.scored ? &state.alpha : nullptr);
    std::vector<std::int64_t> ids;
    ids.reserve(big.size());
    for (const auto& e : big) ids.push_back(e.id);
    BatchWeights bw{std::move(ids), weights(w, alpha, r.theta, big, outer_)};

    std::vector<Example> filtered;
    filtered.reserve(c.b_small);
    if (n_gen > 0) {
      auto rng = stream_rng(c.seed, Stream::kFilter, t);
      for (std::size_t p : filter(bw, n_gen, c.filter_rule, rng)) filtered.push_back(big[p]);
    }
    filtered.insert(filtered.end(), spec.begin(), spec.begin() + static_cast<std::ptrdiff_t>(k_spec));

    std::vector<double> main_w = uniform;
    if (w.method == Method::kLtr) {
      auto ltr = ltr_batch_weights(outer_, r.theta, filtered, spec, ocfg.rho, ocfg.eta_alpha);
      if (ltr.fell_back) r.events.push_back("step=" + std::to_string(t) + " ltr_fallback_uniform");
      main_w = std::move(ltr.weights);
    }

    const ParamVector g = grad(main_, r.theta, filtered, main_w);
    ParamVector m = axpy(c.momentum, r.momentum, g);
    ParamVector next = axpy(-c.lr, m, r.theta);
    if (!next.all_finite())
      throw TrainingAborted("non-finite main-model parameters", t, r.theta,
                            w.scored ? std::optional<ParamVector>(state.alpha) : std::nullopt);
    r.theta = std::move(next);
    r.momentum = std::move(m);

    if (learns_alpha(w.method)) {
      const auto sub = sample(big.size(), c.b_small, c.seed, Stream::kOuterSubsample, t);
      const auto small = gather(big, sub);
      OuterReport rep;
      if (w.method == Method::kMwn) {
        rep = mwn_update(outer_, loss_net_, r.theta, ocfg, state, small, spec);
      } else {
        const OuterContext ctx{outer_, example_net_};
        const OuterInputs in = make_inputs(small, spec);
        switch (w.method) {
          case Method::kDds: rep = dds_update(ctx, r.theta, ocfg, state, in); break;
          case Method::kSoba: rep = soba_update(ctx, r.theta, ocfg, state, in); break;
          case Method::kAnograd: rep = anograd_update(ctx, r.theta, ocfg, state, in); break;
          default: break;
        }
      }
      for (auto& e : rep.events) r.events.push_back("step=" + std::to_string(t) + " " + e);
      if (!state.alpha.all_finite())
        throw TrainingAborted("non-finite weighting parameters", t, r.theta, state.alpha);
    }

    if (plan.record_trajectory && (t % c.snapshot_every == 0 || t == plan.last_step))
      r.trajectory.push(t, state.alpha);
    const bool diag = c.diag_every > 0 && t % c.diag_every == 0;
    if (t % c.eval_every == 0 || diag || t == plan.last_step) {
      const ParamVector* a = w.alpha_at ? &w.alpha_at(t) : (w.scored ? &state.alpha : nullptr);
      r.metrics.push_back(evaluate_row(label, t, r.theta, w, a, generic));
    }
    r.theta_trace.push_back(hash_params(r.theta));
  } catch (const TrainingAborted&) {
    throw;
  } catch (const NumericError& e) {
    // Non-finite losses or gradients mid-step; r.theta is still the last finite state.
    throw TrainingAborted(e.what(), t, r.theta,
                          w.scored ? std::optional<ParamVector>(state.alpha) : std::nullopt);
  }
  r.main_update_counts = main_.counts();
  r.last_step = plan.last_step;
  if (w.scored && !w.alpha_at) r.alpha = state.alpha;
  return r;
}

LoopPlan fresh_plan(const Loop& loop, const TrainConfig& cfg, std::string arm) {
  LoopPlan p;
  p.arm = std::move(arm);
  p.last_step = cfg.T;
  p.theta = loop.init_theta();
  p.momentum = ParamVector(p.theta.layout_ptr());
  return p;
}

// Top `fraction` of positions by score, ties to the lower position, returned in ascending order.
std::vector<std::size_t> keep_top(const std::vector<double>& score, double fraction) {
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(score.size())));
  if (n == 0) throw ConfigError("keep_fraction leaves an empty kept subset");
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  order.resize(n);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

void WeightTrajectory::push(std::uint64_t t, ParamVector alpha) {
  DSEL_REQUIRE(snapshots_.empty() || t > snapshots_.back().t,
               "trajectory steps must be strictly increasing");
  snapshots_.push_back(Snapshot{t, std::move(alpha)});
}

const ParamVector& WeightTrajectory::final_alpha() const {
  DSEL_REQUIRE(!snapshots_.empty(), "trajectory is empty");
  return snapshots_.back().alpha;
}

std::uint64_t hash_params(const ParamVector& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (double v : p.values()) {
    unsigned char b[sizeof(double)];
    std::memcpy(b, &v, sizeof v);
    for (unsigned char x : b) {
      h ^= x;
      h *= 1099511628211ull;
    }
  }
  return h;
}

Task build_task(const TrainConfig& cfg, const std::filesystem::path& base_dir) {
  cfg.validate();
  Task task;
  task.example_net.hidden = cfg.weight_hidden;
  task.example_net.embed_dim = cfg.weight_embed;
  task.example_net.clamp = cfg.score_clamp;
  task.loss_net.input = ScoreInput::kFeatures;
  task.loss_net.input_dim = 1;
  task.loss_net.include_target = false;
  task.loss_net.hidden = cfg.weight_hidden;
  task.loss_net.clamp = cfg.score_clamp;
  task.main_spec.hidden = cfg.hidden;

  switch (cfg.task) {
    case TaskKind::kQuadratic: {
      MixtureSpec s;
      s.input_dim = cfg.input_dim;
      s.proportions.assign(cfg.n_distractors,
                           (1.0 - cfg.target_fraction) / static_cast<double>(cfg.n_distractors));
      s.proportions.push_back(cfg.target_fraction);
      s.target = cfg.n_distractors;
      s.noise = cfg.noise;
      s.mean_scale = cfg.mean_scale;
      s.n_generic = cfg.n_generic;
      s.n_specific = cfg.n_specific;
      s.n_heldout_specific = cfg.n_heldout;
      s.n_heldout_generic = cfg.n_heldout;
      task.data = gen_quadratic_mixture(s, cfg.data_seed);
      task.main_spec.kind = ModelKind::kFeatureMlp;
      task.main_spec.input_dim = cfg.input_dim;
      task.main_spec.feature_loss = FeatureLoss::kMeanSquaredError;
      task.example_net.input = ScoreInput::kFeatures;
      task.example_net.input_dim = cfg.input_dim;
      break;
    }
    case TaskKind::kText: {
      const auto a_path = resolve(base_dir, cfg.corpus_a), b_path = resolve(base_dir, cfg.corpus_b);
      for (const auto& p : {a_path, b_path})
        if (!std::filesystem::exists(p)) throw ConfigError("corpus file not found: " + p.string());
      const auto a = read_bytes(a_path);
      const auto b = read_bytes(b_path);
      TextSizes sizes;
      sizes.n_generic = cfg.n_generic;
      sizes.n_specific = cfg.n_specific;
      sizes.n_heldout_specific = cfg.n_heldout;
      sizes.n_heldout_generic = cfg.n_heldout;
      sizes.window = cfg.window;
      task.data = gen_text_mixture(a, b, cfg.text_mix, sizes, cfg.data_seed);
      task.main_spec.kind = ModelKind::kByteWindowLm;
      task.main_spec.context = cfg.window;
      task.main_spec.embed_dim = cfg.embed_dim;
      task.example_net.input = ScoreInput::kBytes;
      break;
    }
    case TaskKind::kCsv: {
      auto load = [&](const std::string& p, Role role) {
        const auto path = resolve(base_dir, p);
        if (!std::filesystem::exists(path)) throw ConfigError("csv file not found: " + path.string());
        return load_feature_csv(path, role);
      };
      Dataset gen = load(cfg.csv_generic, Role::kGeneric);
      Dataset spec = load(cfg.csv_specific, Role::kSpecific);
      if (cfg.csv_heldout_specific.empty()) {
        std::tie(task.data.specific, task.data.heldout_specific) =
            tail_split(spec, Role::kHeldoutSpecific);
      } else {
        task.data.specific = std::move(spec);
        task.data.heldout_specific = load(cfg.csv_heldout_specific, Role::kHeldoutSpecific);
      }
      if (cfg.csv_heldout_generic.empty()) {
        std::tie(task.data.generic, task.data.heldout_generic) =
            tail_split(gen, Role::kHeldoutGeneric);
      } else {
        task.data.generic = std::move(gen);
        task.data.heldout_generic = load(cfg.csv_heldout_generic, Role::kHeldoutGeneric);
      }
      const auto* f0 = task.data.generic[0].features();
      if (!f0) throw ConfigError("csv data must hold feature records");
      task.main_spec.kind = ModelKind::kFeatureMlp;
      task.main_spec.input_dim = f0->x.size();
      task.main_spec.feature_loss = cfg.feature_loss;
      if (cfg.feature_loss == FeatureLoss::kCrossEntropy) {
        double max_y = 0.0;
        for (const Dataset* d : {&task.data.generic, &task.data.specific, &task.data.heldout_specific,
                                 &task.data.heldout_generic})
          for (const auto& e : d->examples()) max_y = std::max(max_y, e.features()->y);
        task.main_spec.num_classes = static_cast<std::size_t>(max_y) + 1;
      }
      task.example_net.input = ScoreInput::kFeatures;
      task.example_net.input_dim = f0->x.size();
      break;
    }
  }
  if (task.data.specific.size() == 0) throw ConfigError("specific set is empty");
  return task;
}

const WeightingNetSpec& scorer_spec(const Task& task, Method method) {
  return method == Method::kMwn ? task.loss_net : task.example_net;
}

double heldout_specific_loss(const Task& task, const ParamVector& theta) {
  const MainModel m(task.main_spec);
  return evaluate(m, theta, task.data.heldout_specific.examples());
}

RunResult pretrain_bilevel(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.method == Method::kNone)
    throw ConfigError("pretrain_bilevel needs method dds, soba, anograd, ltr or mwn");
  Loop loop(task, cfg);
  LoopPlan p = fresh_plan(loop, cfg, method_name(cfg.method));
  p.weighting.method = cfg.method;
  if (cfg.method != Method::kLtr) {
    p.weighting.scored = true;
    p.weighting.loss_inputs = cfg.method == Method::kMwn;
    p.weighting.alpha = loop.init_alpha(p.weighting.loss_inputs);
    p.record_trajectory = true;
  }
  return loop.run(std::move(p));
}

RunResult pretrain_uniform(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  Loop loop(task, cfg);
  return loop.run(fresh_plan(loop, cfg, "uniform"));
}

RunResult mixing(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  Loop loop(task, cfg);
  LoopPlan p = fresh_plan(loop, cfg, "mixing");
  p.lambda = cfg.lambda;
  return loop.run(std::move(p));
}

std::vector<std::pair<double, RunResult>> mixing_sweep(const Task& task, const TrainConfig& cfg,
                                                       std::span<const double> grid) {
  std::vector<std::pair<double, RunResult>> out;
  for (double lambda : grid) {
    TrainConfig c = cfg;
    c.lambda = lambda;
    RunResult r = mixing(task, c);
    r.arm = "mixing_" + format_real(lambda);
    for (auto& row : r.metrics) row.phase = r.arm + ":pretrain";
    out.emplace_back(lambda, std::move(r));
  }
  return out;
}

RunResult finetune(const Task& task, const TrainConfig& cfg, const ParamVector& theta,
                   const std::string& arm, std::uint64_t step_offset) {
  const Dataset& spec = task.data.specific;
  if (spec.empty()) throw ConfigError("fine-tuning needs a nonempty specific set");
  const MainModel model(task.main_spec), eval(task.main_spec);
  RunResult r;
  r.arm = arm;
  r.theta = theta;
  r.momentum = ParamVector(theta.layout_ptr());
  ParamVector best = theta;
  double best_loss = evaluate(eval, theta, task.data.heldout_specific.examples());
  double prev_loss = best_loss;
  std::size_t rises = 0;
  const std::string label = arm + ":finetune";
  for (std::uint64_t s = 1; s <= cfg.finetune_steps; ++s) {
    ParamVector g;
    const auto pos = sample(spec.size(), cfg.b_small, cfg.seed, Stream::kSpecificBatch,
                            kFinetuneCounterBase + step_offset + s);
    const auto batch = gather(spec.examples(), pos);
    try {
      g = grad(model, r.theta, batch);
    } catch (const NumericError& e) {
      throw TrainingAborted(e.what(), step_offset + s, r.theta, std::nullopt);
    }
    ParamVector m = axpy(cfg.momentum, r.momentum, g);
    ParamVector next = axpy(-cfg.finetune_lr, m, r.theta);
    if (!next.all_finite())
      throw TrainingAborted("non-finite parameters during fine-tuning", step_offset + s, r.theta,
                            std::nullopt);
    r.theta = std::move(next);
    r.momentum = std::move(m);
    r.theta_trace.push_back(hash_params(r.theta));
    if (s % cfg.finetune_eval_every != 0 && s != cfg.finetune_steps) continue;
    const double loss = evaluate(eval, r.theta, task.data.heldout_specific.examples());
    MetricsRow row;
    row.step = step_offset + s;
    row.phase = label;
    row.heldout_specific_loss = loss;
    row.heldout_generic_loss = evaluate(eval, r.theta, task.data.heldout_generic.examples());
    r.metrics.push_back(row);
    if (loss < best_loss) {
      best_loss = loss;
      best = r.theta;
    }
    rises = loss > prev_loss ? rises + 1 : 0;
    prev_loss = loss;
    if (rises >= cfg.patience) {
      r.events.push_back("step=" + std::to_string(step_offset + s) + " early_stop");
      break;
    }
  }
  r.theta = std::move(best);
  r.last_step = r.metrics.empty() ? step_offset : r.metrics.back().step;
  return r;
}

RunResult cds_pipeline(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  const std::uint64_t t1 = cfg.cds_pretrain_steps > 0 ? cfg.cds_pretrain_steps : cfg.T / 2;
  if (t1 == 0 || t1 > cfg.T) throw ConfigError("cds pretraining length must lie in [1, T]");
  if (cfg.finetune_steps == 0) throw ConfigError("cds needs finetune_steps > 0");
  Loop loop(task, cfg);
  LoopPlan p1 = fresh_plan(loop, cfg, "cds");
  p1.last_step = t1;
  RunResult pre = loop.run(std::move(p1));

  const RunResult ft = finetune(task, cfg, pre.theta, "cds_scoring");
  const MainModel model(task.main_spec);
  const auto before = per_example_losses(model, pre.theta, task.data.generic.examples());
  const auto after = per_example_losses(model, ft.theta, task.data.generic.examples());
  std::vector<double> gain(before.size());
  for (std::size_t i = 0; i < gain.size(); ++i) gain[i] = before[i] - after[i];
  std::vector<std::size_t> kept = keep_top(gain, cfg.keep_fraction);
  const Dataset subset = task.data.generic.subset(kept);

  LoopPlan p2;
  p2.arm = "cds";
  p2.generic = &subset;
  p2.first_step = t1 + 1;
  p2.last_step = cfg.T;
  p2.theta = pre.theta;
  p2.momentum = pre.momentum;
  RunResult r = loop.run(std::move(p2));

  r.metrics.insert(r.metrics.begin(), pre.metrics.begin(), pre.metrics.end());
  r.theta_trace.insert(r.theta_trace.begin(), pre.theta_trace.begin(), pre.theta_trace.end());
  r.events.insert(r.events.begin(), pre.events.begin(), pre.events.end());
  r.main_update_counts.forward += pre.main_update_counts.forward;
  r.main_update_counts.backward += pre.main_update_counts.backward;
  if (r.last_step < t1) r.last_step = t1;
  if (t1 == cfg.T) {
    r.theta = pre.theta;
    r.momentum = pre.momentum;
  }
  r.kept = std::move(kept);
  return r;
}

RunResult classifier_pipeline(const Task& task, const TrainConfig& cfg) {
  cfg.validate();
  const Dataset& gen = task.data.generic;
  const Dataset& spec = task.data.specific;
  const std::size_t half = std::max<std::size_t>(1, cfg.b_small / 2);
  const DomainClassifier clf(task.example_net);
  ParamVector alpha = clf.init(derived_seed(cfg.seed, 3));
  std::vector<double> labels(2 * half, 0.0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(half), labels.end(), 1.0);
  for (std::uint64_t s = 1; s <= cfg.classifier_steps; ++s) {
    auto batch = gather(gen.examples(), sample(gen.size(), half, cfg.seed, Stream::kClassifier, 2 * s));
    const auto sb = gather(spec.examples(), sample(spec.size(), half, cfg.seed, Stream::kClassifier, 2 * s + 1));
    batch.insert(batch.end(), sb.begin(), sb.end());
    const auto vg = clf.bce(alpha, batch, labels);
    axpy_inplace(-cfg.classifier_lr, vg.grad, alpha);
    if (!alpha.all_finite()) throw TrainingAborted("non-finite classifier parameters", s, alpha, std::nullopt);
  }
  // Balanced held-out accuracy at threshold 1/2.
  const auto pg = clf.prob_specific(alpha, task.data.heldout_generic.examples());
  const auto ps = clf.prob_specific(alpha, task.data.heldout_specific.examples());
  const double acc_g = static_cast<double>(std::count_if(pg.begin(), pg.end(), [](double p) { return p < 0.5; })) /
                       static_cast<double>(pg.size());
  const double acc_s = static_cast<double>(std::count_if(ps.begin(), ps.end(), [](double p) { return p > 0.5; })) /
                       static_cast<double>(ps.size());
  const double accuracy = 0.5 * (acc_g + acc_s);
  if (accuracy < cfg.classifier_min_accuracy)
    throw ConfigError("classifier held-out accuracy " + format_real(accuracy) +
                      " is below classifier_min_accuracy " + format_real(cfg.classifier_min_accuracy));

  const auto p = clf.prob_specific(alpha, gen.examples());
  std::vector<std::size_t> kept = keep_top(p, cfg.keep_fraction);
  const Dataset subset = gen.subset(kept);
  Loop loop(task, cfg);
  LoopPlan plan = fresh_plan(loop, cfg, "classifier");
  plan.generic = &subset;
  RunResult r = loop.run(std::move(plan));
  r.kept = std::move(kept);
  r.classifier_accuracy = accuracy;
  return r;
}

RunResult curriculum_ablation(const Task& task, const TrainConfig& cfg,
                              const WeightTrajectory& trajectory, const std::string& mode) {
  cfg.validate();
  if (trajectory.empty()) throw ConfigError("curriculum ablation needs a nonempty trajectory");
  if (mode != "final" && mode != "shuffled")
    throw ConfigError("curriculum mode must be final or shuffled");
  const bool loss_inputs = cfg.method == Method::kMwn;
  const auto& snaps = trajectory.snapshots();
  const WeightingNet net(scorer_spec(task, cfg.method));
  for (const auto& s : snaps)
    if (!(s.alpha.layout() == net.layout()))
      throw ConfigError("trajectory does not match the weighting-net architecture");

  std::vector<std::size_t> order(snaps.size());
  std::iota(order.begin(), order.end(), 0);
  if (mode == "shuffled") {
    auto rng = stream_rng(cfg.seed, Stream::kPermutation, 0);
    std::shuffle(order.begin(), order.end(), rng);
  }
  Loop loop(task, cfg);
  LoopPlan p = fresh_plan(loop, cfg, "curriculum_" + mode);
  p.weighting.scored = true;
  p.weighting.loss_inputs = loss_inputs;
  if (mode == "final") {
    p.weighting.alpha_at = [&](std::uint64_t) -> const ParamVector& { return snaps.back().alpha; };
  } else {
    p.weighting.alpha_at = [&](std::uint64_t t) -> const ParamVector& {
      // The snapshot whose recording period contains t.
      auto it = std::lower_bound(snaps.begin(), snaps.end(), t,
                                 [](const Snapshot& s, std::uint64_t v) { return s.t < v; });
      const std::size_t k = it == snaps.end() ? snaps.size() - 1
                                              : static_cast<std::size_t>(it - snaps.begin());
      return snaps[order[k]].alpha;
    };
  }
  return loop.run(std::move(p));
}

RunResult transfer_weights(const Task& large, const TrainConfig& large_cfg,
                           const WeightTrajectory& trajectory,
                           const WeightingNetSpec& trajectory_spec) {
  large_cfg.validate();
  if (trajectory.empty()) throw ConfigError("transfer needs a nonempty trajectory");
  const bool loss_inputs = large_cfg.method == Method::kMwn;
  const WeightingNetSpec& target = loss_inputs ? large.loss_net : large.example_net;
  if (!(trajectory_spec == target))
    throw ConfigError("weighting-net input spec differs between the two scales");
  const ParamVector& alpha = trajectory.final_alpha();
  if (!(alpha.layout() == WeightingNet(target).layout()))
    throw ConfigError("trajectory does not match the weighting-net architecture");
  Loop loop(large, large_cfg);
  LoopPlan p = fresh_plan(loop, large_cfg, "transfer");
  p.weighting.scored = true;
  p.weighting.loss_inputs = loss_inputs;
  p.weighting.alpha_at = [&](std::uint64_t) -> const ParamVector& { return alpha; };
  return loop.run(std::move(p));
}

}  // namespace dsel
