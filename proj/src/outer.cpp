#include "dsel/outer.hpp"

#include <cmath>

#include "dsel/selection.hpp"

namespace dsel {

Method parse_method(std::string_view name) {
  if (name == "none") return Method::kNone;
  if (name == "dds") return Method::kDds;
  if (name == "soba") return Method::kSoba;
  if (name == "anograd") return Method::kAnograd;
  if (name == "ltr") return Method::kLtr;
  if (name == "mwn") return Method::kMwn;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected dds | soba | anograd | ltr | mwn | none)");
}

const char* method_name(Method method) {
  switch (method) {
    case Method::kNone: return "none";
    case Method::kDds: return "dds";
    case Method::kSoba: return "soba";
    case Method::kAnograd: return "anograd";
    case Method::kLtr: return "ltr";
    case Method::kMwn: return "mwn";
  }
  return "unknown";
}

namespace {

void check_inputs(const OuterInputs& in) {
  DSEL_REQUIRE(!in.generic.empty() && !in.specific.empty(), "outer batches must be nonempty");
  DSEL_REQUIRE(in.score_inputs.size() == in.generic.size(), "score inputs must align with generic batch");
}

std::vector<double> batch_weights(const OuterContext& ctx, const ParamVector& alpha,
                                  const OuterInputs& in) {
  return normalize(ctx.scorer.scores(alpha, in.score_inputs));
}

// grad_alpha of sum_i c_i w_i(alpha), w = softmax(scores)
ParamVector weights_vjp(const OuterContext& ctx, const ParamVector& alpha, const OuterInputs& in,
                        std::span<const double> weights, std::span<const double> cot) {
  const auto ds = softmax_vjp(weights, cot);
  return ctx.scorer.scores_vjp(alpha, in.score_inputs, ds);
}

ParamVector weighted_sum(const std::vector<ParamVector>& grads, std::span<const double> w) {
  ParamVector out(grads.front().layout_ptr());
  for (std::size_t i = 0; i < grads.size(); ++i) axpy_inplace(w[i], grads[i], out);
  return out;
}

void descend(ParamVector& alpha, double eta, const ParamVector& direction) {
  axpy_inplace(-eta, direction, alpha);
  if (!alpha.all_finite()) throw NumericError("non-finite weighting parameters after outer update");
}

}  // namespace

// ---------------------------------------------------------------------------
// DDS

double dds_objective(const OuterContext& ctx, const ParamVector& theta, const ParamVector& alpha,
                     double rho, const OuterInputs& in) {
  check_inputs(in);
  const auto w = batch_weights(ctx, alpha, in);
  const auto g = per_example_grads(ctx.main, theta, in.generic);
  const ParamVector u = axpy(-rho, weighted_sum(g, w), theta);
  return evaluate(ctx.main, u, in.specific);
}

ParamVector dds_alpha_grad(const OuterContext& ctx, const ParamVector& theta,
                           const ParamVector& alpha, double rho, const OuterInputs& in) {
  check_inputs(in);
  const auto w = batch_weights(ctx, alpha, in);
  const auto g = per_example_grads(ctx.main, theta, in.generic);
  const ParamVector u = axpy(-rho, weighted_sum(g, w), theta);
  const ParamVector spec_at_u = grad(ctx.main, u, in.specific);
  // dL/dw_i = -rho <grad L_spec(u), g_i>; g_i does not depend on alpha.
  std::vector<double> cot(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) cot[i] = -rho * dot(spec_at_u, g[i]);
  return weights_vjp(ctx, alpha, in, w, cot);
}

OuterReport dds_update(const OuterContext& ctx, const ParamVector& theta, const OuterConfig& cfg,
                       OuterState& state, const OuterInputs& in) {
  const ParamVector step = dds_alpha_grad(ctx, theta, state.alpha, cfg.rho, in);
  descend(state.alpha, cfg.eta_alpha, step);
  ++state.steps;
  return {};
}

// ---------------------------------------------------------------------------
// SOBA

ParamVector soba_v_direction(const OuterContext& ctx, const ParamVector& theta,
                             const ParamVector& alpha, const ParamVector& v,
                             const OuterInputs& in) {
  check_inputs(in);
  const auto w = batch_weights(ctx, alpha, in);
  ParamVector dv = hvp(ctx.main, theta, v, in.generic, w);
  axpy_inplace(1.0, grad(ctx.main, theta, in.specific), dv);
  return dv;
}

ParamVector soba_alpha_direction(const OuterContext& ctx, const ParamVector& theta,
                                 const ParamVector& alpha, const ParamVector& v,
                                 const OuterInputs& in) {
  check_inputs(in);
  const auto w = batch_weights(ctx, alpha, in);
  const auto g = per_example_grads(ctx.main, theta, in.generic);
  std::vector<double> cot(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) cot[i] = dot(g[i], v);
  return weights_vjp(ctx, alpha, in, w, cot);
}

OuterReport soba_update(const OuterContext& ctx, const ParamVector& theta, const OuterConfig& cfg,
                        OuterState& state, const OuterInputs& in) {
  OuterReport report;
  if (!state.v) state.v = ParamVector(theta.layout_ptr());
  ParamVector& v = *state.v;
  const ParamVector dv = soba_v_direction(ctx, theta, state.alpha, v, in);
  axpy_inplace(-cfg.eta_v, dv, v);
  if (!v.all_finite()) throw NumericError("non-finite SOBA auxiliary variable");
  const double n = norm(v);
  if (n > cfg.v_clip) {
    for (double& x : v.values()) x *= cfg.v_clip / n;
    report.events.push_back("soba_v_clipped norm=" + std::to_string(n));
  }
  const ParamVector da = soba_alpha_direction(ctx, theta, state.alpha, v, in);
  descend(state.alpha, cfg.eta_alpha, da);
  ++state.steps;
  return report;
}

// ---------------------------------------------------------------------------
// Anograd

namespace {

struct AnogradParts {
  std::vector<double> weights;
  std::vector<ParamVector> per_example;
  ParamVector generic;
  ParamVector specific;
  double generic_norm = 0.0;
  double specific_norm = 0.0;
};

std::optional<AnogradParts> anograd_parts(const OuterContext& ctx, const ParamVector& theta,
                                          const ParamVector& alpha, const OuterInputs& in) {
  check_inputs(in);
  AnogradParts p;
  p.weights = batch_weights(ctx, alpha, in);
  p.per_example = per_example_grads(ctx.main, theta, in.generic);
  p.generic = weighted_sum(p.per_example, p.weights);
  p.specific = grad(ctx.main, theta, in.specific);
  p.generic_norm = norm(p.generic);
  p.specific_norm = norm(p.specific);
  if (p.generic_norm < 1e-12 || p.specific_norm < 1e-12) return std::nullopt;
  return p;
}

}  // namespace

std::optional<double> anograd_objective(const OuterContext& ctx, const ParamVector& theta,
                                        const ParamVector& alpha, const OuterInputs& in) {
  auto p = anograd_parts(ctx, theta, alpha, in);
  if (!p) return std::nullopt;
  // The main model moves along -G, so that is the direction aligned with s.
  return -dot(p->generic, p->specific) / (p->generic_norm * p->specific_norm);
}

std::optional<ParamVector> anograd_alpha_grad(const OuterContext& ctx, const ParamVector& theta,
                                              const ParamVector& alpha, const OuterInputs& in) {
  auto p = anograd_parts(ctx, theta, alpha, in);
  if (!p) return std::nullopt;
  const double gn = p->generic_norm, sn = p->specific_norm;
  const double cosine = dot(p->generic, p->specific) / (gn * sn);
  // d cos / d G = s / (|G||s|) - cos * G / |G|^2
  ParamVector dcos = scale(1.0 / (gn * sn), p->specific);
  axpy_inplace(-cosine / (gn * gn), p->generic, dcos);
  std::vector<double> cot(p->per_example.size());
  for (std::size_t i = 0; i < cot.size(); ++i) cot[i] = -dot(p->per_example[i], dcos);
  return weights_vjp(ctx, alpha, in, p->weights, cot);
}

OuterReport anograd_update(const OuterContext& ctx, const ParamVector& theta,
                           const OuterConfig& cfg, OuterState& state, const OuterInputs& in) {
  OuterReport report;
  auto step = anograd_alpha_grad(ctx, theta, state.alpha, in);
  if (!step) {
    report.events.push_back("anograd_degenerate_batch");
    return report;
  }
  descend(state.alpha, cfg.eta_alpha, *step);
  ++state.steps;
  return report;
}

// ---------------------------------------------------------------------------
// LTR

LtrWeights ltr_batch_weights(const DifferentiableLoss& main, const ParamVector& theta,
                             Batch generic, Batch specific, double rho, double step) {
  DSEL_REQUIRE(!generic.empty() && !specific.empty(), "LTR batches must be nonempty");
  const std::size_t b = generic.size();
  const double uniform = 1.0 / static_cast<double>(b);
  LtrWeights out{std::vector<double>(b, uniform), false};
  if (step == 0.0) return out;

  const auto g = per_example_grads(main, theta, generic);
  const ParamVector u = axpy(-rho, weighted_sum(g, out.weights), theta);
  const ParamVector spec_at_u = grad(main, u, specific);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double d_loss_d_w = -rho * dot(spec_at_u, g[i]);
    out.weights[i] = std::max(0.0, uniform - step * d_loss_d_w);
    total += out.weights[i];
  }
  if (!(total > 0.0)) {
    out.weights.assign(b, uniform);
    out.fell_back = true;
    return out;
  }
  for (double& w : out.weights) w /= total;
  return out;
}

// ---------------------------------------------------------------------------
// MetaWeightNet

std::vector<Example> mwn_inputs(const DifferentiableLoss& main, const ParamVector& theta,
                                Batch batch) {
  const auto losses = per_example_losses(main, theta, batch);
  std::vector<Example> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.push_back(Example{batch[i].id, FeaturePayload{{losses[i]}, 0.0}});
  }
  return out;
}

double mwn_score(const WeightingNet& net, double loss, const ParamVector& alpha) {
  DSEL_REQUIRE(std::isfinite(loss), "MetaWeightNet needs a finite loss");
  const Example ex{0, FeaturePayload{{loss}, 0.0}};
  return net.score(alpha, ex);
}

OuterReport mwn_update(const DifferentiableLoss& main, const WeightingNet& net,
                       const ParamVector& theta, const OuterConfig& cfg, OuterState& state,
                       Batch generic, Batch specific) {
  const auto inputs = mwn_inputs(main, theta, generic);
  const OuterContext ctx{main, net};
  return dds_update(ctx, theta, cfg, state, OuterInputs{generic, specific, inputs});
}

}  // namespace dsel
