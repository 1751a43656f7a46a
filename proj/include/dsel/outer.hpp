#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsel/loss.hpp"
#include "dsel/models.hpp"
#include "dsel/numcore.hpp"

namespace dsel {

enum class Method { kNone, kDds, kSoba, kAnograd, kLtr, kMwn };

Method parse_method(std::string_view name);
const char* method_name(Method method);

struct OuterConfig {
  double rho = 0.01;       // step size of the simulated inner update (DDS, LTR, MWN)
  double eta_alpha = 0.1;  // weighting-model step size
  double eta_v = 0.01;     // SOBA auxiliary step size
  double v_clip = 100.0;   // SOBA: ||v|| is projected back onto this ball
};

struct OuterState {
  ParamVector alpha;
  std::optional<ParamVector> v;  // present iff the method is SOBA
  std::uint64_t steps = 0;
};

// Main model plus the scorer producing w(x; alpha).
struct OuterContext {
  const DifferentiableLoss& main;
  const Scorer& scorer;
};

// `score_inputs` are the examples fed to the scorer for the generic batch;
// they equal `generic` except for MetaWeightNet, which scores loss values.
struct OuterInputs {
  Batch generic;
  Batch specific;
  Batch score_inputs;
};

inline OuterInputs make_inputs(Batch generic, Batch specific) {
  return OuterInputs{generic, specific, generic};
}

struct OuterReport {
  double objective = 0.0;
  std::vector<std::string> events;
};

// --- DDS: descent on L(alpha) = specific loss at u = theta - rho * sum_i w_i grad l_i(theta).
double dds_objective(const OuterContext& ctx, const ParamVector& theta, const ParamVector& alpha,
                     double rho, const OuterInputs& in);
ParamVector dds_alpha_grad(const OuterContext& ctx, const ParamVector& theta,
                           const ParamVector& alpha, double rho, const OuterInputs& in);
OuterReport dds_update(const OuterContext& ctx, const ParamVector& theta, const OuterConfig& cfg,
                       OuterState& state, const OuterInputs& in);

// --- SOBA
// dv = sum_i w_i H_i v + grad L_specific(theta)
ParamVector soba_v_direction(const OuterContext& ctx, const ParamVector& theta,
                             const ParamVector& alpha, const ParamVector& v, const OuterInputs& in);
// dalpha = sum_i <grad l_i(theta), v> grad_alpha w_i
ParamVector soba_alpha_direction(const OuterContext& ctx, const ParamVector& theta,
                                 const ParamVector& alpha, const ParamVector& v,
                                 const OuterInputs& in);
OuterReport soba_update(const OuterContext& ctx, const ParamVector& theta, const OuterConfig& cfg,
                        OuterState& state, const OuterInputs& in);

// --- Anograd: descent on cosine(-G, S), where G is the weighted generic gradient
// (so -G is the main-model step direction) and S the specific gradient.
// Returns nullopt when either gradient norm is below 1e-12.
std::optional<double> anograd_objective(const OuterContext& ctx, const ParamVector& theta,
                                        const ParamVector& alpha, const OuterInputs& in);
std::optional<ParamVector> anograd_alpha_grad(const OuterContext& ctx, const ParamVector& theta,
                                              const ParamVector& alpha, const OuterInputs& in);
OuterReport anograd_update(const OuterContext& ctx, const ParamVector& theta,
                           const OuterConfig& cfg, OuterState& state, const OuterInputs& in);

// --- Learning to re-weight: one step on free per-example weights from uniform.
struct LtrWeights {
  std::vector<double> weights;
  bool fell_back = false;  // every weight clamped to zero; uniform returned
};
LtrWeights ltr_batch_weights(const DifferentiableLoss& main, const ParamVector& theta,
                             Batch generic, Batch specific, double rho, double step);

// --- MetaWeightNet: the scorer sees only each example's current loss.
std::vector<Example> mwn_inputs(const DifferentiableLoss& main, const ParamVector& theta,
                                Batch batch);
double mwn_score(const WeightingNet& net, double loss, const ParamVector& alpha);
OuterReport mwn_update(const DifferentiableLoss& main, const WeightingNet& net,
                       const ParamVector& theta, const OuterConfig& cfg, OuterState& state,
                       Batch generic, Batch specific);

}  // namespace dsel
