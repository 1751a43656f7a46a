#include <cmath>

#include "dsel/loss.hpp"

namespace dsel {
namespace {

std::vector<double> resolve_weights(std::size_t n, std::span<const double> weights) {
  if (weights.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  DSEL_REQUIRE(weights.size() == n, "weight count does not match batch size");
  return std::vector<double>(weights.begin(), weights.end());
}

void check_inputs(const DifferentiableLoss& loss, const ParamVector& params, Batch batch) {
  DSEL_REQUIRE(!batch.empty(), "batch must be nonempty");
  DSEL_REQUIRE(params.layout() == loss.layout(), "parameter layout does not match loss");
  if (!params.all_finite()) throw NumericError("non-finite parameter value");
}

template <class S>
void check_losses(const std::vector<S>& losses) {
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (!std::isfinite(primal(losses[i]))) throw NumericError("non-finite loss", static_cast<std::ptrdiff_t>(i));
  }
}

}  // namespace

std::vector<double> per_example_losses(const DifferentiableLoss& loss, const ParamVector& params,
                                       Batch batch) {
  check_inputs(loss, params, batch);
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, loss.layout(), params.values());
  auto out = loss.per_example(tape, nodes, batch);
  loss.count_forward(batch.size());
  check_losses(tape.value(out));
  return tape.value(out);
}

double evaluate(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                std::span<const double> weights) {
  check_inputs(loss, params, batch);
  const auto w = resolve_weights(batch.size(), weights);
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, loss.layout(), params.values());
  auto per = loss.per_example(tape, nodes, batch);
  loss.count_forward(batch.size());
  check_losses(tape.value(per));
  return tape.value(tape.weighted_sum(per, w))[0];
}

ValueAndGrad value_and_grad(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                            std::span<const double> weights) {
  check_inputs(loss, params, batch);
  const auto w = resolve_weights(batch.size(), weights);
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, loss.layout(), params.values());
  auto per = loss.per_example(tape, nodes, batch);
  loss.count_backward(batch.size());
  check_losses(tape.value(per));
  auto total = tape.weighted_sum(per, w);
  tape.backward(total);

  ValueAndGrad out{tape.value(total)[0], ParamVector(params.layout_ptr())};
  const auto& segs = loss.layout().segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const auto& g = tape.grad(nodes[s]);
    std::copy(g.begin(), g.end(), out.grad.values().begin() + segs[s].offset);
  }
  return out;
}

ParamVector grad(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                 std::span<const double> weights) {
  return value_and_grad(loss, params, batch, weights).grad;
}

ParamVector hvp(const DifferentiableLoss& loss, const ParamVector& params, const ParamVector& v,
                Batch batch, std::span<const double> weights) {
  check_inputs(loss, params, batch);
  require_same_layout(params, v);
  const auto w = resolve_weights(batch.size(), weights);

  std::vector<Dual> seeded(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) seeded[i] = Dual(params[i], v[i]);

  Tape<Dual> tape;
  auto nodes = bind_params<Dual>(tape, loss.layout(), seeded);
  auto per = loss.per_example(tape, nodes, batch);
  loss.count_backward(batch.size());
  check_losses(tape.value(per));
  auto total = tape.weighted_sum(per, w);
  tape.backward(total);

  ParamVector out(params.layout_ptr());
  const auto& segs = loss.layout().segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const auto& g = tape.grad(nodes[s]);
    for (std::size_t i = 0; i < g.size(); ++i) out[segs[s].offset + i] = g[i].d;
  }
  return out;
}

std::vector<ParamVector> per_example_grads(const DifferentiableLoss& loss,
                                           const ParamVector& params, Batch batch) {
  std::vector<ParamVector> out;
  out.reserve(batch.size());
  const double one = 1.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      out.push_back(grad(loss, params, batch.subspan(i, 1), std::span<const double>(&one, 1)));
    } catch (const NumericError& e) {
      throw NumericError("non-finite loss", static_cast<std::ptrdiff_t>(i));
    }
  }
  return out;
}

ParamVector finite_diff_grad(const DifferentiableLoss& loss, const ParamVector& params,
                             Batch batch, double h) {
  DSEL_REQUIRE(h > 0.0, "finite-difference step must be positive");
  ParamVector out(params.layout_ptr());
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double x = params[i];
    probe[i] = x + h;
    const double up = evaluate(loss, probe, batch);
    probe[i] = x - h;
    const double down = evaluate(loss, probe, batch);
    probe[i] = x;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

}  // namespace dsel
