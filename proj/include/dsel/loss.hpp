#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dsel/example.hpp"
#include "dsel/numcore.hpp"
#include "dsel/tape.hpp"

namespace dsel {

template <class S>
using ParamNodes = std::vector<typename Tape<S>::Var>;

// One tape leaf per layout segment, in layout order.
template <class S>
ParamNodes<S> bind_params(Tape<S>& tape, const Layout& layout, std::span<const S> values) {
  ParamNodes<S> nodes;
  nodes.reserve(layout.segments().size());
  for (const Segment& s : layout.segments()) {
    std::vector<S> v(values.begin() + s.offset, values.begin() + s.offset + s.size());
    nodes.push_back(tape.input(std::move(v), s.rows, s.cols));
  }
  return nodes;
}

// Number of examples pushed through forward-only and forward+backward passes.
struct EvalCounts {
  std::uint64_t forward = 0;
  std::uint64_t backward = 0;
};

// Mapping (params, batch) -> per-example losses, differentiable to second order.
class DifferentiableLoss {
 public:
  virtual ~DifferentiableLoss() = default;

  virtual const Layout& layout() const = 0;
  virtual std::shared_ptr<const Layout> layout_ptr() const = 0;

  // Appends the per-example losses ([n x 1]) for `batch` to the tape.
  virtual Tape<double>::Var per_example(Tape<double>& tape, const ParamNodes<double>& params,
                                        Batch batch) const = 0;
  virtual Tape<Dual>::Var per_example(Tape<Dual>& tape, const ParamNodes<Dual>& params,
                                      Batch batch) const = 0;

  EvalCounts counts() const { return {forward_.load(), backward_.load()}; }
  void reset_counts() const {
    forward_ = 0;
    backward_ = 0;
  }
  void count_forward(std::size_t n) const { forward_ += n; }
  void count_backward(std::size_t n) const { backward_ += n; }

 private:
  mutable std::atomic<std::uint64_t> forward_{0};
  mutable std::atomic<std::uint64_t> backward_{0};
};

// Forwards both virtual overloads to `Derived::build<S>`.
template <class Derived>
class LossAdapter : public DifferentiableLoss {
 public:
  Tape<double>::Var per_example(Tape<double>& tape, const ParamNodes<double>& params,
                                Batch batch) const override {
    return static_cast<const Derived*>(this)->template build<double>(tape, params, batch);
  }
  Tape<Dual>::Var per_example(Tape<Dual>& tape, const ParamNodes<Dual>& params,
                              Batch batch) const override {
    return static_cast<const Derived*>(this)->template build<Dual>(tape, params, batch);
  }
};

struct ValueAndGrad {
  double value = 0.0;
  ParamVector grad;
};

std::vector<double> per_example_losses(const DifferentiableLoss& loss, const ParamVector& params,
                                       Batch batch);

// Weighted sum of per-example losses; empty weights mean the batch mean.
double evaluate(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                std::span<const double> weights = {});

ValueAndGrad value_and_grad(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                            std::span<const double> weights = {});

ParamVector grad(const DifferentiableLoss& loss, const ParamVector& params, Batch batch,
                 std::span<const double> weights = {});

// Hessian of the (weighted) batch loss applied to v, via forward-over-reverse.
ParamVector hvp(const DifferentiableLoss& loss, const ParamVector& params, const ParamVector& v,
                Batch batch, std::span<const double> weights = {});

// Gradient of each example's own loss.
std::vector<ParamVector> per_example_grads(const DifferentiableLoss& loss,
                                           const ParamVector& params, Batch batch);

// Central differences, coordinate by coordinate. Test oracle only.
ParamVector finite_diff_grad(const DifferentiableLoss& loss, const ParamVector& params,
                             Batch batch, double h);

}  // namespace dsel
