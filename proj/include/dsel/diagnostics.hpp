#pragma once

#include <cstdint>

#include "dsel/data.hpp"
#include "dsel/loss.hpp"

namespace dsel {

// Raised when a batch gradient is too small to normalize.
class DegenerateBatch : public NumericError {
 public:
  using NumericError::NumericError;
};

// <g_x, g_B / |g_B|>. Throws DegenerateBatch if |g_B| < 1e-12.
double alignment(const ParamVector& example_grad, const ParamVector& batch_grad);

// a_norm(x, B) with g_B the mean gradient over B.
double alignment(const DifferentiableLoss& loss, const ParamVector& theta, const Example& x,
                 Batch batch);

struct AlignmentReport {
  double sar = 0.0;
  double gar = 0.0;
  std::size_t trials = 0;
  double sar_half_width = 0.0;
  double gar_half_width = 0.0;
  std::size_t skipped = 0;  // degenerate draws that were redrawn
};

// 1.96 sqrt(p (1 - p) / n)
double half_width(double p, std::size_t n);

struct AlignmentOptions {
  std::size_t trials = 1000;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
};

// Monte-Carlo SAR and GAR. Each trial draws x and fresh batches from both
// pools; x is never part of the batch drawn from its own pool. Ties count
// as failures.
AlignmentReport sar_gar(const DifferentiableLoss& loss, const ParamVector& theta,
                        const Dataset& generic, const Dataset& specific,
                        const AlignmentOptions& options);

}  // namespace dsel
