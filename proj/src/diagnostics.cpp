#include "dsel/diagnostics.hpp"

#include <cmath>
#include <random>

#include "dsel/rng.hpp"

namespace dsel {

double alignment(const ParamVector& example_grad, const ParamVector& batch_grad) {
  const double n = norm(batch_grad);
  if (n < 1e-12) throw DegenerateBatch("degenerate batch: gradient norm below 1e-12");
  return dot(example_grad, batch_grad) / n;
}

double alignment(const DifferentiableLoss& loss, const ParamVector& theta, const Example& x,
                 Batch batch) {
  DSEL_REQUIRE(!batch.empty(), "alignment batch must be nonempty");
  const Example one[] = {x};
  return alignment(grad(loss, theta, one), grad(loss, theta, batch));
}

double half_width(double p, std::size_t n) {
  if (n == 0) return 0.0;
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

namespace {

// Batch of `size` uniform draws from `pool`, never position `exclude`.
std::vector<Example> draw_batch(const Dataset& pool, std::size_t size, std::size_t exclude,
                                std::mt19937_64& rng) {
  const bool excluding = exclude < pool.size();
  const std::size_t span = pool.size() - (excluding ? 1 : 0);
  DSEL_REQUIRE(span > 0, "pool too small for alignment batches");
  std::uniform_int_distribution<std::size_t> pick(0, span - 1);
  std::vector<Example> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t k = pick(rng);
    if (excluding && k >= exclude) ++k;
    out.push_back(pool[k]);
  }
  return out;
}

// One trial: does x's gradient align better with its own pool's batch?
bool own_pool_wins(const DifferentiableLoss& loss, const ParamVector& theta, const Dataset& own,
                   const Dataset& other, std::size_t batch_size, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, own.size() - 1);
  const std::size_t pos = pick(rng);
  const auto own_batch = draw_batch(own, batch_size, pos, rng);
  const auto other_batch = draw_batch(other, batch_size, other.size(), rng);
  const Example one[] = {own[pos]};
  const ParamVector gx = grad(loss, theta, one);
  const double a_own = alignment(gx, grad(loss, theta, own_batch));
  const double a_other = alignment(gx, grad(loss, theta, other_batch));
  return a_own > a_other;
}

double rate(const DifferentiableLoss& loss, const ParamVector& theta, const Dataset& own,
            const Dataset& other, const AlignmentOptions& opt, std::uint64_t salt,
            std::size_t& skipped) {
  std::size_t wins = 0;
  std::size_t done = 0;
  std::uint64_t attempt = 0;
  const std::uint64_t max_attempts = 10 * opt.trials + 100;
  while (done < opt.trials) {
    if (attempt >= max_attempts)
      throw DegenerateBatch("too many degenerate batches in alignment trials");
    auto rng = stream_rng(opt.seed, Stream::kDiagnostics, (salt << 40) | attempt++);
    try {
      wins += own_pool_wins(loss, theta, own, other, opt.batch_size, rng) ? 1 : 0;
      ++done;
    } catch (const DegenerateBatch&) {
      ++skipped;
    }
  }
  return static_cast<double>(wins) / static_cast<double>(opt.trials);
}

}  // namespace

AlignmentReport sar_gar(const DifferentiableLoss& loss, const ParamVector& theta,
                        const Dataset& generic, const Dataset& specific,
                        const AlignmentOptions& options) {
  DSEL_REQUIRE(options.trials >= 100, "sar_gar needs at least 100 trials");
  DSEL_REQUIRE(options.batch_size >= 1, "alignment batch size must be positive");
  DSEL_REQUIRE(generic.size() >= 2 && specific.size() >= 2,
               "alignment pools need at least two examples");
  AlignmentReport r;
  r.trials = options.trials;
  r.sar = rate(loss, theta, specific, generic, options, 1, r.skipped);
  r.gar = rate(loss, theta, generic, specific, options, 2, r.skipped);
  r.sar_half_width = half_width(r.sar, r.trials);
  r.gar_half_width = half_width(r.gar, r.trials);
  return r;
}

}  // namespace dsel
