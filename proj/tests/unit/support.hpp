#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dsel/loss.hpp"
#include "dsel/models.hpp"

namespace dsel::testing {

// Sum of per-example quadratics 0.5 (theta - c_k)^T A_k (theta - c_k);
// example id k selects the term.
class QuadLoss final : public LossAdapter<QuadLoss> {
 public:
  QuadLoss(std::vector<std::vector<double>> a, std::vector<std::vector<double>> c)
      : a_(std::move(a)), c_(std::move(c)), layout_(Layout::flat(c_.front().size())) {}

  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }

  template <class S>
  typename Tape<S>::Var build(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const {
    std::vector<typename Tape<S>::Var> parts;
    for (const Example& ex : batch) parts.push_back(tape.quadratic_form(p[0], a_[ex.id], c_[ex.id]));
    return tape.concat_rows(parts);
  }

 private:
  std::vector<std::vector<double>> a_;
  std::vector<std::vector<double>> c_;
  std::shared_ptr<const Layout> layout_;
};

inline std::vector<Example> ids(std::initializer_list<std::int64_t> list) {
  std::vector<Example> out;
  for (auto id : list) out.push_back(Example{id, FeaturePayload{}});
  return out;
}

inline ParamVector pv(std::vector<double> v) { return ParamVector::flat(std::move(v)); }

// max_i |a_i - b_i| / max(max_i |b_i|, floor)
inline double max_rel_error(const ParamVector& a, const ParamVector& b, double floor = 1e-12) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline double max_rel_error(std::span<const double> a, std::span<const double> b,
                            double floor = 1e-12) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

inline std::vector<Example> random_bytes(std::size_t n, std::size_t context, std::uint64_t seed,
                                         std::int64_t first_id = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> byte(0, 255);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    BytePayload b;
    for (std::size_t k = 0; k < context; ++k) b.context.push_back(static_cast<std::uint8_t>(byte(rng)));
    b.next = static_cast<std::uint8_t>(byte(rng));
    out.push_back(Example{first_id + static_cast<std::int64_t>(i), std::move(b)});
  }
  return out;
}

inline std::vector<Example> random_features(std::size_t n, std::size_t dim, std::uint64_t seed,
                                            int classes = 0, std::int64_t first_id = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, std::max(classes - 1, 0));
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    FeaturePayload f;
    for (std::size_t k = 0; k < dim; ++k) f.x.push_back(g(rng));
    f.y = classes > 0 ? cls(rng) : g(rng);
    out.push_back(Example{first_id + static_cast<std::int64_t>(i), std::move(f)});
  }
  return out;
}

// Random-direction perturbation of a parameter vector, for tests that need
// non-trivial weighting nets.
inline ParamVector jitter(ParamVector p, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  for (double& v : p.values()) v += g(rng);
  return p;
}

}  // namespace dsel::testing
