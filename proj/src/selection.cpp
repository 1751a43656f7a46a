#include "dsel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsel/errors.hpp"

namespace dsel {

FilterRule parse_filter_rule(std::string_view name) {
  if (name == "importance") return FilterRule::kImportance;
  if (name == "without_replacement") return FilterRule::kWithoutReplacement;
  if (name == "top_k") return FilterRule::kTopK;
  throw ConfigError("unknown filter_rule '" + std::string(name) +
                    "' (expected importance | without_replacement | top_k)");
}

const char* filter_rule_name(FilterRule rule) {
  switch (rule) {
    case FilterRule::kImportance: return "importance";
    case FilterRule::kWithoutReplacement: return "without_replacement";
    case FilterRule::kTopK: return "top_k";
  }
  return "unknown";
}

std::vector<double> normalize(std::span<const double> scores) {
  DSEL_REQUIRE(!scores.empty(), "cannot normalize an empty batch");
  double mx = scores[0];
  for (double s : scores) {
    DSEL_REQUIRE(std::isfinite(s), "non-finite score");
    mx = std::max(mx, s);
  }
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) total += (w[i] = std::exp(scores[i] - mx));
  for (double& v : w) v /= total;
  return w;
}

BatchWeights normalize(std::span<const std::int64_t> ids, std::span<const double> scores) {
  DSEL_REQUIRE(ids.size() == scores.size(), "id/score count mismatch");
  return BatchWeights{std::vector<std::int64_t>(ids.begin(), ids.end()), normalize(scores)};
}

std::vector<double> softmax_vjp(std::span<const double> weights, std::span<const double> cotangent) {
  DSEL_REQUIRE(weights.size() == cotangent.size(), "softmax vjp size mismatch");
  double mean = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) mean += weights[i] * cotangent[i];
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = weights[i] * (cotangent[i] - mean);
  return out;
}

std::vector<std::size_t> filter(const BatchWeights& weights, std::size_t n, FilterRule rule,
                                std::mt19937_64& rng) {
  const std::size_t size = weights.weights.size();
  DSEL_REQUIRE(weights.ids.size() == size, "id/weight count mismatch");
  DSEL_REQUIRE(n <= size, "filter size exceeds batch size");
  std::vector<std::size_t> out;
  out.reserve(n);

  if (rule == FilterRule::kImportance) {
    std::discrete_distribution<std::size_t> dist(weights.weights.begin(), weights.weights.end());
    for (std::size_t i = 0; i < n; ++i) out.push_back(dist(rng));
    return out;
  }

  std::vector<double> key(size);
  if (rule == FilterRule::kWithoutReplacement) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < size; ++i) {
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      key[i] = std::log(weights.weights[i]) - std::log(-std::log(u));
    }
  } else {
    key = weights.weights;
  }
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (key[a] != key[b]) return key[a] > key[b];
                      return weights.ids[a] < weights.ids[b];
                    });
  out.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

double weight_entropy(std::span<const double> weights) {
  double h = 0.0;
  for (double w : weights) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return h;
}

}  // namespace dsel
