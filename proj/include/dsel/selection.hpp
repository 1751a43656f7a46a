#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace dsel {

// Normalized per-batch weights: every entry > 0, entries sum to 1.
struct BatchWeights {
  std::vector<std::int64_t> ids;
  std::vector<double> weights;
};

enum class FilterRule { kImportance, kWithoutReplacement, kTopK };

FilterRule parse_filter_rule(std::string_view name);
const char* filter_rule_name(FilterRule rule);

// Softmax over the batch's scores (shift-invariant).
std::vector<double> normalize(std::span<const double> scores);
BatchWeights normalize(std::span<const std::int64_t> ids, std::span<const double> scores);

// Jacobian-vector product of the softmax: d/ds of sum_i c_i softmax(s)_i.
std::vector<double> softmax_vjp(std::span<const double> weights, std::span<const double> cotangent);

// Picks n positions of the big batch.
//  - importance: n i.i.d. draws from the weights (with replacement)
//  - without_replacement: Gumbel-top-n on log-weights, in key order
//  - top_k: n largest weights, ties broken by lower id
std::vector<std::size_t> filter(const BatchWeights& weights, std::size_t n, FilterRule rule,
                                std::mt19937_64& rng);

double weight_entropy(std::span<const double> weights);

}  // namespace dsel
