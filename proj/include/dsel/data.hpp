#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dsel/errors.hpp"
#include "dsel/example.hpp"
#include "dsel/rng.hpp"

namespace dsel {

enum class Role { kGeneric, kSpecific, kHeldoutSpecific, kHeldoutGeneric };

const char* role_name(Role role);

// Ids of each role live in their own namespace, so roles are disjoint by id.
std::int64_t id_base(Role role);

// Immutable, ordered collection of examples with an optional per-example
// domain tag. Training code only ever receives `examples()`.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Role role, std::vector<Example> examples, std::vector<int> domain_tags = {});

  Role role() const { return role_; }
  Batch examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Example& operator[](std::size_t i) const { return examples_[i]; }

  bool has_domain_tags() const { return !domain_tags_.empty(); }
  // Diagnostics and reporting only; never consulted by training.
  std::span<const int> domain_tags_for_diagnostics() const { return domain_tags_; }

  // Subset keeping the original relative order of `positions`.
  Dataset subset(std::span<const std::size_t> positions) const;

 private:
  Role role_ = Role::kGeneric;
  std::vector<Example> examples_;
  std::vector<int> domain_tags_;
};

struct TaskData {
  Dataset generic;
  Dataset specific;
  Dataset heldout_specific;
  Dataset heldout_generic;
  int target_tag = 0;
};

// Linear-regression domains y = a_d . x + b_d + noise with x ~ N(mu_d, I).
struct MixtureSpec {
  std::size_t input_dim = 4;
  std::vector<double> proportions{0.95, 0.05};
  std::size_t target = 1;
  double noise = 0.1;
  double mean_scale = 2.0;
  std::size_t n_generic = 10000;
  std::size_t n_specific = 200;
  std::size_t n_heldout_specific = 1000;
  std::size_t n_heldout_generic = 1000;
};

TaskData gen_quadratic_mixture(const MixtureSpec& spec, std::uint64_t seed);

struct TextSizes {
  std::size_t n_generic = 10000;
  std::size_t n_specific = 200;
  std::size_t n_heldout_specific = 1000;
  std::size_t n_heldout_generic = 1000;
  std::size_t window = 8;
  double heldout_share = 0.2;  // tail of each corpus reserved for held-out windows
};

// Generic windows come from corpus A with probability `mix`, else from B;
// specific windows come from B only. Tag 0 = A, tag 1 = B (the target).
TaskData gen_text_mixture(std::span<const std::uint8_t> corpus_a,
                          std::span<const std::uint8_t> corpus_b, double mix,
                          const TextSizes& sizes, std::uint64_t seed);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

// n uniform draws with replacement, keyed by (seed, counter).
std::vector<std::size_t> sample(std::size_t dataset_size, std::size_t n, std::uint64_t seed,
                                std::uint64_t counter);
std::vector<std::size_t> sample(std::size_t dataset_size, std::size_t n, std::uint64_t seed,
                                Stream stream, std::uint64_t counter);

std::vector<Example> gather(Batch source, std::span<const std::size_t> positions);

// Feature CSV: one record per line, comma-separated reals, last column the
// target. If the first line is a comment containing "domain_tag", every
// record carries one extra trailing integer column with its domain tag.
Dataset load_feature_csv(const std::filesystem::path& path, Role role);
void write_feature_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace dsel
