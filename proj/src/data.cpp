#include "dsel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "dsel/errors.hpp"
#include "dsel/rng.hpp"

namespace dsel {

const char* role_name(Role role) {
  switch (role) {
    case Role::kGeneric: return "generic";
    case Role::kSpecific: return "specific";
    case Role::kHeldoutSpecific: return "heldout-specific";
    case Role::kHeldoutGeneric: return "heldout-generic";
  }
  return "unknown";
}

std::int64_t id_base(Role role) {
  return static_cast<std::int64_t>(role) * (std::int64_t{1} << 40);
}

Dataset::Dataset(Role role, std::vector<Example> examples, std::vector<int> domain_tags)
    : role_(role), examples_(std::move(examples)), domain_tags_(std::move(domain_tags)) {
  DSEL_REQUIRE(domain_tags_.empty() || domain_tags_.size() == examples_.size(),
               "domain tag count does not match example count");
}

Dataset Dataset::subset(std::span<const std::size_t> positions) const {
  std::vector<Example> ex;
  std::vector<int> tags;
  ex.reserve(positions.size());
  for (std::size_t p : positions) {
    DSEL_REQUIRE(p < examples_.size(), "subset position out of range");
    ex.push_back(examples_[p]);
    if (has_domain_tags()) tags.push_back(domain_tags_[p]);
  }
  return Dataset(role_, std::move(ex), std::move(tags));
}

// ---------------------------------------------------------------------------
// Synthetic regression mixture

namespace {

struct Component {
  std::vector<double> mean;
  std::vector<double> weights;
  double bias = 0.0;
};

Example draw_regression(const Component& c, double noise, std::int64_t id, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  FeaturePayload f;
  f.x.resize(c.mean.size());
  double y = c.bias;
  for (std::size_t j = 0; j < c.mean.size(); ++j) {
    f.x[j] = c.mean[j] + gauss(rng);
    y += c.weights[j] * f.x[j];
  }
  f.y = y + noise * gauss(rng);
  return Example{id, std::move(f)};
}

// Largest-remainder apportionment so counts sum to n exactly.
std::vector<std::size_t> apportion(std::span<const double> proportions, std::size_t n) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t d = 0; d < proportions.size(); ++d) {
    const double exact = proportions[d] * static_cast<double>(n);
    // Guard against 0.95 * 10000 = 9499.999...
    counts[d] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[d];
    rema.emplace_back(exact - static_cast<double>(counts[d]), d);
  }
  std::stable_sort(rema.begin(), rema.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[rema[i % rema.size()].second];
  return counts;
}

Dataset draw_mixture(const std::vector<Component>& comps, std::span<const double> proportions,
                     double noise, std::size_t n, Role role, std::mt19937_64& rng) {
  const auto counts = apportion(proportions, n);
  std::vector<int> tags;
  tags.reserve(n);
  for (std::size_t d = 0; d < counts.size(); ++d) tags.insert(tags.end(), counts[d], static_cast<int>(d));
  std::shuffle(tags.begin(), tags.end(), rng);
  std::vector<Example> ex;
  ex.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ex.push_back(draw_regression(comps[tags[i]], noise, id_base(role) + static_cast<std::int64_t>(i), rng));
  }
  return Dataset(role, std::move(ex), std::move(tags));
}

Dataset draw_single(const Component& c, int tag, double noise, std::size_t n, Role role,
                    std::mt19937_64& rng) {
  std::vector<Example> ex;
  ex.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ex.push_back(draw_regression(c, noise, id_base(role) + static_cast<std::int64_t>(i), rng));
  }
  return Dataset(role, std::move(ex), std::vector<int>(n, tag));
}

}  // namespace

TaskData gen_quadratic_mixture(const MixtureSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0) throw ConfigError("mixture input_dim must be positive");
  if (spec.proportions.empty()) throw ConfigError("mixture needs at least one component");
  double total = 0.0;
  for (double p : spec.proportions) {
    if (!(p > 0.0)) throw ConfigError("mixture proportions must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("mixture proportions must sum to 1");
  if (spec.target >= spec.proportions.size()) throw ConfigError("target component out of range");

  auto rng = stream_rng(seed, Stream::kData, 0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Component> comps(spec.proportions.size());
  for (Component& c : comps) {
    c.mean.resize(spec.input_dim);
    c.weights.resize(spec.input_dim);
    for (double& m : c.mean) m = spec.mean_scale * gauss(rng);
    for (double& w : c.weights) w = gauss(rng);
    c.bias = gauss(rng);
  }

  const int target = static_cast<int>(spec.target);
  TaskData out;
  out.target_tag = target;
  out.generic = draw_mixture(comps, spec.proportions, spec.noise, spec.n_generic, Role::kGeneric, rng);
  out.specific = draw_single(comps[spec.target], target, spec.noise, spec.n_specific, Role::kSpecific, rng);
  out.heldout_specific = draw_single(comps[spec.target], target, spec.noise,
                                     spec.n_heldout_specific, Role::kHeldoutSpecific, rng);
  out.heldout_generic = draw_mixture(comps, spec.proportions, spec.noise, spec.n_heldout_generic,
                                     Role::kHeldoutGeneric, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Byte-window text mixture

namespace {

Example window_at(std::span<const std::uint8_t> region, std::size_t pos, std::size_t window,
                  std::int64_t id) {
  BytePayload b;
  b.context.assign(region.begin() + pos, region.begin() + pos + window);
  b.next = region[pos + window];
  return Example{id, std::move(b)};
}

std::size_t draw_pos(std::span<const std::uint8_t> region, std::size_t window, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, region.size() - window - 1);
  return dist(rng);
}

Dataset draw_text(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b, double mix,
                  std::size_t n, std::size_t window, Role role, std::mt19937_64& rng) {
  std::bernoulli_distribution from_a(mix);
  std::vector<Example> ex;
  std::vector<int> tags;
  ex.reserve(n);
  tags.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool use_a = from_a(rng);
    const auto region = use_a ? a : b;
    ex.push_back(window_at(region, draw_pos(region, window, rng), window,
                           id_base(role) + static_cast<std::int64_t>(i)));
    tags.push_back(use_a ? 0 : 1);
  }
  return Dataset(role, std::move(ex), std::move(tags));
}

}  // namespace

TaskData gen_text_mixture(std::span<const std::uint8_t> corpus_a,
                          std::span<const std::uint8_t> corpus_b, double mix,
                          const TextSizes& sizes, std::uint64_t seed) {
  if (!(mix >= 0.0 && mix <= 1.0)) throw ConfigError("text mix must lie in [0, 1]");
  if (sizes.window == 0) throw ConfigError("window must be positive");
  if (!(sizes.heldout_share > 0.0 && sizes.heldout_share < 1.0))
    throw ConfigError("heldout_share must lie in (0, 1)");
  auto split = [&](std::span<const std::uint8_t> c, const char* name) {
    const auto train_len = static_cast<std::size_t>(
        std::floor(static_cast<double>(c.size()) * (1.0 - sizes.heldout_share)));
    auto train = c.subspan(0, train_len);
    auto held = c.subspan(train_len);
    if (train.size() <= sizes.window || held.size() <= sizes.window)
      throw ConfigError(std::string("corpus ") + name + " is shorter than the window");
    return std::pair{train, held};
  };
  const auto [a_train, a_held] = split(corpus_a, "A");
  const auto [b_train, b_held] = split(corpus_b, "B");

  auto rng = stream_rng(seed, Stream::kData, 1);
  TaskData out;
  out.target_tag = 1;
  out.generic = draw_text(a_train, b_train, mix, sizes.n_generic, sizes.window, Role::kGeneric, rng);
  out.specific = draw_text(a_train, b_train, 0.0, sizes.n_specific, sizes.window, Role::kSpecific, rng);
  out.heldout_specific = draw_text(a_held, b_held, 0.0, sizes.n_heldout_specific, sizes.window,
                                   Role::kHeldoutSpecific, rng);
  out.heldout_generic = draw_text(a_held, b_held, mix, sizes.n_heldout_generic, sizes.window,
                                  Role::kHeldoutGeneric, rng);
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::size_t> sample(std::size_t dataset_size, std::size_t n, std::uint64_t seed,
                                std::uint64_t counter) {
  return sample(dataset_size, n, seed, Stream::kGenericBatch, counter);
}

std::vector<std::size_t> sample(std::size_t dataset_size, std::size_t n, std::uint64_t seed,
                                Stream stream, std::uint64_t counter) {
  DSEL_REQUIRE(dataset_size > 0, "cannot sample from an empty dataset");
  DSEL_REQUIRE(n >= 1, "sample size must be at least 1");
  auto rng = stream_rng(seed, stream, counter);
  std::uniform_int_distribution<std::size_t> dist(0, dataset_size - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = dist(rng);
  return out;
}

std::vector<Example> gather(Batch source, std::span<const std::size_t> positions) {
  std::vector<Example> out;
  out.reserve(positions.size());
  for (std::size_t p : positions) {
    DSEL_REQUIRE(p < source.size(), "gather position out of range");
    out.push_back(source[p]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature CSV

Dataset load_feature_csv(const std::filesystem::path& path, Role role) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open feature file " + path.string());
  std::string line;
  int line_no = 0;
  bool tagged = false;
  std::size_t width = 0;
  std::vector<Example> ex;
  std::vector<int> tags;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line_no == 1 && line.find("domain_tag") != std::string::npos) tagged = true;
      continue;
    }
    std::vector<double> vals;
    std::size_t col = 0;
    while (col <= line.size()) {
      std::size_t end = line.find(',', col);
      if (end == std::string::npos) end = line.size();
      std::size_t b = col, e = end;
      while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
      while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
      double v = 0.0;
      auto res = std::from_chars(line.data() + b, line.data() + e, v);
      if (res.ec != std::errc() || res.ptr != line.data() + e)
        throw ConfigError("malformed number in " + path.string(), line_no, static_cast<int>(b + 1));
      vals.push_back(v);
      col = end + 1;
    }
    const std::size_t min_cols = tagged ? 3 : 2;
    if (vals.size() < min_cols) throw ConfigError("too few columns", line_no, 1);
    if (width == 0) width = vals.size();
    if (vals.size() != width) throw ConfigError("inconsistent column count", line_no, 1);
    if (tagged) {
      const double t = vals.back();
      if (t != std::floor(t)) throw ConfigError("domain tag must be an integer", line_no, 1);
      tags.push_back(static_cast<int>(t));
      vals.pop_back();
    }
    FeaturePayload f;
    f.y = vals.back();
    vals.pop_back();
    f.x = std::move(vals);
    ex.push_back(Example{id_base(role) + static_cast<std::int64_t>(ex.size()), std::move(f)});
  }
  return Dataset(role, std::move(ex), std::move(tags));
}

void write_feature_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  if (data.has_domain_tags()) out << "# features...,target,domain_tag\n";
  const auto tags = data.domain_tags_for_diagnostics();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const FeaturePayload* f = data[i].features();
    DSEL_REQUIRE(f != nullptr, "feature CSV needs feature examples");
    for (double v : f->x) out << v << ',';
    out << f->y;
    if (data.has_domain_tags()) out << ',' << tags[i];
    out << '\n';
  }
}

}  // namespace dsel
