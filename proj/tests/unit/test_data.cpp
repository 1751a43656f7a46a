#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "dsel/data.hpp"

using namespace dsel;

namespace {

std::vector<std::uint8_t> text(std::size_t n, char base) {
  std::vector<std::uint8_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(base + (i * 7) % 13);
  return out;
}

std::size_t count_tag(const Dataset& d, int tag) {
  std::size_t n = 0;
  for (int t : d.domain_tags_for_diagnostics()) n += t == tag ? 1 : 0;
  return n;
}

}  // namespace

TEST(QuadraticMixture, CountsExact) {
  const TaskData d = gen_quadratic_mixture(MixtureSpec{}, 1);
  EXPECT_EQ(d.generic.size(), 10000u);
  EXPECT_EQ(d.specific.size(), 200u);
  EXPECT_EQ(count_tag(d.generic, 1), 500u);
  EXPECT_EQ(count_tag(d.generic, 0), 9500u);
  EXPECT_EQ(count_tag(d.specific, 1), 200u);
  EXPECT_EQ(d.target_tag, 1);
}

TEST(QuadraticMixture, RolesDisjointById) {
  MixtureSpec s;
  s.n_generic = 500;
  const TaskData d = gen_quadratic_mixture(s, 2);
  std::set<std::int64_t> seen;
  for (const Dataset* ds : {&d.generic, &d.specific, &d.heldout_specific, &d.heldout_generic})
    for (const Example& ex : ds->examples()) EXPECT_TRUE(seen.insert(ex.id).second);
}

TEST(QuadraticMixture, TargetOnlyMixtureMatchesSpecific) {
  MixtureSpec s;
  s.proportions = {1.0};
  s.target = 0;
  s.n_generic = 4000;
  s.n_specific = 4000;
  const TaskData d = gen_quadratic_mixture(s, 3);
  // Two-sample z-test on the mean of every input coordinate and the target.
  for (std::size_t k = 0; k <= s.input_dim; ++k) {
    auto col = [&](const Dataset& ds, double& m, double& v) {
      m = v = 0.0;
      for (const Example& ex : ds.examples()) {
        const auto* f = ex.features();
        m += k < s.input_dim ? f->x[k] : f->y;
      }
      m /= ds.size();
      for (const Example& ex : ds.examples()) {
        const auto* f = ex.features();
        const double x = k < s.input_dim ? f->x[k] : f->y;
        v += (x - m) * (x - m);
      }
      v /= ds.size() - 1;
    };
    double m1, v1, m2, v2;
    col(d.generic, m1, v1);
    col(d.specific, m2, v2);
    const double z = (m1 - m2) / std::sqrt(v1 / d.generic.size() + v2 / d.specific.size());
    EXPECT_LT(std::abs(z), 3.5) << "coordinate " << k;
  }
}

TEST(QuadraticMixture, SeedsDiffer) {
  MixtureSpec s;
  s.n_generic = 50;
  const TaskData a = gen_quadratic_mixture(s, 1), b = gen_quadratic_mixture(s, 2);
  EXPECT_NE(a.generic[0].features()->x, b.generic[0].features()->x);
  const TaskData c = gen_quadratic_mixture(s, 1);
  EXPECT_EQ(a.generic[7].features()->x, c.generic[7].features()->x);
}

TEST(QuadraticMixture, InvalidProportions) {
  MixtureSpec s;
  s.proportions = {0.5, 0.6};
  EXPECT_THROW(gen_quadratic_mixture(s, 1), ConfigError);
}

TEST(TextMixture, MixOneHasNoTargetWindows) {
  TextSizes sz;
  sz.n_generic = 2000;
  const TaskData d = gen_text_mixture(text(5000, 'a'), text(5000, 'A'), 1.0, sz, 4);
  EXPECT_EQ(count_tag(d.generic, 1), 0u);
  EXPECT_EQ(count_tag(d.specific, 1), d.specific.size());
}

TEST(TextMixture, WindowShape) {
  TextSizes sz;
  sz.n_generic = 300;
  const TaskData d = gen_text_mixture(text(5000, 'a'), text(5000, 'A'), 0.5, sz, 4);
  for (const Dataset* ds : {&d.generic, &d.specific, &d.heldout_specific, &d.heldout_generic})
    for (const Example& ex : ds->examples()) {
      ASSERT_NE(ex.bytes(), nullptr);
      EXPECT_EQ(ex.bytes()->context.size(), 8u);
    }
}

TEST(TextMixture, SourceFractionWithinBinomialBound) {
  TextSizes sz;
  const double mix = 0.95;
  const TaskData d = gen_text_mixture(text(5000, 'a'), text(5000, 'A'), mix, sz, 5);
  const double n = static_cast<double>(d.generic.size());
  const double frac_a = count_tag(d.generic, 0) / n;
  EXPECT_LT(std::abs(frac_a - mix), 3.0 * std::sqrt(mix * (1 - mix) / n));
}

TEST(TextMixture, ShortCorpusIsConfigError) {
  EXPECT_THROW(gen_text_mixture(text(6, 'a'), text(5000, 'A'), 0.5, TextSizes{}, 1), ConfigError);
  EXPECT_THROW(gen_text_mixture(text(5000, 'a'), text(5000, 'A'), 1.5, TextSizes{}, 1),
               ConfigError);
}

TEST(Sample, SingletonAndDeterminism) {
  EXPECT_EQ(sample(1, 1, 9, 0), std::vector<std::size_t>{0});
  EXPECT_EQ(sample(100, 16, 9, 42), sample(100, 16, 9, 42));
  EXPECT_NE(sample(100, 16, 9, 42), sample(100, 16, 9, 43));
  EXPECT_THROW(sample(0, 1, 9, 0), ContractError);
  EXPECT_THROW(sample(5, 0, 9, 0), ContractError);
}

TEST(Sample, UniformFrequencies) {
  std::vector<int> counts(10, 0);
  const int per_call = 100;
  for (int c = 0; c < 1000; ++c)
    for (std::size_t i : sample(10, per_call, 7, c)) ++counts[i];
  const double n = 100000.0, p = 0.1;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int k : counts) EXPECT_LT(std::abs(k - n * p), 3.0 * sigma);
}

TEST(FeatureCsv, RoundTripWithTags) {
  MixtureSpec s;
  s.n_generic = 40;
  const TaskData d = gen_quadratic_mixture(s, 1);
  const auto path = std::filesystem::temp_directory_path() / "dsel_csv_test.csv";
  write_feature_csv(path, d.generic);
  const Dataset back = load_feature_csv(path, Role::kGeneric);
  ASSERT_EQ(back.size(), d.generic.size());
  EXPECT_TRUE(back.has_domain_tags());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].features()->x, d.generic[i].features()->x);
    EXPECT_EQ(back[i].features()->y, d.generic[i].features()->y);
    EXPECT_EQ(back.domain_tags_for_diagnostics()[i], d.generic.domain_tags_for_diagnostics()[i]);
  }
  std::filesystem::remove(path);
}

TEST(FeatureCsv, MalformedNumberReportsPosition) {
  const auto path = std::filesystem::temp_directory_path() / "dsel_csv_bad.csv";
  std::ofstream(path) << "1.0,2.0,3.0\n4.0,abc,6.0\n";
  try {
    load_feature_csv(path, Role::kGeneric);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 5);
  }
  std::filesystem::remove(path);
}
