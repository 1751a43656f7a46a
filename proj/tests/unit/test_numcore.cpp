#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "dsel/loss.hpp"
#include "dsel/numcore.hpp"
#include "support.hpp"

using namespace dsel;
using dsel::testing::ids;
using dsel::testing::max_rel_error;
using dsel::testing::pv;
using dsel::testing::QuadLoss;

namespace {

// 0.5 |theta|^2 over two coordinates
QuadLoss half_norm2() { return QuadLoss({{1, 0, 0, 1}}, {{0, 0}}); }

class Constant final : public LossAdapter<Constant> {
 public:
  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }
  template <class S>
  typename Tape<S>::Var build(Tape<S>& tape, const ParamNodes<S>&, Batch batch) const {
    return tape.constant(std::vector<S>(batch.size(), S(1.0)), batch.size(), 1);
  }

 private:
  std::shared_ptr<const Layout> layout_ = Layout::flat(0);
};

}  // namespace

TEST(VecOps, Dot) { EXPECT_DOUBLE_EQ(dot(pv({1, 2}), pv({3, 4})), 11.0); }

TEST(VecOps, Axpy) {
  const ParamVector r = axpy(2.0, pv({1, 1}), pv({0, 1}));
  EXPECT_EQ(r, pv({2, 3}));
}

TEST(VecOps, Norm) { EXPECT_DOUBLE_EQ(norm(pv({3, 4})), 5.0); }

TEST(VecOps, ScaleAndInplace) {
  ParamVector y = pv({1, 2});
  axpy_inplace(-1.0, pv({1, 1}), y);
  EXPECT_EQ(y, pv({0, 1}));
  EXPECT_EQ(scale(3.0, pv({1, -2})), pv({3, -6}));
}

TEST(VecOps, LayoutMismatchIsContractError) {
  EXPECT_THROW(dot(pv({1, 2}), pv({1, 2, 3})), ContractError);
  auto named = std::make_shared<Layout>();
  named->add("a", 1, 2);
  EXPECT_THROW(dot(ParamVector(named), pv({1, 2})), ContractError);
}

TEST(Layout, SegmentsContiguousAndCovering) {
  Layout l;
  l.add("w", 3, 2).add("b", 1, 2).add("v", 4, 1);
  std::size_t off = 0;
  for (const Segment& s : l.segments()) {
    EXPECT_EQ(s.offset, off);
    off += s.size();
  }
  EXPECT_EQ(off, l.size());
  EXPECT_THROW(l.add("w", 1, 1), ContractError);
}

TEST(ParamVectorTest, SegmentViewsAlias) {
  auto l = std::make_shared<Layout>();
  l->add("a", 1, 2);
  l->add("b", 2, 1);
  ParamVector p(l, {1, 2, 3, 4});
  EXPECT_EQ(p.segment("b")[1], 4.0);
  p.segment("a")[0] = 9.0;
  EXPECT_EQ(p[0], 9.0);
}

TEST(Grad, HalfNormSquared) {
  const QuadLoss loss = half_norm2();
  const auto batch = ids({0});
  EXPECT_EQ(grad(loss, pv({3, 4}), batch), pv({3, 4}));
}

TEST(Grad, ProductRule) {
  // theta1 * theta2 = 0.5 theta^T [[0,1],[1,0]] theta
  const QuadLoss loss({{0, 1, 1, 0}}, {{0, 0}});
  const auto batch = ids({0});
  const ParamVector g = grad(loss, pv({2, 5}), batch);
  EXPECT_DOUBLE_EQ(g[0], 5.0);
  EXPECT_DOUBLE_EQ(g[1], 2.0);
}

TEST(Grad, ValueMatchesEvaluateBitForBit) {
  const QuadLoss loss({{2, 0.3, 0.3, 1}, {1, 0, 0, 3}}, {{0.1, 0.2}, {-1, 2}});
  const auto batch = ids({0, 1, 1});
  const ParamVector th = pv({0.37, -1.21});
  EXPECT_EQ(value_and_grad(loss, th, batch).value, evaluate(loss, th, batch));
}

TEST(Grad, EmptyBatchAndNonFiniteParams) {
  const QuadLoss loss = half_norm2();
  const std::vector<Example> none;
  EXPECT_THROW(grad(loss, pv({1, 1}), none), ContractError);
  const auto batch = ids({0});
  EXPECT_THROW(grad(loss, pv({std::nan(""), 1}), batch), NumericError);
}

TEST(Grad, NonFiniteLossNamesExample) {
  const QuadLoss loss({{1, 0, 0, 1}, {1, 0, 0, 1}}, {{-1e200, 0}, {1e200, 0}});
  const auto batch = ids({0, 1});
  try {
    grad(loss, pv({-1e200, 0}), batch);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_EQ(e.example_index(), 1);
    EXPECT_NE(std::string(e.what()).find("example index 1"), std::string::npos);
  }
}

TEST(Hvp, IdentityHessian) {
  const QuadLoss loss = half_norm2();
  const auto batch = ids({0});
  EXPECT_EQ(hvp(loss, pv({0.3, 0.7}), pv({1, -2}), batch), pv({1, -2}));
}

TEST(Hvp, DiagonalHessian) {
  const QuadLoss loss({{1, 0, 0, 2}}, {{0, 0}});
  const auto batch = ids({0});
  EXPECT_EQ(hvp(loss, pv({0.5, -0.5}), pv({1, 1}), batch), pv({1, 2}));
}

TEST(Hvp, LayoutMismatch) {
  const QuadLoss loss = half_norm2();
  const auto batch = ids({0});
  EXPECT_THROW(hvp(loss, pv({1, 1}), pv({1, 1, 1}), batch), ContractError);
}

TEST(Hvp, LinearInDirectionOnQuadratics) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> a(9), c(3);
    for (double& x : a) x = g(rng);
    for (double& x : c) x = g(rng);
    const QuadLoss loss({a}, {c});
    const auto batch = ids({0});
    const ParamVector th = pv({g(rng), g(rng), g(rng)});
    const ParamVector v1 = pv({g(rng), g(rng), g(rng)});
    const ParamVector v2 = pv({g(rng), g(rng), g(rng)});
    const double s = g(rng), t = g(rng);
    const ParamVector lhs = hvp(loss, th, axpy(s, v1, scale(t, v2)), batch);
    const ParamVector rhs = axpy(s, hvp(loss, th, v1, batch), scale(t, hvp(loss, th, v2, batch)));
    EXPECT_LT(max_rel_error(lhs, rhs), 1e-10) << "seed " << seed;
  }
}

TEST(FiniteDiff, HalfNormSquared) {
  const QuadLoss loss = half_norm2();
  const auto batch = ids({0});
  const ParamVector fd = finite_diff_grad(loss, pv({1, 0}), batch, 1e-4);
  EXPECT_NEAR(fd[0], 1.0, 1e-8);
  EXPECT_NEAR(fd[1], 0.0, 1e-8);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const QuadLoss loss = half_norm2();
  const auto batch = ids({0});
  EXPECT_THROW(finite_diff_grad(loss, pv({1, 0}), batch, 0.0), ContractError);
}

TEST(FiniteDiff, ZeroParameterModel) {
  const Constant loss;
  const auto batch = ids({0, 1});
  const ParamVector empty(loss.layout_ptr());
  EXPECT_TRUE(finite_diff_grad(loss, empty, batch, 1e-4).empty());
  EXPECT_TRUE(grad(loss, empty, batch).empty());
}

TEST(Determinism, RepeatedCallsBitIdentical) {
  const QuadLoss loss({{2, 0.3, 0.3, 1}}, {{0.1, 0.2}});
  const auto batch = ids({0, 0});
  const ParamVector th = pv({0.123, 4.56});
  EXPECT_EQ(grad(loss, th, batch), grad(loss, th, batch));
  EXPECT_EQ(hvp(loss, th, pv({1, 2}), batch), hvp(loss, th, pv({1, 2}), batch));
}

TEST(Weighted, WeightsApplyPerExample) {
  const QuadLoss loss({{1, 0, 0, 1}, {1, 0, 0, 1}}, {{0, 0}, {1, 1}});
  const auto batch = ids({0, 1});
  const std::vector<double> w{0.25, 0.75};
  const ParamVector g = grad(loss, pv({0, 0}), batch, w);
  EXPECT_DOUBLE_EQ(g[0], -0.75);
  EXPECT_DOUBLE_EQ(g[1], -0.75);
  const auto pe = per_example_grads(loss, pv({0, 0}), batch);
  ASSERT_EQ(pe.size(), 2u);
  EXPECT_EQ(pe[1], pv({-1, -1}));
}
