#include "dsel/oracle.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dsel/outer.hpp"
#include "dsel/rng.hpp"
#include "dsel/selection.hpp"

namespace dsel::oracle {
namespace {

constexpr double kMaxCondition = 1e12;

Eigen::MatrixXd inner_hessian(const QuadraticInstance& inst, const Eigen::VectorXd& w) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(inst.dim(), inst.dim());
  for (std::size_t i = 0; i < inst.components(); ++i) h += w(i) * inst.a[i];
  return h;
}

Eigen::LDLT<Eigen::MatrixXd> factor_checked(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw NumericError("ill-conditioned inner Hessian (condition > 1e12)");
  return h.ldlt();
}

void check_alpha(const QuadraticInstance& inst, const Eigen::VectorXd& alpha) {
  DSEL_REQUIRE(static_cast<std::size_t>(alpha.size()) == inst.components(),
               "alpha size must equal the number of components");
}

}  // namespace

QuadraticInstance random_instance(std::size_t n, std::size_t dim, std::uint64_t seed) {
  auto rng = stream_rng(seed, Stream::kData, 99);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto spd = [&] {
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = gauss(rng);
    Eigen::MatrixXd a = m * m.transpose() / static_cast<double>(dim);
    a += 0.5 * Eigen::MatrixXd::Identity(dim, dim);
    return a;
  };
  auto vec = [&] {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
    return v;
  };
  QuadraticInstance inst;
  for (std::size_t i = 0; i < n; ++i) {
    inst.a.push_back(spd());
    inst.c.push_back(vec());
  }
  inst.a_spec = spd();
  inst.c_spec = vec();
  return inst;
}

QuadraticInstance q1_instance() {
  QuadraticInstance inst;
  inst.a = {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0)};
  inst.c = {Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)};
  inst.a_spec = Eigen::MatrixXd::Constant(1, 1, 1.0);
  inst.c_spec = Eigen::VectorXd::Constant(1, 1.0);
  return inst;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& alpha) {
  const double mx = alpha.maxCoeff();
  Eigen::VectorXd w = (alpha.array() - mx).exp();
  return w / w.sum();
}

Eigen::VectorXd theta_star(const QuadraticInstance& inst, const Eigen::VectorXd& alpha) {
  check_alpha(inst, alpha);
  const Eigen::VectorXd w = softmax(alpha);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(inst.dim());
  for (std::size_t i = 0; i < inst.components(); ++i) rhs += w(i) * (inst.a[i] * inst.c[i]);
  return factor_checked(inner_hessian(inst, w)).solve(rhs);
}

double outer_value(const QuadraticInstance& inst, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd d = theta_star(inst, alpha) - inst.c_spec;
  return 0.5 * d.dot(inst.a_spec * d);
}

Eigen::VectorXd analytic_hypergrad(const QuadraticInstance& inst, const Eigen::VectorXd& alpha) {
  check_alpha(inst, alpha);
  const Eigen::VectorXd w = softmax(alpha);
  const Eigen::VectorXd th = theta_star(inst, alpha);
  const Eigen::VectorXd q = factor_checked(inner_hessian(inst, w)).solve(inst.a_spec * (th - inst.c_spec));
  // grad h = -J^T [<A_i (theta* - c_i), H^-1 grad L_spec>]_i, J the softmax Jacobian
  const std::size_t n = inst.components();
  Eigen::VectorXd r(n);
  for (std::size_t i = 0; i < n; ++i) r(i) = (inst.a[i] * (th - inst.c[i])).dot(q);
  const Eigen::MatrixXd jac = Eigen::MatrixXd(w.asDiagonal()) - w * w.transpose();
  return -(jac.transpose() * r);
}

Eigen::VectorXd finite_diff_hypergrad(const QuadraticInstance& inst, const Eigen::VectorXd& alpha,
                                      double h) {
  DSEL_REQUIRE(h > 0.0, "finite-difference step must be positive");
  Eigen::VectorXd out(alpha.size());
  Eigen::VectorXd probe = alpha;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    probe(k) = alpha(k) + h;
    const double up = outer_value(inst, probe);
    probe(k) = alpha(k) - h;
    const double down = outer_value(inst, probe);
    probe(k) = alpha(k);
    out(k) = (up - down) / (2.0 * h);
  }
  return out;
}

Eigen::VectorXd exact_v(const QuadraticInstance& inst, const Eigen::VectorXd& alpha,
                        const Eigen::VectorXd& theta) {
  check_alpha(inst, alpha);
  const Eigen::VectorXd w = softmax(alpha);
  return -factor_checked(inner_hessian(inst, w)).solve(inst.a_spec * (theta - inst.c_spec));
}

double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
  const double scale = std::max(want.norm(), std::numeric_limits<double>::min());
  return (got - want).norm() / scale;
}

// ---------------------------------------------------------------------------

QuadraticComponentLoss::QuadraticComponentLoss(QuadraticInstance inst) : inst_(std::move(inst)) {
  const std::size_t p = inst_.dim();
  DSEL_REQUIRE(p > 0, "instance dimension must be positive");
  auto copy = [&](const Eigen::MatrixXd& a, const Eigen::VectorXd& c) {
    DSEL_REQUIRE(static_cast<std::size_t>(a.rows()) == p && static_cast<std::size_t>(a.cols()) == p &&
                     static_cast<std::size_t>(c.size()) == p,
                 "instance shape mismatch");
    std::vector<double> rows(p * p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) rows[i * p + j] = a(i, j);
    a_rows_.push_back(std::move(rows));
    centers_.emplace_back(c.data(), c.data() + p);
  };
  for (std::size_t i = 0; i < inst_.components(); ++i) copy(inst_.a[i], inst_.c[i]);
  copy(inst_.a_spec, inst_.c_spec);
  layout_ = Layout::flat(p, "theta");
}

std::vector<Example> QuadraticComponentLoss::generic_batch() const {
  std::vector<Example> out;
  for (std::size_t i = 0; i < inst_.components(); ++i)
    out.push_back(Example{static_cast<std::int64_t>(i), FeaturePayload{}});
  return out;
}

std::vector<Example> QuadraticComponentLoss::specific_batch() const {
  return {Example{static_cast<std::int64_t>(inst_.components()), FeaturePayload{}}};
}

ParamVector QuadraticComponentLoss::to_params(const Eigen::VectorXd& theta) const {
  return ParamVector(layout_, std::vector<double>(theta.data(), theta.data() + theta.size()));
}

template <class S>
typename Tape<S>::Var QuadraticComponentLoss::build(Tape<S>& tape, const ParamNodes<S>& p,
                                                    Batch batch) const {
  std::vector<typename Tape<S>::Var> parts;
  parts.reserve(batch.size());
  for (const Example& ex : batch) {
    DSEL_REQUIRE(ex.id >= 0 && static_cast<std::size_t>(ex.id) < a_rows_.size(),
                 "unknown quadratic component");
    parts.push_back(tape.quadratic_form(p[0], a_rows_[ex.id], centers_[ex.id]));
  }
  return tape.concat_rows(parts);
}

template Tape<double>::Var QuadraticComponentLoss::build<double>(Tape<double>&,
                                                                 const ParamNodes<double>&,
                                                                 Batch) const;
template Tape<Dual>::Var QuadraticComponentLoss::build<Dual>(Tape<Dual>&, const ParamNodes<Dual>&,
                                                             Batch) const;

std::vector<double> TableScorer::scores(const ParamVector& alpha, Batch batch) const {
  std::vector<double> out;
  out.reserve(batch.size());
  for (const Example& ex : batch) {
    DSEL_REQUIRE(ex.id >= 0 && static_cast<std::size_t>(ex.id) < alpha.size(), "unknown component");
    out.push_back(alpha[ex.id]);
  }
  return out;
}

ParamVector TableScorer::scores_vjp(const ParamVector& alpha, Batch batch,
                                    std::span<const double> cotangent) const {
  DSEL_REQUIRE(cotangent.size() == batch.size(), "cotangent size mismatch");
  ParamVector out(alpha.layout_ptr());
  for (std::size_t i = 0; i < batch.size(); ++i) out[batch[i].id] += cotangent[i];
  return out;
}

ParamVector TableScorer::to_params(const Eigen::VectorXd& alpha) const {
  return ParamVector(layout_, std::vector<double>(alpha.data(), alpha.data() + alpha.size()));
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd to_eigen(const ParamVector& p) {
  return Eigen::Map<const Eigen::VectorXd>(p.values().data(), static_cast<Eigen::Index>(p.size()));
}

}  // namespace

Eigen::VectorXd soba_direction_exact(const QuadraticInstance& inst, const Eigen::VectorXd& alpha) {
  const QuadraticComponentLoss loss(inst);
  const TableScorer scorer(inst.components());
  const auto gen = loss.generic_batch();
  const auto spec = loss.specific_batch();
  const Eigen::VectorXd th = theta_star(inst, alpha);
  const Eigen::VectorXd v = exact_v(inst, alpha, th);
  const OuterContext ctx{loss, scorer};
  return to_eigen(soba_alpha_direction(ctx, loss.to_params(th), scorer.to_params(alpha),
                                       loss.to_params(v), make_inputs(gen, spec)));
}

SobaTrace run_soba_on_oracle(const QuadraticInstance& inst, const Eigen::VectorXd& alpha0,
                             std::size_t steps, const SobaRates& rates) {
  check_alpha(inst, alpha0);
  const QuadraticComponentLoss loss(inst);
  const TableScorer scorer(inst.components());
  const auto gen = loss.generic_batch();
  const auto spec = loss.specific_batch();
  const OuterContext ctx{loss, scorer};
  const OuterInputs in = make_inputs(gen, spec);

  SobaTrace trace;
  Eigen::VectorXd alpha = alpha0;
  ParamVector theta = loss.to_params(theta_star(inst, alpha));
  ParamVector v(loss.layout_ptr());
  double prev_h = outer_value(inst, alpha);
  int rising = 0;

  for (std::size_t t = 0; t < steps; ++t) {
    const ParamVector a = scorer.to_params(alpha);
    if (rates.exact_inner) {
      theta = loss.to_params(theta_star(inst, alpha));
    } else {
      const auto w = normalize(scorer.scores(a, gen));
      axpy_inplace(-rates.eta_theta, grad(loss, theta, gen, w), theta);
    }
    if (rates.exact_v) {
      v = loss.to_params(exact_v(inst, alpha, to_eigen(theta)));
    } else {
      axpy_inplace(-rates.eta_v, soba_v_direction(ctx, theta, a, v, in), v);
    }
    SobaTraceStep step;
    step.dalpha = to_eigen(soba_alpha_direction(ctx, theta, a, v, in));
    step.analytic = analytic_hypergrad(inst, alpha);
    step.rel_error = relative_error(step.dalpha, step.analytic);
    alpha -= rates.eta_alpha * step.dalpha;
    step.h = outer_value(inst, alpha);
    rising = step.h > prev_h ? rising + 1 : 0;
    if (rising >= 100) trace.diverged = true;
    prev_h = step.h;
    trace.steps.push_back(std::move(step));
  }

  trace.alpha = alpha;
  trace.final_h = outer_value(inst, alpha);
  // Reference minimum: long exact-hypergradient descent from the same start.
  Eigen::VectorXd ref = alpha0;
  double best = outer_value(inst, ref);
  for (int k = 0; k < 20000; ++k) {
    ref -= rates.eta_alpha * analytic_hypergrad(inst, ref);
    best = std::min(best, outer_value(inst, ref));
  }
  trace.min_h = std::min(best, trace.final_h);
  trace.final_gap = std::abs(trace.final_h - trace.min_h);
  return trace;
}

}  // namespace dsel::oracle
