#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsel/loss.hpp"
#include "dsel/models.hpp"

namespace dsel::oracle {

// Bilevel problem with quadratic inner and outer losses:
//   L_gen(theta, alpha) = sum_i w_i(alpha) 0.5 (theta - c_i)^T A_i (theta - c_i)
//   L_spec(theta)       = 0.5 (theta - c')^T A' (theta - c')
// with w = softmax(alpha).
struct QuadraticInstance {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> c;
  Eigen::MatrixXd a_spec;
  Eigen::VectorXd c_spec;

  std::size_t components() const { return a.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(c_spec.size()); }
};

// Random SPD instance with n components in `dim` dimensions.
QuadraticInstance random_instance(std::size_t n, std::size_t dim, std::uint64_t seed);

// 1-D, two components: A = (1, 1), c = (0, 1), A' = 1, c' = 1.
// With alpha = (0, a) the second weight is the logistic sigma(a) and
// h(a) = 0.5 (1 - sigma(a))^2.
QuadraticInstance q1_instance();

Eigen::VectorXd softmax(const Eigen::VectorXd& alpha);

// theta*(alpha) = (sum_i w_i A_i)^-1 sum_i w_i A_i c_i
Eigen::VectorXd theta_star(const QuadraticInstance& inst, const Eigen::VectorXd& alpha);

// Outer objective h(alpha) = L_spec(theta*(alpha)).
double outer_value(const QuadraticInstance& inst, const Eigen::VectorXd& alpha);

// Implicit-function hypergradient, assembled in closed form at theta*(alpha).
Eigen::VectorXd analytic_hypergrad(const QuadraticInstance& inst, const Eigen::VectorXd& alpha);

// Central differences of outer_value. Reference route for analytic_hypergrad.
Eigen::VectorXd finite_diff_hypergrad(const QuadraticInstance& inst, const Eigen::VectorXd& alpha,
                                      double h);

// v* = -[grad^2_theta L_gen]^-1 grad L_spec(theta).
Eigen::VectorXd exact_v(const QuadraticInstance& inst, const Eigen::VectorXd& alpha,
                        const Eigen::VectorXd& theta);

// Exposes the instance to the training code: example id k < n is generic
// component k, id n is the specific loss.
class QuadraticComponentLoss final : public LossAdapter<QuadraticComponentLoss> {
 public:
  explicit QuadraticComponentLoss(QuadraticInstance inst);

  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }
  const QuadraticInstance& instance() const { return inst_; }

  std::vector<Example> generic_batch() const;
  std::vector<Example> specific_batch() const;

  ParamVector to_params(const Eigen::VectorXd& theta) const;

  template <class S>
  typename Tape<S>::Var build(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const;

 private:
  QuadraticInstance inst_;
  std::vector<std::vector<double>> a_rows_;  // row-major copies, specific last
  std::vector<std::vector<double>> centers_;
  std::shared_ptr<const Layout> layout_;
};

// Score of generic component k is alpha[k]; softmax over the full batch
// reproduces w = softmax(alpha).
class TableScorer final : public Scorer {
 public:
  explicit TableScorer(std::size_t n) : layout_(Layout::flat(n, "alpha")) {}

  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }
  std::vector<double> scores(const ParamVector& alpha, Batch batch) const override;
  ParamVector scores_vjp(const ParamVector& alpha, Batch batch,
                         std::span<const double> cotangent) const override;

  ParamVector to_params(const Eigen::VectorXd& alpha) const;

 private:
  std::shared_ptr<const Layout> layout_;
};

// SOBA's dalpha through the training code path, at theta*(alpha) with v = v*.
Eigen::VectorXd soba_direction_exact(const QuadraticInstance& inst, const Eigen::VectorXd& alpha);

struct SobaRates {
  double eta_theta = 0.1;
  double eta_v = 0.1;
  double eta_alpha = 0.5;
  bool exact_inner = false;  // theta <- theta*(alpha) every step
  bool exact_v = false;      // v <- v*(theta, alpha) every step
};

struct SobaTraceStep {
  double h = 0.0;
  Eigen::VectorXd dalpha;
  Eigen::VectorXd analytic;
  double rel_error = 0.0;  // ||dalpha - analytic|| / max(||analytic||, tiny)
};

struct SobaTrace {
  std::vector<SobaTraceStep> steps;
  Eigen::VectorXd alpha;
  double final_h = 0.0;
  double min_h = 0.0;  // reference minimum from exact hypergradient descent
  double final_gap = 0.0;
  bool diverged = false;  // h increased for 100 consecutive steps
};

SobaTrace run_soba_on_oracle(const QuadraticInstance& inst, const Eigen::VectorXd& alpha0,
                             std::size_t steps, const SobaRates& rates);

double relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& want);

}  // namespace dsel::oracle
