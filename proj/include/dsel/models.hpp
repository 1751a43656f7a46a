#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dsel/example.hpp"
#include "dsel/loss.hpp"
#include "dsel/numcore.hpp"

namespace dsel {

enum class ModelKind { kFeatureMlp, kByteWindowLm };
enum class FeatureLoss { kMeanSquaredError, kCrossEntropy };

struct MainModelSpec {
  ModelKind kind = ModelKind::kFeatureMlp;
  std::vector<std::size_t> hidden;
  // feature-mlp
  std::size_t input_dim = 0;
  FeatureLoss feature_loss = FeatureLoss::kMeanSquaredError;
  std::size_t num_classes = 0;  // cross-entropy only
  // byte-window-lm
  std::size_t context = 8;
  std::size_t embed_dim = 16;
};

// Main model architecture. Parameters (theta) live outside in a ParamVector;
// the model itself is an immutable value.
class MainModel final : public LossAdapter<MainModel> {
 public:
  explicit MainModel(MainModelSpec spec);

  const MainModelSpec& spec() const { return spec_; }
  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }

  // He-style uniform fan-in init; the output layer is scaled down so initial
  // predictions are near-uniform (LM) or near-zero (regression).
  ParamVector init(std::uint64_t seed) const;

  // Byte-LM only: softmax distribution over the 256 next-byte values.
  std::vector<double> next_byte_distribution(const ParamVector& theta, const Example& ex) const;

  template <class S>
  typename Tape<S>::Var build(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const;

 private:
  template <class S>
  typename Tape<S>::Var logits(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const;

  MainModelSpec spec_;
  std::shared_ptr<const Layout> layout_;
};

// Maps examples to real-valued selection scores s(x; alpha).
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const Layout& layout() const = 0;
  virtual std::shared_ptr<const Layout> layout_ptr() const = 0;
  virtual std::vector<double> scores(const ParamVector& alpha, Batch batch) const = 0;
  // Gradient w.r.t. alpha of sum_i cotangent[i] * s(x_i; alpha).
  virtual ParamVector scores_vjp(const ParamVector& alpha, Batch batch,
                                 std::span<const double> cotangent) const = 0;
};

enum class ScoreInput {
  kFeatures,  // feature vector, optionally followed by the target
  kBytes,     // mean-pooled byte embeddings over context + next byte
};

struct WeightingNetSpec {
  ScoreInput input = ScoreInput::kFeatures;
  std::size_t input_dim = 0;  // features only
  bool include_target = true;
  std::size_t hidden = 32;
  std::size_t embed_dim = 16;
  double clamp = 20.0;

  bool operator==(const WeightingNetSpec&) const = default;
};

// Small MLP scorer. The final layer is zero-initialized, so a fresh network
// scores every example 0 and the normalized weights start exactly uniform.
class WeightingNet final : public Scorer {
 public:
  explicit WeightingNet(WeightingNetSpec spec);

  const WeightingNetSpec& spec() const { return spec_; }
  const Layout& layout() const override { return *layout_; }
  std::shared_ptr<const Layout> layout_ptr() const override { return layout_; }

  ParamVector init(std::uint64_t seed) const;

  std::vector<double> scores(const ParamVector& alpha, Batch batch) const override;
  ParamVector scores_vjp(const ParamVector& alpha, Batch batch,
                         std::span<const double> cotangent) const override;

  double score(const ParamVector& alpha, const Example& ex) const;

  template <class S>
  typename Tape<S>::Var build(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const;

 private:
  WeightingNetSpec spec_;
  std::shared_ptr<const Layout> layout_;
};

// Binary generic-vs-specific classifier sharing the weighting-net architecture.
class DomainClassifier {
 public:
  explicit DomainClassifier(WeightingNetSpec spec) : net_(std::move(spec)) {}

  const WeightingNet& net() const { return net_; }
  ParamVector init(std::uint64_t seed) const { return net_.init(seed); }

  // P(specific | x) for each example, in (0, 1).
  std::vector<double> prob_specific(const ParamVector& alpha, Batch batch) const;

  // Mean binary cross-entropy and its gradient. labels: 1 = specific, 0 = generic.
  ValueAndGrad bce(const ParamVector& alpha, Batch batch, std::span<const double> labels) const;

 private:
  WeightingNet net_;
};

}  // namespace dsel
