#include "dsel/models.hpp"

#include <cmath>
#include <random>
#include <string>

namespace dsel {
namespace {

constexpr std::size_t kVocab = 256;

std::string weight_name(std::size_t l) { return "w" + std::to_string(l); }
std::string bias_name(std::size_t l) { return "b" + std::to_string(l); }

void fill_uniform(std::span<double> out, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : out) v = dist(rng);
}

std::size_t byte_input_width(const BytePayload& b) { return b.context.size() + 1; }

}  // namespace

// ---------------------------------------------------------------------------
// MainModel

MainModel::MainModel(MainModelSpec spec) : spec_(std::move(spec)) {
  for (std::size_t h : spec_.hidden) {
    if (h == 0) throw ConfigError("hidden layer width must be positive");
  }
  auto layout = std::make_shared<Layout>();
  std::size_t in = 0;
  std::size_t out = 0;
  if (spec_.kind == ModelKind::kFeatureMlp) {
    if (spec_.input_dim == 0) throw ConfigError("feature-mlp needs input_dim > 0");
    if (spec_.feature_loss == FeatureLoss::kCrossEntropy && spec_.num_classes < 2)
      throw ConfigError("cross-entropy feature-mlp needs num_classes >= 2");
    in = spec_.input_dim;
    out = spec_.feature_loss == FeatureLoss::kCrossEntropy ? spec_.num_classes : 1;
  } else {
    if (spec_.context == 0 || spec_.embed_dim == 0)
      throw ConfigError("byte-window-lm needs context > 0 and embed_dim > 0");
    layout->add("embed", kVocab, spec_.embed_dim);
    in = spec_.context * spec_.embed_dim;
    out = kVocab;
  }
  std::size_t l = 0;
  for (std::size_t h : spec_.hidden) {
    layout->add(weight_name(l), in, h);
    layout->add(bias_name(l), 1, h);
    in = h;
    ++l;
  }
  layout->add(weight_name(l), in, out);
  layout->add(bias_name(l), 1, out);
  layout_ = std::move(layout);
}

ParamVector MainModel::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParamVector theta(layout_);
  const std::size_t layers = spec_.hidden.size() + 1;
  if (spec_.kind == ModelKind::kByteWindowLm) fill_uniform(theta.segment("embed"), 1.0, rng);
  for (std::size_t l = 0; l < layers; ++l) {
    const Segment& w = layout_->segment(weight_name(l));
    double limit = std::sqrt(6.0 / static_cast<double>(w.rows));
    if (l + 1 == layers) limit *= 0.1;
    fill_uniform(theta.segment(w.name), limit, rng);
  }
  return theta;
}

template <class S>
typename Tape<S>::Var MainModel::logits(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const {
  const std::size_t n = batch.size();
  typename Tape<S>::Var h;
  std::size_t next = 0;
  if (spec_.kind == ModelKind::kFeatureMlp) {
    std::vector<S> x;
    x.reserve(n * spec_.input_dim);
    for (const Example& ex : batch) {
      const FeaturePayload* f = ex.features();
      DSEL_REQUIRE(f != nullptr, "feature-mlp given a non-feature example");
      DSEL_REQUIRE(f->x.size() == spec_.input_dim, "feature dimension mismatch");
      for (double v : f->x) x.push_back(S(v));
    }
    h = tape.constant(std::move(x), n, spec_.input_dim);
  } else {
    std::vector<std::uint8_t> idx;
    idx.reserve(n * spec_.context);
    for (const Example& ex : batch) {
      const BytePayload* b = ex.bytes();
      DSEL_REQUIRE(b != nullptr, "byte-window-lm given a non-byte example");
      DSEL_REQUIRE(b->context.size() == spec_.context, "byte context length mismatch");
      idx.insert(idx.end(), b->context.begin(), b->context.end());
    }
    h = tape.embed_concat(p[0], idx, spec_.context);
    next = 1;
  }
  const std::size_t layers = spec_.hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    h = tape.add_bias(tape.matmul(h, p[next]), p[next + 1]);
    next += 2;
    if (l + 1 < layers) h = tape.tanh(h);
  }
  return h;
}

template <class S>
typename Tape<S>::Var MainModel::build(Tape<S>& tape, const ParamNodes<S>& p, Batch batch) const {
  auto z = logits(tape, p, batch);
  if (spec_.kind == ModelKind::kByteWindowLm) {
    std::vector<int> targets;
    targets.reserve(batch.size());
    for (const Example& ex : batch) targets.push_back(ex.bytes()->next);
    return tape.softmax_nll(z, targets);
  }
  if (spec_.feature_loss == FeatureLoss::kCrossEntropy) {
    std::vector<int> targets;
    targets.reserve(batch.size());
    for (const Example& ex : batch) targets.push_back(static_cast<int>(ex.features()->y));
    return tape.softmax_nll(z, targets);
  }
  std::vector<double> y;
  y.reserve(batch.size());
  for (const Example& ex : batch) y.push_back(ex.features()->y);
  return tape.half_sq_error(z, y);
}

std::vector<double> MainModel::next_byte_distribution(const ParamVector& theta,
                                                      const Example& ex) const {
  DSEL_REQUIRE(spec_.kind == ModelKind::kByteWindowLm, "next_byte_distribution needs a byte LM");
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, *layout_, theta.values());
  auto z = logits(tape, nodes, Batch(&ex, 1));
  std::vector<double> p = tape.value(z);
  double mx = p[0];
  for (double v : p) mx = std::max(mx, v);
  double total = 0.0;
  for (double& v : p) total += (v = std::exp(v - mx));
  for (double& v : p) v /= total;
  return p;
}

template Tape<double>::Var MainModel::build<double>(Tape<double>&, const ParamNodes<double>&,
                                                    Batch) const;
template Tape<Dual>::Var MainModel::build<Dual>(Tape<Dual>&, const ParamNodes<Dual>&, Batch) const;

// ---------------------------------------------------------------------------
// WeightingNet

WeightingNet::WeightingNet(WeightingNetSpec spec) : spec_(std::move(spec)) {
  if (spec_.hidden == 0) throw ConfigError("weighting net hidden width must be positive");
  if (!(spec_.clamp > 0.0)) throw ConfigError("score clamp must be positive");
  auto layout = std::make_shared<Layout>();
  std::size_t in = 0;
  if (spec_.input == ScoreInput::kFeatures) {
    if (spec_.input_dim == 0) throw ConfigError("weighting net needs input_dim > 0");
    in = spec_.input_dim + (spec_.include_target ? 1 : 0);
  } else {
    if (spec_.embed_dim == 0) throw ConfigError("weighting net needs embed_dim > 0");
    layout->add("embed", kVocab, spec_.embed_dim);
    in = spec_.embed_dim;
  }
  layout->add("w0", in, spec_.hidden);
  layout->add("b0", 1, spec_.hidden);
  layout->add("w1", spec_.hidden, 1);
  layout->add("b1", 1, 1);
  layout_ = std::move(layout);
}

ParamVector WeightingNet::init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  ParamVector alpha(layout_);
  if (spec_.input == ScoreInput::kBytes) fill_uniform(alpha.segment("embed"), 1.0, rng);
  const Segment& w0 = layout_->segment("w0");
  fill_uniform(alpha.segment("w0"), std::sqrt(6.0 / static_cast<double>(w0.rows)), rng);
  return alpha;  // w1, b1 stay zero
}

template <class S>
typename Tape<S>::Var WeightingNet::build(Tape<S>& tape, const ParamNodes<S>& p,
                                          Batch batch) const {
  const std::size_t n = batch.size();
  typename Tape<S>::Var h;
  std::size_t next = 0;
  if (spec_.input == ScoreInput::kFeatures) {
    const std::size_t width = spec_.input_dim + (spec_.include_target ? 1 : 0);
    std::vector<S> x;
    x.reserve(n * width);
    for (const Example& ex : batch) {
      const FeaturePayload* f = ex.features();
      DSEL_REQUIRE(f != nullptr, "feature weighting net given a non-feature example");
      DSEL_REQUIRE(f->x.size() == spec_.input_dim, "weighting net feature dimension mismatch");
      for (double v : f->x) x.push_back(S(v));
      if (spec_.include_target) x.push_back(S(f->y));
    }
    h = tape.constant(std::move(x), n, width);
  } else {
    DSEL_REQUIRE(n > 0, "empty batch");
    const BytePayload* first = batch[0].bytes();
    DSEL_REQUIRE(first != nullptr, "byte weighting net given a non-byte example");
    const std::size_t width = byte_input_width(*first);
    std::vector<std::uint8_t> idx;
    idx.reserve(n * width);
    for (const Example& ex : batch) {
      const BytePayload* b = ex.bytes();
      DSEL_REQUIRE(b != nullptr && byte_input_width(*b) == width,
                   "byte weighting net given an inconsistent example");
      idx.insert(idx.end(), b->context.begin(), b->context.end());
      idx.push_back(b->next);
    }
    h = tape.embed_mean(p[0], idx, width);
    next = 1;
  }
  h = tape.tanh(tape.add_bias(tape.matmul(h, p[next]), p[next + 1]));
  h = tape.add_bias(tape.matmul(h, p[next + 2]), p[next + 3]);
  return tape.soft_clamp(h, spec_.clamp);
}

std::vector<double> WeightingNet::scores(const ParamVector& alpha, Batch batch) const {
  DSEL_REQUIRE(alpha.layout() == *layout_, "alpha layout does not match weighting net");
  if (batch.empty()) return {};
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, *layout_, alpha.values());
  return tape.value(build(tape, nodes, batch));
}

ParamVector WeightingNet::scores_vjp(const ParamVector& alpha, Batch batch,
                                     std::span<const double> cotangent) const {
  DSEL_REQUIRE(alpha.layout() == *layout_, "alpha layout does not match weighting net");
  DSEL_REQUIRE(cotangent.size() == batch.size(), "cotangent size mismatch");
  ParamVector out(layout_);
  if (batch.empty()) return out;
  Tape<double> tape;
  auto nodes = bind_params<double>(tape, *layout_, alpha.values());
  auto s = build(tape, nodes, batch);
  tape.backward(tape.weighted_sum(s, cotangent));
  const auto& segs = layout_->segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& g = tape.grad(nodes[i]);
    std::copy(g.begin(), g.end(), out.values().begin() + segs[i].offset);
  }
  return out;
}

double WeightingNet::score(const ParamVector& alpha, const Example& ex) const {
  return scores(alpha, Batch(&ex, 1))[0];
}

template Tape<double>::Var WeightingNet::build<double>(Tape<double>&, const ParamNodes<double>&,
                                                       Batch) const;
template Tape<Dual>::Var WeightingNet::build<Dual>(Tape<Dual>&, const ParamNodes<Dual>&,
                                                   Batch) const;

// ---------------------------------------------------------------------------
// DomainClassifier

std::vector<double> DomainClassifier::prob_specific(const ParamVector& alpha, Batch batch) const {
  std::vector<double> p = net_.scores(alpha, batch);
  for (double& v : p) v = 1.0 / (1.0 + std::exp(-v));
  return p;
}

ValueAndGrad DomainClassifier::bce(const ParamVector& alpha, Batch batch,
                                   std::span<const double> labels) const {
  DSEL_REQUIRE(!batch.empty() && labels.size() == batch.size(), "label count mismatch");
  const std::vector<double> s = net_.scores(alpha, batch);
  const double inv = 1.0 / static_cast<double>(batch.size());
  std::vector<double> cot(s.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double z = s[i];
    loss += (std::max(z, 0.0) - labels[i] * z + std::log1p(std::exp(-std::abs(z)))) * inv;
    cot[i] = (1.0 / (1.0 + std::exp(-z)) - labels[i]) * inv;
  }
  return {loss, net_.scores_vjp(alpha, batch, cot)};
}

}  // namespace dsel
