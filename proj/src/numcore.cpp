#include "dsel/numcore.hpp"

#include <cmath>

namespace dsel {

Layout& Layout::add(std::string name, std::size_t rows, std::size_t cols) {
  for (const Segment& s : segments_) {
    DSEL_REQUIRE(s.name != name, "duplicate segment name: " + name);
  }
  segments_.push_back(Segment{std::move(name), rows, cols, size_});
  size_ += rows * cols;
  return *this;
}

const Segment& Layout::segment(std::string_view name) const { return segments_[index_of(name)]; }

std::size_t Layout::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw ContractError("no segment named '" + std::string(name) + "'");
}

std::shared_ptr<const Layout> Layout::flat(std::size_t n, std::string name) {
  auto layout = std::make_shared<Layout>();
  if (n > 0) layout->add(std::move(name), n, 1);
  return layout;
}

ParamVector::ParamVector() : layout_(std::make_shared<Layout>()) {}

ParamVector::ParamVector(std::shared_ptr<const Layout> layout)
    : layout_(std::move(layout)), values_(layout_->size(), 0.0) {}

ParamVector::ParamVector(std::shared_ptr<const Layout> layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
  DSEL_REQUIRE(values_.size() == layout_->size(), "value count does not match layout size");
}

ParamVector ParamVector::flat(std::vector<double> values) {
  auto layout = Layout::flat(values.size());
  return ParamVector(std::move(layout), std::move(values));
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout_->segment(name);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout_->segment(name);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

bool ParamVector::same_layout(const ParamVector& other) const {
  return layout_ == other.layout_ || *layout_ == *other.layout_;
}

bool ParamVector::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void ParamVector::set_zero() {
  for (double& v : values_) v = 0.0;
}

bool ParamVector::operator==(const ParamVector& other) const {
  return same_layout(other) && values_ == other.values_;
}

void require_same_layout(const ParamVector& a, const ParamVector& b) {
  DSEL_REQUIRE(a.same_layout(b), "parameter layout mismatch");
}

double dot(const ParamVector& a, const ParamVector& b) {
  require_same_layout(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
  ParamVector out = y;
  axpy_inplace(a, x, out);
  return out;
}

void axpy_inplace(double a, const ParamVector& x, ParamVector& y) {
  require_same_layout(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

ParamVector scale(double a, const ParamVector& x) {
  ParamVector out = x;
  for (double& v : out.values()) v *= a;
  return out;
}

}  // namespace dsel
