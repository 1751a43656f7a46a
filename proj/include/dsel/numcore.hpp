#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsel/errors.hpp"

namespace dsel {

// A named, row-major block inside a flat parameter array.
struct Segment {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Segment&) const = default;
};

// Ordered, contiguous segments covering [0, size()).
class Layout {
 public:
  Layout() = default;

  Layout& add(std::string name, std::size_t rows, std::size_t cols);

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t size() const { return size_; }

  bool operator==(const Layout&) const = default;

  static std::shared_ptr<const Layout> flat(std::size_t n, std::string name = "x");

 private:
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

// Flat parameter array (theta, alpha or the SOBA auxiliary v) sharing a layout.
class ParamVector {
 public:
  ParamVector();
  explicit ParamVector(std::shared_ptr<const Layout> layout);
  ParamVector(std::shared_ptr<const Layout> layout, std::vector<double> values);

  static ParamVector flat(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }

  bool same_layout(const ParamVector& other) const;
  bool all_finite() const;
  void set_zero();

  bool operator==(const ParamVector& other) const;

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<double> values_;
};

void require_same_layout(const ParamVector& a, const ParamVector& b);

double dot(const ParamVector& a, const ParamVector& b);
double norm(const ParamVector& a);
// Returns a * x + y.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);
// y += a * x
void axpy_inplace(double a, const ParamVector& x, ParamVector& y);
ParamVector scale(double a, const ParamVector& x);

}  // namespace dsel
