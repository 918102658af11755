#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "thermoshift/common.hpp"

namespace thermoshift {

// Piecewise-linear function on a uniform grid spanning exactly the domain
// interval. M cells, M+1 nodes.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(Interval dom, std::size_t cells, double fill = 0.0)
      : dom_(dom), values_(cells + 1, fill) {
    if (cells < 1) throw DomainError("grid function: need >= 2 nodes");
  }

  static GridFunction ones(Interval dom, std::size_t cells) {
    return GridFunction(dom, cells, 1.0);
  }

  template <typename Fn>
  static GridFunction sample(Interval dom, std::size_t cells, Fn&& fn) {
    GridFunction g(dom, cells);
    for (std::size_t k = 0; k < g.values_.size(); ++k) g.values_[k] = fn(g.node(k));
    return g;
  }

  const Interval& domain() const { return dom_; }
  std::size_t cells() const { return values_.size() - 1; }
  std::size_t nodes() const { return values_.size(); }
  double step() const { return dom_.length() / static_cast<double>(cells()); }

  double node(std::size_t k) const {
    if (k == cells()) return dom_.hi;
    return dom_.lo + dom_.length() * static_cast<double>(k) / static_cast<double>(cells());
  }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  const std::vector<double>& values() const { return values_; }

  // Linear interpolation; points a hair outside (floating-point dust from
  // map images) are clamped.
  double eval(double x) const {
    const double t = (x - dom_.lo) / dom_.length() * static_cast<double>(cells());
    if (t <= 0.0) return values_.front();
    if (t >= static_cast<double>(cells())) return values_.back();
    const std::size_t k = static_cast<std::size_t>(t);
    const double frac = t - static_cast<double>(k);
    return values_[k] * (1.0 - frac) + values_[k + 1] * frac;
  }

  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double max_value() const { return *std::max_element(values_.begin(), values_.end()); }
  double min_value() const { return *std::min_element(values_.begin(), values_.end()); }

  GridFunction& scale(double c) {
    for (double& v : values_) v *= c;
    return *this;
  }

  friend double sup_distance(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.values_.size(); ++k)
      m = std::max(m, std::abs(a.values_[k] - b.values_[k]));
    return m;
  }

 private:
  Interval dom_;
  std::vector<double> values_;
};

}  // namespace thermoshift
