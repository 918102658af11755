#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "thermoshift/common.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

// One contraction branch. Two built-in shapes:
//   affine      x -> a*x + b
//   moebius-cf  x -> 1/(d + x)   (continued-fraction branch for digit d)
struct ContractionMap {
  enum class Kind { Affine, MoebiusCf };

  Kind kind = Kind::Affine;
  double a = 0.5;   // affine slope
  double b = 0.0;   // affine offset
  Symbol digit = 1; // cf digit

  double apply(double x) const {
    return kind == Kind::Affine ? a * x + b : 1.0 / (static_cast<double>(digit) + x);
  }

  double derivative(double x) const {
    if (kind == Kind::Affine) return a;
    const double d = static_cast<double>(digit) + x;
    return -1.0 / (d * d);
  }

  // Both map shapes are monotone, so the image of an interval is the hull
  // of the endpoint images.
  Interval image(const Interval& X) const {
    return Interval::hull(apply(X.lo), apply(X.hi));
  }

  std::string describe() const {
    if (kind == Kind::Affine)
      return "affine(a=" + std::to_string(a) + ", b=" + std::to_string(b) + ")";
    return "cf(digit=" + std::to_string(digit) + ")";
  }
};

// Symbol -> digit assignment for the continued-fraction family. Either an
// explicit finite list or the unbounded range first..inf.
struct DigitSet {
  std::vector<Symbol> list;   // used when non-empty
  bool unbounded = false;     // digits first, first+1, ...
  Symbol first = 1;

  Symbol digit(Symbol sym) const {
    if (!list.empty()) {
      if (sym < 1 || static_cast<std::size_t>(sym) > list.size())
        throw DomainError("digit set: symbol " + std::to_string(sym) + " out of range");
      return list[static_cast<std::size_t>(sym - 1)];
    }
    if (!unbounded) throw DomainError("digit set: empty");
    return first + (sym - 1);
  }

  std::optional<std::size_t> count() const {
    if (!list.empty()) return list.size();
    return std::nullopt;
  }

  Symbol min_digit() const { return list.empty() ? first : *std::min_element(list.begin(), list.end()); }
};

// Contractive IFS on a compact interval X. `s` is the uniform contraction
// factor sup_i sup_X |phi_i'|, certified analytically at construction.
struct IfsSystem {
  Interval domain;
  double s = 0.5;

  struct AffineFamily {
    std::vector<ContractionMap> maps;
  };
  struct CfFamily {
    DigitSet digits;
  };
  std::variant<AffineFamily, CfFamily> family;

  double diam() const { return domain.length(); }

  std::optional<std::size_t> symbol_count() const {
    if (const auto* aff = std::get_if<AffineFamily>(&family)) return aff->maps.size();
    return std::get<CfFamily>(family).digits.count();
  }

  // Caps an alphabet cutoff at the family size when that is finite.
  Symbol effective_cutoff(Symbol N) const {
    if (auto c = symbol_count())
      return std::min<Symbol>(N, static_cast<Symbol>(*c));
    return N;
  }

  ContractionMap map(Symbol sym) const {
    if (sym < 1) throw DomainError("map: symbol must be >= 1");
    if (const auto* aff = std::get_if<AffineFamily>(&family)) {
      if (static_cast<std::size_t>(sym) > aff->maps.size())
        throw DomainError("map: symbol " + std::to_string(sym) + " has no branch");
      return aff->maps[static_cast<std::size_t>(sym - 1)];
    }
    ContractionMap m;
    m.kind = ContractionMap::Kind::MoebiusCf;
    m.digit = std::get<CfFamily>(family).digits.digit(sym);
    return m;
  }

  double apply(Symbol sym, double x) const { return map(sym).apply(x); }

  Interval image(Symbol sym) const { return map(sym).image(domain); }
};

// phi_omega(x) = phi_{w1} o ... o phi_{wn} (x); the empty word is the identity.
inline double apply_word(const IfsSystem& sys, const Word& w, double x) {
  if (!sys.domain.contains(x, 1e-12))
    throw DomainError("apply_word: point " + std::to_string(x) + " outside domain");
  for (std::size_t j = w.size(); j > 0; --j) x = sys.apply(w[j - 1], x);
  return x;
}

// Image interval phi_omega(X), exact by endpoint monotonicity.
inline Interval word_image(const IfsSystem& sys, const Word& w) {
  double a = sys.domain.lo, b = sys.domain.hi;
  for (std::size_t j = w.size(); j > 0; --j) {
    a = sys.apply(w[j - 1], a);
    b = sys.apply(w[j - 1], b);
  }
  return Interval::hull(a, b);
}

struct CodedPoint {
  double x = 0.0;
  double error_bound = 0.0;  // valid for every infinite extension of the word
};

// Approximates pi(omega rho) by phi_omega(midpoint); the bound s^|omega|*diam(X)
// holds uniformly over all tails rho.
inline CodedPoint code_point(const IfsSystem& sys, const Word& w) {
  if (w.empty()) throw DomainError("code_point: need |omega| >= 1");
  CodedPoint p;
  p.x = apply_word(sys, w, sys.domain.mid());
  p.error_bound = std::pow(sys.s, static_cast<double>(w.size())) * sys.diam();
  return p;
}

struct ContractionCheck {
  bool contractive = false;
  double s_estimate = 1.0;
};

// Max over symbols <= N and grid points of |phi_i'|.
inline ContractionCheck verify_contraction(const IfsSystem& sys, AlphabetCutoff cut,
                                           std::size_t grid_resolution = 256) {
  const Symbol N = sys.effective_cutoff(cut.N);
  double worst = 0.0;
  for (Symbol i = 1; i <= N; ++i) {
    const ContractionMap m = sys.map(i);
    for (std::size_t k = 0; k <= grid_resolution; ++k) {
      const double x = sys.domain.lo + sys.diam() * static_cast<double>(k) /
                                           static_cast<double>(grid_resolution);
      worst = std::max(worst, std::abs(m.derivative(x)));
    }
  }
  return {worst < 1.0, worst};
}

// Pairwise disjointness of the image intervals phi_i(X), closed-interval
// reading (touching endpoints fail).
inline bool verify_separation(const IfsSystem& sys, AlphabetCutoff cut) {
  const Symbol N = sys.effective_cutoff(cut.N);
  std::vector<Interval> images;
  images.reserve(static_cast<std::size_t>(N));
  for (Symbol i = 1; i <= N; ++i) images.push_back(sys.image(i));
  for (std::size_t a = 0; a < images.size(); ++a)
    for (std::size_t b = a + 1; b < images.size(); ++b)
      if (!intervals_disjoint(images[a], images[b])) return false;
  return true;
}

namespace detail {

inline void require_into_domain(const IfsSystem& sys, Symbol sym) {
  const Interval img = sys.image(sym);
  const double eps = 1e-12 * std::max(1.0, std::abs(sys.domain.hi));
  if (img.lo < sys.domain.lo - eps || img.hi > sys.domain.hi + eps)
    throw ConfigError("map " + sys.map(sym).describe() + " leaves the domain: image [" +
                      std::to_string(img.lo) + ", " + std::to_string(img.hi) + "]");
}

}  // namespace detail

// Checked constructor for affine families: every branch must map X into X
// with |slope| < 1.
inline IfsSystem make_affine_system(Interval X, std::vector<std::pair<double, double>> slope_offset) {
  if (!(X.lo < X.hi)) throw ConfigError("domain: need lo < hi");
  if (slope_offset.empty()) throw ConfigError("affine system: no maps");
  IfsSystem sys;
  sys.domain = X;
  IfsSystem::AffineFamily fam;
  double s = 0.0;
  for (const auto& [a, b] : slope_offset) {
    ContractionMap m;
    m.kind = ContractionMap::Kind::Affine;
    m.a = a;
    m.b = b;
    fam.maps.push_back(m);
    s = std::max(s, std::abs(a));
  }
  sys.family = std::move(fam);
  sys.s = s;
  const Symbol n = static_cast<Symbol>(slope_offset.size());
  for (Symbol i = 1; i <= n; ++i) {
    if (std::abs(sys.map(i).a) >= 1.0)
      throw ConfigError("map " + sys.map(i).describe() +
                        " is not a contraction: |slope| = " + std::to_string(std::abs(sys.map(i).a)));
    detail::require_into_domain(sys, i);
  }
  return sys;
}

// Checked constructor for continued-fraction families. One-step contraction
// on X is required: sup |phi_d'| = (d_min + x_lo)^-2 must be < 1.
inline IfsSystem make_cf_system(Interval X, DigitSet digits) {
  if (!(X.lo < X.hi)) throw ConfigError("domain: need lo < hi");
  if (digits.list.empty() && !digits.unbounded) throw ConfigError("cf system: no digits");
  IfsSystem sys;
  sys.domain = X;
  const Symbol dmin = digits.min_digit();
  if (dmin < 1) throw ConfigError("cf system: digits must be >= 1");
  const double dplus = static_cast<double>(dmin) + X.lo;
  const double sup_deriv = 1.0 / (dplus * dplus);
  sys.family = IfsSystem::CfFamily{digits};
  sys.s = sup_deriv;
  if (sup_deriv >= 1.0)
    throw ConfigError("map cf(digit=" + std::to_string(dmin) +
                      ") is not a contraction on the domain: sup|phi'| = " +
                      std::to_string(sup_deriv));
  if (auto c = digits.count()) {
    for (Symbol i = 1; i <= static_cast<Symbol>(*c); ++i) detail::require_into_domain(sys, i);
  } else {
    // Unbounded digits: images accumulate at 0, so X must start at 0 and the
    // first two branches pin the checks for all the rest.
    if (X.lo != 0.0)
      throw ConfigError("cf system with unbounded digits needs domain starting at 0");
    detail::require_into_domain(sys, 1);
    detail::require_into_domain(sys, 2);
  }
  return sys;
}

}  // namespace thermoshift
