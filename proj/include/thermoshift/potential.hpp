#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "thermoshift/common.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

// Distortion data (Q, beta, V). Q is tied to the stored pair by the exact
// formula Q = exp(V * e^-beta / (1 - e^-beta)).
struct DistortionData {
  double Q = 1.0;
  double beta = 1.0;
  double V = 0.0;
};

inline double distortion_Q(double V, double beta) {
  const double e = std::exp(-beta);
  return std::exp(V * e / (1.0 - e));
}

// Per-symbol potential family phi^(i): X -> R.
//
//   constant         phi^(i) = c_i                  (finite list)
//   geometric-tail   phi^(i) = -i * rate            (rule for every i >= 1)
//   cf-geometric     phi^(i)(x) = -2 s log(d_i + x)
//   tabulated-affine phi^(i)(x) = a_i x + b_i       (finite list)
struct PotentialFamily {
  struct Constant {
    std::vector<double> values;
  };
  struct GeometricTail {
    double rate = std::log(2.0);
  };
  struct CfGeometric {
    double s_param = 1.0;
    DigitSet digits;
  };
  struct TabulatedAffine {
    std::vector<std::pair<double, double>> coeffs;  // (a_i, b_i)
  };

  std::variant<Constant, GeometricTail, CfGeometric, TabulatedAffine> fam;

  // Holder certificate: V >= e^{beta n} V_n(phi) for all n.
  double beta = 1.0;
  double V = 0.0;
  double lip_max = 0.0;  // sup_i Lip(phi^(i)) over the symbols in play

  double eval(Symbol i, double x) const {
    if (const auto* c = std::get_if<Constant>(&fam)) {
      if (i < 1 || static_cast<std::size_t>(i) > c->values.size())
        throw DomainError("potential: symbol out of range");
      return c->values[static_cast<std::size_t>(i - 1)];
    }
    if (const auto* g = std::get_if<GeometricTail>(&fam))
      return -static_cast<double>(i) * g->rate;
    if (const auto* cf = std::get_if<CfGeometric>(&fam)) {
      const double d = static_cast<double>(cf->digits.digit(i));
      return -2.0 * cf->s_param * std::log(d + x);
    }
    const auto& t = std::get<TabulatedAffine>(fam);
    if (i < 1 || static_cast<std::size_t>(i) > t.coeffs.size())
      throw DomainError("potential: symbol out of range");
    return t.coeffs[static_cast<std::size_t>(i - 1)].first * x +
           t.coeffs[static_cast<std::size_t>(i - 1)].second;
  }

  // Exact per-symbol extrema on an interval (every built-in shape is
  // monotone or constant in x).
  double sup_on(Symbol i, const Interval& X) const {
    if (std::holds_alternative<CfGeometric>(fam)) return eval(i, X.lo);
    if (const auto* t = std::get_if<TabulatedAffine>(&fam)) {
      const double a = t->coeffs[static_cast<std::size_t>(i - 1)].first;
      return eval(i, a >= 0 ? X.hi : X.lo);
    }
    return eval(i, X.lo);
  }

  double inf_on(Symbol i, const Interval& X) const {
    if (std::holds_alternative<CfGeometric>(fam)) return eval(i, X.hi);
    if (const auto* t = std::get_if<TabulatedAffine>(&fam)) {
      const double a = t->coeffs[static_cast<std::size_t>(i - 1)].first;
      return eval(i, a >= 0 ? X.lo : X.hi);
    }
    return eval(i, X.lo);
  }

  // Upper bound on the Lipschitz constant of phi^(i) on X.
  double lip(Symbol i, const Interval& X) const {
    if (std::holds_alternative<Constant>(fam) || std::holds_alternative<GeometricTail>(fam))
      return 0.0;
    if (const auto* cf = std::get_if<CfGeometric>(&fam)) {
      const double d = static_cast<double>(cf->digits.digit(i));
      return 2.0 * cf->s_param / (d + X.lo);
    }
    const auto& t = std::get<TabulatedAffine>(fam);
    return std::abs(t.coeffs[static_cast<std::size_t>(i - 1)].first);
  }

  std::optional<std::size_t> symbol_count() const {
    if (const auto* c = std::get_if<Constant>(&fam)) return c->values.size();
    if (std::holds_alternative<GeometricTail>(fam)) return std::nullopt;
    if (const auto* cf = std::get_if<CfGeometric>(&fam)) return cf->digits.count();
    return std::get<TabulatedAffine>(fam).coeffs.size();
  }

  Symbol effective_cutoff(Symbol N) const {
    if (auto c = symbol_count()) return std::min<Symbol>(N, static_cast<Symbol>(*c));
    return N;
  }

  bool is_constant_family() const {
    return std::holds_alternative<Constant>(fam) || std::holds_alternative<GeometricTail>(fam);
  }
};

// Certifies (beta, V) for a family over a given system. With uniform factor s
// and L = sup_i Lip(phi^(i)), points agreeing to depth n are phi-close within
// L * s^(n-1) * diam(X), so beta = -log s and V = L * diam(X) / s dominate
// e^{beta n} V_n for every n. Constant families carry V = 0 exactly.
inline PotentialFamily certify_potential(PotentialFamily pf, const IfsSystem& sys,
                                         Symbol probe_N = 64) {
  pf.beta = -std::log(sys.s);
  if (pf.is_constant_family()) {
    pf.V = 0.0;
    pf.lip_max = 0.0;
    return pf;
  }
  const Symbol N = pf.effective_cutoff(probe_N);
  double L = 0.0;
  for (Symbol i = 1; i <= N; ++i) L = std::max(L, pf.lip(i, sys.domain));
  // The Lipschitz bound of the cf family is largest for the smallest digit,
  // so probing up to N covers the unbounded tail too.
  pf.lip_max = L;
  pf.V = L * sys.diam() / sys.s;
  return pf;
}

inline DistortionData distortion_constant(const PotentialFamily& pf) {
  return {distortion_Q(pf.V, pf.beta), pf.beta, pf.V};
}

// S_omega(phi)(x) = sum_{j=1..n} phi^(w_j)(phi_{sigma^j w}(x)), the last term
// composed with the identity. Returns the sum and phi_omega(x), which the
// same backward pass produces for free.
struct BranchSum {
  double value = 0.0;
  double endpoint = 0.0;  // phi_omega(x)
};

inline BranchSum birkhoff_branch_sum_full(const PotentialFamily& pf, const IfsSystem& sys,
                                          const Word& w, double x) {
  if (!sys.domain.contains(x, 1e-12))
    throw DomainError("branch sum: point outside domain");
  BranchSum r;
  r.endpoint = x;
  for (std::size_t j = w.size(); j > 0; --j) {
    r.value += pf.eval(w[j - 1], r.endpoint);
    r.endpoint = sys.apply(w[j - 1], r.endpoint);
  }
  return r;
}

inline double birkhoff_branch_sum(const PotentialFamily& pf, const IfsSystem& sys,
                                  const Word& w, double x) {
  return birkhoff_branch_sum_full(pf, sys, w, x).value;
}

// Amalgamated potential phi(omega) = phi^(w1)(pi(sigma omega)) evaluated from
// a finite prefix; the coding error propagates through Lip(phi^(w1)).
struct AmalgamatedValue {
  double value = 0.0;
  double error_bound = 0.0;
};

inline AmalgamatedValue eval_amalgamated(const PotentialFamily& pf, const IfsSystem& sys,
                                         const Word& prefix, std::size_t depth = 0) {
  if (prefix.size() < 2)
    throw DomainError("eval_amalgamated: need |omega| >= 2");
  std::size_t use = prefix.size() - 1;
  if (depth > 0) use = std::min(use, depth);
  const Word tail = prefix.shifted(1).prefix(use);
  const CodedPoint p = code_point(sys, tail);
  if (!sys.domain.contains(p.x, 1e-12))
    throw DomainError("eval_amalgamated: coded point left the domain");
  AmalgamatedValue r;
  r.value = pf.eval(prefix.first(), p.x);
  r.error_bound = pf.lip(prefix.first(), sys.domain) * p.error_bound;
  return r;
}

// Summability data for sup_X sum_{i<=N} e^{phi^(i)} plus the analytic bound on
// the dropped tail sum_{i>N} sup_X e^{phi^(i)}.
struct SummabilityBound {
  double head = 0.0;
  double tail = 0.0;
};

inline SummabilityBound summability_bound(const PotentialFamily& pf, const IfsSystem& sys,
                                          AlphabetCutoff cut, std::size_t grid = 256) {
  const Symbol N = pf.effective_cutoff(cut.N);
  SummabilityBound r;

  double best = 0.0;
  for (std::size_t k = 0; k <= grid; ++k) {
    const double x = sys.domain.lo + sys.diam() * static_cast<double>(k) /
                                         static_cast<double>(grid);
    double sum = 0.0;
    for (Symbol i = 1; i <= N; ++i) sum += std::exp(pf.eval(i, x));
    best = std::max(best, sum);
  }
  // Padding for non-monotone sums; the built-in families are sums of
  // monotone terms so the endpoint values already dominate, but the pad
  // keeps the bound sound for tabulated families with mixed slopes.
  if (std::holds_alternative<PotentialFamily::TabulatedAffine>(pf.fam)) {
    double lipsum = 0.0;
    for (Symbol i = 1; i <= N; ++i)
      lipsum += pf.lip(i, sys.domain) * std::exp(pf.sup_on(i, sys.domain));
    best += lipsum * sys.diam() / (2.0 * static_cast<double>(grid));
  }
  r.head = best;

  if (auto c = pf.symbol_count()) {
    // Finite family truncated below its size: the dropped terms are summable
    // directly.
    double t = 0.0;
    for (Symbol i = N + 1; i <= static_cast<Symbol>(*c); ++i)
      t += std::exp(pf.sup_on(i, sys.domain));
    r.tail = t;
    return r;
  }
  if (std::holds_alternative<PotentialFamily::GeometricTail>(pf.fam)) {
    const double rate = std::get<PotentialFamily::GeometricTail>(pf.fam).rate;
    r.tail = std::exp(-rate * static_cast<double>(N + 1)) / (1.0 - std::exp(-rate));
    return r;
  }
  // cf-geometric over unbounded digits: sum_{i>N} (d_i + x)^-2s <= integral
  // comparison N^(1-2s)/(2s-1), divergent at s <= 1/2.
  const auto& cf = std::get<PotentialFamily::CfGeometric>(pf.fam);
  if (cf.s_param <= 0.5)
    throw DivergenceError("summability tail diverges: cf-geometric with s_param <= 1/2");
  const double twos = 2.0 * cf.s_param;
  r.tail = std::pow(static_cast<double>(N), 1.0 - twos) / (twos - 1.0);
  return r;
}

// Sampled distortion check: for x, y in phi_tau(X) the branch sums differ by
// at most V/(1 - e^-beta) * e^{-beta |tau|}. Counts violations over random
// (tau, omega, x, y) draws.
struct DistortionSampleReport {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // observed |dS| / bound, wants <= 1
};

inline DistortionSampleReport check_distortion_samples(const PotentialFamily& pf,
                                                       const IfsSystem& sys, AlphabetCutoff cut,
                                                       std::size_t samples,
                                                       std::size_t max_len = 8,
                                                       std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  std::uniform_int_distribution<Symbol> sym(1, N);
  std::uniform_int_distribution<std::size_t> tau_len(0, max_len);
  std::uniform_int_distribution<std::size_t> omega_len(1, max_len);
  std::uniform_real_distribution<double> unif(sys.domain.lo, sys.domain.hi);

  DistortionSampleReport rep;
  rep.samples = samples;
  const double denom = 1.0 - std::exp(-pf.beta);
  for (std::size_t t = 0; t < samples; ++t) {
    Word tau, omega;
    const std::size_t lt = tau_len(rng), lo = omega_len(rng);
    for (std::size_t k = 0; k < lt; ++k) tau.symbols.push_back(sym(rng));
    for (std::size_t k = 0; k < lo; ++k) omega.symbols.push_back(sym(rng));
    const double x = apply_word(sys, tau, unif(rng));
    const double y = apply_word(sys, tau, unif(rng));
    const double ds = std::abs(birkhoff_branch_sum(pf, sys, omega, x) -
                               birkhoff_branch_sum(pf, sys, omega, y));
    const double bound =
        pf.V / denom * std::exp(-pf.beta * static_cast<double>(lt)) + 1e-13;
    rep.worst_ratio = std::max(rep.worst_ratio, bound > 0.0 ? ds / bound : 0.0);
    if (ds > bound) ++rep.violations;
  }
  return rep;
}

// Sampled lower estimate of V_n(phi) and of V = sup_n e^{beta n} V_n.
struct VariationEstimate {
  double V_est = 0.0;
  std::vector<double> per_n;         // V_n estimates, index n-1
  std::vector<double> scaled_per_n;  // e^{beta n} V_n estimates
};

inline VariationEstimate estimate_variation(const PotentialFamily& pf, const IfsSystem& sys,
                                            std::size_t n_max, std::size_t samples,
                                            AlphabetCutoff cut, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  std::uniform_int_distribution<Symbol> sym(1, N);
  // Extend far enough that the coding error is negligible next to the
  // oscillations being measured.
  const std::size_t pad = static_cast<std::size_t>(
      std::ceil(std::log(1e-14) / std::log(sys.s))) + 2;

  VariationEstimate r;
  r.per_n.assign(n_max, 0.0);
  r.scaled_per_n.assign(n_max, 0.0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    double vn = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
      Word common;
      common.symbols.reserve(n + pad);
      for (std::size_t k = 0; k < n; ++k) common.symbols.push_back(sym(rng));
      Word a = common, b = common;
      for (std::size_t k = 0; k < pad; ++k) {
        a.symbols.push_back(sym(rng));
        b.symbols.push_back(sym(rng));
      }
      const double fa = eval_amalgamated(pf, sys, a).value;
      const double fb = eval_amalgamated(pf, sys, b).value;
      vn = std::max(vn, std::abs(fa - fb));
    }
    r.per_n[n - 1] = vn;
    r.scaled_per_n[n - 1] = std::exp(pf.beta * static_cast<double>(n)) * vn;
    r.V_est = std::max(r.V_est, r.scaled_per_n[n - 1]);
  }
  return r;
}

}  // namespace thermoshift
