#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "thermoshift/common.hpp"
#include "thermoshift/gibbs.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

struct ValueWithTail {
  double value = 0.0;
  double tail = 0.0;
};

namespace detail {

// Family-specific analytic bounds on tails of the form
// sum_{i>N} (A + B*i or B*log i) * e^{sup phi^(i)}, used by the entropy and
// finiteness checks. Returns +inf when no convergent comparison is available.
inline double weighted_tail_bound(const PotentialFamily& pf, const IfsSystem& sys, Symbol N,
                                  double per_symbol_scale) {
  if (auto c = pf.symbol_count()) {
    double t = 0.0;
    for (Symbol i = N + 1; i <= static_cast<Symbol>(*c); ++i)
      t += (std::abs(pf.sup_on(i, sys.domain)) + std::abs(pf.inf_on(i, sys.domain)) + 1.0) *
           std::exp(pf.sup_on(i, sys.domain));
    return per_symbol_scale * t;
  }
  if (const auto* g = std::get_if<PotentialFamily::GeometricTail>(&pf.fam)) {
    // sum_{i>N} (i*rate + 1) e^{-i rate}, closed geometric forms
    const double q = std::exp(-g->rate);
    const double qn = std::pow(q, static_cast<double>(N + 1));
    const double sum_geo = qn / (1.0 - q);
    const double sum_igeo =
        qn * (static_cast<double>(N + 1) + q / (1.0 - q)) / (1.0 - q);
    return per_symbol_scale * (g->rate * sum_igeo + sum_geo);
  }
  const auto& cf = std::get<PotentialFamily::CfGeometric>(pf.fam);
  if (cf.s_param <= 0.5) return std::numeric_limits<double>::infinity();
  // sum_{i>N} (2s log(i+1) + 1) (i)^-2s by integral comparison
  const double twos = 2.0 * cf.s_param;
  const double base = std::pow(static_cast<double>(N), 1.0 - twos) / (twos - 1.0);
  return per_symbol_scale *
         base * (twos * (std::log(static_cast<double>(N + 1)) + 1.0 / (twos - 1.0)) + 1.0);
}

// Signed convergence margin of the family's tails: positive means the
// analytic comparison converges.
inline double tail_margin(const PotentialFamily& pf) {
  if (pf.symbol_count()) return 1.0;  // finite alphabet, nothing to diverge
  if (const auto* g = std::get_if<PotentialFamily::GeometricTail>(&pf.fam)) return g->rate;
  return 2.0 * std::get<PotentialFamily::CfGeometric>(pf.fam).s_param - 1.0;
}

}  // namespace detail

// Entropy of the depth-1 cylinder partition with its analytic tail bound.
inline ValueWithTail partition_entropy(const InvariantMeasureTable& t,
                                       const PotentialFamily& pf, const IfsSystem& sys,
                                       double P_est, double Q) {
  ValueWithTail r;
  for (Symbol i = 1; i <= t.cutoff; ++i) {
    const double mu = t.at(Word{i});
    if (mu > 0.0) r.value -= mu * std::log(mu);
  }
  // Dropped symbols carry mu[i] <= Q e^{sup phi^(i) - P}; -x log x is
  // increasing below 1/e, so the analytic weighted tail dominates.
  r.tail = detail::weighted_tail_bound(pf, sys, t.cutoff,
                                       Q * std::exp(-P_est) * (1.0 + std::abs(std::log(Q)) +
                                                               std::abs(P_est)));
  return r;
}

// The three equivalent finiteness conditions. Each verdict carries the margin
// by which its analytic tail comparison converges (positive) or fails.
struct FinitenessVerdict {
  std::string name;
  bool finite = false;
  bool conclusive = true;
  double margin = 0.0;
  double head = 0.0;
  double tail = 0.0;
};

struct FinitenessReport {
  FinitenessVerdict a;  // integral of -phi
  FinitenessVerdict b;  // sum inf(-phi|[i]) exp(inf phi|[i])
  FinitenessVerdict c;  // partition entropy
  bool coherent = true;
};

inline FinitenessReport check_finiteness_conditions(const PotentialFamily& pf, const IfsSystem& sys,
                                   const InvariantMeasureTable& t, double P_est, double Q) {
  FinitenessReport rep;
  const double margin = detail::tail_margin(pf);
  const Interval X = sys.domain;
  // Over a depth-1 cylinder, phi ranges inside [inf_X, sup_X] of phi^(i)
  // widened by the depth-1 distortion.
  const double bracket_pad = pf.V * std::exp(-pf.beta) / (1.0 - std::exp(-pf.beta));

  rep.a.name = "integral_neg_phi_finite";
  for (Symbol i = 1; i <= t.cutoff; ++i)
    rep.a.head += std::max(0.0, -(pf.inf_on(i, X) - bracket_pad)) * t.at(Word{i});
  rep.a.tail = detail::weighted_tail_bound(pf, sys, t.cutoff, Q * std::exp(-P_est));
  rep.a.margin = margin;
  rep.a.finite = std::isfinite(rep.a.tail) && margin > 0.0;
  rep.a.conclusive = true;

  rep.b.name = "inf_series_finite";
  for (Symbol i = 1; i <= t.cutoff; ++i) {
    const double inf_phi = pf.inf_on(i, X) - bracket_pad;
    rep.b.head += (-(pf.sup_on(i, X))) * std::exp(inf_phi);
  }
  rep.b.tail = detail::weighted_tail_bound(pf, sys, t.cutoff, 1.0);
  rep.b.margin = margin;
  rep.b.finite = std::isfinite(rep.b.tail) && margin > 0.0;
  rep.b.conclusive = true;

  rep.c.name = "partition_entropy_finite";
  const ValueWithTail H = partition_entropy(t, pf, sys, P_est, Q);
  rep.c.head = H.value;
  rep.c.tail = H.tail;
  rep.c.margin = margin;
  rep.c.finite = std::isfinite(H.tail) && margin > 0.0;
  rep.c.conclusive = true;

  rep.coherent = (rep.a.finite == rep.b.finite) && (rep.b.finite == rep.c.finite);
  return rep;
}

// H_n / n over the tabulated depth-n cylinders.
inline ValueWithTail entropy_rate(const InvariantMeasureTable& t, const PotentialFamily& pf,
                                  const IfsSystem& sys, std::size_t n, double P_est, double Q) {
  if (n < 1 || n > t.depth) throw DomainError("entropy_rate: depth out of range");
  ValueWithTail r;
  double H = 0.0;
  for (const auto& [w, mu] : t.mass) {
    if (w.size() != n) continue;
    if (mu > 0.0) H -= mu * std::log(mu);
  }
  r.value = H / static_cast<double>(n);
  r.tail = detail::weighted_tail_bound(
               pf, sys, t.cutoff,
               Q * std::exp(-P_est) * (1.0 + std::abs(std::log(Q)) + std::abs(P_est)));
  return r;
}

// integral of phi against mu_hat from depth-n cylinder representatives.
inline ValueWithTail integral_phi(const PotentialFamily& pf, const IfsSystem& sys,
                                  const InvariantMeasureTable& t, std::size_t depth) {
  if (depth < 1 || depth > t.depth) throw DomainError("integral_phi: depth out of range");
  ValueWithTail r;
  for (const auto& [w, mu] : t.mass) {
    if (w.size() != depth) continue;
    double rep_value;
    if (w.size() >= 2) {
      rep_value = eval_amalgamated(pf, sys, w).value;
    } else {
      rep_value = pf.eval(w.first(), sys.domain.mid());
    }
    r.value += mu * rep_value;
  }
  // Representative error: oscillation of phi over a depth-n cylinder plus tail.
  r.tail = pf.V * std::exp(-pf.beta * static_cast<double>(depth)) +
           detail::weighted_tail_bound(pf, sys, t.cutoff, std::exp(-t.P_est) * 2.0) *
               (t.ledger.tail_ratio() > 0.0 ? 1.0 : 0.0);
  return r;
}

struct EquilibriumReport {
  ValueWithTail partition_H;      // depth-1 partition entropy
  ValueWithTail int_phi;          // integral of phi d mu_hat
  std::vector<double> entropy_n;  // H_n / n for n = 1..depth
  double pressure_ref = 0.0;
  double defect = 0.0;            // |H_n/n + int phi - P|
  double defect_allowance = 0.0;
  bool pass = false;
  double one_sided_excess = 0.0;  // max(0, H_n/n + int phi - upper - slack)
  bool one_sided_ok = true;
  FinitenessReport finiteness;
};

// Checks the equilibrium identity at the table's full depth and the one-sided
// variational inequality against the certified upper pressure bound.
inline EquilibriumReport equilibrium_defect(const PotentialFamily& pf, const IfsSystem& sys,
                                            const InvariantMeasureTable& t, double P_est,
                                            double P_upper, double Q) {
  EquilibriumReport rep;
  rep.pressure_ref = P_est;
  rep.partition_H = partition_entropy(t, pf, sys, P_est, Q);
  rep.int_phi = integral_phi(pf, sys, t, t.depth);
  for (std::size_t n = 1; n <= t.depth; ++n)
    rep.entropy_n.push_back(entropy_rate(t, pf, sys, n, P_est, Q).value);

  const double logQ = std::log(Q);
  const double logQ0 = pf.V / (1.0 - std::exp(-pf.beta));
  const double depth_bias = (logQ + 2.0 * logQ0) / static_cast<double>(t.depth);
  const double numeric =
      t.ledger.cylinder_rel(t.depth, t.lip_branch) * (1.0 + std::abs(P_est)) +
      rep.int_phi.tail + rep.partition_H.tail;

  rep.defect = std::abs(rep.entropy_n.back() + rep.int_phi.value - P_est);
  rep.defect_allowance = depth_bias + numeric + 1e-10;
  rep.pass = rep.defect <= rep.defect_allowance;

  // The sup direction of the variational principle must hold at every depth,
  // each with its own finite-depth allowance.
  rep.one_sided_excess = 0.0;
  for (std::size_t n = 1; n <= t.depth; ++n) {
    const double slack_n = (logQ + 2.0 * logQ0) / static_cast<double>(n) + numeric + 1e-10;
    const double lhs = rep.entropy_n[n - 1] + rep.int_phi.value;
    rep.one_sided_excess = std::max(rep.one_sided_excess, lhs - (P_upper + slack_n));
  }
  rep.one_sided_ok = rep.one_sided_excess <= 0.0;

  rep.finiteness = check_finiteness_conditions(pf, sys, t, P_est, Q);
  return rep;
}

}  // namespace thermoshift
