#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "thermoshift/atom_measure.hpp"
#include "thermoshift/common.hpp"
#include "thermoshift/grid_function.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/ledger.hpp"
#include "thermoshift/parallel.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

// One application of the discretized operator:
//   (L g)(x_k) = sum_{i<=N} e^{phi^(i)(x_k)} g(phi_i(x_k)).
// Each output node is independent, so the node loop is the parallel axis.
inline GridFunction apply_hat(const PotentialFamily& pf, const IfsSystem& sys,
                              const GridFunction& g, AlphabetCutoff cut, int threads = 1) {
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  GridFunction out(g.domain(), g.cells());
  // Branch data is node-independent for constant potentials; precompute the
  // per-symbol weight once in that case.
  std::vector<double> const_weight;
  if (pf.is_constant_family()) {
    const_weight.resize(static_cast<std::size_t>(N));
    for (Symbol i = 1; i <= N; ++i)
      const_weight[static_cast<std::size_t>(i - 1)] = std::exp(pf.eval(i, g.domain().lo));
  }
  parallel_for(out.nodes(), threads, [&](std::size_t k) {
    const double x = out.node(k);
    double sum = 0.0;
    for (Symbol i = 1; i <= N; ++i) {
      const double w = const_weight.empty()
                           ? std::exp(pf.eval(i, x))
                           : const_weight[static_cast<std::size_t>(i - 1)];
      sum += w * g.eval(sys.apply(i, x));
    }
    out[k] = sum;
  });
  return out;
}

// Leading eigendata of the discretized operator.
struct EigenData {
  double lambda = 0.0;
  GridFunction h;        // strictly positive; see normalize_eigenfunction
  double residual = 0.0; // sup|L0 h - h| at the reported lambda
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration from the constant function 1, sup-normalizing every sweep.
// lambda is the limiting sup-norm ratio.
inline EigenData power_iteration(const PotentialFamily& pf, const IfsSystem& sys,
                                 AlphabetCutoff cut, std::size_t grid_cells,
                                 double tol = 1e-10, std::size_t max_iter = 2000,
                                 int threads = 1) {
  GridFunction g = GridFunction::ones(sys.domain, grid_cells);
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t it = 0;
  bool ok = false;
  for (it = 1; it <= max_iter; ++it) {
    GridFunction next = apply_hat(pf, sys, g, cut, threads);
    const double ratio = next.max_value();
    if (!(ratio > 0.0))
      throw ConvergenceError("power iteration: operator image lost positivity");
    next.scale(1.0 / ratio);
    residual = sup_distance(next, g);
    const bool lambda_stable = std::abs(ratio - lambda) <= tol * std::max(1.0, std::abs(ratio));
    lambda = ratio;
    g = std::move(next);
    if (lambda_stable && residual <= tol) {
      ok = true;
      break;
    }
  }
  EigenData e;
  e.lambda = lambda;
  e.h = std::move(g);
  e.residual = residual;
  e.iterations = std::min(it, max_iter);
  e.converged = ok;
  if (e.h.min_value() <= 0.0)
    throw ConvergenceError("power iteration: eigenfunction not strictly positive");
  return e;
}

// Rescales h so that its integral against the conformal measure is 1.
inline void normalize_eigenfunction(EigenData& e, const AtomMeasure& m) {
  const double mass = m.integrate([&](double x) { return e.h.eval(x); });
  if (!(mass > 0.0)) throw ConvergenceError("eigenfunction normalization: nonpositive pairing");
  e.h.scale(1.0 / mass);
}

struct DualEigenResult {
  AtomMeasure measure;
  double lambda_dual = 0.0;
  std::size_t sweeps = 0;
  double last_delta = 0.0;
  bool converged = false;
};

// Fixed point of mu -> L* mu / (L* mu)(1) on atom measures. Each sweep pushes
// every atom through every branch with weight e^{phi^(i)(x)}, merges per grid
// cell, records the pre-normalization mass as the dual eigenvalue estimate,
// and renormalizes.
inline DualEigenResult eigenmeasure(const PotentialFamily& pf, const IfsSystem& sys,
                                    AlphabetCutoff cut, std::size_t grid_cells,
                                    std::size_t atom_cap = 16384, double tol = 1e-10,
                                    std::size_t max_iter = 400) {
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  DualEigenResult r;
  r.measure.dom = sys.domain;
  r.measure.atoms = {{sys.domain.mid(), 1.0}};

  // Positions settle onto the attractor at rate s per sweep; run at least
  // until the initial midpoint's displacement is below tolerance.
  const std::size_t min_sweeps =
      static_cast<std::size_t>(std::ceil(std::log(std::max(tol, 1e-14)) / std::log(sys.s))) + 2;

  double prev = 0.0;
  for (std::size_t sweep = 1; sweep <= max_iter; ++sweep) {
    std::vector<AtomMeasure::Atom> next;
    next.reserve(r.measure.atoms.size() * static_cast<std::size_t>(N));
    for (const auto& atom : r.measure.atoms) {
      for (Symbol i = 1; i <= N; ++i) {
        next.push_back({sys.apply(i, atom.x), atom.w * std::exp(pf.eval(i, atom.x))});
      }
    }
    r.measure.atoms = std::move(next);
    r.lambda_dual = r.measure.total_mass();
    r.measure.merge_cells(grid_cells);
    r.measure.cap_atoms(atom_cap);
    r.measure.normalize();
    r.sweeps = sweep;
    r.last_delta = std::abs(r.lambda_dual - prev);
    if (sweep >= min_sweeps &&
        r.last_delta <= tol * std::max(1.0, std::abs(r.lambda_dual))) {
      r.converged = true;
      break;
    }
    prev = r.lambda_dual;
  }
  return r;
}

// Per-iterate bounds report for the normalized operator: min/max of
// e^{-n P_est} L^n 1 over the nodes against [1/Q, Q] with explicit slack.
struct BoundsReport {
  struct Row {
    std::size_t n = 0;
    double min = 0.0;
    double max = 0.0;
    bool pass = false;
  };
  std::vector<Row> rows;
  double Q = 1.0;
  double slack = 0.0;
  bool pass = true;
};

inline BoundsReport check_bounds_Q(const PotentialFamily& pf, const IfsSystem& sys,
                                   AlphabetCutoff cut, std::size_t grid_cells,
                                   std::size_t n_max, double P_est, double Q,
                                   const ErrorLedger& ledger, int threads = 1) {
  BoundsReport rep;
  rep.Q = Q;
  GridFunction g = GridFunction::ones(sys.domain, grid_cells);
  const double scale = std::exp(-P_est);
  for (std::size_t n = 1; n <= n_max; ++n) {
    g = apply_hat(pf, sys, g, cut, threads);
    g.scale(scale);
    const double slack = ledger.compound(n) + 1e-6;
    BoundsReport::Row row;
    row.n = n;
    row.min = g.min_value();
    row.max = g.max_value();
    row.pass = row.min >= (1.0 / Q) * (1.0 - slack) && row.max <= Q * (1.0 + slack);
    rep.slack = std::max(rep.slack, slack);
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// sup-norm decay of lambda^-n L^n g towards (integral of g) * h, with the
// fitted geometric rate of the tail.
struct ConvergenceProfile {
  std::vector<double> sup_errors;
  double fitted_rate = 0.0;
};

inline ConvergenceProfile convergence_profile(const PotentialFamily& pf, const IfsSystem& sys,
                                              AlphabetCutoff cut, const GridFunction& g0,
                                              const EigenData& eig, const AtomMeasure& m,
                                              std::size_t n_max, int threads = 1) {
  ConvergenceProfile prof;
  const double c = m.integrate([&](double x) { return g0.eval(x); });
  GridFunction g = g0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    g = apply_hat(pf, sys, g, cut, threads);
    g.scale(1.0 / eig.lambda);
    double err = 0.0;
    for (std::size_t k = 0; k < g.nodes(); ++k)
      err = std::max(err, std::abs(g[k] - c * eig.h[k]));
    prof.sup_errors.push_back(err);
  }
  // Least-squares slope of log e_n over the usable tail.
  std::vector<std::pair<double, double>> pts;
  for (std::size_t n = prof.sup_errors.size() / 2; n < prof.sup_errors.size(); ++n)
    if (prof.sup_errors[n] > 1e-14)
      pts.push_back({static_cast<double>(n + 1), std::log(prof.sup_errors[n])});
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double nn = static_cast<double>(pts.size());
    const double slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    prof.fitted_rate = std::exp(slope);
  }
  return prof;
}

// Brute-force check value: L^n g (x) expanded as the branch sum
// sum_{|omega|=n} e^{S_omega(x)} g(phi_omega(x)). Test oracle for small n.
inline double hat_power_by_words(const PotentialFamily& pf, const IfsSystem& sys,
                                 const GridFunction& g, AlphabetCutoff cut,
                                 std::size_t n, double x) {
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  double sum = 0.0;
  for_each_word(n, N, [&](const Word& w) {
    const BranchSum bs = birkhoff_branch_sum_full(pf, sys, w, x);
    sum += std::exp(bs.value) * g.eval(bs.endpoint);
  });
  return sum;
}

}  // namespace thermoshift
