#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "thermoshift/config.hpp"
#include "thermoshift/equilibrium.hpp"
#include "thermoshift/gibbs.hpp"
#include "thermoshift/json_io.hpp"
#include "thermoshift/parallel.hpp"
#include "thermoshift/pressure.hpp"
#include "thermoshift/transfer_operator.hpp"

namespace thermoshift {

inline constexpr const char* kVersion = "1.0.0";

struct RunOptions {
  int threads = 0;      // 0 -> machine parallelism
  bool timing = false;  // wall time goes to the report only when asked;
                        // keeping it out preserves byte-identical reruns
};

struct RunOutcome {
  ordered_json report;
  std::string tables_jsonl;
  int exit_code = 0;
};

namespace detail {

struct CheckList {
  ordered_json rows = ordered_json::array();
  bool all_pass = true;

  void add(const std::string& name, bool pass, ordered_json extra = {}) {
    ordered_json row;
    row["name"] = name;
    row["pass"] = pass;
    if (extra.is_object())
      for (auto it = extra.begin(); it != extra.end(); ++it) row[it.key()] = it.value();
    rows.push_back(row);
    all_pass = all_pass && pass;
  }
};

// Eigen-side of the pipeline: conformal measure (dual), eigenfunction
// (primal), agreement gap, and the ledger everything downstream inherits.
struct EigenBundle {
  DualEigenResult dual;
  EigenData primal;
  double log_lambda = 0.0;
  SummabilityBound summ;
  ErrorLedger ledger;
};

inline EigenBundle compute_eigen_bundle(const Model& m, const SystemConfig& cfg, int threads) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  EigenBundle b;
  b.summ = summability_bound(m.pot, m.sys, cut);
  b.dual = eigenmeasure(m.pot, m.sys, cut, cfg.numerics.grid, cfg.numerics.atom_cap,
                        cfg.numerics.tol, cfg.numerics.max_iter);
  b.primal = power_iteration(m.pot, m.sys, cut, cfg.numerics.grid, cfg.numerics.tol,
                             cfg.numerics.max_iter, threads);
  normalize_eigenfunction(b.primal, b.dual.measure);
  b.log_lambda = std::log(b.primal.lambda);

  b.ledger.alphabet_tail = b.summ.tail;
  b.ledger.alphabet_head = b.summ.head;
  b.ledger.lambda_gap = std::abs(b.log_lambda - std::log(b.dual.lambda_dual)) +
                        b.primal.residual + cfg.numerics.tol;
  const double cell =
      m.sys.diam() / static_cast<double>(std::min(cfg.numerics.grid, cfg.numerics.atom_cap));
  b.ledger.atom_position = 0.5 * cell / (1.0 - m.sys.s);
  b.ledger.grid_step = m.sys.diam() / static_cast<double>(cfg.numerics.grid);
  return b;
}

inline ordered_json eigen_json(const EigenBundle& b) {
  ordered_json j;
  j["lambda_primal"] = b.primal.lambda;
  j["log_lambda_primal"] = b.log_lambda;
  j["lambda_dual"] = b.dual.lambda_dual;
  j["log_lambda_dual"] = std::log(b.dual.lambda_dual);
  j["primal_residual"] = b.primal.residual;
  j["primal_iterations"] = static_cast<std::uint64_t>(b.primal.iterations);
  j["dual_sweeps"] = static_cast<std::uint64_t>(b.dual.sweeps);
  j["primal_converged"] = b.primal.converged;
  j["dual_converged"] = b.dual.converged;
  j["h_min"] = b.primal.h.min_value();
  j["h_max"] = b.primal.h.max_value();
  j["atoms"] = static_cast<std::uint64_t>(b.dual.measure.atoms.size());
  return j;
}

inline ordered_json ledger_json(const ErrorLedger& l) {
  ordered_json j;
  j["alphabet_tail"] = l.alphabet_tail;
  j["alphabet_head"] = l.alphabet_head;
  j["lambda_gap"] = l.lambda_gap;
  j["atom_position"] = l.atom_position;
  j["grid_step"] = l.grid_step;
  j["zsup_pad"] = l.zsup_pad;
  j["fixed_point_tol"] = l.fixed_point_tol;
  j["float_round"] = l.float_round;
  return j;
}

inline ordered_json pressure_json(const PressureEstimate& est) {
  ordered_json j;
  j["upper"] = est.upper;
  j["lower"] = est.lower;
  j["lower_distortion"] = est.lower_distortion;
  j["lower_periodic"] = est.lower_periodic;
  j["point"] = est.point;
  j["n_used"] = static_cast<std::uint64_t>(est.n_used);
  j["cutoff"] = est.cutoff;
  j["clamped"] = est.clamped;
  ordered_json table = ordered_json::array();
  for (const auto& z : est.table) {
    ordered_json row;
    row["n"] = static_cast<std::uint64_t>(z.n);
    row["log_z"] = z.log_sup;
    row["log_z_upper"] = z.log_upper();
    table.push_back(row);
  }
  j["table"] = table;
  ordered_json probes;
  for (const auto& [i, lz] : est.probe_log_z) probes[std::to_string(i)] = lz;
  j["probe_log_z"] = probes;
  return j;
}

inline ordered_json word_json(const Word& w) {
  ordered_json a = ordered_json::array();
  for (Symbol s : w.symbols) a.push_back(s);
  return a;
}

inline std::size_t clamp_depth(std::size_t depth, Symbol N, std::size_t budget,
                               std::uint64_t cap) {
  std::size_t d = depth;
  while (d > 1) {
    const std::uint64_t count =
        pow_count(static_cast<std::uint64_t>(N), static_cast<std::uint32_t>(d), cap);
    if (count <= budget && count <= cap) break;
    --d;
  }
  return d;
}

// Gibbs-side of the pipeline, reused by gibbs / equilibrium / verify-all.
struct GibbsBundle {
  GibbsTables tables;
  std::size_t depth = 0;
  bool depth_clamped = false;
  double P_est = 0.0;
};

inline GibbsBundle compute_gibbs_bundle(const Model& m, const SystemConfig& cfg,
                                        const EigenBundle& eb, int threads) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const Symbol N = std::min(m.pot.effective_cutoff(cut.N), m.sys.effective_cutoff(cut.N));
  GibbsBundle g;
  g.P_est = eb.log_lambda;
  g.depth = clamp_depth(cfg.gibbs.depth, N, cfg.gibbs.table_budget, cfg.word_cap());
  g.depth_clamped = g.depth != cfg.gibbs.depth;
  g.tables = build_gibbs_tables(m.pot, m.sys, g.depth, cut, eb.dual.measure, eb.primal.h,
                                g.P_est, eb.ledger, cfg.word_cap(), threads);
  return g;
}

inline std::string tables_to_jsonl(const GibbsTables& t) {
  std::string out;
  for (const auto& [w, mh] : t.m_hat.mass) {
    ordered_json line;
    line["word"] = word_json(w);
    line["m_hat"] = mh;
    line["mu_hat"] = t.mu_hat.at(w);
    line["ledger"] = t.m_hat.allowance(w.size(), mh);
    out += dump_deterministic(line, 0, 0);
    out += '\n';
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dimension solver: root of s -> P(phi_s) for the geometric potential of the
// configured system, located twice.
//
// The partition-side statistic is the telescoped point estimate
// log Z_n - log Z_{n-1}; unlike (1/n) log Z_n its bias against log lambda
// decays with the spectral gap instead of like log(Q)/n, which is what makes
// a 1e-3 bracket meaningful at n = 14. The eigen-side statistic is
// log lambda(s) from power iteration. Both roots must land in one bracket.
// ---------------------------------------------------------------------------
struct DimensionResult {
  bool valid = false;
  std::string message;
  double s_star = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  std::vector<std::array<double, 2>> z_history, lambda_history;
  std::array<double, 2> z_root{0.0, 0.0}, lambda_root{0.0, 0.0};
  double oracle_gap = 0.0;  // |midpoint difference| of the two root brackets
  bool straddles = false;   // certified pressure interval at s_star contains 0
  double mid_lower = 0.0, mid_upper = 0.0;
};

inline DimensionResult solve_dimension(const SystemConfig& cfg, const Model& m,
                                       int threads) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const auto& dc = cfg.dimension;
  if (!(dc.s_lo < dc.s_hi)) throw ConfigError("dimension: need s_lo < s_hi");

  const auto z_stat = [&](double s) {
    const PotentialFamily pf = geometric_potential(m.sys, s, cfg.numerics.cutoff);
    const auto zs = partition_function_all(pf, m.sys, dc.n, cut, cfg.numerics.z_grid,
                                           cfg.word_cap(), threads);
    return zs[dc.n - 1].log_sup - zs[dc.n - 2].log_sup;
  };
  const auto lambda_stat = [&](double s) {
    const PotentialFamily pf = geometric_potential(m.sys, s, cfg.numerics.cutoff);
    const EigenData e = power_iteration(pf, m.sys, cut, cfg.numerics.grid, cfg.numerics.tol,
                                        cfg.numerics.max_iter, threads);
    return std::log(e.lambda);
  };

  double slope_est = 0.0;  // |dP/ds| proxy from the first bracket endpoints
  const auto bisect = [&](auto&& stat, std::vector<std::array<double, 2>>& history) {
    double lo = dc.s_lo, hi = dc.s_hi;
    const double f_lo = stat(lo), f_hi = stat(hi);
    if (!(f_lo > 0.0 && f_hi < 0.0))
      throw PreconditionError("dimension bracket invalid: statistic is " +
                              std::to_string(f_lo) + " at s_lo and " + std::to_string(f_hi) +
                              " at s_hi; need positive/negative");
    slope_est = std::max(slope_est, (f_lo - f_hi) / (hi - lo));
    history.push_back({lo, hi});
    for (std::size_t it = 0; it < 200 && hi - lo > dc.tol_s; ++it) {
      const double mid = 0.5 * (lo + hi);
      (stat(mid) > 0.0 ? lo : hi) = mid;
      history.push_back({lo, hi});
    }
    return std::array<double, 2>{lo, hi};
  };

  DimensionResult r;
  if (dc.n < 2) throw ConfigError("dimension: need n >= 2");
  r.z_root = bisect(z_stat, r.z_history);
  r.lambda_root = bisect(lambda_stat, r.lambda_history);
  r.oracle_gap = std::abs(0.5 * (r.z_root[0] + r.z_root[1]) -
                          0.5 * (r.lambda_root[0] + r.lambda_root[1]));

  const double lo = std::min(r.z_root[0], r.lambda_root[0]);
  const double hi = std::max(r.z_root[1], r.lambda_root[1]);
  const bool overlap = std::max(r.z_root[0], r.lambda_root[0]) <=
                       std::min(r.z_root[1], r.lambda_root[1]) + 1e-15;
  r.bracket_lo = lo;
  r.bracket_hi = hi;
  r.s_star = 0.5 * (lo + hi);

  const PotentialFamily pf_mid = geometric_potential(m.sys, r.s_star, cfg.numerics.cutoff);
  const DistortionData dd = distortion_constant(pf_mid);
  const PressureEstimate mid = pressure_estimate(pf_mid, m.sys, cut,
                                                 std::min<std::size_t>(dc.n, 12),
                                                 cfg.pressure.probe_symbols, dd.Q,
                                                 cfg.numerics.z_grid, cfg.word_cap(), threads);
  r.mid_lower = mid.lower;
  r.mid_upper = mid.upper;
  // The root sits somewhere in the bracket, so at the midpoint the true
  // pressure can sit up to slope * width away from 0; zero-width certified
  // intervals (exact constant systems) need that much slack.
  const double straddle_slack = slope_est * (r.bracket_hi - r.bracket_lo) + 1e-10;
  r.straddles = mid.lower <= straddle_slack && -straddle_slack <= mid.upper;
  r.valid = overlap && r.straddles;
  r.message = overlap ? (r.straddles ? "ok" : "pressure interval at midpoint misses 0")
                      : "oracle brackets do not overlap";
  return r;
}

namespace detail {

inline ordered_json dimension_json(const DimensionResult& r) {
  ordered_json j;
  j["valid"] = r.valid;
  j["message"] = r.message;
  j["s_star"] = r.s_star;
  j["bracket"] = ordered_json::array({r.bracket_lo, r.bracket_hi});
  j["bracket_width"] = r.bracket_hi - r.bracket_lo;
  j["z_root"] = ordered_json::array({r.z_root[0], r.z_root[1]});
  j["lambda_root"] = ordered_json::array({r.lambda_root[0], r.lambda_root[1]});
  j["oracle_gap"] = r.oracle_gap;
  j["mid_pressure_lower"] = r.mid_lower;
  j["mid_pressure_upper"] = r.mid_upper;
  const auto hist = [](const std::vector<std::array<double, 2>>& h) {
    ordered_json a = ordered_json::array();
    for (const auto& b : h) a.push_back(ordered_json::array({b[0], b[1]}));
    return a;
  };
  j["z_history"] = hist(r.z_history);
  j["lambda_history"] = hist(r.lambda_history);
  return j;
}

// --- command bodies --------------------------------------------------------

inline void cmd_pressure(const Model& m, const SystemConfig& cfg, int threads,
                         ordered_json& results, CheckList& checks, ErrorLedger& ledger) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const PressureEstimate est =
      pressure_estimate(m.pot, m.sys, cut, cfg.pressure.n_max, cfg.pressure.probe_symbols,
                        m.dist.Q, cfg.numerics.z_grid, cfg.word_cap(), threads);
  results["pressure"] = pressure_json(est);
  ledger.absorb(est.ledger);

  const double slack = est.table.back().pad + 1e-12;
  checks.add("pressure_lower_le_point", est.lower <= est.point + slack,
             {{"lower", est.lower}, {"point", est.point}});
  checks.add("pressure_point_le_upper", est.point <= est.upper + slack,
             {{"point", est.point}, {"upper", est.upper}});

  for (Symbol i : cfg.pressure.probe_symbols) {
    if (i < 1 || i > est.cutoff) continue;
    const PressureDefsReport defs = check_pressure_defs(
        m.pot, m.sys, cut, i, std::min(cfg.pressure.n_max, est.n_used), m.dist.Q,
        cfg.numerics.z_grid, cfg.word_cap(), threads);
    ordered_json rows = ordered_json::array();
    for (const auto& row : defs.rows) {
      ordered_json r;
      r["n"] = static_cast<std::uint64_t>(row.n);
      r["gap"] = row.gap;
      r["threshold"] = row.threshold;
      r["pass"] = row.pass;
      rows.push_back(r);
    }
    results["pressure_defs_" + std::to_string(i)] = rows;
    checks.add("pressure_defs_gap_symbol_" + std::to_string(i), defs.pass);
  }
}

inline void cmd_eigen(const Model& m, const SystemConfig& cfg, int threads,
                      const EigenBundle& eb, ordered_json& results, CheckList& checks,
                      ErrorLedger& ledger) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  results["eigen"] = eigen_json(eb);
  ledger.absorb(eb.ledger);

  checks.add("primal_converged", eb.primal.converged,
             {{"residual", eb.primal.residual}});
  checks.add("dual_converged", eb.dual.converged,
             {{"last_delta", eb.dual.last_delta}});
  const double gap = std::abs(eb.log_lambda - std::log(eb.dual.lambda_dual));
  const double gap_bound = std::max(1e-6, 100.0 * cfg.numerics.tol);
  checks.add("lambda_primal_dual_agree", gap <= gap_bound,
             {{"gap", gap}, {"bound", gap_bound}});

  const BoundsReport bounds = check_bounds_Q(m.pot, m.sys, cut, cfg.numerics.grid, 30,
                                             eb.log_lambda, m.dist.Q, eb.ledger, threads);
  ordered_json brows = ordered_json::array();
  for (const auto& row : bounds.rows) {
    ordered_json r;
    r["n"] = static_cast<std::uint64_t>(row.n);
    r["min"] = row.min;
    r["max"] = row.max;
    r["pass"] = row.pass;
    brows.push_back(r);
  }
  results["normalized_iterate_bounds"] = brows;
  checks.add("normalized_iterate_bounds", bounds.pass,
             {{"Q", bounds.Q}, {"slack", bounds.slack}});

  // dual pairing: integral of L g against m equals lambda * integral of g
  const GridFunction gx =
      GridFunction::sample(m.sys.domain, cfg.numerics.grid, [](double x) { return x; });
  const GridFunction Lg = apply_hat(m.pot, m.sys, gx, cut, threads);
  const double lhs = eb.dual.measure.integrate([&](double x) { return Lg.eval(x); });
  const double rhs =
      eb.primal.lambda * eb.dual.measure.integrate([&](double x) { return gx.eval(x); });
  const double pair_tol = (std::abs(rhs) + 1.0) *
                          (eb.ledger.lambda_gap + eb.ledger.atom_position + 1e-8);
  checks.add("dual_pairing", std::abs(lhs - rhs) <= pair_tol,
             {{"lhs", lhs}, {"rhs", rhs}, {"tol", pair_tol}});

  const ConvergenceProfile prof =
      convergence_profile(m.pot, m.sys, cut, gx, eb.primal, eb.dual.measure, 20, threads);
  ordered_json perrs = ordered_json::array();
  for (double e : prof.sup_errors) perrs.push_back(e);
  results["convergence_profile"] = ordered_json{{"sup_errors", perrs},
                                                {"fitted_rate", prof.fitted_rate}};
}

inline void cmd_gibbs(const Model& m, const SystemConfig& cfg, int threads,
                      const EigenBundle& eb, const GibbsBundle& gb, ordered_json& results,
                      CheckList& checks, ErrorLedger& ledger, ordered_json& flags) {
  (void)cfg;
  (void)threads;
  results["gibbs"] = ordered_json{
      {"depth", static_cast<std::uint64_t>(gb.depth)},
      {"depth_clamped", gb.depth_clamped},
      {"P_est", gb.P_est},
      {"entries", static_cast<std::uint64_t>(gb.tables.m_hat.mass.size())}};
  ordered_json sums = ordered_json::array();
  for (double s : gb.tables.m_hat.depth_sums) sums.push_back(s);
  results["gibbs"]["m_hat_depth_sums"] = sums;
  ledger.absorb(gb.tables.m_hat.ledger);

  // per-depth totals: 1 minus the alphabet-tail deficit, within ledger
  {
    bool sums_ok = true;
    double worst = 0.0;
    for (std::size_t k = 1; k <= gb.depth; ++k) {
      const double sum = gb.tables.m_hat.depth_sums[k - 1];
      const double allow = gb.tables.m_hat.allowance(k, 1.0);
      const double tail_deficit = static_cast<double>(k) * ledger.tail_ratio();
      worst = std::max(worst, std::abs(sum - 1.0));
      sums_ok = sums_ok && sum <= 1.0 + allow && sum >= 1.0 - tail_deficit - allow;
    }
    checks.add("m_hat_depth_totals", sums_ok, {{"worst_gap", worst}});
  }

  const DefectReport kol = check_kolmogorov_consistency(gb.tables.m_hat);
  checks.add("right_extension_consistency", kol.pass,
             {{"max_defect", kol.max_defect}, {"max_excess", kol.max_excess}});

  const DefectReport inv = check_shift_invariance(gb.tables.mu_hat);
  checks.add("shift_invariance", inv.pass,
             {{"max_defect", inv.max_defect}, {"max_excess", inv.max_excess}});

  if (m.separated) {
    const double resolvable = 4.0 * m.sys.diam() / static_cast<double>(cfg.numerics.grid);
    const DefectReport push =
        check_pushforward(gb.tables.m_hat, eb.dual.measure, m.sys,
                          std::min<std::size_t>(gb.depth, 4), true, resolvable);
    checks.add("pushforward_identity", push.pass,
               {{"max_defect", push.max_defect},
                {"max_excess", push.max_excess},
                {"skipped_unresolved", static_cast<std::uint64_t>(push.skipped)}});
  }

  const GibbsPropertyReport gp =
      check_gibbs_property(gb.tables.m_hat, m.pot, m.sys, m.dist.Q);
  checks.add("gibbs_comparability", gp.pass,
             {{"min_ratio", gp.min_ratio}, {"max_ratio", gp.max_ratio}, {"Q", m.dist.Q}});

  const DensityRatioReport dr = check_density_ratios(gb.tables, m.dist.Q);
  checks.add("density_ratio_band", dr.pass,
             {{"min_ratio", dr.min_ratio},
              {"max_ratio", dr.max_ratio},
              {"checked", static_cast<std::uint64_t>(dr.checked)},
              {"flagged", static_cast<std::uint64_t>(dr.flagged)}});
  if (dr.flagged > 0)
    flags.push_back("density ratios outside [1/Q, Q] but within factor 2: " +
                    std::to_string(dr.flagged));

  if (gb.depth > cfg.gibbs.mix_shift) {
    const MixingReport mix = mixing_diagnostic(gb.tables.m_hat, cfg.gibbs.mix_shift, m.dist.Q);
    checks.add("mixing_inequalities", mix.pass,
               {{"n_shift", static_cast<std::uint64_t>(mix.n_shift)},
                {"max_excess_band", mix.max_excess_band},
                {"max_excess_cap", mix.max_excess_cap},
                {"pairs", static_cast<std::uint64_t>(mix.pairs_checked)}});
  }
}

inline void cmd_recurrence(const Model& m, const SystemConfig& cfg, int threads,
                           const EigenBundle& eb, ordered_json& results, CheckList& checks,
                           ErrorLedger& ledger) {
  (void)threads;
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const Symbol N = std::min(m.pot.effective_cutoff(cut.N), m.sys.effective_cutoff(cut.N));
  ordered_json certs = ordered_json::array();
  std::size_t n_hi = cfg.recurrence.n_hi;
  while (n_hi > 2 && pow_count(static_cast<std::uint64_t>(N),
                               static_cast<std::uint32_t>(n_hi - 1),
                               cfg.word_cap()) > cfg.word_cap())
    --n_hi;
  for (Symbol i : cfg.recurrence.symbols) {
    if (i < 1 || i > N) continue;
    const double mh =
        cylinder_mass(m.pot, m.sys, Word{i}, eb.dual.measure, eb.log_lambda);
    const RecurrenceCertificate cert =
        certify_recurrence(m.pot, m.sys, cut, i, cfg.recurrence.n_lo, n_hi, eb.primal.lambda,
                           mh, m.dist.Q, eb.ledger, cfg.word_cap());
    ordered_json c;
    c["symbol"] = i;
    c["m_hat_i"] = mh;
    c["Q"] = cert.Q;
    c["pass"] = cert.pass;
    ordered_json rows = ordered_json::array();
    for (const auto& row : cert.rows) {
      ordered_json r;
      r["n"] = static_cast<std::uint64_t>(row.n);
      r["ratio"] = row.ratio;
      r["lo"] = row.lo;
      r["hi"] = row.hi;
      r["pass"] = row.pass;
      rows.push_back(r);
    }
    c["rows"] = rows;
    certs.push_back(c);
    checks.add("recurrence_certificate_symbol_" + std::to_string(i), cert.pass);
  }
  results["recurrence"] = certs;
  ledger.absorb(eb.ledger);
}

inline void cmd_equilibrium(const Model& m, const SystemConfig& cfg, int threads,
                            const EigenBundle& eb, const GibbsBundle& gb,
                            ordered_json& results, CheckList& checks, ErrorLedger& ledger,
                            std::uint64_t seed) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const PressureEstimate est =
      pressure_estimate(m.pot, m.sys, cut, cfg.pressure.n_max, cfg.pressure.probe_symbols,
                        m.dist.Q, cfg.numerics.z_grid, cfg.word_cap(), threads);
  const EquilibriumReport rep = equilibrium_defect(m.pot, m.sys, gb.tables.mu_hat,
                                                   eb.log_lambda, est.upper, m.dist.Q);
  ordered_json j;
  j["partition_entropy"] = rep.partition_H.value;
  j["partition_entropy_tail"] = rep.partition_H.tail;
  j["integral_phi"] = rep.int_phi.value;
  j["integral_phi_tail"] = rep.int_phi.tail;
  ordered_json rates = ordered_json::array();
  for (double v : rep.entropy_n) rates.push_back(v);
  j["entropy_rates"] = rates;
  j["pressure_ref"] = rep.pressure_ref;
  j["defect"] = rep.defect;
  j["defect_allowance"] = rep.defect_allowance;
  ordered_json fin;
  for (const FinitenessVerdict* v : {&rep.finiteness.a, &rep.finiteness.b, &rep.finiteness.c}) {
    ordered_json row;
    row["finite"] = v->finite;
    row["conclusive"] = v->conclusive;
    row["margin"] = v->margin;
    row["head"] = v->head;
    row["tail"] = v->tail;
    fin[v->name] = row;
  }
  j["finiteness"] = fin;

  // pathwise cross-check: average of -(1/n) log mu[omega_1..n] over sampled
  // words, a diagnostic against the expectation-form entropy rate
  const std::size_t n_path = gb.depth;
  double path_sum = 0.0;
  const std::size_t n_samples = 64;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Word w = sample_word(gb.tables.mu_hat, n_path, seed + k);
    path_sum -= std::log(gb.tables.mu_hat.at(w)) / static_cast<double>(n_path);
  }
  j["pathwise_entropy_diagnostic"] = path_sum / static_cast<double>(n_samples);

  results["equilibrium"] = j;
  ledger.absorb(gb.tables.mu_hat.ledger);

  checks.add("equilibrium_defect", rep.pass,
             {{"defect", rep.defect}, {"allowance", rep.defect_allowance}});
  checks.add("variational_one_sided", rep.one_sided_ok,
             {{"excess", rep.one_sided_excess}});
  checks.add("finiteness_coherent", rep.finiteness.coherent);

  bool monotone = true;
  for (std::size_t n = 1; n < rep.entropy_n.size(); ++n) {
    const double allow = gb.tables.mu_hat.allowance(n + 1, rep.entropy_n[n]) +
                         rep.partition_H.tail + 1e-10;
    monotone = monotone && rep.entropy_n[n] <= rep.entropy_n[n - 1] + allow;
  }
  checks.add("entropy_rate_monotone", monotone);
}

}  // namespace detail

// Assembles the verify-all property sweep on top of the per-command checks.
namespace detail {

inline void cmd_verify_all(const Model& m, const SystemConfig& cfg, int threads,
                           const EigenBundle& eb, const GibbsBundle& gb,
                           ordered_json& results, CheckList& checks, ErrorLedger& ledger,
                           ordered_json& flags, std::uint64_t seed) {
  const AlphabetCutoff cut{cfg.numerics.cutoff};
  const Symbol N = std::min(m.pot.effective_cutoff(cut.N), m.sys.effective_cutoff(cut.N));
  (void)ledger;

  checks.add("contraction", m.contraction.contractive,
             {{"s_estimate", m.contraction.s_estimate}});
  results["separated"] = m.separated;

  const SummabilityBound sb = summability_bound(m.pot, m.sys, cut);
  checks.add("summability_finite", std::isfinite(sb.head) && std::isfinite(sb.tail),
             {{"head", sb.head}, {"tail", sb.tail}});

  // sampled variation must stay below the certificate
  const VariationEstimate var = estimate_variation(m.pot, m.sys, 6, 64, cut, seed);
  checks.add("variation_below_certificate", var.V_est <= m.pot.V + 1e-9,
             {{"V_est", var.V_est}, {"V", m.pot.V}});

  const DistortionSampleReport dist =
      check_distortion_samples(m.pot, m.sys, cut, 2000, 8, seed);
  checks.add("distortion_inequality_samples", dist.violations == 0,
             {{"violations", static_cast<std::uint64_t>(dist.violations)},
              {"worst_ratio", dist.worst_ratio}});

  // branch-sum identity for small n at sampled nodes
  {
    std::mt19937_64 rng(seed + 17);
    std::uniform_real_distribution<double> unif(m.sys.domain.lo, m.sys.domain.hi);
    GridFunction g = GridFunction::sample(m.sys.domain, cfg.numerics.grid, [&](double x) {
      return 1.0 + 0.25 * std::sin(3.0 * x);
    });
    bool ok = true;
    double worst = 0.0;
    for (std::size_t n = 1; n <= 3; ++n) {
      if (pow_count(static_cast<std::uint64_t>(N), static_cast<std::uint32_t>(n),
                    cfg.word_cap()) > 200000)
        break;
      GridFunction it = g;
      for (std::size_t k = 0; k < n; ++k) it = apply_hat(m.pot, m.sys, it, cut, threads);
      for (int t = 0; t < 5; ++t) {
        const double x = unif(rng);
        const double direct = hat_power_by_words(m.pot, m.sys, g, cut, n, x);
        const double err = std::abs(it.eval(x) - direct);
        worst = std::max(worst, err);
        ok = ok && err <= 1e-4 * (1.0 + std::abs(direct));
      }
    }
    checks.add("branch_sum_identity", ok, {{"worst_error", worst}});
  }

  // positivity, monotonicity, linearity probes
  {
    GridFunction g1 = GridFunction::sample(m.sys.domain, 128, [](double x) {
      return 0.5 + 0.5 * std::cos(2.0 * x);
    });
    GridFunction g2 = GridFunction::sample(m.sys.domain, 128, [&](double x) {
      return g1.eval(x) + 0.25 * (1.0 + std::sin(5.0 * x));
    });
    const GridFunction L1 = apply_hat(m.pot, m.sys, g1, cut, threads);
    const GridFunction L2 = apply_hat(m.pot, m.sys, g2, cut, threads);
    bool positive = L1.min_value() >= 0.0;
    bool monotone = true;
    for (std::size_t k = 0; k < L1.nodes(); ++k)
      monotone = monotone && L1[k] <= L2[k] + 1e-12;
    GridFunction combo(m.sys.domain, 128);
    for (std::size_t k = 0; k < combo.nodes(); ++k)
      combo[k] = 2.0 * g1[k] + g2[k];
    const GridFunction Lc = apply_hat(m.pot, m.sys, combo, cut, threads);
    double lin_err = 0.0;
    for (std::size_t k = 0; k < Lc.nodes(); ++k)
      lin_err = std::max(lin_err, std::abs(Lc[k] - (2.0 * L1[k] + L2[k])));
    checks.add("operator_positive_monotone_linear",
               positive && monotone && lin_err <= 1e-10 * (1.0 + Lc.sup_norm()),
               {{"linearity_error", lin_err}});
  }

  // coded-mass proxy: the conformal measure concentrates on the n-step images
  {
    std::size_t n_img = 4;
    while (n_img > 1 && pow_count(static_cast<std::uint64_t>(N),
                                  static_cast<std::uint32_t>(n_img), cfg.word_cap()) > 100000)
      --n_img;
    std::vector<Interval> images;
    for_each_word(n_img, N, [&](const Word& w) { images.push_back(word_image(m.sys, w)); });
    double covered = 0.0;
    const double pad = eb.ledger.atom_position + 1e-13;
    for (const auto& atom : eb.dual.measure.atoms) {
      for (const auto& img : images) {
        if (atom.x >= img.lo - pad && atom.x <= img.hi + pad) {
          covered += atom.w;
          break;
        }
      }
    }
    const double tail_slack =
        static_cast<double>(n_img) * eb.ledger.tail_ratio() + 1e-9;
    checks.add("conformal_mass_on_images", covered >= 1.0 - tail_slack,
               {{"covered", covered},
                {"n", static_cast<std::uint64_t>(n_img)},
                {"slack", tail_slack}});
  }

  // subadditivity and the distortion sandwich on the partition table
  {
    const PressureEstimate est =
        pressure_estimate(m.pot, m.sys, cut, cfg.pressure.n_max, cfg.pressure.probe_symbols,
                          m.dist.Q, cfg.numerics.z_grid, cfg.word_cap(), threads);
    bool subadd = true;
    for (std::size_t a = 1; a < est.table.size(); ++a)
      for (std::size_t b = 1; a + b <= est.table.size(); ++b)
        subadd = subadd && est.table[a + b - 1].log_sup <=
                               est.table[a - 1].log_sup + est.table[b - 1].log_sup +
                                   2.0 * est.table[a + b - 1].pad + 1e-9;
    checks.add("partition_subadditive", subadd);

    std::mt19937_64 rng(seed + 31);
    std::uniform_real_distribution<double> unif(m.sys.domain.lo, m.sys.domain.hi);
    bool sandwich = true;
    const GridFunction one = GridFunction::ones(m.sys.domain, 64);
    const std::size_t n_sw = std::min<std::size_t>(est.table.size(), 5);
    for (int t = 0; t < 4; ++t) {
      const double x = unif(rng);
      const double at_x =
          std::log(hat_power_by_words(m.pot, m.sys, one, cut, n_sw, x));
      const double hi = est.table[n_sw - 1].log_upper();
      const double lo = est.table[n_sw - 1].log_sup - std::log(m.dist.Q);
      sandwich = sandwich && at_x <= hi + 1e-9 && at_x >= lo - 1e-9;
    }
    checks.add("distortion_sandwich", sandwich);

    const double gap = std::abs(est.point - eb.log_lambda);
    const double bound = 2.0 * std::log(m.dist.Q) / static_cast<double>(est.n_used) +
                         est.table.back().pad + eb.ledger.lambda_gap +
                         static_cast<double>(est.n_used) * eb.ledger.tail_ratio() + 1e-9;
    checks.add("pressure_point_matches_log_lambda", gap <= bound,
               {{"gap", gap}, {"bound", bound}});
  }

  (void)gb;
  (void)results;
  (void)flags;
}

}  // namespace detail

// Dispatches a CLI command. Commands: pressure, eigen, gibbs, recurrence,
// equilibrium, dimension, verify-all.
inline RunOutcome run_command(const std::string& cmd, const SystemConfig& cfg,
                              const RunOptions& opt = {}) {
  const int threads = opt.threads > 0 ? opt.threads : hardware_threads();
  const auto t0 = std::chrono::steady_clock::now();

  RunOutcome out;
  ordered_json& rep = out.report;
  rep["command"] = cmd;
  rep["version"] = kVersion;
  rep["config"] = cfg.echo.is_null() ? ordered_json::object() : cfg.echo;
  rep["seed"] = cfg.seed;

  const Model m = build_model(cfg);
  ordered_json sysinfo;
  sysinfo["family"] = m.name;
  sysinfo["domain"] = ordered_json::array({m.sys.domain.lo, m.sys.domain.hi});
  sysinfo["contraction_factor"] = m.sys.s;
  sysinfo["separated"] = m.separated;
  sysinfo["beta"] = m.pot.beta;
  sysinfo["V"] = m.pot.V;
  sysinfo["Q"] = m.dist.Q;
  rep["system"] = sysinfo;

  ordered_json results;
  detail::CheckList checks;
  ErrorLedger ledger;
  ordered_json flags = ordered_json::array();

  const bool needs_eigen = cmd != "pressure" && cmd != "dimension";
  const bool needs_gibbs = cmd == "gibbs" || cmd == "equilibrium" || cmd == "verify-all";

  if ((cmd == "gibbs" || cmd == "equilibrium") && !m.separated)
    throw ConfigError(cmd + " requires a separated system (disjoint branch images)");

  detail::EigenBundle eb;
  detail::GibbsBundle gb;
  if (needs_eigen) {
    eb = detail::compute_eigen_bundle(m, cfg, threads);
    results["eigen"] = detail::eigen_json(eb);
    ledger.absorb(eb.ledger);
  }
  if (needs_gibbs) gb = detail::compute_gibbs_bundle(m, cfg, eb, threads);

  if (cmd == "pressure") {
    detail::cmd_pressure(m, cfg, threads, results, checks, ledger);
  } else if (cmd == "eigen") {
    detail::cmd_eigen(m, cfg, threads, eb, results, checks, ledger);
  } else if (cmd == "gibbs") {
    detail::cmd_gibbs(m, cfg, threads, eb, gb, results, checks, ledger, flags);
    out.tables_jsonl = detail::tables_to_jsonl(gb.tables);
  } else if (cmd == "recurrence") {
    detail::cmd_recurrence(m, cfg, threads, eb, results, checks, ledger);
  } else if (cmd == "equilibrium") {
    detail::cmd_equilibrium(m, cfg, threads, eb, gb, results, checks, ledger, cfg.seed);
  } else if (cmd == "dimension") {
    const DimensionResult dr = solve_dimension(cfg, m, threads);
    results["dimension"] = detail::dimension_json(dr);
    checks.add("dimension_brackets_agree", dr.valid, {{"message", dr.message}});
    bool shrinking = true;
    for (const auto* h : {&dr.z_history, &dr.lambda_history})
      for (std::size_t k = 1; k < h->size(); ++k)
        shrinking = shrinking && (*h)[k][1] - (*h)[k][0] <= (*h)[k - 1][1] - (*h)[k - 1][0] + 1e-15;
    checks.add("dimension_bracket_monotone", shrinking);
  } else if (cmd == "verify-all") {
    detail::cmd_eigen(m, cfg, threads, eb, results, checks, ledger);
    detail::cmd_pressure(m, cfg, threads, results, checks, ledger);
    detail::cmd_recurrence(m, cfg, threads, eb, results, checks, ledger);
    if (m.separated) {
      detail::cmd_gibbs(m, cfg, threads, eb, gb, results, checks, ledger, flags);
      detail::cmd_equilibrium(m, cfg, threads, eb, gb, results, checks, ledger, cfg.seed);
      out.tables_jsonl = detail::tables_to_jsonl(gb.tables);
    }
    detail::cmd_verify_all(m, cfg, threads, eb, gb, results, checks, ledger, flags, cfg.seed);
  } else {
    throw ConfigError("unknown command: " + cmd);
  }

  rep["results"] = results;
  rep["checks"] = checks.rows;
  rep["flags"] = flags;
  rep["ledger"] = detail::ledger_json(ledger);
  rep["pass"] = checks.all_pass;
  if (opt.timing) {
    const auto dt = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - t0);
    rep["timing"] = ordered_json{{"wall_ms", static_cast<std::uint64_t>(dt.count())}};
  }
  out.exit_code = checks.all_pass ? 0 : 1;
  return out;
}

}  // namespace thermoshift
