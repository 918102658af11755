#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <vector>

#include "thermoshift/common.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/ledger.hpp"
#include "thermoshift/parallel.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

// One depth of the partition function Z_n = sum over |omega|=n of
// sup_X exp(S_omega). The grid sup underestimates the true sup; `pad` is the
// uniform Lipschitz correction making log_sup + pad an overestimate.
struct PartitionValue {
  std::size_t n = 0;
  double log_sup = 0.0;   // log sum of grid maxima (lower-safe)
  double pad = 0.0;       // per-word sup padding (upper-safe when added)
  double log_tail = -std::numeric_limits<double>::infinity();  // alphabet tail at depth n

  double log_upper() const { return log_add_exp(log_sup + pad, log_tail); }
};

namespace detail {

// Depth-first enumeration that grows words by prepending a symbol, so that
//   S_{i v}(x) = S_v(x) + phi^(i)(phi_v(x)),  phi_{i v} = phi_i o phi_v
// extends exactly from the parent's node values. Every word of every depth
// <= n_max is visited once; per-depth maxima feed streaming log-sum-exp
// accumulators. Blocks are indexed by the root child so results do not
// depend on the thread count.
struct ZsupDfs {
  const PotentialFamily& pf;
  const IfsSystem& sys;
  Symbol N;
  std::size_t n_max;
  std::size_t nodes;  // grid nodes carried along the path (1 for constants)

  void run(Symbol root_child, std::vector<LogSumExp>& acc) const {
    // one point/sum buffer per path depth, reused across the whole subtree
    std::vector<std::vector<double>> pts(n_max + 1, std::vector<double>(nodes)),
        sums(n_max + 1, std::vector<double>(nodes, 0.0));
    for (std::size_t k = 0; k < nodes; ++k) {
      pts[0][k] = nodes == 1
                      ? sys.domain.mid()
                      : sys.domain.lo + sys.diam() * static_cast<double>(k) /
                                            static_cast<double>(nodes - 1);
    }
    descend(root_child, 1, pts, sums, acc);
  }

 private:
  void descend(Symbol i, std::size_t depth, std::vector<std::vector<double>>& pts,
               std::vector<std::vector<double>>& sums, std::vector<LogSumExp>& acc) const {
    const std::vector<double>& p0 = pts[depth - 1];
    const std::vector<double>& s0 = sums[depth - 1];
    std::vector<double>& p1 = pts[depth];
    std::vector<double>& s1 = sums[depth];
    double best = -std::numeric_limits<double>::infinity();
    const ContractionMap m = sys.map(i);
    for (std::size_t k = 0; k < nodes; ++k) {
      s1[k] = s0[k] + pf.eval(i, p0[k]);
      p1[k] = m.apply(p0[k]);
      if (s1[k] > best) best = s1[k];
    }
    acc[depth - 1].add_log(best);
    if (depth == n_max) return;
    for (Symbol j = 1; j <= N; ++j) descend(j, depth + 1, pts, sums, acc);
  }
};

inline double alphabet_tail_log(const PotentialFamily& pf, const IfsSystem& sys,
                                AlphabetCutoff cut, std::size_t n, std::size_t grid) {
  const SummabilityBound sb = summability_bound(pf, sys, cut, grid);
  if (sb.tail <= 0.0) return -std::numeric_limits<double>::infinity();
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  double head_sup = 0.0;
  for (Symbol i = 1; i <= N; ++i) head_sup += std::exp(pf.sup_on(i, sys.domain));
  // (H+T)^n - H^n <= n T (H+T)^(n-1)
  return std::log(static_cast<double>(n)) + std::log(sb.tail) +
         static_cast<double>(n - 1) * std::log(head_sup + sb.tail);
}

}  // namespace detail

// All partition values Z_1..Z_n in one pass.
inline std::vector<PartitionValue> partition_function_all(
    const PotentialFamily& pf, const IfsSystem& sys, std::size_t n_max, AlphabetCutoff cut,
    std::size_t zgrid_cells = 512, std::uint64_t cap = word_cap_from_env(), int threads = 1) {
  if (n_max == 0) return {};
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  check_enumeration_cap(N, n_max, cap);

  const bool constant = pf.is_constant_family();
  detail::ZsupDfs dfs{pf, sys, N, n_max, constant ? 1 : zgrid_cells + 1};

  std::vector<std::vector<LogSumExp>> block_acc(static_cast<std::size_t>(N),
                                                std::vector<LogSumExp>(n_max));
  parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t b) {
    dfs.run(static_cast<Symbol>(b + 1), block_acc[b]);
  });

  const double lip_branch =
      constant ? 0.0 : pf.lip_max * (1.0 - std::pow(sys.s, static_cast<double>(n_max))) /
                           (1.0 - sys.s);
  const double pad = constant ? 0.0
                              : lip_branch * sys.diam() /
                                    (2.0 * static_cast<double>(zgrid_cells));

  std::vector<PartitionValue> out(n_max);
  for (std::size_t d = 0; d < n_max; ++d) {
    LogSumExp total;
    for (Symbol b = 0; b < N; ++b) total.merge(block_acc[static_cast<std::size_t>(b)][d]);
    out[d].n = d + 1;
    out[d].log_sup = total.value();
    out[d].pad = pad;
    out[d].log_tail = detail::alphabet_tail_log(pf, sys, cut, d + 1, 256);
  }
  return out;
}

inline PartitionValue partition_function(const PotentialFamily& pf, const IfsSystem& sys,
                                         std::size_t n, AlphabetCutoff cut,
                                         std::size_t zgrid_cells = 512,
                                         std::uint64_t cap = word_cap_from_env(),
                                         int threads = 1) {
  auto all = partition_function_all(pf, sys, n, cut, zgrid_cells, cap, threads);
  return all.back();
}

// Fixed point of phi_rho by contraction iteration from the midpoint,
// stopping at 1e-12 absolute.
inline double periodic_point(const IfsSystem& sys, const Word& rho) {
  double y = sys.domain.mid();
  for (std::size_t it = 0; it < 400; ++it) {
    double z = y;
    for (std::size_t j = rho.size(); j > 0; --j) z = sys.apply(rho[j - 1], z);
    const double delta = std::abs(z - y);
    y = z;
    if (delta <= 1e-12) break;
  }
  return y;
}

// log Z_n(phi, i): Birkhoff sums along period-n points starting with i,
// evaluated at the fixed point of the corresponding branch composition.
inline double periodic_partition_function(const PotentialFamily& pf, const IfsSystem& sys,
                                          Symbol i, std::size_t n, AlphabetCutoff cut,
                                          std::uint64_t cap = word_cap_from_env()) {
  if (n < 1) throw DomainError("periodic partition function: n >= 1");
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  if (i < 1 || i > N) throw DomainError("periodic partition function: symbol out of range");
  check_enumeration_cap(N, n - 1, cap);
  const bool constant = pf.is_constant_family();
  LogSumExp acc;
  for_each_word(n - 1, N, [&](const Word& tail) {
    Word rho;
    rho.symbols.reserve(n);
    rho.symbols.push_back(i);
    rho.symbols.insert(rho.symbols.end(), tail.symbols.begin(), tail.symbols.end());
    double S;
    if (constant) {
      S = 0.0;
      for (Symbol sym : rho.symbols) S += pf.eval(sym, sys.domain.lo);
    } else {
      S = birkhoff_branch_sum(pf, sys, rho, periodic_point(sys, rho));
    }
    acc.add_log(S);
  });
  return acc.value();
}

// Two-sided pressure estimate.
//
// upper:  min_n (1/n) log(Z_n padded + tail), valid by subadditivity of Z.
// lower:  the better of two sound bounds,
//           max_n (1/n)(log Z_n - log Q)       (distortion superadditivity)
//           max_i (1/n)(log Z_n(phi,i) - 2 log Q)  (recurrence upper bound)
// point:  (1/n_used) log Z_{n_used}, always in [P, P + log Q / n].
struct PressureEstimate {
  std::size_t n_used = 0;
  Symbol cutoff = 0;
  double upper = 0.0;
  double lower = 0.0;
  double lower_distortion = 0.0;
  double lower_periodic = 0.0;
  double point = 0.0;
  bool clamped = false;
  std::vector<PartitionValue> table;
  std::map<Symbol, double> probe_log_z;
  ErrorLedger ledger;
};

inline PressureEstimate pressure_estimate(const PotentialFamily& pf, const IfsSystem& sys,
                                          AlphabetCutoff cut, std::size_t n_max,
                                          std::vector<Symbol> probe_symbols, double Q,
                                          std::size_t zgrid_cells = 512,
                                          std::uint64_t cap = word_cap_from_env(),
                                          int threads = 1) {
  if (n_max < 1) throw DomainError("pressure estimate: n_max >= 1");
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  PressureEstimate est;
  est.cutoff = N;
  std::size_t n_used = n_max;
  while (n_used > 1 &&
         pow_count(static_cast<std::uint64_t>(N), static_cast<std::uint32_t>(n_used), cap) > cap)
    --n_used;
  est.clamped = n_used != n_max;
  est.n_used = n_used;

  est.table = partition_function_all(pf, sys, n_used, cut, zgrid_cells, cap, threads);
  const double logQ = std::log(Q);

  est.upper = std::numeric_limits<double>::infinity();
  est.lower_distortion = -std::numeric_limits<double>::infinity();
  for (const PartitionValue& z : est.table) {
    const double nn = static_cast<double>(z.n);
    est.upper = std::min(est.upper, z.log_upper() / nn);
    est.lower_distortion = std::max(est.lower_distortion, (z.log_sup - logQ) / nn);
  }
  est.point = est.table.back().log_sup / static_cast<double>(n_used);

  est.lower_periodic = -std::numeric_limits<double>::infinity();
  for (Symbol i : probe_symbols) {
    if (i < 1 || i > N) continue;
    const double lz = periodic_partition_function(pf, sys, i, n_used, cut, cap);
    est.probe_log_z[i] = lz;
    est.lower_periodic =
        std::max(est.lower_periodic, (lz - 2.0 * logQ) / static_cast<double>(n_used));
  }
  est.lower = std::max(est.lower_distortion, est.lower_periodic);

  est.ledger.zsup_pad = est.table.back().pad;
  est.ledger.fixed_point_tol = 1e-12;
  const SummabilityBound sb = summability_bound(pf, sys, cut);
  est.ledger.alphabet_tail = sb.tail;
  est.ledger.alphabet_head = sb.head;
  return est;
}

// Gap table between the cylinder-sup pressure at depth n and the periodic
// pressure at depth n+1. The comparison constants decay after division by n.
struct PressureDefsReport {
  struct Row {
    std::size_t n = 0;
    double gap = 0.0;
    double threshold = 0.0;
    bool pass = false;
  };
  Symbol i = 1;
  std::vector<Row> rows;
  bool pass = true;
};

inline PressureDefsReport check_pressure_defs(const PotentialFamily& pf, const IfsSystem& sys,
                                              AlphabetCutoff cut, Symbol i, std::size_t n_max,
                                              double Q, std::size_t zgrid_cells = 512,
                                              std::uint64_t cap = word_cap_from_env(),
                                              int threads = 1) {
  PressureDefsReport rep;
  rep.i = i;
  const auto zs = partition_function_all(pf, sys, n_max, cut, zgrid_cells, cap, threads);
  const double A_i = std::max(std::abs(pf.sup_on(i, sys.domain)),
                              std::abs(pf.inf_on(i, sys.domain)));
  const double point = zs.back().log_sup / static_cast<double>(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double z_n = zs[n - 1].log_sup / static_cast<double>(n);
    const double zp =
        periodic_partition_function(pf, sys, i, n + 1, cut, cap) / static_cast<double>(n + 1);
    PressureDefsReport::Row row;
    row.n = n;
    row.gap = std::abs(z_n - zp);
    row.threshold = (2.0 * std::log(Q) + A_i + std::abs(point)) / static_cast<double>(n);
    row.pass = row.gap <= row.threshold;
    rep.pass = rep.pass && row.pass;
    rep.rows.push_back(row);
  }
  return rep;
}

// Positive-recurrence certificate: ratios Z_n(phi,i) lambda^-n against the
// two-sided band [m_hat_i / Q, Q^2], the band widened by the compounded
// lambda uncertainty.
struct RecurrenceCertificate {
  struct Row {
    std::size_t n = 0;
    double ratio = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
  };
  Symbol i = 1;
  double lambda = 0.0;
  double m_hat_i = 0.0;
  double Q = 1.0;
  std::vector<Row> rows;
  bool pass = true;
};

inline RecurrenceCertificate certify_recurrence(const PotentialFamily& pf, const IfsSystem& sys,
                                                AlphabetCutoff cut, Symbol i, std::size_t n_lo,
                                                std::size_t n_hi, double lambda, double m_hat_i,
                                                double Q, const ErrorLedger& ledger,
                                                std::uint64_t cap = word_cap_from_env()) {
  RecurrenceCertificate cert;
  cert.i = i;
  cert.lambda = lambda;
  cert.m_hat_i = m_hat_i;
  cert.Q = Q;
  const double log_lambda = std::log(lambda);
  for (std::size_t n = std::max<std::size_t>(n_lo, 1); n <= n_hi; ++n) {
    const double lz = periodic_partition_function(pf, sys, i, n, cut, cap);
    const double ratio = std::exp(lz - static_cast<double>(n) * log_lambda);
    const double slack = ledger.compound(n) + 1e-9;
    RecurrenceCertificate::Row row;
    row.n = n;
    row.ratio = ratio;
    row.lo = (m_hat_i / Q) * (1.0 - slack);
    row.hi = Q * Q * (1.0 + slack);
    row.pass = ratio >= row.lo && ratio <= row.hi;
    cert.pass = cert.pass && row.pass;
    cert.rows.push_back(row);
  }
  return cert;
}

}  // namespace thermoshift
