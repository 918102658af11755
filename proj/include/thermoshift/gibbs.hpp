#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <ostream>
#include <random>
#include <vector>

#include "thermoshift/atom_measure.hpp"
#include "thermoshift/common.hpp"
#include "thermoshift/grid_function.hpp"
#include "thermoshift/ifs.hpp"
#include "thermoshift/ledger.hpp"
#include "thermoshift/parallel.hpp"
#include "thermoshift/potential.hpp"
#include "thermoshift/pressure.hpp"
#include "thermoshift/word.hpp"

namespace thermoshift {

// m_hat([omega]) = integral of exp(S_omega - P n) against the conformal
// atom measure. The empty word returns the total mass.
inline double cylinder_mass(const PotentialFamily& pf, const IfsSystem& sys, const Word& w,
                            const AtomMeasure& m, double P_est) {
  if (w.empty()) return m.total_mass();
  const double shift = P_est * static_cast<double>(w.size());
  double sum = 0.0;
  for (const auto& atom : m.atoms)
    sum += atom.w * std::exp(birkhoff_branch_sum(pf, sys, w, atom.x) - shift);
  return sum;
}

// mu_hat([omega]) = integral of exp(S_omega - P n) * h(phi_omega(x)), the
// invariant mass before per-depth normalization.
inline double invariant_mass(const PotentialFamily& pf, const IfsSystem& sys, const Word& w,
                             const AtomMeasure& m, const GridFunction& h, double P_est) {
  if (w.empty()) return m.integrate([&](double x) { return h.eval(x); });
  const double shift = P_est * static_cast<double>(w.size());
  double sum = 0.0;
  for (const auto& atom : m.atoms) {
    const BranchSum bs = birkhoff_branch_sum_full(pf, sys, w, atom.x);
    sum += atom.w * std::exp(bs.value - shift) * h.eval(bs.endpoint);
  }
  return sum;
}

struct CylinderMeasureTable {
  std::size_t depth = 0;
  Symbol cutoff = 0;
  double P_est = 0.0;
  std::map<Word, double, WordLess> mass;
  std::vector<double> depth_sums;  // raw sums, index k-1 for depth k
  ErrorLedger ledger;
  double lip_branch = 0.0;  // Lipschitz bound of S_omega used in allowances

  double at(const Word& w) const {
    const auto it = mass.find(w);
    if (it == mass.end()) throw DomainError("cylinder table: word " + w.str() + " not tabulated");
    return it->second;
  }

  // Absolute allowance for one depth-k entry.
  double allowance(std::size_t k, double value) const {
    const double rel = ledger.cylinder_rel(k, lip_branch);
    const double tail_share = static_cast<double>(k) * ledger.tail_ratio();
    return rel * std::abs(value) + tail_share + 1e-14;
  }
};

struct InvariantMeasureTable {
  std::size_t depth = 0;
  Symbol cutoff = 0;
  double P_est = 0.0;
  std::map<Word, double, WordLess> mass;   // normalized to unit total per depth
  std::vector<double> raw_depth_sums;
  ErrorLedger ledger;
  double lip_branch = 0.0;

  double at(const Word& w) const {
    const auto it = mass.find(w);
    if (it == mass.end()) throw DomainError("invariant table: word " + w.str() + " not tabulated");
    return it->second;
  }

  double allowance(std::size_t k, double value) const {
    const double rel = ledger.cylinder_rel(k, lip_branch);
    const double tail_share = static_cast<double>(k) * ledger.tail_ratio();
    return rel * std::abs(value) + tail_share + 1e-14;
  }
};

struct GibbsTables {
  CylinderMeasureTable m_hat;
  InvariantMeasureTable mu_hat;
};

// Tabulates both measures for every cylinder up to `depth`. Both masses for
// one word share the branch-sum pass over the atoms.
inline GibbsTables build_gibbs_tables(const PotentialFamily& pf, const IfsSystem& sys,
                                      std::size_t depth, AlphabetCutoff cut,
                                      const AtomMeasure& m, const GridFunction& h, double P_est,
                                      const ErrorLedger& base_ledger,
                                      std::uint64_t cap = word_cap_from_env(),
                                      int threads = 1) {
  const Symbol N = std::min(pf.effective_cutoff(cut.N), sys.effective_cutoff(cut.N));
  check_enumeration_cap(N, depth, cap);

  GibbsTables t;
  t.m_hat.depth = t.mu_hat.depth = depth;
  t.m_hat.cutoff = t.mu_hat.cutoff = N;
  t.m_hat.P_est = t.mu_hat.P_est = P_est;
  t.m_hat.ledger = t.mu_hat.ledger = base_ledger;
  const double lipS = pf.is_constant_family() ? 0.0 : pf.lip_max / (1.0 - sys.s);
  t.m_hat.lip_branch = t.mu_hat.lip_branch = lipS;

  std::vector<Word> words;
  for (std::size_t k = 1; k <= depth; ++k)
    for_each_word(k, N, [&](const Word& w) { words.push_back(w); });

  std::vector<double> mh(words.size()), muh(words.size());
  parallel_for(words.size(), threads, [&](std::size_t j) {
    const Word& w = words[j];
    const double shift = P_est * static_cast<double>(w.size());
    double a = 0.0, b = 0.0;
    for (const auto& atom : m.atoms) {
      const BranchSum bs = birkhoff_branch_sum_full(pf, sys, w, atom.x);
      const double weight = atom.w * std::exp(bs.value - shift);
      a += weight;
      b += weight * h.eval(bs.endpoint);
    }
    mh[j] = a;
    muh[j] = b;
  });

  t.m_hat.depth_sums.assign(depth, 0.0);
  t.mu_hat.raw_depth_sums.assign(depth, 0.0);
  for (std::size_t j = 0; j < words.size(); ++j) {
    const std::size_t k = words[j].size();
    t.m_hat.mass[words[j]] = mh[j];
    t.m_hat.depth_sums[k - 1] += mh[j];
    t.mu_hat.raw_depth_sums[k - 1] += muh[j];
  }
  for (std::size_t j = 0; j < words.size(); ++j) {
    const std::size_t k = words[j].size();
    const double norm = t.mu_hat.raw_depth_sums[k - 1];
    if (!(norm > 0.0)) throw ConvergenceError("invariant table: zero depth mass");
    t.mu_hat.mass[words[j]] = muh[j] / norm;
  }
  return t;
}

struct DefectReport {
  double max_defect = 0.0;   // raw worst |difference|
  double max_excess = 0.0;   // worst defect minus its allowance, floored at 0
  Word worst;
  std::size_t skipped = 0;   // entries the discretization cannot resolve
  bool pass = true;
};

// Right-extension consistency: sum_i m_hat[omega i] = m_hat[omega].
inline DefectReport check_kolmogorov_consistency(const CylinderMeasureTable& t) {
  DefectReport rep;
  for (const auto& [w, mass] : t.mass) {
    if (w.size() + 1 > t.depth) continue;
    double sum = 0.0;
    for (Symbol i = 1; i <= t.cutoff; ++i) {
      Word ext = w;
      ext.symbols.push_back(i);
      sum += t.at(ext);
    }
    const double defect = std::abs(sum - mass);
    const double excess = std::max(0.0, defect - t.allowance(w.size() + 1, mass));
    if (defect > rep.max_defect) {
      rep.max_defect = defect;
      rep.worst = w;
    }
    rep.max_excess = std::max(rep.max_excess, excess);
  }
  rep.pass = rep.max_excess <= 0.0;
  return rep;
}

// Shift invariance: sum_i mu_hat[i omega] = mu_hat[omega].
inline DefectReport check_shift_invariance(const InvariantMeasureTable& t) {
  DefectReport rep;
  for (const auto& [w, mass] : t.mass) {
    if (w.size() + 1 > t.depth) continue;
    double sum = 0.0;
    for (Symbol i = 1; i <= t.cutoff; ++i) {
      Word pre;
      pre.symbols.reserve(w.size() + 1);
      pre.symbols.push_back(i);
      pre.symbols.insert(pre.symbols.end(), w.symbols.begin(), w.symbols.end());
      sum += t.at(pre);
    }
    const double defect = std::abs(sum - mass);
    const double excess = std::max(0.0, defect - t.allowance(w.size() + 1, mass));
    if (defect > rep.max_defect) {
      rep.max_defect = defect;
      rep.worst = w;
    }
    rep.max_excess = std::max(rep.max_excess, excess);
  }
  rep.pass = rep.max_excess <= 0.0;
  return rep;
}

// Pushforward identity through the coding map: the mass of [omega] matches
// the conformal mass of the interval phi_omega(X). Requires the separation
// hypothesis.
inline DefectReport check_pushforward(const CylinderMeasureTable& t, const AtomMeasure& m,
                                      const IfsSystem& sys, std::size_t depth,
                                      bool separation_verified,
                                      double min_image_width = 0.0) {
  if (!separation_verified)
    throw PreconditionError("pushforward check requires verified separation");
  DefectReport rep;
  for (const auto& [w, mass] : t.mass) {
    if (w.size() > depth) continue;
    const Interval img = word_image(sys, w);
    // Image intervals narrower than the merge resolution cannot be told
    // apart from their neighbors by the atom positions.
    if (img.length() < min_image_width) {
      ++rep.skipped;
      continue;
    }
    const double downstairs = m.mass_in(img.lo, img.hi, t.ledger.atom_position + 1e-13);
    const double defect = std::abs(downstairs - mass);
    const double excess = std::max(0.0, defect - t.allowance(w.size(), mass));
    if (defect > rep.max_defect) {
      rep.max_defect = defect;
      rep.worst = w;
    }
    rep.max_excess = std::max(rep.max_excess, excess);
  }
  rep.pass = rep.max_excess <= 0.0;
  return rep;
}

// Finite mixing inequalities on cylinder pairs:
//   (1)  m(shift^-n [tau]) within [Q^-1, Q] * m[tau]
//   (2)  m(shift^-n [tau] cap [omega]) <= (1 - (2Q)^-1 (1 - m[tau])) m[omega]
struct MixingReport {
  std::size_t n_shift = 0;
  std::size_t pairs_checked = 0;
  double max_excess_band = 0.0;
  double max_excess_cap = 0.0;
  bool pass = true;
};

inline MixingReport mixing_diagnostic(const CylinderMeasureTable& t, std::size_t n_shift,
                                      double Q) {
  if (n_shift < 1 || n_shift >= t.depth)
    throw DomainError("mixing diagnostic: need 1 <= n_shift < depth");
  MixingReport rep;
  rep.n_shift = n_shift;

  const auto suffix_matches = [](const Word& w, const Word& tau, std::size_t n) {
    if (w.size() != n + tau.size()) return false;
    for (std::size_t k = 0; k < tau.size(); ++k)
      if (w.symbols[n + k] != tau.symbols[k]) return false;
    return true;
  };

  for (const auto& [tau, mtau] : t.mass) {
    if (tau.size() + n_shift > t.depth) continue;
    // m(shift^-n [tau]) = sum over heads u of length n of m[u tau]
    double pulled = 0.0;
    for (const auto& [w, mw] : t.mass)
      if (suffix_matches(w, tau, n_shift)) pulled += mw;
    const double allow = t.allowance(tau.size() + n_shift, std::max(mtau, pulled));
    const double lo = mtau / Q - allow;
    const double hi = mtau * Q + allow;
    rep.max_excess_band = std::max({rep.max_excess_band, lo - pulled, pulled - hi});

    // conditional cap against every tabulated head cylinder
    for (const auto& [omega, momega] : t.mass) {
      if (omega.size() > n_shift) continue;
      double inter = 0.0;
      for (const auto& [w, mw] : t.mass) {
        if (!suffix_matches(w, tau, n_shift)) continue;
        bool extends = true;
        for (std::size_t k = 0; k < omega.size(); ++k)
          if (w.symbols[k] != omega.symbols[k]) {
            extends = false;
            break;
          }
        if (extends) inter += mw;
      }
      const double mtau_hi = std::min(1.0, mtau + t.allowance(tau.size(), mtau));
      const double cap = (1.0 - (1.0 - mtau_hi) / (2.0 * Q)) * momega;
      const double allow2 =
          t.allowance(tau.size() + n_shift, momega) + t.allowance(omega.size(), momega);
      rep.max_excess_cap = std::max(rep.max_excess_cap, inter - (cap + allow2));
      ++rep.pairs_checked;
    }
  }
  rep.pass = rep.max_excess_band <= 0.0 && rep.max_excess_cap <= 0.0;
  return rep;
}

// Gibbs comparability: every tabulated mass against its branch weight
// exp(sup_X S_omega - P n), within the distortion band.
struct GibbsPropertyReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = true;
};

inline GibbsPropertyReport check_gibbs_property(const CylinderMeasureTable& t,
                                                const PotentialFamily& pf, const IfsSystem& sys,
                                                double Q, std::size_t sup_grid = 128) {
  GibbsPropertyReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  const double lip = t.lip_branch;
  for (const auto& [w, mass] : t.mass) {
    double sup = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= sup_grid; ++k) {
      const double x = sys.domain.lo + sys.diam() * static_cast<double>(k) /
                                           static_cast<double>(sup_grid);
      sup = std::max(sup, birkhoff_branch_sum(pf, sys, w, x));
    }
    const double pad = lip * sys.diam() / (2.0 * static_cast<double>(sup_grid));
    const double n = static_cast<double>(w.size());
    const double slack = t.ledger.cylinder_rel(w.size(), lip) + pad;
    // ratio against the padded (upper) weight is >= 1/Q, against the raw
    // (lower) weight is <= 1
    const double r_lo = mass / std::exp(sup + pad - t.P_est * n);
    const double r_hi = mass / std::exp(sup - t.P_est * n);
    rep.min_ratio = std::min(rep.min_ratio, r_lo);
    rep.max_ratio = std::max(rep.max_ratio, r_hi);
    if (r_lo < (1.0 / Q) * (1.0 - slack) || r_hi > 1.0 + slack) rep.pass = false;
  }
  return rep;
}

// Entrywise density-ratio band mu_hat/m_hat in [1/Q, Q]. Ratios beyond the
// band but within a factor 2 are flagged, not failed.
struct DensityRatioReport {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  std::size_t checked = 0;
  std::size_t flagged = 0;
  bool pass = true;
};

inline DensityRatioReport check_density_ratios(const GibbsTables& t, double Q) {
  DensityRatioReport rep;
  rep.min_ratio = std::numeric_limits<double>::infinity();
  rep.max_ratio = 0.0;
  for (const auto& [w, mh] : t.m_hat.mass) {
    const std::size_t k = w.size();
    const double floor =
        10.0 * (t.m_hat.ledger.cylinder_rel(k, t.m_hat.lip_branch) /
                    std::pow(static_cast<double>(t.m_hat.cutoff), static_cast<double>(k)) +
                1e-12);
    if (mh < floor) continue;
    const double r = t.mu_hat.at(w) / mh;
    rep.min_ratio = std::min(rep.min_ratio, r);
    rep.max_ratio = std::max(rep.max_ratio, r);
    ++rep.checked;
    const double slack = t.m_hat.ledger.cylinder_rel(k, t.m_hat.lip_branch) + 1e-9;
    const bool in_band = r >= (1.0 / Q) * (1.0 - slack) && r <= Q * (1.0 + slack);
    const bool in_doubled = r >= (0.5 / Q) * (1.0 - slack) && r <= 2.0 * Q * (1.0 + slack);
    if (!in_band) {
      if (in_doubled)
        ++rep.flagged;
      else
        rep.pass = false;
    }
  }
  return rep;
}

// Draws a word of length n symbol-by-symbol from the conditional invariant
// masses. Deterministic for a fixed seed.
inline Word sample_word(const InvariantMeasureTable& t, std::size_t n, std::uint64_t seed) {
  if (n > t.depth) throw DomainError("sample_word: table too shallow");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Word w;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> cond(static_cast<std::size_t>(t.cutoff));
    double total = 0.0;
    for (Symbol i = 1; i <= t.cutoff; ++i) {
      Word ext = w;
      ext.symbols.push_back(i);
      cond[static_cast<std::size_t>(i - 1)] = t.at(ext);
      total += cond[static_cast<std::size_t>(i - 1)];
    }
    double u = unif(rng) * total;
    Symbol pick = t.cutoff;
    for (Symbol i = 1; i <= t.cutoff; ++i) {
      u -= cond[static_cast<std::size_t>(i - 1)];
      if (u <= 0.0) {
        pick = i;
        break;
      }
    }
    w.symbols.push_back(pick);
  }
  return w;
}

}  // namespace thermoshift
