#pragma once

#include <algorithm>
#include <cmath>

#include "thermoshift/common.hpp"

namespace thermoshift {

// Explicit error accounting attached to every report. Each field is a sound
// upper bound on one error source; checks derive their slacks from these
// instead of silently absorbing truncation.
struct ErrorLedger {
  double alphabet_tail = 0.0;    // sup-weight mass dropped past the cutoff
  double alphabet_head = 1.0;    // matching head, for tail/head ratios
  double lambda_gap = 0.0;       // |log lambda_primal - log lambda_dual| + residual scale
  double atom_position = 0.0;    // atom displacement bound from cell merging
  double grid_step = 0.0;        // function-grid cell width
  double zsup_pad = 0.0;         // Lipschitz padding used for grid sups of S_omega
  double fixed_point_tol = 0.0;  // periodic-point iteration stop
  double float_round = 1e-12;   // accumulation-rounding allowance

  double tail_ratio() const {
    return alphabet_head > 0.0 ? alphabet_tail / alphabet_head : 0.0;
  }

  // Relative allowance for a depth-n cylinder mass: lambda/pressure
  // uncertainty compounds n times, atom displacement acts through the branch
  // sum's Lipschitz constant, and a rounding floor.
  double cylinder_rel(std::size_t n, double lip_branch_sum) const {
    return static_cast<double>(n) * lambda_gap + lip_branch_sum * atom_position +
           static_cast<double>(n) * tail_ratio() + float_round;
  }

  // Multiplicative slack e^{n dP} - 1 for quantities scaled by lambda^-n.
  double compound(std::size_t n) const {
    return std::expm1(static_cast<double>(n) * (lambda_gap + tail_ratio())) + float_round;
  }

  ErrorLedger& absorb(const ErrorLedger& o) {
    alphabet_tail = std::max(alphabet_tail, o.alphabet_tail);
    alphabet_head = std::min(alphabet_head, o.alphabet_head);
    lambda_gap = std::max(lambda_gap, o.lambda_gap);
    atom_position = std::max(atom_position, o.atom_position);
    grid_step = std::max(grid_step, o.grid_step);
    zsup_pad = std::max(zsup_pad, o.zsup_pad);
    fixed_point_tol = std::max(fixed_point_tol, o.fixed_point_tol);
    float_round = std::max(float_round, o.float_round);
    return *this;
  }
};

}  // namespace thermoshift
