#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "thermoshift/common.hpp"

namespace thermoshift {

// Finitely supported weighted measure on the domain interval. Carrier for the
// conformal measure produced by the dual iteration.
struct AtomMeasure {
  struct Atom {
    double x = 0.0;
    double w = 0.0;
  };

  Interval dom;
  std::vector<Atom> atoms;

  double total_mass() const {
    double m = 0.0;
    for (const Atom& a : atoms) m += a.w;
    return m;
  }

  void normalize() {
    const double m = total_mass();
    if (m <= 0.0) throw DomainError("atom measure: cannot normalize zero mass");
    for (Atom& a : atoms) a.w /= m;
  }

  template <typename Fn>
  double integrate(Fn&& fn) const {
    double s = 0.0;
    for (const Atom& a : atoms) s += a.w * fn(a.x);
    return s;
  }

  // Mass carried inside [lo, hi], the window padded by `pad` on both sides.
  double mass_in(double lo, double hi, double pad = 0.0) const {
    double s = 0.0;
    for (const Atom& a : atoms)
      if (a.x >= lo - pad && a.x <= hi + pad) s += a.w;
    return s;
  }

  // Collapses atoms sharing a grid cell into one atom at the weighted mean
  // position. Mass is preserved exactly; positions move by less than one cell.
  void merge_cells(std::size_t cells) {
    if (atoms.empty()) return;
    const double h = dom.length() / static_cast<double>(cells);
    std::vector<double> wsum(cells + 1, 0.0), xsum(cells + 1, 0.0);
    for (const Atom& a : atoms) {
      double t = (a.x - dom.lo) / h;
      if (t < 0.0) t = 0.0;
      std::size_t c = static_cast<std::size_t>(t);
      if (c > cells) c = cells;
      wsum[c] += a.w;
      xsum[c] += a.w * a.x;
    }
    atoms.clear();
    for (std::size_t c = 0; c <= cells; ++c) {
      if (wsum[c] > 0.0) atoms.push_back({xsum[c] / wsum[c], wsum[c]});
    }
  }

  // Enforces the atom cap by folding the smallest weights into their nearest
  // surviving neighbor (atoms are kept position-sorted by merge_cells).
  void cap_atoms(std::size_t cap) {
    while (atoms.size() > cap && atoms.size() >= 2) {
      std::size_t k = 0;
      for (std::size_t j = 1; j < atoms.size(); ++j)
        if (atoms[j].w < atoms[k].w) k = j;
      std::size_t nb;
      if (k == 0)
        nb = 1;
      else if (k + 1 == atoms.size())
        nb = k - 1;
      else
        nb = (atoms[k].x - atoms[k - 1].x <= atoms[k + 1].x - atoms[k].x) ? k - 1 : k + 1;
      const double w = atoms[k].w + atoms[nb].w;
      atoms[nb].x = (atoms[k].x * atoms[k].w + atoms[nb].x * atoms[nb].w) / w;
      atoms[nb].w = w;
      atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }
};

}  // namespace thermoshift
