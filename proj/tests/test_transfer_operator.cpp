#include <doctest.h>

#include <cmath>
#include <random>

#include "thermoshift/transfer_operator.hpp"

using namespace thermoshift;

namespace {

IfsSystem thirds() {
  return make_affine_system({0.0, 1.0}, {{1.0 / 3.0, 0.0}, {1.0 / 3.0, 2.0 / 3.0}});
}

IfsSystem cf12() {
  return make_cf_system({1.0 / 3.0, 1.0}, DigitSet{{1, 2}, false, 1});
}

PotentialFamily const_pot(const IfsSystem& sys, std::vector<double> values) {
  PotentialFamily pf;
  pf.fam = PotentialFamily::Constant{std::move(values)};
  return certify_potential(pf, sys);
}

PotentialFamily cf_pot(const IfsSystem& sys, double s_param) {
  PotentialFamily pf;
  pf.fam = PotentialFamily::CfGeometric{s_param, DigitSet{{1, 2}, false, 1}};
  return certify_potential(pf, sys);
}

IfsSystem geometric_sys(int n) {
  std::vector<std::pair<double, double>> maps;
  const double denom = 2.0 * n - 1.0;
  for (int i = 0; i < n; ++i) maps.emplace_back(1.0 / denom, 2.0 * i / denom);
  return make_affine_system({0.0, 1.0}, maps);
}

PotentialFamily geometric_pot(const IfsSystem& sys) {
  PotentialFamily pf;
  pf.fam = PotentialFamily::GeometricTail{std::log(2.0)};
  return certify_potential(pf, sys);
}

}  // namespace

TEST_CASE("apply_hat closed forms") {
  SUBCASE("stochastic weights fix the constants") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const GridFunction one = GridFunction::ones(sys.domain, 64);
    const GridFunction out = apply_hat(pf, sys, one, {2});
    for (std::size_t k = 0; k < out.nodes(); ++k)
      CHECK(out[k] == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("geometric weights sum to 1 - 2^-40") {
    const IfsSystem sys = geometric_sys(40);
    const PotentialFamily pf = geometric_pot(sys);
    const GridFunction one = GridFunction::ones(sys.domain, 32);
    const GridFunction out = apply_hat(pf, sys, one, {40});
    for (std::size_t k = 0; k < out.nodes(); ++k)
      CHECK(out[k] == doctest::Approx(1.0 - std::pow(2.0, -40.0)).epsilon(1e-14));
  }

  SUBCASE("cf two-branch closed form per node") {
    const IfsSystem sys = cf12();
    const PotentialFamily pf = cf_pot(sys, 1.0);
    const GridFunction one = GridFunction::ones(sys.domain, 64);
    const GridFunction out = apply_hat(pf, sys, one, {2});
    for (std::size_t k = 0; k < out.nodes(); ++k) {
      const double x = out.node(k);
      const double expect = 1.0 / ((1 + x) * (1 + x)) + 1.0 / ((2 + x) * (2 + x));
      CHECK(out[k] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
}

TEST_CASE("apply_hat node-parallel determinism") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.5313);
  const GridFunction g =
      GridFunction::sample(sys.domain, 512, [](double x) { return 1.0 + std::sin(4.0 * x); });
  const GridFunction a = apply_hat(pf, sys, g, {2}, 1);
  const GridFunction b = apply_hat(pf, sys, g, {2}, 8);
  for (std::size_t k = 0; k < a.nodes(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("branch-sum identity against iterated operator") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.8);
  const GridFunction g =
      GridFunction::sample(sys.domain, 2048, [](double x) { return 1.0 + 0.3 * std::cos(3 * x); });
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(sys.domain.lo, sys.domain.hi);
  for (std::size_t n = 1; n <= 3; ++n) {
    GridFunction it = g;
    for (std::size_t k = 0; k < n; ++k) it = apply_hat(pf, sys, it, {2});
    for (int t = 0; t < 8; ++t) {
      const double x = unif(rng);
      const double direct = hat_power_by_words(pf, sys, g, {2}, n, x);
      CHECK(it.eval(x) == doctest::Approx(direct).epsilon(1e-5));
    }
  }
}

TEST_CASE("operator is positive, monotone, linear") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 1.0);
  const GridFunction g1 =
      GridFunction::sample(sys.domain, 128, [](double x) { return 0.2 + x * x; });
  const GridFunction g2 =
      GridFunction::sample(sys.domain, 128, [](double x) { return 0.5 + x * x; });
  const GridFunction L1 = apply_hat(pf, sys, g1, {2});
  const GridFunction L2 = apply_hat(pf, sys, g2, {2});
  CHECK(L1.min_value() > 0.0);
  for (std::size_t k = 0; k < L1.nodes(); ++k) CHECK(L1[k] <= L2[k]);

  GridFunction combo(sys.domain, 128);
  for (std::size_t k = 0; k < combo.nodes(); ++k) combo[k] = 3.0 * g1[k] + g2[k];
  const GridFunction Lc = apply_hat(pf, sys, combo, {2});
  for (std::size_t k = 0; k < Lc.nodes(); ++k)
    CHECK(Lc[k] == doctest::Approx(3.0 * L1[k] + L2[k]).epsilon(1e-13));
}

TEST_CASE("power_iteration on exact systems") {
  SUBCASE("stochastic constants: lambda 1, flat h") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const EigenData e = power_iteration(pf, sys, {2}, 256);
    CHECK(e.converged);
    CHECK(e.lambda == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.residual <= 1e-12);
    for (std::size_t k = 0; k < e.h.nodes(); ++k)
      CHECK(e.h[k] == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("weights (2,3): lambda 5") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(2.0), std::log(3.0)});
    const EigenData e = power_iteration(pf, sys, {2}, 256);
    CHECK(e.lambda == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("eigenmeasure fixed points") {
  SUBCASE("Bernoulli(1/2,1/2) on the halving system is Lebesgue") {
    const IfsSystem sys = make_affine_system({0.0, 1.0}, {{0.5, 0.0}, {0.5, 0.5}});
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const DualEigenResult r = eigenmeasure(pf, sys, {2}, 1024);
    CHECK(r.converged);
    CHECK(r.lambda_dual == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.measure.mass_in(0.0, 0.5) == doctest::Approx(0.5).epsilon(2e-3));
  }

  SUBCASE("weights (2,3) multiply mass by 5") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(2.0), std::log(3.0)});
    const DualEigenResult r = eigenmeasure(pf, sys, {2}, 1024);
    CHECK(r.lambda_dual == doctest::Approx(5.0).epsilon(1e-12));
  }

  SUBCASE("self-similar masses on the separated thirds system") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const DualEigenResult r = eigenmeasure(pf, sys, {2}, 2048);
    CHECK(r.measure.mass_in(0.0, 1.0 / 3.0, 1e-9) == doctest::Approx(0.5).epsilon(1e-10));
  }
}

TEST_CASE("primal and dual eigenvalues agree for the cf system") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.5313);
  const EigenData e = power_iteration(pf, sys, {2}, 2048);
  const DualEigenResult d = eigenmeasure(pf, sys, {2}, 2048);
  CHECK(e.converged);
  CHECK(d.converged);
  CHECK(std::abs(std::log(e.lambda) - std::log(d.lambda_dual)) < 1e-6);
  // near the dimension root the eigenvalue is close to 1
  CHECK(std::abs(e.lambda - 1.0) < 1e-3);
}

TEST_CASE("dual pairing integral L g dm = lambda integral g dm") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 1.0);
  const EigenData e = power_iteration(pf, sys, {2}, 2048);
  const DualEigenResult d = eigenmeasure(pf, sys, {2}, 2048);
  const GridFunction g =
      GridFunction::sample(sys.domain, 2048, [](double x) { return x * x + 0.5; });
  const GridFunction Lg = apply_hat(pf, sys, g, {2});
  const double lhs = d.measure.integrate([&](double x) { return Lg.eval(x); });
  const double rhs = e.lambda * d.measure.integrate([&](double x) { return g.eval(x); });
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("normalized iterates stay inside the distortion band") {
  SUBCASE("stochastic constants sit exactly at 1 with Q = 1") {
    const IfsSystem sys = thirds();
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    ErrorLedger led;
    const BoundsReport rep = check_bounds_Q(pf, sys, {2}, 256, 10, 0.0, 1.0, led);
    CHECK(rep.pass);
    for (const auto& row : rep.rows) {
      CHECK(row.min == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(row.max == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  SUBCASE("geometric family: scalar powers below 1") {
    const IfsSystem sys = geometric_sys(40);
    const PotentialFamily pf = geometric_pot(sys);
    ErrorLedger led;
    const double P = std::log(1.0 - std::pow(2.0, -40.0));
    const BoundsReport rep = check_bounds_Q(pf, sys, {40}, 64, 8, P, 1.0, led);
    CHECK(rep.pass);
  }

  SUBCASE("cf system against the certified Q") {
    const IfsSystem sys = cf12();
    const PotentialFamily pf = cf_pot(sys, 0.5313);
    const DistortionData dd = distortion_constant(pf);
    const EigenData e = power_iteration(pf, sys, {2}, 2048);
    ErrorLedger led;
    led.lambda_gap = e.residual + 1e-10;
    const BoundsReport rep =
        check_bounds_Q(pf, sys, {2}, 2048, 30, std::log(e.lambda), dd.Q, led);
    CHECK(rep.pass);
  }
}

TEST_CASE("convergence profile") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.5313);
  EigenData e = power_iteration(pf, sys, {2}, 1024);
  const DualEigenResult d = eigenmeasure(pf, sys, {2}, 1024);
  normalize_eigenfunction(e, d.measure);

  SUBCASE("the eigenfunction itself stays put") {
    const ConvergenceProfile prof =
        convergence_profile(pf, sys, {2}, e.h, e, d.measure, 10);
    for (double err : prof.sup_errors) CHECK(err < 1e-6);
  }

  SUBCASE("constant family with g = 1 has zero error") {
    const IfsSystem t = thirds();
    const PotentialFamily cp = const_pot(t, {std::log(0.5), std::log(0.5)});
    EigenData ce = power_iteration(cp, t, {2}, 256);
    const DualEigenResult cd = eigenmeasure(cp, t, {2}, 256);
    normalize_eigenfunction(ce, cd.measure);
    const GridFunction one = GridFunction::ones(t.domain, 256);
    const ConvergenceProfile prof = convergence_profile(cp, t, {2}, one, ce, cd.measure, 8);
    for (double err : prof.sup_errors) CHECK(err < 1e-10);
  }

  SUBCASE("Holder g converges geometrically") {
    const GridFunction g =
        GridFunction::sample(sys.domain, 1024, [](double x) { return x; });
    const ConvergenceProfile prof = convergence_profile(pf, sys, {2}, g, e, d.measure, 16);
    CHECK(prof.sup_errors.back() < prof.sup_errors.front());
    CHECK(prof.fitted_rate > 0.0);
    CHECK(prof.fitted_rate < 1.0);
  }
}

TEST_CASE("conformal mass concentrates on the branch images") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.5313);
  const DualEigenResult d = eigenmeasure(pf, sys, {2}, 2048);
  for (std::size_t n = 1; n <= 4; ++n) {
    std::vector<Interval> images;
    for_each_word(n, 2, [&](const Word& w) { images.push_back(word_image(sys, w)); });
    double covered = 0.0;
    for (const auto& atom : d.measure.atoms) {
      for (const auto& img : images)
        if (img.contains(atom.x, 1e-6)) {
          covered += atom.w;
          break;
        }
    }
    CHECK(covered == doctest::Approx(1.0).epsilon(1e-9));
  }
}
