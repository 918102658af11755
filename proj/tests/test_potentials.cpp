#include <doctest.h>

#include <cmath>
#include <random>

#include "thermoshift/ifs.hpp"
#include "thermoshift/potential.hpp"

using namespace thermoshift;

namespace {

IfsSystem cf12() {
  return make_cf_system({1.0 / 3.0, 1.0}, DigitSet{{1, 2}, false, 1});
}

PotentialFamily cf_pot(const IfsSystem& sys, double s_param) {
  PotentialFamily pf;
  pf.fam = PotentialFamily::CfGeometric{s_param, DigitSet{{1, 2}, false, 1}};
  return certify_potential(pf, sys);
}

PotentialFamily const_pot(const IfsSystem& sys, std::vector<double> values) {
  PotentialFamily pf;
  pf.fam = PotentialFamily::Constant{std::move(values)};
  return certify_potential(pf, sys);
}

// Root of x^2 + x - 1 = 0, solved independently of the coding machinery.
const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

}  // namespace

TEST_CASE("eval_amalgamated") {
  const IfsSystem sys = cf12();

  SUBCASE("constant family ignores the tail") {
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const auto v = eval_amalgamated(pf, sys, Word{2, 1, 2, 1});
    CHECK(v.value == doctest::Approx(std::log(0.5)).epsilon(1e-15));
    CHECK(v.error_bound == 0.0);
  }

  SUBCASE("cf-geometric at the golden point") {
    const PotentialFamily pf = cf_pot(sys, 1.0);
    Word deep{1};
    for (int k = 0; k < 40; ++k) deep.symbols.push_back(1);
    const auto v = eval_amalgamated(pf, sys, deep);
    CHECK(v.value == doctest::Approx(-2.0 * std::log(1.0 + kGolden)).epsilon(1e-4));

    Word deep2{2};
    for (int k = 0; k < 40; ++k) deep2.symbols.push_back(1);
    const auto v2 = eval_amalgamated(pf, sys, deep2);
    CHECK(v2.value == doctest::Approx(-2.0 * std::log(2.0 + kGolden)).epsilon(1e-4));
    CHECK(v.error_bound < 1e-9);
  }

  SUBCASE("needs at least two symbols") {
    const PotentialFamily pf = cf_pot(sys, 1.0);
    CHECK_THROWS_AS(eval_amalgamated(pf, sys, Word{1}), DomainError);
  }
}

TEST_CASE("birkhoff_branch_sum") {
  SUBCASE("constants sum") {
    const IfsSystem sys = cf12();
    const PotentialFamily pf = const_pot(sys, {std::log(2.0), std::log(3.0)});
    const Word w{1, 2, 2, 1};
    CHECK(birkhoff_branch_sum(pf, sys, w, 0.5) ==
          doctest::Approx(2 * std::log(2.0) + 2 * std::log(3.0)).epsilon(1e-15));
    CHECK(birkhoff_branch_sum(pf, sys, Word{}, 0.5) == 0.0);
  }

  SUBCASE("identity potential on the halving system by hand") {
    const IfsSystem sys = make_affine_system({0.0, 1.0}, {{0.5, 0.0}, {0.5, 0.5}});
    PotentialFamily pf;
    pf.fam = PotentialFamily::TabulatedAffine{{{1.0, 0.0}, {1.0, 0.0}}};  // phi^(i)(x) = x
    pf = certify_potential(pf, sys);
    // S_(1,2)(0) = phi^(1)(phi_2(0)) + phi^(2)(0) = 1/2 + 0
    CHECK(birkhoff_branch_sum(pf, sys, Word{1, 2}, 0.0) == doctest::Approx(0.5));
  }

  SUBCASE("single symbol is the bare potential") {
    const IfsSystem sys = cf12();
    const PotentialFamily pf = cf_pot(sys, 0.7);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(sys.domain.lo, sys.domain.hi);
    for (int t = 0; t < 10; ++t) {
      const double x = unif(rng);
      const Symbol i = 1 + static_cast<Symbol>(rng() % 2);
      CHECK(birkhoff_branch_sum(pf, sys, Word{i}, x) == doctest::Approx(pf.eval(i, x)));
    }
  }
}

TEST_CASE("cocycle identity S_uv = S_u o phi_v + S_v") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 0.5313);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<Symbol> sym(1, 2);
  std::uniform_real_distribution<double> unif(sys.domain.lo, sys.domain.hi);
  for (int t = 0; t < 100; ++t) {
    Word u, v;
    const int nu = static_cast<int>(rng() % 5), nv = static_cast<int>(rng() % 5);
    for (int k = 0; k < nu; ++k) u.symbols.push_back(sym(rng));
    for (int k = 0; k < nv; ++k) v.symbols.push_back(sym(rng));
    const double x = unif(rng);
    const double lhs = birkhoff_branch_sum(pf, sys, concat(u, v), x);
    const double rhs =
        birkhoff_branch_sum(pf, sys, u, apply_word(sys, v, x)) + birkhoff_branch_sum(pf, sys, v, x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
  }
}

TEST_CASE("amalgamation consistency: Birkhoff sums along a sequence vs S_omega") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 1.0);
  // tau in [omega] realized as omega followed by a long tail
  const Word omega{2, 1, 1, 2};
  Word tau = omega;
  for (int k = 0; k < 40; ++k) tau.symbols.push_back(((k * 7) % 2) + 1);

  double birkhoff = 0.0;
  for (std::size_t j = 0; j < omega.size(); ++j)
    birkhoff += eval_amalgamated(pf, sys, tau.shifted(j)).value;

  const CodedPoint tail_pt = code_point(sys, tau.shifted(omega.size()));
  const double branch = birkhoff_branch_sum(pf, sys, omega, tail_pt.x);
  CHECK(birkhoff == doctest::Approx(branch).epsilon(1e-9));
}

TEST_CASE("summability_bound") {
  SUBCASE("two equal halves") {
    const IfsSystem sys = cf12();
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    const auto sb = summability_bound(pf, sys, {2});
    CHECK(sb.head == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(sb.tail == 0.0);
  }

  SUBCASE("geometric rule head and tail") {
    const IfsSystem sys = make_affine_system({0.0, 1.0}, [] {
      std::vector<std::pair<double, double>> maps;
      for (int i = 0; i < 40; ++i) maps.emplace_back(1.0 / 79.0, 2.0 * i / 79.0);
      return maps;
    }());
    PotentialFamily pf;
    pf.fam = PotentialFamily::GeometricTail{std::log(2.0)};
    pf = certify_potential(pf, sys);
    const auto sb = summability_bound(pf, sys, {40});
    CHECK(sb.head == doctest::Approx(1.0 - std::pow(2.0, -40.0)).epsilon(1e-14));
    CHECK(sb.tail == doctest::Approx(std::pow(2.0, -40.0)).epsilon(1e-10));
  }

  SUBCASE("cf integral comparison and divergence error") {
    const IfsSystem sys = make_cf_system({0.0, 0.5}, DigitSet{{}, true, 2});
    PotentialFamily good;
    good.fam = PotentialFamily::CfGeometric{1.0, DigitSet{{}, true, 2}};
    good = certify_potential(good, sys);
    const auto sb = summability_bound(good, sys, {100});
    CHECK(sb.tail <= 0.01);
    CHECK(sb.tail > 0.0);

    PotentialFamily bad;
    bad.fam = PotentialFamily::CfGeometric{0.4, DigitSet{{}, true, 2}};
    bad = certify_potential(bad, sys);
    CHECK_THROWS_AS(summability_bound(bad, sys, {100}), DivergenceError);
  }

  SUBCASE("head monotone in the cutoff") {
    const IfsSystem sys = make_affine_system({0.0, 1.0}, [] {
      std::vector<std::pair<double, double>> maps;
      for (int i = 0; i < 20; ++i) maps.emplace_back(1.0 / 39.0, 2.0 * i / 39.0);
      return maps;
    }());
    PotentialFamily pf;
    pf.fam = PotentialFamily::GeometricTail{std::log(2.0)};
    pf = certify_potential(pf, sys);
    double prev_head = 0.0, prev_total = 2.0;
    for (Symbol N : {5, 10, 15, 20}) {
      const auto sb = summability_bound(pf, sys, {N});
      CHECK(sb.head >= prev_head - 1e-15);
      CHECK(sb.head + sb.tail <= prev_total + 1e-15);
      prev_head = sb.head;
      prev_total = sb.head + sb.tail;
    }
  }
}

TEST_CASE("estimate_variation") {
  const IfsSystem sys = cf12();

  SUBCASE("constants have zero variation") {
    const PotentialFamily pf = const_pot(sys, {std::log(0.4), std::log(0.6)});
    const auto est = estimate_variation(pf, sys, 5, 40, {2}, 99);
    CHECK(est.V_est == 0.0);
  }

  SUBCASE("cf estimates decrease geometrically and stay below the certificate") {
    const PotentialFamily pf = cf_pot(sys, 1.0);
    const auto est = estimate_variation(pf, sys, 6, 80, {2}, 99);
    for (std::size_t n = 1; n < est.per_n.size(); ++n) {
      // analytic bound: Lip * s^(n-1) * diam
      CHECK(est.per_n[n] <= pf.lip_max * std::pow(sys.s, static_cast<double>(n)) * sys.diam() +
                                1e-12);
    }
    CHECK(est.V_est <= pf.V + 1e-12);
    CHECK(est.V_est > 0.0);
    // scaled values bounded uniformly in n (the certificate's content)
    for (double sv : est.scaled_per_n) CHECK(sv <= pf.V + 1e-12);
  }
}

TEST_CASE("distortion_constant") {
  const IfsSystem sys = cf12();

  SUBCASE("zero variation gives Q = 1 exactly") {
    const PotentialFamily pf = const_pot(sys, {std::log(0.5), std::log(0.5)});
    CHECK(distortion_constant(pf).Q == 1.0);
  }

  SUBCASE("formula inversion") {
    PotentialFamily pf = const_pot(sys, {0.0, 0.0});
    pf.beta = 0.7;
    pf.V = (1.0 - std::exp(-0.7)) * std::exp(0.7);
    CHECK(distortion_constant(pf).Q == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
  }

  SUBCASE("beta defaults to -log s for the cf family") {
    const PotentialFamily pf = cf_pot(sys, 0.5313);
    CHECK(pf.beta == doctest::Approx(std::log(16.0 / 9.0)).epsilon(1e-12));
    CHECK(distortion_constant(pf).Q ==
          doctest::Approx(std::exp(pf.V * std::exp(-pf.beta) / (1 - std::exp(-pf.beta)))));
  }
}

TEST_CASE("sampled distortion inequality holds with the certified pair") {
  const IfsSystem sys = cf12();
  const PotentialFamily pf = cf_pot(sys, 1.0);
  const auto rep = check_distortion_samples(pf, sys, {2}, 3000, 8, 2024);
  CHECK(rep.violations == 0);
  CHECK(rep.worst_ratio <= 1.0);
}
