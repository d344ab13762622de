#include <doctest.h>

#include <cmath>

#include "thermolab/conformal.hpp"
#include "thermolab/errors.hpp"

using namespace thermolab;

namespace {

const Alphabet kSpins = Alphabet::spins();

SpectralData spectral(const PotentialSpec& f, const AprioriWeights& w, std::size_t d) {
  return power_iterate(build_truncated_operator(f, kSpins, w, d), 1e-13);
}

}  // namespace

TEST_CASE("full support examples") {
  const auto w = AprioriWeights::uniform(2);
  const auto s = spectral(PotentialSpec::constant(0.0), w, 5);
  for (std::size_t n = 1; n <= 5; ++n) {
    const auto r = check_full_support(s.nu, PotentialSpec::constant(0.0), kSpins, w, s.rho, n);
    CHECK(r.ratio == 1.0);
    CHECK(r.pass);
  }

  const auto wc = AprioriWeights::counting(2);
  const auto f = PotentialSpec::ising(kSpins, 1.0);
  const auto si = spectral(f, wc, 6);
  const auto r3 = check_full_support(si.nu, f, kSpins, wc, si.rho, 3);
  CHECK(r3.min_mass > 0.0);
  CHECK(r3.ratio >= 1.0);
  CHECK(r3.pass);

  CylinderMeasure holed(2, 2, {0.5, 0.0, 0.25, 0.25});
  const auto bad = check_full_support(holed, PotentialSpec::constant(0.0), kSpins, w, 1.0, 2);
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst == Word({0, 1}));

  CHECK_THROWS_AS(check_full_support(si.nu, f, kSpins, wc, si.rho, 7), Error);
}

TEST_CASE("H1 examples") {
  const auto w = AprioriWeights::uniform(2);
  const auto s = spectral(PotentialSpec::constant(0.0), w, 4);
  const auto r = check_h1(s.nu, w, PotentialSpec::constant(0.0), kSpins, s.rho);
  CHECK(r.max_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.bound == doctest::Approx(1.0));
  CHECK(r.pass);

  const auto wc = AprioriWeights::counting(2);
  const auto f = PotentialSpec::ising(kSpins, 1.0);
  const auto si = spectral(f, wc, 4);
  const auto ri = check_h1(si.nu, wc, f, kSpins, si.rho);
  CHECK(ri.pass);
  CHECK(ri.max_ratio <= 2.0 * std::cosh(1.0) * std::exp(1.0) * (1 + 1e-9));
  // the conformal relation gives the sharper rho e^{-min f}
  CHECK(ri.max_ratio <= si.rho * std::exp(1.0) * (1 + 1e-12));

  const auto fc = PotentialSpec::constant(0.8);
  const auto sc = spectral(fc, w, 4);
  const auto rc = check_h1(sc.nu, w, fc, kSpins, sc.rho);
  CHECK(rc.max_ratio == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(rc.pass);

  CHECK_THROWS_AS(check_h1(CylinderMeasure::uniform(2, 1), w, fc, kSpins, 1.0), Error);
}

TEST_CASE("support and H1 hold on converged fixtures") {
  const std::vector<std::pair<PotentialSpec, AprioriWeights>> fx = {
      {PotentialSpec::constant(-0.4), AprioriWeights::uniform(2)},
      {PotentialSpec::first_coordinate({0.4, -0.2}), AprioriWeights({0.3, 0.7}, true)},
      {PotentialSpec::ising(kSpins, 0.5), AprioriWeights::counting(2)},
      {PotentialSpec::ising(kSpins, 2.0), AprioriWeights::counting(2)},
      {PotentialSpec::tabulated(2, 3, {0.1, -0.3, 0.5, 0.2, 0.0, 0.9, -1.1, 0.4}),
       AprioriWeights({0.6, 0.4}, true)},
      {PotentialSpec::dyson(3.0, 8), AprioriWeights::uniform(2)},
  };
  for (const auto& [f, w] : fx) {
    const std::size_t d = 9;
    const auto s = spectral(f, w, d);
    REQUIRE(s.converged);
    for (std::size_t n = 1; n <= d; ++n) {
      CHECK(check_full_support(s.nu, f, kSpins, w, s.rho, n).ratio >= 1.0 - 1e-9);
    }
    CHECK(check_h1(s.nu, w, f, kSpins, s.rho).pass);
  }
}

TEST_CASE("conditional conformal examples") {
  const auto wc = AprioriWeights::counting(2);
  const auto f = PotentialSpec::ising(kSpins, 1.0);
  const auto L = build_truncated_operator(f, kSpins, wc, 5);
  const auto s = power_iterate(L, 1e-13);
  const auto all = conditional_conformal(s.nu, CylinderFunction::constant(2, 5, 1.0), L, s.rho);
  for (std::size_t i = 0; i < s.nu.size(); ++i) CHECK(all.measure[i] == doctest::Approx(s.nu[i]));
  CHECK(all.residual == doctest::Approx(s.left_residual).epsilon(1e-2).scale(1e-14));
  CHECK(all.invariant);

  const auto half = conditional_conformal(s.nu, CylinderFunction::indicator(2, 5, Word({1})), L,
                                          s.rho);
  CHECK(half.mass == doctest::Approx(0.5));
  CHECK(half.residual > 0.1);
  CHECK_FALSE(half.invariant);

  CHECK_THROWS_AS(conditional_conformal(s.nu, CylinderFunction::constant(2, 5, 0.0), L, s.rho),
                  Error);
  CHECK_THROWS_AS(conditional_conformal(s.nu, CylinderFunction::constant(2, 5, 0.5), L, s.rho),
                  Error);
}

TEST_CASE("specification kernel examples") {
  const auto w = AprioriWeights({0.3, 0.7}, true);
  const auto f = PotentialSpec::tabulated(2, 3, {0.1, -0.3, 0.5, 0.2, 0.0, 0.9, -1.1, 0.4});
  const Word bd({1, 0});
  // one step: gamma([a]|x) = w(a) e^{f(ax)} / sum_b w(b) e^{f(bx)}
  const double e0 = 0.3 * std::exp(evaluate_potential(f, kSpins, Word({0, 1, 0})).value);
  const double e1 = 0.7 * std::exp(evaluate_potential(f, kSpins, Word({1, 1, 0})).value);
  const auto g = specification_kernel(f, kSpins, w, KernelQuery{1, Word({1}), bd});
  CHECK(g.value == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-15));

  const auto u = AprioriWeights::uniform(2);
  for (std::size_t j = 0; j <= 4; ++j) {
    const auto v = specification_kernel(PotentialSpec::constant(0.0), kSpins, u,
                                        KernelQuery{4, Word(std::vector<Symbol>(j, 1)), bd});
    CHECK(v.value == doctest::Approx(std::pow(2.0, -static_cast<double>(j))).epsilon(1e-15));
  }

  const auto wc = AprioriWeights::counting(2);
  const auto ising = PotentialSpec::ising(kSpins, 1.0);
  const auto plus = specification_kernel(ising, kSpins, wc, KernelQuery{4, Word({1}), Word({1})});
  const auto minus = specification_kernel(ising, kSpins, wc, KernelQuery{4, Word({1}), Word({0})});
  CHECK(plus.value > minus.value);
  // exact: (1 + t^4)/2 with t = tanh J
  const double t4 = std::pow(std::tanh(1.0), 4);
  CHECK(plus.value == doctest::Approx((1 + t4) / 2).epsilon(1e-14));
  CHECK(minus.value == doctest::Approx((1 - t4) / 2).epsilon(1e-14));

  CHECK_THROWS_AS(specification_kernel(ising, kSpins, wc, KernelQuery{1, Word({1, 1}), Word({1})}),
                  Error);
  CHECK_THROWS_AS(specification_kernel(ising, kSpins, wc, KernelQuery{1, Word({1}), Word()}),
                  Error);
}

TEST_CASE("kernels are normalized over every partition") {
  const auto wc = AprioriWeights::counting(2);
  const std::vector<PotentialSpec> fs = {PotentialSpec::ising(kSpins, 1.0),
                                         PotentialSpec::dyson(3.0, 12),
                                         PotentialSpec::mean_field(2.0, 0.9575)};
  for (const auto& f : fs) {
    for (std::size_t n : {1, 3, 6, 9}) {
      for (const Word& b : {Word({1}), Word({0}), Word({1, 0, 0})}) {
        for (std::size_t j = 1; j <= n; j += 2) {
          const auto d = kernel_distribution(f, kSpins, wc, n, j, b);
          CompensatedSum s;
          for (const auto& v : d) {
            s += v.value;
            CHECK(v.value >= 0.0);
            CHECK(v.lower <= v.value);
            CHECK(v.value <= v.upper);
          }
          CHECK(std::abs(s.value() - 1.0) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("dyson kernel carries a tail interval") {
  const auto w = AprioriWeights::uniform(2);
  const auto v = specification_kernel(PotentialSpec::dyson(1.0, 10), kSpins, w,
                                      KernelQuery{5, Word({1}), Word({1})});
  CHECK(v.lower < v.value);
  CHECK(v.value < v.upper);
  const auto exact = specification_kernel(PotentialSpec::dyson(1.0, 200), kSpins, w,
                                          KernelQuery{5, Word({1}), Word({1})});
  CHECK(exact.value >= v.lower);
  CHECK(exact.value <= v.upper);
}

TEST_CASE("kernel boundary average reproduces the conformal measure") {
  const auto wc = AprioriWeights::counting(2);
  for (double J : {0.5, 1.0}) {
    const auto f = PotentialSpec::ising(kSpins, J);
    const auto s = spectral(f, wc, 10);
    for (std::size_t n = 1; n <= 8; ++n) {
      for (std::size_t j = 1; j <= n; ++j) {
        const auto r = kernel_consistency(f, kSpins, wc, s.nu, n, j);
        CHECK(r.max_error <= 1e-8);
      }
    }
  }
  const auto g = PotentialSpec::tabulated(2, 3, {0.1, -0.3, 0.5, 0.2, 0.0, 0.9, -1.1, 0.4});
  const auto w = AprioriWeights({0.3, 0.7}, true);
  const auto s = spectral(g, w, 8);
  CHECK(kernel_consistency(g, kSpins, w, s.nu, 5, 3).max_error <= 1e-10);
  CHECK_THROWS_AS(kernel_consistency(g, kSpins, w, s.nu, 7, 3), Error);
}

TEST_CASE("boundary sensitivity examples") {
  const auto wc = AprioriWeights::counting(2);
  const std::vector<Word> bs = {Word({1}), Word({0}), Word({1, 0})};
  const std::vector<std::size_t> ns = {1, 2, 4, 6, 8, 10, 12};
  const auto z = boundary_sensitivity_scan(PotentialSpec::constant(0.0), kSpins, wc, Word({1}),
                                           bs, ns);
  for (double d : z.discrepancy) CHECK(d == doctest::Approx(0.0).scale(1e-15));

  const auto is = boundary_sensitivity_scan(PotentialSpec::ising(kSpins, 1.0), kSpins, wc,
                                            Word({1}), bs, ns);
  CHECK(is.monotone_decay);
  CHECK(is.final_discrepancy < is.discrepancy.front());
  CHECK(is.final_discrepancy == doctest::Approx(std::pow(std::tanh(1.0), 12)).epsilon(1e-9));

  const double gamma = 0.957504;
  const auto mf = boundary_sensitivity_scan(PotentialSpec::mean_field(2.0, gamma), kSpins, wc,
                                            Word({1}), {Word({1}), Word({0})}, ns);
  for (double d : mf.discrepancy) CHECK(d == doctest::Approx(std::tanh(2.0 * gamma)).epsilon(1e-12));
}

TEST_CASE("relative entropy examples") {
  const auto u = AprioriWeights::uniform(2);
  std::vector<CylinderMeasure> prod;
  for (std::size_t n = 1; n <= 5; ++n) prod.push_back(CylinderMeasure::product(u, n));
  const auto r0 = relative_entropy_rate(prod, u);
  for (double h : r0.relative_entropy) CHECK(h == 0.0);
  CHECK(r0.rate == 0.0);

  std::vector<CylinderMeasure> q;
  for (std::size_t n = 1; n <= 6; ++n) {
    q.push_back(CylinderMeasure::product(std::vector<double>{0.9, 0.1}, n));
  }
  const auto rq = relative_entropy_rate(q, u);
  const double ref = -(0.9 * std::log(0.9 / 0.5) + 0.1 * std::log(0.1 / 0.5));
  CHECK(rq.rate == doctest::Approx(ref).epsilon(1e-12));
  CHECK(rq.rate == doctest::Approx(-0.368).epsilon(1e-3));

  std::vector<CylinderMeasure> bad = {CylinderMeasure::uniform(2, 1),
                                      CylinderMeasure::product(std::vector<double>{0.9, 0.1}, 2)};
  try {
    relative_entropy_rate(bad, u);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::inconsistent);
  }
}

TEST_CASE("pressure identity") {
  const auto wc = AprioriWeights::counting(2);
  for (double J : {0.5, 1.0, 2.0}) {
    const auto r = pressure_check(PotentialSpec::ising(kSpins, J), kSpins, wc, 6);
    CHECK(r.log_rho == doctest::Approx(std::log(2 * std::cosh(J))).epsilon(1e-12));
    CHECK(std::abs(r.defect) <= 1e-6);
    CHECK(r.pass);
    CHECK(r.invariance_residual <= 1e-10);
    CHECK(r.entropy_slope == doctest::Approx(r.entropy).epsilon(1e-9));
  }
  const auto r = pressure_check(PotentialSpec::ising(kSpins, 1.0), kSpins, wc, 6);
  CHECK(r.entropy + r.energy == doctest::Approx(1.12693).epsilon(1e-5));
  const auto g = pressure_check(PotentialSpec::tabulated(2, 3, {0.1, -0.3, 0.5, 0.2, 0.0, 0.9, -1.1, 0.4}),
                                kSpins, AprioriWeights({0.3, 0.7}, true), 7);
  CHECK(g.pass);
}
