#include <doctest.h>

#include <cmath>

#include "thermolab/conformal.hpp"
#include "thermolab/curie_weiss.hpp"
#include "thermolab/errors.hpp"
#include "thermolab/random.hpp"

using namespace thermolab;

namespace {

// independent bisection oracle on [0.5, 1]
double gamma_oracle(double beta) {
  double lo = 0.5, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::tanh(beta * mid) > mid ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("magnetization roots") {
  CHECK(solve_magnetization(0.5).roots == std::vector<double>{0.0});
  CHECK(solve_magnetization(1.0).roots == std::vector<double>{0.0});
  const auto s = solve_magnetization(2.0);
  REQUIRE(s.roots.size() == 3);
  CHECK(s.regime == Regime::supercritical);
  CHECK(s.roots[2] == doctest::Approx(0.957504).epsilon(1e-6));
  CHECK(std::abs(s.roots[2] - gamma_oracle(2.0)) <= 1e-12);
  CHECK(std::abs(std::tanh(2.0 * s.roots[2]) - s.roots[2]) < 1e-12);
  CHECK_THROWS_AS(solve_magnetization(0.0), Error);
}

TEST_CASE("root structure on a beta grid") {
  for (double b : {0.2, 0.5, 1.0, 1.2, 2.0, 5.0}) {
    const auto s = solve_magnetization(b);
    CHECK(s.roots.size() == (b <= 1.0 ? 1u : 3u));
    for (std::size_t i = 0; i < s.roots.size(); ++i) {
      CHECK(s.roots[i] == -s.roots[s.roots.size() - 1 - i]);
      CHECK(std::abs(s.roots[i] - std::tanh(b * s.roots[i])) < 1e-12);
    }
    CHECK(std::find(s.roots.begin(), s.roots.end(), 0.0) != s.roots.end());
  }
}

TEST_CASE("cw spectral data") {
  const auto a = cw_spectral_data(0.5);
  CHECK(a.eigenvalue == 2.0);
  CHECK(a.plus_mass == 0.5);
  CHECK(a.minus_mass == 0.5);
  const auto b = cw_spectral_data(2.0);
  CHECK(b.eigenvalue == doctest::Approx(2.0 * std::cosh(2.0 * gamma_oracle(2.0))).epsilon(1e-14));
  CHECK(b.eigenvalue == doctest::Approx(6.93433).epsilon(1e-5));
  CHECK(b.eigenvalue > 2.0);
  CHECK(b.plus_mass == doctest::Approx(0.97875).epsilon(1e-5));
  CHECK(std::abs(b.plus_mass - (1 + b.gamma) / 2) <= 1e-12);
  CHECK(std::abs(b.plus_mass + b.minus_mass - 1.0) <= 1e-15);
  double prev = 0.0;
  for (double beta = 1.05; beta <= 6.0; beta += 0.25) {
    const double e = cw_spectral_data(beta).eigenvalue;
    CHECK(e >= prev);
    prev = e;
  }
}

TEST_CASE("stream derivation is stable and distinct") {
  CHECK(rng::stream_seed(1, "a", 0) == rng::stream_seed(1, "a", 0));
  CHECK(rng::stream_seed(1, "a", 0) != rng::stream_seed(1, "a", 1));
  CHECK(rng::stream_seed(1, "a", 0) != rng::stream_seed(1, "b", 0));
  CHECK(rng::stream_seed(1, "a", 0) != rng::stream_seed(2, "a", 0));
  rng::Stream s(3, "x", 0);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("bernoulli sampling") {
  const auto z = sample_bernoulli(0.0, McBudget{10000, 1000, 9, 1});
  CHECK(std::abs(z.mean) <= 4e-3);
  const auto g = sample_bernoulli(0.9575, McBudget{10000, 1000, 9, 1});
  const double se = std::sqrt((1 - 0.9575 * 0.9575) / 10000) / std::sqrt(1000.0);
  CHECK(std::abs(g.mean - 0.9575) <= 3 * se);
  const auto e = sample_bernoulli(1.0 - 1e-9, McBudget{10000, 100, 9, 1});
  for (double m : e.magnetization) CHECK(m == 1.0);
  CHECK_THROWS_AS(sample_bernoulli(1.5, McBudget{10, 10, 1, 1}), Error);
}

TEST_CASE("sampling does not depend on the thread count") {
  const auto a = sample_bernoulli(0.3, McBudget{1000, 5000, 4, 1});
  const auto b = sample_bernoulli(0.3, McBudget{1000, 5000, 4, 3});
  CHECK(a.magnetization == b.magnetization);
}

TEST_CASE("generalized conformal identities") {
  const auto r0 = verify_generalized_conformal(0.5, McBudget{10000, 2000, 5, 1});
  CHECK(r0.plus.target == 1.0);
  CHECK(r0.total.estimate == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(r0.pass);

  const auto r = verify_generalized_conformal(2.0, McBudget{10000, 20000, 5, 1});
  CHECK(r.plus.target == doctest::Approx(std::exp(1.915008)).epsilon(1e-6));
  CHECK(r.plus.estimate == doctest::Approx(6.787).epsilon(1e-3));
  CHECK(r.total.estimate == doctest::Approx(6.93433).epsilon(1e-3));
  CHECK(r.mass_identity <= 1e-14);
  CHECK(r.pass);
  const double g = r.gamma;
  CHECK(r.plus.bias_bound == doctest::Approx(2.0 * std::exp(2.0) * (1 - g * g) / 10000));
  CHECK(r.minus.bias_bound == r.plus.bias_bound);

  const auto small = verify_generalized_conformal(2.0, McBudget{100, 50, 5, 1});
  CHECK(small.underpowered);
}

TEST_CASE("phase classification") {
  const McBudget b{10000, 2000, 21, 1};
  const auto m2 = sample_mixture(2.0, 0.5, b);
  const auto c2 = classify_phase(m2, 2.0, b.horizon);
  CHECK(c2.dimension == 2);
  CHECK(c2.undetermined == 0);
  for (const auto& k : c2.classes) {
    CHECK(std::abs(k.fraction - 0.5) <= 3 * std::sqrt(0.25 / 2000));
    CHECK(k.ratio.pass);
  }
  const auto c0 = classify_phase(sample_mixture(0.5, 0.5, b), 0.5, b.horizon);
  CHECK(c0.dimension == 1);
  CHECK(c0.classes[0].phase == Phase::center);
  CHECK(c0.classes[0].ratio.target == 2.0);
  CHECK(c0.classes[0].ratio.pass);

  const auto c1 = classify_phase(sample_mixture(2.0, 1.0, b), 2.0, b.horizon);
  CHECK(c1.dimension == 1);
  CHECK(c1.classes[0].phase == Phase::plus);
}

TEST_CASE("pure plus samples are almost never misclassified") {
  const double gamma = cw_spectral_data(2.0).gamma;
  const auto s = sample_bernoulli(gamma, McBudget{10000, 20000, 8, 1});
  std::size_t wrong = 0;
  for (double m : s.magnetization) wrong += classify(m, gamma) != Phase::plus;
  CHECK(static_cast<double>(wrong) / 20000.0 < 1e-3);
}

TEST_CASE("plus class recovers the mu_+ marginals") {
  const auto r = conditional_class_check(2.0, 0.5, 4, McBudget{10000, 40000, 13, 1});
  CHECK(r.in_class > 15000);
  CHECK(r.exact_residual <= 1e-13);
  CHECK(r.mc_residual <= 0.1);
  CHECK(r.pass);
  // the exact plus marginal is conformal for the resolved mean-field operator
  const auto d = cw_spectral_data(2.0);
  const auto L = build_truncated_operator(PotentialSpec::mean_field(2.0, d.gamma),
                                          Alphabet::spins(), AprioriWeights::counting(2), 4);
  const auto mu = CylinderMeasure::product(std::vector<double>{d.minus_mass, d.plus_mass}, 4);
  const auto c = conditional_conformal(mu, CylinderFunction::constant(2, 4, 1.0), L, d.eigenvalue,
                                       1e-12);
  CHECK(c.invariant);
}
