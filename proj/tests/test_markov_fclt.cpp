#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "dense_oracle.hpp"
#include "thermolab/errors.hpp"
#include "thermolab/markov_fclt.hpp"

using namespace thermolab;

namespace {

const Alphabet kSpins = Alphabet::spins();

struct IsingChain {
  NormalizedPotential np;
  ChainSpec chain;
};

IsingChain normalized_ising(double J, std::size_t d) {
  const auto w = AprioriWeights::counting(2);
  auto np = normalize_potential(PotentialSpec::ising(kSpins, J), kSpins, w, d);
  auto chain = make_chain(np.potential, kSpins, w, d);
  return {std::move(np), std::move(chain)};
}

}  // namespace

TEST_CASE("make_chain examples") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 3);
  for (std::size_t x = 0; x < iid.states(); ++x) {
    CHECK(iid.transition(x, 0) == 0.5);
    CHECK(iid.transition(x, 1) == 0.5);
    CHECK(iid.stationary()[x] == doctest::Approx(0.125).epsilon(1e-15));
  }
  CHECK(iid.normalization_residual() == 0.0);

  const auto is = normalized_ising(1.0, 1);
  const double t = std::tanh(1.0);
  for (std::size_t x = 0; x < 2; ++x) {
    for (Symbol a = 0; a < 2; ++a) {
      const double same = kSpins.label(a) * kSpins.label(static_cast<Symbol>(x));
      CHECK(is.chain.transition(x, a) == doctest::Approx((1 + same * t) / 2).epsilon(1e-12));
    }
  }
  CHECK(is.chain.stationary()[0] == doctest::Approx(0.5).epsilon(1e-12));

  try {
    make_chain(PotentialSpec::ising(kSpins, 1.0), kSpins, AprioriWeights::counting(2), 2);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::inconsistent);
  }
}

TEST_CASE("chains replay bit-exactly") {
  const auto is = normalized_ising(1.0, 3);
  const auto phi = CylinderFunction::coordinate(kSpins, 3);
  ChainState a(is.chain, 42, 0), b(is.chain, 42, 0), c(is.chain, 43, 0);
  const auto pa = sample_path(a, phi, 1000), pb = sample_path(b, phi, 1000),
             pc = sample_path(c, phi, 1000);
  CHECK(std::memcmp(pa.data(), pb.data(), pa.size() * sizeof(double)) == 0);
  CHECK(pa != pc);
}

TEST_CASE("i.i.d. chain gives a simple random walk") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 1);
  ChainState s(iid, 1);
  const auto p = sample_path(s, CylinderFunction::coordinate(kSpins, 1), 500);
  for (std::size_t j = 1; j < p.size(); ++j) CHECK(std::abs(p[j] - p[j - 1]) == 1.0);
}

TEST_CASE("empirical transitions match the kernel") {
  const auto is = normalized_ising(0.7, 2);
  ChainState s(is.chain, 5);
  std::vector<double> from(is.chain.states(), 0.0), to(is.chain.states() * 2, 0.0);
  std::size_t x = s.window();
  for (int i = 0; i < 100000; ++i) {
    const Symbol a = s.step();
    from[x] += 1.0;
    to[x * 2 + a] += 1.0;
    x = s.window();
  }
  for (std::size_t st = 0; st < is.chain.states(); ++st) {
    const double p = is.chain.transition(st, 1);
    const double se = std::sqrt(p * (1 - p) / from[st]);
    CHECK(std::abs(to[st * 2 + 1] / from[st] - p) <= 3 * se);
  }
}

TEST_CASE("stationary start keeps the law nu") {
  const auto w = AprioriWeights({0.4, 0.6}, true);
  const auto f = PotentialSpec::tabulated(2, 2, {0.3, -0.5, -0.4, 0.9});
  const auto np = normalize_potential(f, kSpins, w, 2);
  const auto chain = make_chain(np.potential, kSpins, w, 2);
  const std::size_t reps = 100000;
  std::vector<double> counts(4, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    ChainState s(chain, 77, r);
    for (int i = 0; i < 5; ++i) s.step();
    counts[s.window()] += 1.0;
  }
  const auto nu = chain.stationary().normalized();
  for (std::size_t c = 0; c < 4; ++c) {
    const double se = std::sqrt(nu[c] * (1 - nu[c]) / reps);
    CHECK(std::abs(counts[c] / reps - nu[c]) <= 3 * se);
  }
}

TEST_CASE("pair law of the chain matches the measure") {
  // E g(Z_2, Z_1) = int g(x, sigma x) dnu for depth-2 g
  const auto w = AprioriWeights({0.4, 0.6}, true);
  const auto f = PotentialSpec::tabulated(2, 2, {0.3, -0.5, -0.4, 0.9});
  const auto np = normalize_potential(f, kSpins, w, 1);
  const auto chain = make_chain(np.potential, kSpins, w, 1);
  const auto L2 = build_truncated_operator(np.potential, kSpins, w, 2);
  const auto nu2 = power_iterate(L2, 1e-14).nu;
  const std::vector<double> g{0.2, -1.0, 3.0, 0.5};
  const std::size_t reps = 100000;
  std::vector<double> vals(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    ChainState s(chain, 91, r);
    const Symbol z1 = s.step();
    const Symbol z2 = s.step();
    vals[r] = g[z2 * 2 + z1];
  }
  CompensatedSum m;
  for (double v : vals) m += v;
  const double mean = m.value() / reps;
  CompensatedSum sq;
  for (double v : vals) sq += (v - mean) * (v - mean);
  const double se = std::sqrt(sq.value() / (reps - 1) / reps);
  const double exact = nu2.integrate(CylinderFunction(2, 2, g));
  CHECK(std::abs(mean - exact) <= 3 * se);
}

TEST_CASE("poisson solution examples") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 2);
  const auto phi = CylinderFunction::coordinate(kSpins, 2);
  const auto s = solve_poisson(iid.op(), iid.stationary(), phi, 100);
  CHECK(s.converged);
  CHECK(s.terms == 1);
  CHECK(s.residual == 0.0);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.v[i] == phi[i]);

  const auto is = normalized_ising(1.0, 4);
  const auto x1 = CylinderFunction::coordinate(kSpins, 4);
  const auto p = solve_poisson(is.chain.op(), is.chain.stationary(), x1, 1000);
  const double t = std::tanh(1.0);
  CHECK(p.converged);
  CHECK(p.rate == doctest::Approx(t).epsilon(1e-6));
  for (std::size_t i = 0; i < 16; ++i) CHECK(p.v[i] == doctest::Approx(x1[i] / (1 - t)).epsilon(1e-12));
  // telescoping: (I - L) v - phi = -L^{N} phi
  CHECK(std::abs(p.residual - p.tail_bound) <= 1e-14);

  const auto nc = solve_poisson(is.chain.op(), is.chain.stationary(), x1, 5);
  CHECK_FALSE(nc.converged);
  CHECK(nc.residual <= nc.tail_bound + 1e-14);

  CHECK_THROWS_AS(solve_poisson(iid.op(), iid.stationary(), CylinderFunction::constant(2, 2, 3.0), 10),
                  Error);
}

TEST_CASE("asymptotic variance examples") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 2);
  const auto phi = CylinderFunction::coordinate(kSpins, 2);
  const auto s = solve_poisson(iid.op(), iid.stationary(), phi, 100);
  const auto v = asymptotic_variance(iid.op(), iid.stationary(), s, phi);
  CHECK(v.poisson == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(v.green_kubo == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(v.degenerate);

  for (double J : {0.5, 1.0, 2.0}) {
    const auto is = normalized_ising(J, 3);
    const auto x1 = CylinderFunction::coordinate(kSpins, 3);
    const auto p = solve_poisson(is.chain.op(), is.chain.stationary(), x1, 5000, 1e-16);
    const auto r = asymptotic_variance(is.chain.op(), is.chain.stationary(), p, x1);
    const double t = std::tanh(J);
    const double oracle = (1 - t * t) / ((1 - t) * (1 - t));
    CHECK(std::abs(r.poisson - oracle) <= 1e-10 * oracle);
    CHECK(std::abs(r.green_kubo - oracle) <= 1e-10 * oracle);
    CHECK(r.agree);
    CHECK(std::abs(r.literal) <= 1e-10 * oracle);
  }

  // shift coboundary psi - psi o sigma with psi = x1
  std::vector<double> cob(4);
  for (std::size_t i = 0; i < 4; ++i) {
    const Word w = decode_word(i, 2, 2);
    cob[i] = kSpins.label(w[0]) - kSpins.label(w[1]);
  }
  const CylinderFunction c(2, 2, cob);
  const auto sc = solve_poisson(iid.op(), iid.stationary(), c, 100);
  const auto vc = asymptotic_variance(iid.op(), iid.stationary(), sc, c);
  CHECK(std::abs(vc.poisson) <= 1e-14);
  CHECK(vc.degenerate);
}

TEST_CASE("dyson poisson solution follows the decay profile") {
  const auto w = AprioriWeights::uniform(2);
  const auto np = normalize_potential(PotentialSpec::dyson(3.0, 15), kSpins, w, 14);
  const auto chain = make_chain(np.potential, kSpins, w, 14, 1e-8);
  const auto x1 = CylinderFunction::coordinate(kSpins, 14);
  const auto p = solve_poisson(chain.op(), chain.stationary(), x1, 2000, 1e-12);
  CHECK(p.converged);
  const auto prof = iterate_norms(chain.op(), center(x1, chain.stationary()), p.terms);
  for (std::size_t j = 0; j <= p.terms; ++j) {
    CHECK(p.norms[j] == doctest::Approx(prof.norms[j]).epsilon(1e-12).scale(1e-15));
  }
  const auto r = asymptotic_variance(chain.op(), chain.stationary(), p, x1);
  CHECK(r.agree);
  CHECK(r.poisson > 0.0);
}

TEST_CASE("second eigenvalue governs the decay of depth-2 chains") {
  const auto w = AprioriWeights({0.4, 0.6}, true);
  const auto f = PotentialSpec::tabulated(2, 2, {0.3, -0.5, -0.4, 0.9});
  const auto np = normalize_potential(f, kSpins, w, 1);
  const auto L = build_truncated_operator(np.potential, kSpins, w, 1);
  const auto o = oracle::perron(oracle::dense_operator(np.potential, kSpins, w, 1));
  const auto nu = power_iterate(L, 1e-15).nu;
  const auto prof = iterate_norms(L, center(CylinderFunction::coordinate(kSpins, 1), nu), 25,
                                  FitWindow{1, 12});
  CHECK(std::abs(prof.rate - o.moduli[1]) <= 1e-6);
}

TEST_CASE("ks helpers") {
  CHECK(kolmogorov_tail(1.6276) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_tail(1.3581) == doctest::Approx(0.05).epsilon(1e-3));
  std::vector<double> q;
  for (int i = 1; i < 1000; ++i) {
    // normal quantiles by bisection on erfc
    const double p = i / 1000.0;
    double lo = -10, hi = 10;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  CHECK(ks_normal(q) <= 1.0 / 999 + 1e-9);
  CHECK(ks_normal(std::vector<double>(10, 5.0)) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fclt on a small i.i.d. run") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 1);
  FcltOptions o;
  o.horizon = 2000;
  o.replicas = 1000;
  o.seed = 3;
  const auto r = fclt_experiment(iid, CylinderFunction::coordinate(kSpins, 1), 1.0, o);
  CHECK(r.y1.size() == 1000);
  CHECK(r.ks_statistic >= 0.0);
  CHECK(r.ks_statistic <= 1.0);
  CHECK(r.ks_pass);
  CHECK(r.var_pass);
  CHECK(r.cov_pass);
  CHECK_FALSE(r.underpowered);

  o.threads = 3;
  const auto r3 = fclt_experiment(iid, CylinderFunction::coordinate(kSpins, 1), 1.0, o);
  CHECK(std::memcmp(r.y1.data(), r3.y1.data(), r.y1.size() * sizeof(double)) == 0);
  CHECK(r.ks_statistic == r3.ks_statistic);

  o.replicas = 10;
  o.threads = 1;
  CHECK(fclt_experiment(iid, CylinderFunction::coordinate(kSpins, 1), 1.0, o).underpowered);
}

TEST_CASE("binary trace layout") {
  const auto iid = make_chain(PotentialSpec::constant(0.0), kSpins, AprioriWeights::uniform(2), 1);
  FcltOptions o;
  o.horizon = 5;
  o.replicas = 2;
  std::ostringstream os;
  o.trace = &os;
  fclt_experiment(iid, CylinderFunction::coordinate(kSpins, 1), 1.0, o);
  const std::string b = os.str();
  REQUIRE(b.size() == 5 * 20);
  double last = 0.0;
  for (int i = 0; i < 5; ++i) {
    std::uint64_t step = 0;
    std::uint32_t sym = 0;
    double s = 0.0;
    for (int j = 0; j < 8; ++j) step |= std::uint64_t(static_cast<unsigned char>(b[i * 20 + j])) << (8 * j);
    for (int j = 0; j < 4; ++j) sym |= std::uint32_t(static_cast<unsigned char>(b[i * 20 + 8 + j])) << (8 * j);
    std::memcpy(&s, b.data() + i * 20 + 12, 8);
    CHECK(step == std::uint64_t(i + 1));
    CHECK(sym < 2);
    CHECK(s - last == kSpins.label(sym));
    last = s;
  }
}

TEST_CASE("cesaro diagnostic examples") {
  const auto is = normalized_ising(1.0, 3);
  const auto plus = CylinderFunction::indicator(2, 3, Word({1}));
  const auto c = cesaro_mass_diagnostic(is.chain.op(), is.chain.stationary(), plus, 50);
  const double m = is.chain.stationary().mass_of(Word({1}));
  for (double a : c.averages) CHECK(a == doctest::Approx(m).epsilon(1e-12));
  CHECK_FALSE(c.vanishing);

  const auto L = build_truncated_operator(PotentialSpec::ising(kSpins, 1.0), kSpins,
                                          AprioriWeights::counting(2), 3);
  const auto s = power_iterate(L, 1e-14);
  const auto one = CylinderFunction::constant(2, 3, 1.0);
  const auto r = cesaro_mass_diagnostic(L, s.nu, one, 200, s.rho);
  CHECK(r.averages.back() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_FALSE(r.vanishing);

  const auto sub = cesaro_mass_diagnostic(L, s.nu, one, 200, s.rho / 0.9);
  CHECK(sub.vanishing);
  CHECK(sub.averages.back() < 0.06);
  for (std::size_t i = 1; i < sub.averages.size(); ++i) CHECK(sub.averages[i] < sub.averages[i - 1]);

  CHECK_THROWS_AS(cesaro_mass_diagnostic(L, s.nu, CylinderFunction::constant(2, 3, 0.0), 5), Error);
}
