#include "thermolab/curie_weiss.hpp"

#include <algorithm>
#include <cmath>

#include "thermolab/errors.hpp"
#include "thermolab/numeric.hpp"
#include "thermolab/parallel.hpp"
#include "thermolab/random.hpp"
#include "thermolab/transfer.hpp"

namespace thermolab {

namespace {

McEstimate estimate(std::span<const double> values, double target, double z_limit,
                    double bias_bound = 0.0) {
  CompensatedSum s;
  for (double v : values) s += v;
  const double n = static_cast<double>(values.size());
  McEstimate e;
  e.estimate = s.value() / n;
  CompensatedSum sq;
  for (double v : values) sq += (v - e.estimate) * (v - e.estimate);
  e.se = values.size() > 1 ? std::sqrt(sq.value() / (n - 1.0) / n) : 0.0;
  e.target = target;
  e.bias_bound = bias_bound;
  const double diff = e.estimate - target;
  e.z = e.se > 0.0 ? diff / e.se : 0.0;
  e.pass = std::abs(diff) <= z_limit * e.se + bias_bound +
                                1e-12 * std::max(1.0, std::abs(target));
  return e;
}

// E g(m_N) - g(gamma) for g = 2cosh(beta .): m_N has mean gamma and variance
// (1 - gamma^2)/N, so Taylor's theorem bounds it by sup|g''| Var / 2.
double cosh_bias_bound(double beta, double gamma, std::size_t horizon) {
  return beta * beta * std::cosh(beta) * (1.0 - gamma * gamma) / static_cast<double>(horizon);
}

// Same bound for g = e^{+-beta .}: sup|g''| = beta^2 e^beta on [-1, 1].
double exp_bias_bound(double beta, double gamma, std::size_t horizon) {
  return 0.5 * beta * beta * std::exp(beta) * (1.0 - gamma * gamma) / static_cast<double>(horizon);
}

std::int64_t draw_binomial(rng::Stream& s, std::size_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return static_cast<std::int64_t>(n);
  std::binomial_distribution<std::int64_t> b(static_cast<std::int64_t>(n), p);
  return b(s);
}

void check_budget(const McBudget& b) {
  if (b.horizon < 1 || b.count < 1) {
    throw Error(ErrorKind::invalid_argument, "Monte Carlo horizon and count must be >= 1");
  }
}

}  // namespace

std::string to_string(Regime r) {
  return r == Regime::subcritical ? "subcritical" : "supercritical";
}

std::string to_string(Phase p) {
  switch (p) {
    case Phase::plus: return "plus";
    case Phase::minus: return "minus";
    case Phase::center: return "center";
    case Phase::undetermined: break;
  }
  return "undetermined";
}

MagnetizationSolution solve_magnetization(double beta, double tol) {
  if (!(beta > 0.0)) throw Error(ErrorKind::invalid_argument, "beta must be > 0");
  MagnetizationSolution s;
  s.beta = beta;
  if (beta <= 1.0) {
    s.roots = {0.0};
    s.regime = Regime::subcritical;
    return s;
  }
  s.regime = Regime::supercritical;
  // g(x) = x - tanh(beta x) is negative on (0, gamma*) and positive on (gamma*, 1].
  auto g = [beta](double x) { return x - std::tanh(beta * x); };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 2000 && hi - lo > tol * 0.5; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) < 0.0) lo = mid; else hi = mid;
  }
  const double root = std::abs(g(lo)) <= std::abs(g(hi)) && lo > 0.0 ? lo : hi;
  s.roots = {-root, 0.0, root};
  s.residual = std::abs(g(root));
  return s;
}

CWSpectralData cw_spectral_data(double beta) {
  const MagnetizationSolution s = solve_magnetization(beta);
  CWSpectralData d;
  d.beta = beta;
  d.gamma = s.roots.back();
  const double bg = beta * d.gamma;
  d.eigenvalue = 2.0 * std::cosh(bg);
  d.plus_mass = std::exp(bg) / d.eigenvalue;
  d.minus_mass = std::exp(-bg) / d.eigenvalue;
  return d;
}

MagnetizationSample sample_bernoulli(double gamma, const McBudget& budget) {
  if (!(std::abs(gamma) <= 1.0)) throw Error(ErrorKind::invalid_argument, "gamma must lie in [-1, 1]");
  check_budget(budget);
  MagnetizationSample out;
  out.gamma = gamma;
  out.horizon = budget.horizon;
  out.magnetization.resize(budget.count);
  const double p = 0.5 * (1.0 + gamma);
  const double n = static_cast<double>(budget.horizon);
  parallel_for(budget.count, budget.threads, [&](std::size_t i) {
    rng::Stream s(budget.seed, "curie-weiss/bernoulli", i);
    const auto k = draw_binomial(s, budget.horizon, p);
    out.magnetization[i] = (2.0 * static_cast<double>(k) - n) / n;
  });
  const McEstimate e = estimate(out.magnetization, gamma, 3.0);
  out.mean = e.estimate;
  out.se = e.se;
  return out;
}

ConformalMcReport verify_generalized_conformal(double beta, const McBudget& budget) {
  const CWSpectralData d = cw_spectral_data(beta);
  const MagnetizationSample s = sample_bernoulli(d.gamma, budget);
  ConformalMcReport r;
  r.beta = beta;
  r.gamma = d.gamma;
  r.horizon = budget.horizon;
  r.count = budget.count;
  r.underpowered = budget.count < 1000;
  const double z = r.underpowered ? 4.0 : 3.0;
  std::vector<double> ep(s.magnetization.size()), em(ep.size()), et(ep.size());
  for (std::size_t i = 0; i < ep.size(); ++i) {
    ep[i] = std::exp(beta * s.magnetization[i]);
    em[i] = std::exp(-beta * s.magnetization[i]);
    et[i] = ep[i] + em[i];
  }
  const double eb = exp_bias_bound(beta, d.gamma, budget.horizon);
  r.plus = estimate(ep, std::exp(beta * d.gamma), z, eb);
  r.minus = estimate(em, std::exp(-beta * d.gamma), z, eb);
  r.total = estimate(et, d.eigenvalue, z, cosh_bias_bound(beta, d.gamma, budget.horizon));
  r.mass_identity = std::max(std::abs(std::exp(beta * d.gamma) - d.eigenvalue * d.plus_mass),
                             std::abs(std::exp(-beta * d.gamma) - d.eigenvalue * d.minus_mass));
  r.pass = r.plus.pass && r.minus.pass && r.total.pass && r.mass_identity <= 1e-12 * d.eigenvalue;
  return r;
}

std::vector<double> sample_mixture(double beta, double t, const McBudget& budget) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::invalid_argument, "mixture weight t must lie in [0, 1]");
  check_budget(budget);
  const double gamma = cw_spectral_data(beta).gamma;
  const double n = static_cast<double>(budget.horizon);
  std::vector<double> m(budget.count);
  parallel_for(budget.count, budget.threads, [&](std::size_t i) {
    rng::Stream s(budget.seed, "curie-weiss/mixture", i);
    const double sign = s.uniform() < t ? 1.0 : -1.0;
    const auto k = draw_binomial(s, budget.horizon, 0.5 * (1.0 + sign * gamma));
    m[i] = (2.0 * static_cast<double>(k) - n) / n;
  });
  return m;
}

Phase classify(double m, double gamma) {
  const double g = std::abs(gamma);
  if (g == 0.0) return Phase::center;
  if (!(std::abs(m) > 0.5 * g)) return Phase::undetermined;
  return std::abs(m - g) < std::abs(m + g) ? Phase::plus : Phase::minus;
}

PhaseClassification classify_phase(std::span<const double> magnetization, double beta,
                                   std::size_t horizon, double max_undetermined) {
  if (magnetization.empty()) throw Error(ErrorKind::invalid_argument, "no samples to classify");
  const CWSpectralData d = cw_spectral_data(beta);
  PhaseClassification c;
  c.beta = beta;
  c.gamma = d.gamma;
  c.threshold = 0.5 * d.gamma;
  c.horizon = horizon;
  c.count = magnetization.size();
  const double n = static_cast<double>(c.count);
  for (Phase p : {Phase::plus, Phase::minus, Phase::center}) {
    std::vector<double> ratio;
    for (double m : magnetization) {
      if (classify(m, d.gamma) == p) ratio.push_back(2.0 * std::cosh(beta * m));
    }
    if (ratio.empty()) continue;
    PhaseClass k;
    k.phase = p;
    k.count = ratio.size();
    k.fraction = static_cast<double>(k.count) / n;
    k.fraction_se = std::sqrt(k.fraction * (1.0 - k.fraction) / n);
    k.ratio = estimate(ratio, d.eigenvalue, 3.0, cosh_bias_bound(beta, d.gamma, horizon));
    c.classes.push_back(k);
  }
  std::size_t assigned = 0;
  for (const auto& k : c.classes) assigned += k.count;
  c.undetermined = c.count - assigned;
  c.undetermined_fraction = static_cast<double>(c.undetermined) / n;
  c.dimension = c.classes.size();
  c.inconclusive = c.undetermined_fraction > max_undetermined;
  return c;
}

ClassMarginalCheck conditional_class_check(double beta, double t, std::size_t depth,
                                           const McBudget& budget, double z_limit) {
  check_budget(budget);
  if (depth < 1 || depth > budget.horizon) {
    throw Error(ErrorKind::invalid_argument, "marginal depth must lie in [1, N]");
  }
  const CWSpectralData d = cw_spectral_data(beta);
  const std::size_t cyl = cylinder_count(2, depth);
  const double n = static_cast<double>(budget.horizon);
  std::vector<std::uint32_t> word(budget.count);
  std::vector<unsigned char> plus(budget.count);
  parallel_for(budget.count, budget.threads, [&](std::size_t i) {
    rng::Stream s(budget.seed, "curie-weiss/class", i);
    const double sign = s.uniform() < t ? 1.0 : -1.0;
    const double p = 0.5 * (1.0 + sign * d.gamma);
    std::uint32_t w = 0;
    std::int64_t ups = 0;
    for (std::size_t j = 0; j < depth; ++j) {
      const std::uint32_t a = s.uniform() < p ? 1u : 0u;  // symbol 1 is +1
      w = w * 2 + a;
      ups += a;
    }
    ups += draw_binomial(s, budget.horizon - depth, p);
    const double m = (2.0 * static_cast<double>(ups) - n) / n;
    word[i] = w;
    plus[i] = classify(m, d.gamma) == Phase::plus ? 1 : 0;
  });
  std::vector<double> counts(cyl, 0.0);
  ClassMarginalCheck r;
  r.depth = depth;
  for (std::size_t i = 0; i < budget.count; ++i) {
    if (plus[i]) {
      counts[word[i]] += 1.0;
      ++r.in_class;
    }
  }
  if (r.in_class == 0) throw Error(ErrorKind::zero_mass, "no sample fell in the plus class");
  const double in = static_cast<double>(r.in_class);
  for (double& c : counts) c /= in;
  r.empirical = CylinderMeasure(2, depth, counts);
  const CylinderMeasure exact =
      CylinderMeasure::product(std::vector<double>{d.minus_mass, d.plus_mass}, depth);
  for (std::size_t c = 0; c < cyl; ++c) {
    const double q = exact[c];
    const double se = std::sqrt(q * (1.0 - q) / in);
    if (se > 0.0) r.max_z = std::max(r.max_z, std::abs(counts[c] - q) / se);
  }
  const auto L = build_truncated_operator(PotentialSpec::mean_field(beta, d.gamma),
                                          Alphabet::spins(), AprioriWeights::counting(2), depth);
  std::vector<double> img(cyl);
  L.apply_adjoint(counts, img);
  r.mc_residual = simd::active().l1_residual(img.data(), counts.data(), d.eigenvalue, cyl);
  L.apply_adjoint(exact.masses(), img);
  r.exact_residual =
      simd::active().l1_residual(img.data(), exact.masses().data(), d.eigenvalue, cyl);
  r.pass = r.max_z <= z_limit && r.exact_residual <= 1e-12 * d.eigenvalue;
  return r;
}

}  // namespace thermolab
