#include "thermolab/markov_fclt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>

#include "thermolab/errors.hpp"
#include "thermolab/parallel.hpp"

namespace thermolab {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void put_le(std::ostream& os, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(buf, bytes);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;   // unbiased
  double m4 = 0.0;    // fourth central moment
};

Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  CompensatedSum s;
  for (double v : x) s += v;
  m.mean = s.value() / n;
  CompensatedSum s2, s4;
  for (double v : x) {
    const double d = (v - m.mean) * (v - m.mean);
    s2 += d;
    s4 += d * d;
  }
  m.var = x.size() > 1 ? s2.value() / (n - 1.0) : 0.0;
  m.m4 = s4.value() / n;
  return m;
}

}  // namespace

ChainSpec::ChainSpec(TransferMatrix op, double tol)
    : op_(std::move(op)), stationary_(CylinderMeasure::uniform(op_.alphabet_size(), op_.depth())) {
  const std::size_t n = op_.dim();
  const std::size_t k = op_.alphabet_size();
  std::vector<double> one(n, 1.0), img(n);
  op_.apply(one, img);
  residual_ = simd::scalar_kernels().max_abs_residual(img.data(), one.data(), 1.0, n);
  if (!(residual_ <= tol)) {
    throw Error(ErrorKind::inconsistent, "potential is not normalized: ||L1 - 1|| = " +
                                             std::to_string(residual_));
  }
  const SpectralData s = power_iterate(op_, 1e-13);
  if (!s.converged) {
    throw Error(ErrorKind::not_converged, "stationary law of the chain did not converge");
  }
  stationary_ = s.nu;
  cdf_.resize(n * k);
  for (std::size_t x = 0; x < n; ++x) {
    double acc = 0.0;
    for (std::size_t a = 0; a < k; ++a) acc += op_.coefficient(x, static_cast<Symbol>(a));
    double c = 0.0;
    for (std::size_t a = 0; a < k; ++a) {
      c += op_.coefficient(x, static_cast<Symbol>(a)) / acc;
      cdf_[x * k + a] = c;
    }
    cdf_[x * k + k - 1] = 1.0;
  }
  start_cdf_.resize(n);
  CompensatedSum c;
  const double total = stationary_.total();
  for (std::size_t x = 0; x < n; ++x) {
    c += stationary_[x] / total;
    start_cdf_[x] = c.value();
  }
  start_cdf_[n - 1] = 1.0;
}

double ChainSpec::transition(std::size_t state, Symbol a) const {
  const std::size_t k = op_.alphabet_size();
  const double lo = a == 0 ? 0.0 : cdf_[state * k + a - 1];
  return cdf_[state * k + a] - lo;
}

std::size_t ChainSpec::draw_start(rng::Stream& s) const {
  const double u = s.uniform();
  const auto it = std::upper_bound(start_cdf_.begin(), start_cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - start_cdf_.begin()),
                               start_cdf_.size() - 1);
}

std::size_t ChainSpec::next(std::size_t state, rng::Stream& s, Symbol& symbol) const {
  const std::size_t k = op_.alphabet_size();
  const double u = s.uniform();
  const double* c = &cdf_[state * k];
  Symbol a = 0;
  while (a + 1 < k && u >= c[a]) ++a;
  symbol = a;
  return op_.column(state, a);
}

ChainSpec make_chain(const PotentialSpec& fbar, const Alphabet& alphabet,
                     const AprioriWeights& w, std::size_t depth, double tol) {
  return ChainSpec(build_truncated_operator(fbar, alphabet, w, depth), tol);
}

ChainState::ChainState(const ChainSpec& spec, std::uint64_t seed, std::uint64_t replica)
    : spec_(&spec), stream_(seed, "markov-fclt", replica), state_(spec.draw_start(stream_)) {}

Symbol ChainState::step() {
  Symbol a = 0;
  state_ = spec_->next(state_, stream_, a);
  return a;
}

std::vector<double> sample_path(ChainState& chain, const CylinderFunction& phi, std::size_t n) {
  std::vector<double> s(n + 1, 0.0);
  double acc = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    chain.step();
    acc += phi[chain.window()];
    s[j] = acc;
  }
  return s;
}

PoissonSolution solve_poisson(const TransferMatrix& L, const CylinderMeasure& nu,
                              const CylinderFunction& phi, std::size_t n_max, double tol) {
  if (phi.depth() != L.depth() || nu.depth() != L.depth()) {
    throw Error(ErrorKind::depth_mismatch, "solve_poisson: phi, nu and operator depths differ");
  }
  const auto& kern = simd::active();
  const std::size_t n = L.dim();
  PoissonSolution sol;
  sol.phi_mean = nu.integrate(phi) / nu.total();
  std::vector<double> x(phi.values().begin(), phi.values().end());
  for (double& v : x) v -= sol.phi_mean;
  const double scale = kern.max_abs(x.data(), n);
  if (!(scale > 0.0)) throw Error(ErrorKind::invalid_argument, "phi is constant");
  std::vector<double> acc(n, 0.0), y(n);
  sol.norms.push_back(scale);
  std::size_t j = 0;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += x[i];
    ++j;
    L.apply(x, y);
    x.swap(y);
    const double nx = kern.max_abs(x.data(), n);
    sol.norms.push_back(nx);
    if (nx < tol) {
      sol.converged = true;
      break;
    }
    if (j >= n_max) break;
  }
  sol.terms = j;
  sol.tail_bound = sol.norms.back();
  // residual (I - L) v - phi computed directly
  L.apply(acc, y);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res = std::max(res, std::abs(acc[i] - y[i] - (phi[i] - sol.phi_mean)));
  }
  sol.residual = res;
  std::vector<double> ns, ls;
  for (std::size_t i = 1; i < sol.norms.size(); ++i) {
    if (sol.norms[i] > 0.0) {
      ns.push_back(static_cast<double>(i));
      ls.push_back(std::log(sol.norms[i]));
    }
  }
  const LinearFit fit = fit_line(ns, ls);
  sol.rate = fit.points >= 2 ? std::exp(fit.slope) : 0.0;
  sol.v = CylinderFunction(L.alphabet_size(), L.depth(), std::move(acc));
  return sol;
}

VarianceReport asymptotic_variance(const TransferMatrix& L, const CylinderMeasure& nu,
                                   const PoissonSolution& sol, const CylinderFunction& phi) {
  const std::size_t n = L.dim();
  const std::size_t k = L.alphabet_size(), d = L.depth();
  const CylinderMeasure m = nu.normalized();
  std::vector<double> c(phi.values().begin(), phi.values().end());
  for (double& v : c) v -= sol.phi_mean;
  const auto& v = sol.v;
  std::vector<double> lv(n), v2(n), lv2(n), lvsq(n);
  L.apply(v.values(), lv);
  for (std::size_t i = 0; i < n; ++i) {
    v2[i] = v[i] * v[i];
    lvsq[i] = lv[i] * lv[i];
  }
  L.apply(v2, lv2);
  VarianceReport r;
  const double ev2 = m.integrate(CylinderFunction(k, d, v2));
  r.poisson = ev2 - m.integrate(CylinderFunction(k, d, lvsq));
  r.literal = ev2 - m.integrate(CylinderFunction(k, d, lv2));

  std::vector<double> x(c), y(n), prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = c[i] * c[i];
  CompensatedSum gk;
  gk += m.integrate(CylinderFunction(k, d, prod));
  const std::size_t terms = std::max<std::size_t>(sol.terms, 1);
  for (std::size_t j = 1; j < terms; ++j) {
    L.apply(x, y);
    x.swap(y);
    for (std::size_t i = 0; i < n; ++i) prod[i] = c[i] * x[i];
    gk += 2.0 * m.integrate(CylinderFunction(k, d, prod));
  }
  r.green_kubo = gk.value();
  r.gk_terms = terms - 1;
  // Both estimators neglect terms of size ||phi|| ||L^j phi|| for j >= terms.
  const double s = std::min(sol.rate, 0.999);
  const double phin = sol.norms.empty() ? 0.0 : sol.norms.front();
  double vn = 0.0;
  for (double t : v.values()) vn = std::max(vn, std::abs(t));
  r.tail = 4.0 * (phin + vn) * sol.tail_bound / (1.0 - s) + 64.0 * 2.2e-16 * (phin + vn) * (phin + vn);
  r.agree = std::abs(r.poisson - r.green_kubo) <= r.tail;
  r.degenerate = r.poisson <= r.tail;
  return r;
}

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_normal(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

FcltReport fclt_experiment(const ChainSpec& chain, const CylinderFunction& phi, double sigma2,
                           const FcltOptions& opts) {
  if (!(sigma2 > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "FCLT needs a positive asymptotic variance");
  }
  if (opts.horizon < 1 || opts.replicas < 2) {
    throw Error(ErrorKind::invalid_argument, "FCLT needs horizon >= 1 and replicas >= 2");
  }
  if (phi.depth() != chain.depth()) {
    throw Error(ErrorKind::depth_mismatch, "phi depth differs from the chain depth");
  }
  FcltReport r;
  r.replicas = opts.replicas;
  r.horizon = opts.horizon;
  r.sigma2 = sigma2;
  r.t_grid = opts.t_grid;
  std::sort(r.t_grid.begin(), r.t_grid.end());
  r.t_grid.erase(std::unique(r.t_grid.begin(), r.t_grid.end()), r.t_grid.end());
  if (r.t_grid.empty() || r.t_grid.back() != 1.0) r.t_grid.push_back(1.0);
  for (double t : r.t_grid) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorKind::invalid_argument, "t grid must lie in (0, 1]");
  }
  r.underpowered = opts.replicas < 100;

  const std::size_t g = r.t_grid.size();
  std::vector<std::size_t> marks(g);
  for (std::size_t i = 0; i < g; ++i) {
    marks[i] = static_cast<std::size_t>(std::floor(static_cast<double>(opts.horizon) * r.t_grid[i]));
  }
  r.phi_mean = chain.stationary().integrate(phi) / chain.stationary().total();
  std::vector<double> c(phi.values().begin(), phi.values().end());
  for (double& v : c) v -= r.phi_mean;

  std::vector<double> sums(opts.replicas * g);
  parallel_for(opts.replicas, opts.threads, [&](std::size_t rep) {
    rng::Stream s(opts.seed, "markov-fclt", rep);
    std::size_t state = chain.draw_start(s);
    double acc = 0.0;
    std::size_t next_mark = 0;
    std::ostream* trace = rep == 0 ? opts.trace : nullptr;
    for (std::size_t step = 1; step <= opts.horizon; ++step) {
      Symbol a = 0;
      state = chain.next(state, s, a);
      acc += c[state];
      if (trace != nullptr) {
        put_le(*trace, step, 8);
        put_le(*trace, a, 4);
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(acc));
        std::memcpy(&bits, &acc, sizeof bits);
        put_le(*trace, bits, 8);
      }
      while (next_mark < g && marks[next_mark] == step) sums[rep * g + next_mark++] = acc;
    }
    while (next_mark < g) sums[rep * g + next_mark++] = 0.0;  // marks at step 0
  });

  const double norm = std::sqrt(sigma2) * std::sqrt(static_cast<double>(opts.horizon));
  std::vector<std::vector<double>> y(g, std::vector<double>(opts.replicas));
  for (std::size_t rep = 0; rep < opts.replicas; ++rep) {
    for (std::size_t i = 0; i < g; ++i) y[i][rep] = sums[rep * g + i] / norm;
  }
  r.y1 = y[g - 1];
  const double rr = static_cast<double>(opts.replicas);
  r.ks_statistic = ks_normal(r.y1);
  r.ks_critical = 1.6276 / std::sqrt(rr);
  r.ks_pvalue = kolmogorov_tail((std::sqrt(rr) + 0.12 + 0.11 / std::sqrt(rr)) * r.ks_statistic);
  r.ks_pass = r.ks_statistic < r.ks_critical;

  const Moments m1 = moments(r.y1);
  r.var_y1 = m1.var;
  r.var_se = std::sqrt(std::max(m1.m4 - m1.var * m1.var, 0.0) / rr);
  r.var_pass = std::abs(r.var_y1 - 1.0) <= 3.0 * r.var_se;

  std::vector<Moments> mom(g);
  for (std::size_t i = 0; i < g; ++i) mom[i] = moments(y[i]);
  r.cov_pass = true;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) {
      std::vector<double> p(opts.replicas);
      for (std::size_t k = 0; k < opts.replicas; ++k) {
        p[k] = (y[i][k] - mom[i].mean) * (y[j][k] - mom[j].mean);
      }
      const Moments mp = moments(p);
      CovarianceCheck cc;
      cc.s = r.t_grid[i];
      cc.t = r.t_grid[j];
      cc.value = mp.mean * rr / (rr - 1.0);
      cc.se = std::sqrt(mp.var / rr);
      cc.target = std::min(cc.s, cc.t);
      cc.pass = std::abs(cc.value - cc.target) <= 3.0 * cc.se;
      r.cov_pass = r.cov_pass && cc.pass;
      r.covariance.push_back(cc);
    }
  }
  for (std::size_t i = 0; i < g; ++i) {
    VariancePoint vp;
    vp.steps = marks[i];
    if (marks[i] > 0) {
      // Var(S_m)/m = Var(Y(t)) sigma^2 n / m
      const double f = sigma2 * static_cast<double>(opts.horizon) / static_cast<double>(marks[i]);
      vp.value = mom[i].var * f;
      vp.se = std::sqrt(std::max(mom[i].m4 - mom[i].var * mom[i].var, 0.0) / rr) * f;
    }
    r.variance_curve.push_back(vp);
  }
  r.pass = r.ks_pass && r.var_pass && r.cov_pass;
  return r;
}

CesaroReport cesaro_mass_diagnostic(const TransferMatrix& L, const CylinderMeasure& nu,
                                    const CylinderFunction& v, std::size_t n, double scale) {
  if (v.depth() != L.depth() || nu.depth() != L.depth()) {
    throw Error(ErrorKind::depth_mismatch, "cesaro diagnostic: depths differ");
  }
  bool nonzero = false;
  for (double x : v.values()) {
    if (x < 0.0) throw Error(ErrorKind::invalid_argument, "v must be nonnegative");
    nonzero = nonzero || x > 0.0;
  }
  if (!nonzero) throw Error(ErrorKind::invalid_argument, "v must not vanish");
  if (n < 1) throw Error(ErrorKind::invalid_argument, "cesaro horizon must be >= 1");
  const std::size_t dim = L.dim();
  const auto& kern = simd::active();
  std::vector<double> weighted(dim);
  const double total = nu.total();
  for (std::size_t i = 0; i < dim; ++i) weighted[i] = v[i] * nu[i] / total;
  std::vector<double> g(dim, 1.0), y(dim);
  CesaroReport r;
  CompensatedSum acc;
  for (std::size_t j = 0; j < n; ++j) {
    const double term = kern.dot(weighted.data(), g.data(), dim);
    r.terms.push_back(term);
    acc += term;
    r.averages.push_back(acc.value() / static_cast<double>(j + 1));
    L.apply(g, y);
    if (scale != 1.0) kern.scale(y.data(), 1.0 / scale, dim);
    g.swap(y);
  }
  r.ratio = r.terms.back() / r.terms.front();
  r.vanishing = r.ratio < 1e-6;
  return r;
}

}  // namespace thermolab
