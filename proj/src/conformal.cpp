#include "thermolab/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "thermolab/errors.hpp"

namespace thermolab {

namespace {

std::size_t ipow(std::size_t k, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= k;
  return r;
}

double min_of(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

// Log-weights log prod_i w(u_i) e^{f(u_i ... u_n y)} of every volume word u of
// length n (index order), y the periodic extension of `boundary`.
std::vector<double> volume_log_weights(const PotentialSpec& f, const Alphabet& alphabet,
                                       const AprioriWeights& w, std::size_t n,
                                       const Word& boundary) {
  const std::size_t k = alphabet.size();
  const std::size_t total = cylinder_count(k, n);
  const std::size_t m = f.depth();
  std::vector<double> logw_sym(k);
  for (std::size_t a = 0; a < k; ++a) logw_sym[a] = std::log(w[static_cast<Symbol>(a)]);

  std::vector<double> cur{0.0}, next;
  next.reserve(total);
  std::vector<Symbol> buf(n + m);
  const std::size_t bl = boundary.depth();
  for (std::size_t j = 0; j < m; ++j) buf[n + j] = boundary[j % bl];
  for (std::size_t level = 0; level < n; ++level) {
    const std::size_t count = cur.size();  // k^level
    next.assign(count * k, 0.0);
    // positions n-level .. n-1 of buf hold the current word
    for (std::size_t v = 0; v < count; ++v) {
      std::size_t rest = v;
      for (std::size_t i = 0; i < level; ++i) {
        buf[n - 1 - i] = static_cast<Symbol>(rest % k);
        rest /= k;
      }
      for (std::size_t a = 0; a < k; ++a) {
        buf[n - 1 - level] = static_cast<Symbol>(a);
        const double fv =
            evaluate_potential(f, alphabet, std::span<const Symbol>(buf).subspan(n - 1 - level, m))
                .value;
        next[a * count + v] = cur[v] + logw_sym[a] + fv;
      }
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<KernelValue> distribution_from_weights(const std::vector<double>& logw,
                                                   std::size_t k, std::size_t n,
                                                   std::size_t event_depth, double log_slack) {
  const double top = *std::max_element(logw.begin(), logw.end());
  const std::size_t events = ipow(k, event_depth);
  const std::size_t block = ipow(k, n - event_depth);
  std::vector<double> mass(events);
  CompensatedSum all;
  for (std::size_t e = 0; e < events; ++e) {
    CompensatedSum s;
    for (std::size_t i = 0; i < block; ++i) s += std::exp(logw[e * block + i] - top);
    mass[e] = s.value();
  }
  for (double x : mass) all += x;
  const double z = all.value();
  const double lo = std::exp(-log_slack), hi = std::exp(log_slack);
  std::vector<KernelValue> out(events);
  for (std::size_t e = 0; e < events; ++e) {
    const double a = mass[e], b = z - mass[e];
    KernelValue v;
    v.value = a / z;
    if (log_slack > 0.0) {
      v.lower = a * lo / (a * lo + std::max(b, 0.0) * hi);
      v.upper = a * hi / (a * hi + std::max(b, 0.0) * lo);
    } else {
      v.lower = v.upper = v.value;
    }
    out[e] = v;
  }
  return out;
}

double relative_entropy(const CylinderMeasure& mu, const AprioriWeights& w) {
  const CylinderMeasure ref = CylinderMeasure::product(w.values(), mu.depth());
  CompensatedSum s;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) s += mu[i] * std::log(mu[i] / ref[i]);
  }
  return s.value();
}

}  // namespace

SupportReport check_full_support(const CylinderMeasure& nu, const PotentialSpec& f,
                                 const Alphabet& alphabet, const AprioriWeights& w, double rho,
                                 std::size_t n, double tol) {
  if (n < 1 || n > nu.depth()) {
    throw Error(ErrorKind::insufficient_depth, "support check at depth " + std::to_string(n) +
                                                   " needs a measure of depth >= n, have " +
                                                   std::to_string(nu.depth()));
  }
  const std::size_t k = alphabet.size();
  const CylinderMeasure m = project_to_depth(nu, n);
  SupportReport r;
  r.depth = n;
  r.base = std::exp(min_of(f.tabulate(alphabet, f.depth()))) / rho;
  r.ratio = std::numeric_limits<double>::infinity();
  r.min_mass = std::numeric_limits<double>::infinity();
  const CylinderMeasure wprod = CylinderMeasure::product(w.values(), n);
  const double basen = std::pow(r.base, static_cast<double>(n));
  bool zero = false;
  for (std::size_t c = 0; c < m.size(); ++c) {
    r.min_mass = std::min(r.min_mass, m[c]);
    if (!(m[c] > 0.0)) {
      if (!zero) r.worst = decode_word(c, n, k);
      zero = true;
      r.ratio = 0.0;
      continue;
    }
    const double ratio = m[c] / (basen * wprod[c]);
    if (!zero && ratio < r.ratio) {
      r.ratio = ratio;
      r.worst = decode_word(c, n, k);
    }
  }
  r.pass = !zero && r.ratio >= 1.0 - tol;
  return r;
}

H1Report check_h1(const CylinderMeasure& nu, const AprioriWeights& w, const PotentialSpec& f,
                  const Alphabet& alphabet, double rho, double tol) {
  if (nu.depth() < 2) throw Error(ErrorKind::depth_underflow, "H1 needs a measure of depth >= 2");
  const std::size_t k = nu.alphabet_size();
  const CylinderMeasure hat = project_measure(nu);
  const std::size_t tail = hat.size();
  H1Report r;
  r.bound = rho * std::exp(f.sup_norm(alphabet));
  for (std::size_t c = 0; c < nu.size(); ++c) {
    if (!(nu[c] > 0.0)) {
      ++r.untestable;
      continue;
    }
    const Symbol a = static_cast<Symbol>(c / tail);
    const double ratio = w[a] * hat[c % tail] / nu[c];
    if (ratio > r.max_ratio) {
      r.max_ratio = ratio;
      r.worst = decode_word(c, nu.depth(), k);
    }
  }
  r.pass = r.untestable == 0 && r.max_ratio <= r.bound * (1.0 + tol);
  return r;
}

ConditionalMeasure conditional_conformal(const CylinderMeasure& nu, const CylinderFunction& indicator,
                                         const TransferMatrix& L, double rho, double tol) {
  if (indicator.depth() != nu.depth() || L.depth() != nu.depth()) {
    throw Error(ErrorKind::depth_mismatch, "indicator, measure and operator depths differ");
  }
  for (double v : indicator.values()) {
    if (v != 0.0 && v != 1.0) throw Error(ErrorKind::invalid_argument, "indicator must be 0/1");
  }
  std::vector<double> m(nu.size());
  CompensatedSum mass;
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = nu[i] * indicator[i];
    mass += m[i];
  }
  const double b = mass.value();
  if (!(b > 0.0)) throw Error(ErrorKind::zero_mass, "indicator has zero conformal mass");
  for (double& x : m) x /= b;
  std::vector<double> img(m.size());
  L.apply_adjoint(m, img);
  const double res = simd::active().l1_residual(img.data(), m.data(), rho, m.size());
  return ConditionalMeasure{CylinderMeasure(nu.alphabet_size(), nu.depth(), std::move(m)), b, res,
                            res <= tol};
}

std::vector<KernelValue> kernel_distribution(const PotentialSpec& f, const Alphabet& alphabet,
                                             const AprioriWeights& w, std::size_t n,
                                             std::size_t event_depth, const Word& boundary) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "kernel volume must be >= 1");
  if (event_depth > n) {
    throw Error(ErrorKind::depth_mismatch, "event depth " + std::to_string(event_depth) +
                                               " exceeds volume " + std::to_string(n));
  }
  if (boundary.depth() == 0) throw Error(ErrorKind::invalid_argument, "boundary word is empty");
  const std::size_t k = alphabet.size();
  for (Symbol s : boundary.symbols()) {
    if (s >= k) throw Error(ErrorKind::invalid_symbol, "boundary symbol out of range");
  }
  const PotentialSpec g = f.resolve_for_boundary(alphabet, boundary);
  const std::vector<double> logw = volume_log_weights(g, alphabet, w, n, boundary);
  return distribution_from_weights(logw, k, n, event_depth,
                                   static_cast<double>(n) * g.tail_bound());
}

KernelValue specification_kernel(const PotentialSpec& f, const Alphabet& alphabet,
                                 const AprioriWeights& w, const KernelQuery& q) {
  const auto d = kernel_distribution(f, alphabet, w, q.n, q.event.depth(), q.boundary);
  return d[word_index(q.event, alphabet.size())];
}

SensitivityTable boundary_sensitivity_scan(const PotentialSpec& f, const Alphabet& alphabet,
                                           const AprioriWeights& w, const Word& event,
                                           const std::vector<Word>& boundaries,
                                           const std::vector<std::size_t>& n_list) {
  SensitivityTable t;
  t.n_list = n_list;
  for (std::size_t n : n_list) {
    std::vector<KernelValue> row;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Word& b : boundaries) {
      row.push_back(specification_kernel(f, alphabet, w, KernelQuery{n, event, b}));
      lo = std::min(lo, row.back().value);
      hi = std::max(hi, row.back().value);
    }
    t.values.push_back(std::move(row));
    t.discrepancy.push_back(boundaries.empty() ? 0.0 : hi - lo);
  }
  t.final_discrepancy = t.discrepancy.empty() ? 0.0 : t.discrepancy.back();
  t.monotone_decay = true;
  for (std::size_t i = 1; i < t.discrepancy.size(); ++i) {
    if (t.discrepancy[i] > t.discrepancy[i - 1]) t.monotone_decay = false;
  }
  return t;
}

ConsistencyReport kernel_consistency(const PotentialSpec& f, const Alphabet& alphabet,
                                     const AprioriWeights& w, const CylinderMeasure& nu,
                                     std::size_t n, std::size_t event_depth) {
  const std::size_t k = alphabet.size();
  const std::size_t d = nu.depth();
  if (n >= d || d - n + 1 < f.depth()) {
    throw Error(ErrorKind::insufficient_depth,
                "consistency at volume " + std::to_string(n) + " needs measure depth >= " +
                    std::to_string(n + std::max<std::size_t>(f.depth(), 2) - 1));
  }
  const std::size_t bdepth = d - n;
  const std::size_t nb = ipow(k, bdepth);
  const CylinderMeasure nn = nu.normalized();
  std::vector<CompensatedSum> bmass(nb);
  for (std::size_t c = 0; c < nn.size(); ++c) bmass[c % nb] += nn[c];
  const std::size_t events = ipow(k, event_depth);
  std::vector<CompensatedSum> predicted(events);
  for (std::size_t b = 0; b < nb; ++b) {
    const auto dist = kernel_distribution(f, alphabet, w, n, event_depth, decode_word(b, bdepth, k));
    const double mb = bmass[b].value();
    for (std::size_t e = 0; e < events; ++e) predicted[e] += mb * dist[e].value;
  }
  const CylinderMeasure marg = project_to_depth(nn, event_depth);
  ConsistencyReport r;
  r.events = events;
  for (std::size_t e = 0; e < events; ++e) {
    r.max_error = std::max(r.max_error, std::abs(marg[e] - predicted[e].value()));
  }
  return r;
}

EntropyReport relative_entropy_rate(const std::vector<CylinderMeasure>& marginals,
                                    const AprioriWeights& w, double tol) {
  if (marginals.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "entropy rate needs at least two marginals");
  }
  EntropyReport r;
  for (std::size_t i = 0; i < marginals.size(); ++i) {
    const CylinderMeasure& mu = marginals[i];
    if (mu.alphabet_size() != w.size()) {
      throw Error(ErrorKind::invalid_argument, "marginal alphabet differs from the weights");
    }
    if (i > 0) {
      const CylinderMeasure& prev = marginals[i - 1];
      if (mu.depth() <= prev.depth()) {
        throw Error(ErrorKind::invalid_argument, "marginal depths must increase");
      }
      const CylinderMeasure p = project_to_depth(mu, prev.depth());
      CompensatedSum diff;
      for (std::size_t c = 0; c < p.size(); ++c) diff += std::abs(p[c] - prev[c]);
      if (diff.value() > tol) {
        throw Error(ErrorKind::inconsistent,
                    "marginal of depth " + std::to_string(mu.depth()) +
                        " does not project onto depth " + std::to_string(prev.depth()) +
                        " (l1 gap " + std::to_string(diff.value()) + ")");
      }
    }
    r.n.push_back(mu.depth());
    r.relative_entropy.push_back(relative_entropy(mu, w));
  }
  const std::size_t first = r.n.size() > 3 ? r.n.size() - 3 : 0;
  std::vector<double> x, y;
  for (std::size_t i = first; i < r.n.size(); ++i) {
    x.push_back(static_cast<double>(r.n[i]));
    y.push_back(r.relative_entropy[i]);
  }
  r.fit = fit_line(x, y);
  r.rate = 0.0 - r.fit.slope;
  return r;
}

EntropyReport relative_entropy_rate(const CylinderMeasure& mu, const AprioriWeights& w,
                                    const std::vector<std::size_t>& n_list) {
  std::vector<std::size_t> ns(n_list);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  std::vector<CylinderMeasure> marginals;
  for (std::size_t n : ns) {
    if (n < 1 || n > mu.depth()) {
      throw Error(ErrorKind::insufficient_depth, "entropy depth beyond the measure depth");
    }
    marginals.push_back(project_to_depth(mu, n));
  }
  return relative_entropy_rate(marginals, w, 1e-12);
}

PressureCheck pressure_check(const PotentialSpec& f, const Alphabet& alphabet,
                             const AprioriWeights& w, std::size_t depth, double tol) {
  if (f.depth() > depth) {
    throw Error(ErrorKind::insufficient_depth, "pressure check needs depth >= potential depth");
  }
  const std::size_t k = alphabet.size();
  const NormalizedPotential np = normalize_potential(f, alphabet, w, depth);
  const SpectralData& s = np.spectral;
  std::vector<double> mu(s.nu.size());
  CompensatedSum z;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    mu[i] = s.h[i] * s.nu[i];
    z += mu[i];
  }
  for (double& x : mu) x /= z.value();
  const CylinderMeasure mu_d(k, depth, mu);

  // One more coordinate through the normalized transition: mu(a x) = w(a) e^{fbar(ax)} mu(x).
  const std::vector<double> fbar = np.potential.tabulate(alphabet, depth + 1);
  const std::size_t rows = mu.size();
  std::vector<double> ext(k * rows);
  CompensatedSum ent;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t x = 0; x < rows; ++x) {
      const std::size_t i = a * rows + x;
      ext[i] = w[static_cast<Symbol>(a)] * std::exp(fbar[i]) * mu[x];
      ent += ext[i] * fbar[i];
    }
  }
  const CylinderMeasure mu_ext(k, depth + 1, std::move(ext));
  const CylinderMeasure back = project_measure(mu_ext);
  CompensatedSum inv;
  for (std::size_t x = 0; x < rows; ++x) inv += std::abs(back[x] - mu[x]);

  PressureCheck r;
  r.log_rho = std::log(s.rho);
  r.entropy = 0.0 - ent.value();
  const std::vector<double> fd = f.tabulate(alphabet, depth);
  r.energy = mu_d.integrate(CylinderFunction(k, depth, fd));
  r.defect = r.entropy + r.energy - r.log_rho;
  r.invariance_residual = inv.value();
  std::vector<std::size_t> ns{std::max<std::size_t>(depth, 2) - 1, depth, depth + 1};
  r.entropy_slope = relative_entropy_rate(mu_ext, w, ns).rate;
  r.pass = std::abs(r.defect) <= tol;
  return r;
}

}  // namespace thermolab
