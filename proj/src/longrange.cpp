#include "thermolab/longrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "thermolab/errors.hpp"
#include "thermolab/parallel.hpp"
#include "thermolab/random.hpp"

namespace thermolab {

namespace {

double spin(Symbol s) { return s == 0 ? -1.0 : 1.0; }

void check_spins(std::span<const Symbol> x) {
  for (Symbol s : x) {
    if (s > 1) throw Error(ErrorKind::invalid_symbol, "dyson sequences are over {-1, +1}");
  }
}

void fill_random(rng::Stream& s, std::span<Symbol> out) {
  for (auto& v : out) v = static_cast<Symbol>(s() >> 63);
}

}  // namespace

DysonSpec::DysonSpec(double epsilon, std::size_t truncation)
    : epsilon_(epsilon), truncation_(truncation) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "dyson epsilon must be > 0");
  if (truncation < 2) throw Error(ErrorKind::invalid_argument, "dyson truncation must be >= 2");
  couplings_.assign(truncation + 1, 0.0);
  for (std::size_t n = 2; n <= truncation; ++n) {
    couplings_[n] = std::pow(static_cast<double>(n), -(2.0 + epsilon));
  }
  tail_at_truncation_ = power_tail_sum(truncation, 2.0 + epsilon);
}

double DysonSpec::coupling(std::size_t n) const {
  if (n < 2) throw Error(ErrorKind::invalid_argument, "dyson couplings start at n = 2");
  return n < couplings_.size() ? couplings_[n] : std::pow(static_cast<double>(n), -(2.0 + epsilon_));
}

double DysonSpec::tail(std::size_t m) const {
  if (m == truncation_) return tail_at_truncation_;
  return power_tail_sum(std::max<std::size_t>(m, 1), 2.0 + epsilon_);
}

PotentialValue DysonSpec::evaluate(std::span<const Symbol> x) const {
  if (x.empty()) throw Error(ErrorKind::depth_mismatch, "dyson evaluation needs x_1");
  const std::size_t len = std::min(x.size(), truncation_);
  // summed from the smallest coupling up
  CompensatedSum acc;
  const double x1 = spin(x[0]);
  for (std::size_t n = len; n >= 2; --n) acc.add(x1 * spin(x[n - 1]) * couplings_[n]);
  return {acc.value(), tail(len)};
}

std::size_t agreement(std::span<const Symbol> x, std::span<const Symbol> y) {
  const std::size_t n = std::min(x.size(), y.size());
  std::size_t i = 0;
  while (i < n && x[i] == y[i]) ++i;
  return i;
}

PotentialValue dyson_difference(const DysonSpec& d, std::span<const Symbol> x,
                                std::span<const Symbol> y) {
  check_spins(x);
  check_spins(y);
  const auto fx = d.evaluate(x), fy = d.evaluate(y);
  return {std::abs(fx.value - fy.value), fx.tail_bound + fy.tail_bound};
}

ModulusReport modulus_check(double epsilon, std::size_t pair_count,
                            const std::vector<std::size_t>& n_list, std::uint64_t seed,
                            std::size_t threads, std::size_t margin) {
  if (n_list.empty()) throw Error(ErrorKind::invalid_argument, "modulus_check: empty N list");
  for (std::size_t N : n_list) {
    if (N < 1) throw Error(ErrorKind::invalid_argument, "modulus_check: N must be >= 1");
  }
  const std::size_t length = *std::max_element(n_list.begin(), n_list.end()) + margin;
  const DysonSpec d(epsilon, length);
  ModulusReport rep;
  rep.epsilon = epsilon;
  rep.pairs = pair_count;
  rep.length = length;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const std::size_t N = n_list[i];
    std::vector<double> diff(pair_count), tail(pair_count);
    parallel_for(pair_count, threads, [&](std::size_t p) {
      rng::Stream s(seed, "longrange/modulus", i * pair_count + p);
      std::vector<Symbol> x(length), y(length);
      fill_random(s, x);
      fill_random(s, y);
      std::copy_n(x.begin(), N, y.begin());
      y[N] = static_cast<Symbol>(1 - x[N]);
      const auto r = dyson_difference(d, x, y);
      diff[p] = r.value;
      tail[p] = r.tail_bound;
    });
    ModulusRow row;
    row.agree = N;
    row.tail = d.tail(length);
    const double scale = std::pow(static_cast<double>(N), epsilon);
    for (std::size_t p = 0; p < pair_count; ++p) {
      row.worst_difference = std::max(row.worst_difference, diff[p]);
      row.worst_ratio = std::max(row.worst_ratio, (diff[p] + tail[p]) * scale);
    }
    rep.worst_ratio = std::max(rep.worst_ratio, row.worst_ratio);
    rep.rows.push_back(row);
  }
  rep.pass = rep.worst_ratio <= rep.bound;
  return rep;
}

PotentialValue birkhoff_difference(const DysonSpec& d, std::span<const Symbol> prefix,
                                   std::span<const Symbol> x, std::span<const Symbol> y) {
  if (x.size() != y.size() || x.empty()) {
    throw Error(ErrorKind::invalid_argument, "birkhoff_difference: tails must have equal length");
  }
  check_spins(prefix);
  std::vector<Symbol> ax(prefix.begin(), prefix.end()), ay(prefix.begin(), prefix.end());
  ax.insert(ax.end(), x.begin(), x.end());
  ay.insert(ay.end(), y.begin(), y.end());
  check_spins(ax);
  check_spins(ay);
  const std::span<const Symbol> sx(ax), sy(ay);
  CompensatedSum acc, tails;
  for (std::size_t j = 0; j < prefix.size(); ++j) {
    const auto fx = d.evaluate(sx.subspan(j, x.size()));
    const auto fy = d.evaluate(sy.subspan(j, y.size()));
    acc.add(fx.value - fy.value);
    tails.add(fx.tail_bound + fy.tail_bound);
  }
  return {std::abs(acc.value()), tails.value()};
}

double flatness_constant(double epsilon) {
  if (!(epsilon > 1.0)) throw Error(ErrorKind::invalid_argument, "flatness needs epsilon > 1");
  return 20.0 * epsilon * std::pow(std::log(2.0), epsilon - 1.0) / (epsilon - 1.0);
}

double omega_tilde(double epsilon, double r) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::invalid_argument, "omega~ needs 0 < r < 1");
  return std::pow(std::log(1.0 / r), -(epsilon - 1.0));
}

FlatnessReport birkhoff_flatness_check(double epsilon, std::size_t n, std::size_t pair_count,
                                       std::uint64_t seed,
                                       const std::vector<std::size_t>& agree_list,
                                       std::size_t threads, std::size_t margin) {
  if (n < 1) throw Error(ErrorKind::invalid_argument, "flatness: n must be >= 1");
  if (agree_list.empty()) throw Error(ErrorKind::invalid_argument, "flatness: empty N list");
  for (std::size_t N : agree_list) {
    if (N < 1) throw Error(ErrorKind::invalid_argument, "flatness: N must be >= 1");
  }
  FlatnessReport rep;
  rep.epsilon = epsilon;
  rep.n = n;
  rep.pairs = pair_count;
  rep.constant = flatness_constant(epsilon);
  const std::size_t length = *std::max_element(agree_list.begin(), agree_list.end()) + margin;
  const DysonSpec d(epsilon, length);
  for (std::size_t i = 0; i < agree_list.size(); ++i) {
    const std::size_t N = agree_list[i];
    std::vector<double> disc(pair_count);
    parallel_for(pair_count, threads, [&](std::size_t p) {
      rng::Stream s(seed, "longrange/flatness", i * pair_count + p);
      std::vector<Symbol> a(n), x(length), y(length);
      fill_random(s, a);
      fill_random(s, x);
      fill_random(s, y);
      std::copy_n(x.begin(), N, y.begin());
      y[N] = static_cast<Symbol>(1 - x[N]);
      const auto r = birkhoff_difference(d, a, x, y);
      disc[p] = r.value + r.tail_bound;
    });
    FlatnessRow row;
    row.agree = N;
    row.bound = rep.constant * omega_tilde(epsilon, std::ldexp(1.0, -static_cast<int>(N)));
    for (double v : disc) row.worst_discrepancy = std::max(row.worst_discrepancy, v);
    row.worst_ratio = row.worst_discrepancy / row.bound;
    rep.worst_ratio = std::max(rep.worst_ratio, row.worst_ratio);
    rep.rows.push_back(row);
  }
  rep.pass = rep.worst_ratio <= 1.0;
  return rep;
}

DecayProfile dyson_decay_profile(double epsilon, std::size_t depth, std::size_t n_max,
                                 std::optional<CylinderFunction> phi, FitWindow window,
                                 double slack, double tol) {
  const Alphabet spins = Alphabet::spins();
  const auto w = AprioriWeights::uniform(2);
  DecayProfile out;
  out.epsilon = epsilon;
  out.depth = depth;
  out.truncation = depth + 1;
  out.slack = slack;
  out.target_slope = -(epsilon - 1.0);
  const auto f = PotentialSpec::dyson(epsilon, out.truncation);
  out.truncation_tail = f.tail_bound();
  const auto np = normalize_potential(f, spins, w, depth, tol);
  out.normalization_residual = np.residual;
  const auto L = build_truncated_operator(np.potential, spins, w, depth);
  const auto nu = power_iterate(L, tol).nu;

  const CylinderFunction base = phi ? *phi : CylinderFunction::coordinate(spins, depth);
  if (base.depth() != depth || base.alphabet_size() != 2) {
    throw Error(ErrorKind::depth_mismatch, "decay profile: phi must live at the operator depth");
  }
  CylinderFunction c = center(base, nu);
  // a constant phi centers to roundoff; call it zero
  double sup = 0.0, csup = 0.0;
  for (double v : base.values()) sup = std::max(sup, std::abs(v));
  for (double v : c.values()) csup = std::max(csup, std::abs(v));
  if (csup <= 64.0 * std::numeric_limits<double>::epsilon() * sup) {
    c = CylinderFunction::constant(2, depth, 0.0);
  }

  out.window = window;
  if (out.window.hi == 0 || out.window.hi > depth) out.window.hi = depth;
  out.window.hi = std::min(out.window.hi, n_max);
  out.window.lo = std::max<std::size_t>(out.window.lo, 1);
  const auto prof = iterate_norms(L, c, n_max, out.window);
  out.norms = prof.norms;
  out.fit = prof.polynomial;
  out.slope = prof.polynomial.slope;
  out.degenerate = prof.degenerate || prof.polynomial.points < 2;
  out.pass = !out.degenerate && out.slope <= out.target_slope + slack;
  return out;
}

}  // namespace thermolab
