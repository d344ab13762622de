#include "thermolab/transfer.hpp"

#include <algorithm>
#include <cmath>

namespace thermolab {

namespace {

std::size_t ipow(std::size_t k, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= k;
  return r;
}

}  // namespace

TransferMatrix::TransferMatrix(std::size_t k, std::size_t depth, std::size_t potential_depth,
                               double tail_bound, std::vector<double> coefficients)
    : k_(k),
      depth_(depth),
      rows_(cylinder_count(k, depth)),
      potential_depth_(potential_depth),
      tail_bound_(tail_bound),
      coef_(std::move(coefficients)) {
  if (k < 2 || depth < 1) throw Error(ErrorKind::invalid_argument, "operator needs k >= 2, D >= 1");
  if (potential_depth > depth + 1) {
    throw Error(ErrorKind::stability, "potential depth " + std::to_string(potential_depth) +
                                          " needs operator depth >= " +
                                          std::to_string(potential_depth - 1));
  }
  if (coef_.size() != k_ * rows_) {
    throw Error(ErrorKind::invalid_argument, "coefficient array must hold k entries per row");
  }
  for (double c : coef_) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw Error(ErrorKind::invalid_argument, "transfer coefficients must be finite and > 0");
    }
  }
}

void TransferMatrix::apply(std::span<const double> in, std::span<double> out) const {
  if (in.size() != rows_ || out.size() != rows_) {
    throw Error(ErrorKind::depth_mismatch, "apply: vector length differs from k^D");
  }
  simd::active().apply_rows(k_, rows_, coef_.data(), in.data(), out.data());
}

void TransferMatrix::apply_adjoint(std::span<const double> in, std::span<double> out) const {
  if (in.size() != rows_ || out.size() != rows_) {
    throw Error(ErrorKind::depth_mismatch, "apply_adjoint: vector length differs from k^D");
  }
  simd::active().apply_cols(k_, rows_, coef_.data(), in.data(), out.data());
}

TransferMatrix TransferMatrix::scaled(double s) const {
  if (!(s > 0.0)) throw Error(ErrorKind::invalid_argument, "scale must be > 0");
  std::vector<double> c(coef_);
  for (double& x : c) x *= s;
  return TransferMatrix(k_, depth_, potential_depth_, tail_bound_, std::move(c));
}

TransferMatrix build_truncated_operator(const PotentialSpec& f, const Alphabet& alphabet,
                                        const AprioriWeights& w, std::size_t depth,
                                        std::size_t state_budget) {
  const std::size_t k = alphabet.size();
  if (w.size() != k) throw Error(ErrorKind::invalid_argument, "weights do not match alphabet");
  if (depth < 1) throw Error(ErrorKind::invalid_argument, "operator depth must be >= 1");
  const std::size_t m = f.depth();
  if (m > depth + 1) {
    throw Error(ErrorKind::stability, "potential of depth " + std::to_string(m) +
                                          " needs operator depth >= " + std::to_string(m - 1));
  }
  const std::size_t rows = cylinder_count(k, depth, state_budget);
  cylinder_count(k, depth, state_budget / k);  // coefficient storage is k * rows

  // f on the words (a, w_1, ..., w_{m-1}); the row's first m-1 symbols are w / k^{D-m+1}.
  const std::vector<double> table = f.tabulate(alphabet, m);
  const std::size_t head = ipow(k, m - 1);
  const std::size_t drop = ipow(k, depth - (m - 1));
  std::vector<double> coef(k * rows);
  for (std::size_t a = 0; a < k; ++a) {
    const double wa = w[static_cast<Symbol>(a)];
    for (std::size_t row = 0; row < rows; ++row) {
      coef[a * rows + row] = wa * std::exp(table[a * head + row / drop]);
    }
  }
  return TransferMatrix(k, depth, m, f.tail_bound(), std::move(coef));
}

CylinderFunction apply(const TransferMatrix& L, const CylinderFunction& phi) {
  if (phi.depth() != L.depth() || phi.alphabet_size() != L.alphabet_size()) {
    throw Error(ErrorKind::depth_mismatch, "apply: phi depth " + std::to_string(phi.depth()) +
                                               " != operator depth " +
                                               std::to_string(L.depth()));
  }
  CylinderFunction out(L.alphabet_size(), L.depth());
  L.apply(phi.values(), out.values());
  return out;
}

CylinderMeasure apply_adjoint(const TransferMatrix& L, const CylinderMeasure& nu) {
  if (nu.depth() != L.depth() || nu.alphabet_size() != L.alphabet_size()) {
    throw Error(ErrorKind::depth_mismatch, "apply_adjoint: measure depth differs");
  }
  std::vector<double> out(L.dim());
  L.apply_adjoint(nu.masses(), out);
  return CylinderMeasure(L.alphabet_size(), L.depth(), std::move(out));
}

SpectralData power_iterate(const TransferMatrix& L, double tol, std::size_t max_iter) {
  PerronPair p = perron_pair(L, PowerIterationOptions{tol, max_iter});
  const std::size_t k = L.alphabet_size();
  const std::size_t d = L.depth();
  // Exact renormalization of the returned iterate.
  const double hmax = *std::max_element(p.right.begin(), p.right.end());
  for (double& x : p.right) x /= hmax;
  const double total = compensated_sum(p.left);
  for (double& x : p.left) x /= total;
  SpectralData s{
      p.rho,
      CylinderFunction(k, d, std::move(p.right)),
      CylinderMeasure(k, d, std::move(p.left)),
      p.right_residual,
      p.left_residual,
      p.iterations,
      p.converged,
      L.tail_bound(),
      p.rho * std::exp(-L.tail_bound()),
      p.rho * std::exp(L.tail_bound()),
  };
  return s;
}

MultiplicityReport leading_multiplicity(const TransferMatrix& L, const SpectralData& spectral,
                                        const MultiplicityOptions& opts) {
  PerronPair p;
  p.rho = spectral.rho;
  p.right.assign(spectral.h.values().begin(), spectral.h.values().end());
  p.left.assign(spectral.nu.masses().begin(), spectral.nu.masses().end());
  p.converged = spectral.converged;
  return leading_multiplicity(L, p, opts);
}

NormalizedPotential normalize_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                        const AprioriWeights& w, std::size_t depth, double tol,
                                        std::size_t max_iter) {
  const TransferMatrix L = build_truncated_operator(f, alphabet, w, depth);
  SpectralData s = power_iterate(L, tol, max_iter);
  if (!s.converged) {
    throw Error(ErrorKind::not_converged,
                "normalize_potential: power iteration did not converge (right residual " +
                    std::to_string(s.right_residual) + ", left residual " +
                    std::to_string(s.left_residual) + ")");
  }
  const std::size_t k = alphabet.size();
  const std::size_t md = std::max(f.depth(), depth + 1);
  const std::vector<double> base = f.tabulate(alphabet, md);
  const std::size_t n = base.size();
  const std::size_t head_drop = ipow(k, md - depth);      // x_1..x_D
  const std::size_t shift_mod = ipow(k, md - 1);          // drop x_1
  const std::size_t shift_drop = ipow(k, md - 1 - depth); // x_2..x_{D+1}
  const double log_rho = std::log(s.rho);
  std::vector<double> table(n);
  for (std::size_t x = 0; x < n; ++x) {
    const double hx = s.h[x / head_drop];
    const double hsx = s.h[(x % shift_mod) / shift_drop];
    table[x] = base[x] + std::log(hx) - std::log(hsx) - log_rho;
  }
  PotentialSpec fbar = PotentialSpec::tabulated(k, md, std::move(table));

  const TransferMatrix Lbar = build_truncated_operator(fbar, alphabet, w, depth);
  std::vector<double> one(Lbar.dim(), 1.0), img(Lbar.dim());
  Lbar.apply(one, img);
  const double residual = simd::scalar_kernels().max_abs_residual(img.data(), one.data(), 1.0,
                                                                  img.size());
  return NormalizedPotential{std::move(fbar), residual, std::move(s), f.tail_bound()};
}

NormProfile iterate_norms(const TransferMatrix& L, const CylinderFunction& phi,
                          std::size_t n_max, FitWindow window, double scale) {
  if (phi.depth() != L.depth() || phi.alphabet_size() != L.alphabet_size()) {
    throw Error(ErrorKind::depth_mismatch, "iterate_norms: phi depth differs from operator");
  }
  if (!(scale > 0.0)) throw Error(ErrorKind::invalid_argument, "scale must be > 0");
  const auto& kern = simd::active();
  NormProfile out;
  out.scale = scale;
  std::vector<double> x(phi.values().begin(), phi.values().end()), y(x.size());
  out.norms.push_back(kern.max_abs(x.data(), x.size()));
  for (std::size_t n = 1; n <= n_max; ++n) {
    L.apply(x, y);
    if (scale != 1.0) kern.scale(y.data(), 1.0 / scale, y.size());
    out.norms.push_back(kern.max_abs(y.data(), y.size()));
    x.swap(y);
  }
  const std::size_t hi = window.hi == 0 ? n_max : std::min(window.hi, n_max);
  std::vector<double> ns, logn, lognorm;
  for (std::size_t n = std::max<std::size_t>(window.lo, 0); n <= hi; ++n) {
    if (!(out.norms[n] > 0.0)) continue;
    ns.push_back(static_cast<double>(n));
    lognorm.push_back(std::log(out.norms[n]));
    if (n >= 1) logn.push_back(std::log(static_cast<double>(n)));
  }
  out.degenerate = lognorm.empty();
  out.exponential = fit_line(ns, lognorm);
  if (!ns.empty() && ns.front() == 0.0) {
    out.polynomial = fit_line(logn, std::span<const double>(lognorm).subspan(1));
  } else {
    out.polynomial = fit_line(logn, lognorm);
  }
  out.rate = std::exp(out.exponential.slope);
  return out;
}

CylinderFunction center(const CylinderFunction& phi, const CylinderMeasure& nu) {
  const double mean = nu.integrate(phi) / nu.total();
  std::vector<double> v(phi.values().begin(), phi.values().end());
  for (double& x : v) x -= mean;
  return CylinderFunction(phi.alphabet_size(), phi.depth(), std::move(v));
}

namespace detail {

std::vector<double> solve_small(std::vector<double> g, std::vector<double> b, std::size_t m) {
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < m; ++r) {
      if (std::abs(g[r * m + col]) > std::abs(g[piv * m + col])) piv = r;
    }
    if (g[piv * m + col] == 0.0) {
      throw Error(ErrorKind::inconsistent, "singular deflation Gram matrix");
    }
    if (piv != col) {
      for (std::size_t c = 0; c < m; ++c) std::swap(g[piv * m + c], g[col * m + c]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < m; ++r) {
      const double f = g[r * m + col] / g[col * m + col];
      for (std::size_t c = col; c < m; ++c) g[r * m + c] -= f * g[col * m + c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(m);
  for (std::size_t i = m; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < m; ++c) s -= g[i * m + c] * x[c];
    x[i] = s / g[i * m + i];
  }
  return x;
}

}  // namespace detail

}  // namespace thermolab
