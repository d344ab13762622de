#pragma once

// Truncated transfer operator (L phi)(x) = sum_a w(a) e^{f(ax)} phi(ax) on
// depth-D cylinder functions, and its maximal spectral data.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "thermolab/errors.hpp"
#include "thermolab/lattice.hpp"
#include "thermolab/numeric.hpp"
#include "thermolab/simd/kernels.hpp"

namespace thermolab {

/// Depth-D truncation of the transfer operator. Row w (an output word) has k
/// entries: column a*k^{D-1} + w/k (the word a w_1 ... w_{D-1}) with
/// coefficient w(a) exp(f(a w_1 ... w_{m-1})).
class TransferMatrix {
 public:
  TransferMatrix(std::size_t k, std::size_t depth, std::size_t potential_depth,
                 double tail_bound, std::vector<double> coefficients);

  std::size_t alphabet_size() const noexcept { return k_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t dim() const noexcept { return rows_; }
  std::size_t potential_depth() const noexcept { return potential_depth_; }
  // Every coefficient of the exact operator lies within a factor e^{+-tail}.
  double tail_bound() const noexcept { return tail_bound_; }

  // Structure-of-arrays: coefficients()[a * dim() + row].
  std::span<const double> coefficients() const noexcept { return coef_; }
  double coefficient(std::size_t row, Symbol a) const { return coef_[a * rows_ + row]; }
  std::size_t column(std::size_t row, Symbol a) const noexcept {
    return a * (rows_ / k_) + row / k_;
  }

  void apply(std::span<const double> in, std::span<double> out) const;
  void apply_adjoint(std::span<const double> in, std::span<double> out) const;

  // Same sparsity, every coefficient multiplied by s > 0.
  TransferMatrix scaled(double s) const;

 private:
  std::size_t k_;
  std::size_t depth_;
  std::size_t rows_;
  std::size_t potential_depth_;
  double tail_bound_;
  std::vector<double> coef_;
};

TransferMatrix build_truncated_operator(const PotentialSpec& f, const Alphabet& alphabet,
                                        const AprioriWeights& w, std::size_t depth,
                                        std::size_t state_budget = kDefaultStateBudget);

CylinderFunction apply(const TransferMatrix& L, const CylinderFunction& phi);
CylinderMeasure apply_adjoint(const TransferMatrix& L, const CylinderMeasure& nu);

template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> in, std::span<double> out) {
  { op.dim() } -> std::convertible_to<std::size_t>;
  op.apply(in, out);
  op.apply_adjoint(in, out);
};

/// Right and left Perron vectors from power iteration. `right` has max 1 and
/// `left` total 1.
struct PerronPair {
  double rho = 0.0;
  double rho_right = 0.0;  // last right quotient max(L h)
  double rho_left = 0.0;   // last left quotient sum(nu L)
  std::vector<double> right;
  std::vector<double> left;
  double right_residual = 0.0;  // ||L h - rho h||_inf
  double left_residual = 0.0;   // ||nu L - rho nu||_1
  std::size_t iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  double tol = 1e-12;
  std::size_t max_iter = 200000;
};

template <LinearOperator Op>
PerronPair perron_pair(const Op& op, const PowerIterationOptions& opts = {});

struct SpectralData {
  double rho = 0.0;
  CylinderFunction h;
  CylinderMeasure nu;
  double right_residual = 0.0;
  double left_residual = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Truncation bookkeeping: the exact operator's spectral radius lies in
  // [rho_lower, rho_upper] when tail_bound > 0.
  double tail_bound = 0.0;
  double rho_lower = 0.0;
  double rho_upper = 0.0;
};

SpectralData power_iterate(const TransferMatrix& L, double tol = 1e-12,
                           std::size_t max_iter = 200000);

struct MultiplicityReport {
  std::vector<double> candidates;  // eigenvalue estimates within tol*rho of rho
  std::vector<double> residuals;   // ||L v - rho v||_2 / ||v||_2 for each candidate
  std::size_t multiplicity = 0;
  double second_modulus = 0.0;  // largest |lambda| left after deflating the rho-eigenspace
  double gap = 0.0;             // rho - second_modulus
};

struct MultiplicityOptions {
  double tol = 1e-8;
  std::size_t max_iter = 5000;
  std::size_t max_vectors = 8;
  std::uint64_t seed = 0x5eed;
};

/// Geometric multiplicity of rho by deflated power iteration: found right
/// vectors H and left vectors V define the oblique projector I - H (V^T H)^{-1} V^T,
/// and the deflated iteration either lands on another rho-eigenvector (counted)
/// or exposes the next eigenvalue modulus (the gap estimate).
template <LinearOperator Op>
MultiplicityReport leading_multiplicity(const Op& op, const PerronPair& perron,
                                        const MultiplicityOptions& opts = {});

MultiplicityReport leading_multiplicity(const TransferMatrix& L, const SpectralData& spectral,
                                        const MultiplicityOptions& opts = {});

struct NormalizedPotential {
  PotentialSpec potential;   // tabulated at depth max(m, D+1)
  double residual = 0.0;     // ||L_fbar 1 - 1||_inf at depth D
  SpectralData spectral;     // spectral data of the original operator
  double source_tail = 0.0;  // truncation tail of the original potential
};

/// fbar = f + log h - log h o sigma - log rho. Refuses non-converged spectral data.
NormalizedPotential normalize_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                        const AprioriWeights& w, std::size_t depth,
                                        double tol = 1e-12, std::size_t max_iter = 200000);

struct FitWindow {
  std::size_t lo = 1;
  std::size_t hi = 0;  // 0 = up to n_max
};

struct NormProfile {
  std::vector<double> norms;  // ||L^n phi||_inf (divided by scale^n when rescaled)
  double scale = 1.0;
  LinearFit exponential;      // log norm vs n
  LinearFit polynomial;       // log norm vs log n
  double rate = 0.0;          // exp(exponential.slope)
  bool degenerate = false;    // every fitted norm was zero
};

NormProfile iterate_norms(const TransferMatrix& L, const CylinderFunction& phi,
                          std::size_t n_max, FitWindow window = {}, double scale = 1.0);

/// phi - <phi, nu> with nu normalized.
CylinderFunction center(const CylinderFunction& phi, const CylinderMeasure& nu);

// ---------------------------------------------------------------------------

namespace detail {

// Solve G x = b for a small dense row-major G (partial pivoting).
std::vector<double> solve_small(std::vector<double> g, std::vector<double> b, std::size_t m);

inline double norm2(std::span<const double> v) {
  const auto& k = simd::active();
  return std::sqrt(k.dot(v.data(), v.data(), v.size()));
}

// ||y - rho x||_2
inline double residual2(std::span<const double> y, std::span<const double> x, double rho) {
  CompensatedSum s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - rho * x[i];
    s += d * d;
  }
  return std::sqrt(s.value());
}

}  // namespace detail

template <LinearOperator Op>
PerronPair perron_pair(const Op& op, const PowerIterationOptions& opts) {
  const std::size_t n = op.dim();
  const auto& kern = simd::active();
  PerronPair out;
  std::vector<double> h(n, 1.0), nu(n, 1.0 / static_cast<double>(n));
  std::vector<double> y(n), z(n);
  for (std::size_t it = 1; it <= opts.max_iter; ++it) {
    op.apply(h, y);
    op.apply_adjoint(nu, z);
    const double qr = kern.max_abs(y.data(), n);
    const double ql = kern.sum(z.data(), n);
    if (!(qr > 0.0) || !(ql > 0.0)) {
      throw Error(ErrorKind::not_converged, "power iteration collapsed to zero");
    }
    const double rho = std::sqrt(qr * ql);
    out.rho = rho;
    out.rho_right = qr;
    out.rho_left = ql;
    out.right_residual = kern.max_abs_residual(y.data(), h.data(), rho, n);
    out.left_residual = kern.l1_residual(z.data(), nu.data(), rho, n);
    out.iterations = it;
    if (out.right_residual < opts.tol && out.left_residual < opts.tol) {
      out.converged = true;
      break;
    }
    kern.scale(y.data(), 1.0 / qr, n);
    kern.scale(z.data(), 1.0 / ql, n);
    h.swap(y);
    nu.swap(z);
  }
  out.right = std::move(h);
  out.left = std::move(nu);
  return out;
}

template <LinearOperator Op>
MultiplicityReport leading_multiplicity(const Op& op, const PerronPair& perron,
                                        const MultiplicityOptions& opts) {
  const std::size_t n = op.dim();
  const auto& kern = simd::active();
  const double rho = perron.rho;
  MultiplicityReport report;
  if (!perron.converged) return report;

  std::vector<std::vector<double>> right{perron.right};
  std::vector<std::vector<double>> left{perron.left};
  report.candidates.push_back(rho);
  {
    std::vector<double> y(n);
    op.apply(perron.right, y);
    report.residuals.push_back(kern.max_abs_residual(y.data(), perron.right.data(), rho, n) /
                               kern.max_abs(perron.right.data(), n));
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  // x <- x - A (B^T A)^{-1} B^T x
  auto project = [&](std::vector<double>& x, const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b) {
    const std::size_t m = a.size();
    std::vector<double> g(m * m), rhs(m);
    for (std::size_t i = 0; i < m; ++i) {
      rhs[i] = kern.dot(b[i].data(), x.data(), n);
      for (std::size_t j = 0; j < m; ++j) g[i * m + j] = kern.dot(b[i].data(), a[j].data(), n);
    }
    const std::vector<double> c = detail::solve_small(std::move(g), std::move(rhs), m);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t t = 0; t < n; ++t) x[t] -= c[j] * a[j][t];
    }
  };

  // Deflated iteration on one side. Returns (unit vector, modulus estimate,
  // residual ||A x - rho x||_2) where A is op or its adjoint.
  struct Probe {
    std::vector<double> v;
    double modulus = 0.0;
    double residual = 0.0;
    double eigenvalue = 0.0;
  };
  auto probe = [&](bool adjoint) {
    const auto& a = adjoint ? left : right;
    const auto& b = adjoint ? right : left;
    Probe p;
    std::vector<double> x(n), y(n);
    for (double& v : x) v = uni(rng);
    project(x, a, b);
    double nx = detail::norm2(x);
    if (nx == 0.0) return p;
    kern.scale(x.data(), 1.0 / nx, n);
    std::vector<double> log_ratios;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
      if (adjoint) op.apply_adjoint(x, y); else op.apply(x, y);
      const double residual = detail::residual2(y, x, rho);
      p.eigenvalue = kern.dot(y.data(), x.data(), n);
      p.residual = residual;
      if (residual < opts.tol * rho) {
        p.v = x;
        p.modulus = rho;
        return p;
      }
      const double before = detail::norm2(y);
      project(y, a, b);
      const double ny = detail::norm2(y);
      // Near-total cancellation means the deflated part has died out and what
      // is left is roundoff along the vectors already found.
      if (!(ny > 1e-300) || ny < 1e-12 * before) {
        p.modulus = 0.0;
        return p;
      }
      log_ratios.push_back(std::log(ny));
      kern.scale(y.data(), 1.0 / ny, n);
      x.swap(y);
    }
    const std::size_t w = std::min<std::size_t>(log_ratios.size(), 64);
    CompensatedSum s;
    for (std::size_t i = log_ratios.size() - w; i < log_ratios.size(); ++i) s += log_ratios[i];
    p.modulus = std::exp(s.value() / static_cast<double>(w));
    p.v = x;
    return p;
  };

  report.second_modulus = 0.0;
  while (right.size() < opts.max_vectors) {
    Probe r = probe(false);
    if (r.modulus != rho) {
      report.second_modulus = r.modulus;
      break;
    }
    Probe l = probe(true);
    if (l.modulus != rho) {
      // Right vector found without a matching left one: not semisimple at this
      // resolution. Count it and stop deflating.
      report.candidates.push_back(r.eigenvalue);
      report.residuals.push_back(r.residual);
      report.second_modulus = rho;
      right.push_back(std::move(r.v));
      break;
    }
    report.candidates.push_back(r.eigenvalue);
    report.residuals.push_back(r.residual);
    right.push_back(std::move(r.v));
    left.push_back(std::move(l.v));
  }
  report.multiplicity = report.candidates.size();
  report.gap = rho - report.second_modulus;
  return report;
}

}  // namespace thermolab
