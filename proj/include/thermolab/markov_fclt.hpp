#pragma once

// The Markov chain of a normalized potential (L 1 = 1), the Poisson equation
// (I - L) v = phi, asymptotic variance and functional CLT simulation.
//
// The chain state is the depth-D window x; one step draws a new first symbol a
// with probability w(a) e^{fbar(a x)} and moves to a x_1 ... x_{D-1}. Its
// transition operator is the normalized transfer operator, so the stationary
// law is the operator's conformal measure.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "thermolab/numeric.hpp"
#include "thermolab/random.hpp"
#include "thermolab/transfer.hpp"

namespace thermolab {

class ChainSpec {
 public:
  // `op` must be normalized within tol; the stationary law is computed from it.
  explicit ChainSpec(TransferMatrix op, double tol = 1e-9);

  const TransferMatrix& op() const noexcept { return op_; }
  const CylinderMeasure& stationary() const noexcept { return stationary_; }
  double normalization_residual() const noexcept { return residual_; }
  std::size_t alphabet_size() const noexcept { return op_.alphabet_size(); }
  std::size_t depth() const noexcept { return op_.depth(); }
  std::size_t states() const noexcept { return op_.dim(); }

  // Renormalized transition probability of symbol a from window `state`.
  double transition(std::size_t state, Symbol a) const;

  std::size_t draw_start(rng::Stream& s) const;
  // Returns the new window index; `symbol` receives the drawn symbol.
  std::size_t next(std::size_t state, rng::Stream& s, Symbol& symbol) const;

 private:
  TransferMatrix op_;
  CylinderMeasure stationary_;
  double residual_ = 0.0;
  std::vector<double> cdf_;        // k per state, last entry 1
  std::vector<double> start_cdf_;  // over states
};

/// Normalized operator of fbar at depth D. Refuses fbar with ||L 1 - 1|| > tol.
ChainSpec make_chain(const PotentialSpec& fbar, const Alphabet& alphabet,
                     const AprioriWeights& w, std::size_t depth, double tol = 1e-9);

class ChainState {
 public:
  ChainState(const ChainSpec& spec, std::uint64_t seed, std::uint64_t replica = 0);

  std::size_t window() const noexcept { return state_; }
  Symbol step();

 private:
  const ChainSpec* spec_;
  rng::Stream stream_;
  std::size_t state_;
};

/// (S_0, ..., S_n) with S_j = sum_{i<=j} phi(window after step i).
std::vector<double> sample_path(ChainState& chain, const CylinderFunction& phi, std::size_t n);

struct PoissonSolution {
  CylinderFunction v = CylinderFunction(2, 1);
  std::size_t terms = 0;          // v = sum_{j<terms} L^j phi
  double phi_mean = 0.0;          // subtracted before solving
  std::vector<double> norms;      // ||L^j phi||_inf, j <= terms
  double tail_bound = 0.0;        // ||L^terms phi||_inf
  double residual = 0.0;          // ||(I - L) v - phi||_inf
  double rate = 0.0;              // fitted geometric decay of the norms
  bool converged = false;
};

/// Partial sums of the Neumann series until ||L^j phi|| < tol or j = n_max.
PoissonSolution solve_poisson(const TransferMatrix& L, const CylinderMeasure& nu,
                              const CylinderFunction& phi, std::size_t n_max, double tol = 1e-14);

struct VarianceReport {
  double poisson = 0.0;      // nu(v^2) - nu((Lv)^2)
  double literal = 0.0;      // nu(v^2) - nu(L(v^2)), vanishes for stationary nu
  double green_kubo = 0.0;   // nu(phi^2) + 2 sum_{j=1}^{N} nu(phi L^j phi)
  std::size_t gk_terms = 0;
  double tail = 0.0;         // allowance for the truncated series
  bool agree = false;        // |poisson - green_kubo| <= tail
  bool degenerate = false;   // sigma^2 <= 0 up to roundoff: phi is a coboundary
};

VarianceReport asymptotic_variance(const TransferMatrix& L, const CylinderMeasure& nu,
                                   const PoissonSolution& sol, const CylinderFunction& phi);

struct CovarianceCheck {
  double s = 0.0;
  double t = 0.0;
  double value = 0.0;
  double se = 0.0;
  double target = 0.0;  // min(s, t)
  bool pass = false;
};

struct VariancePoint {
  std::size_t steps = 0;  // m = floor(n t)
  double value = 0.0;     // Var(S_m) / m
  double se = 0.0;
};

struct FcltOptions {
  std::size_t horizon = 10000;
  std::size_t replicas = 2000;
  std::vector<double> t_grid{0.25, 0.5, 0.75, 1.0};
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::ostream* trace = nullptr;  // binary path of replica 0
};

struct FcltReport {
  std::size_t replicas = 0;
  std::size_t horizon = 0;
  double sigma2 = 0.0;
  double phi_mean = 0.0;
  std::vector<double> t_grid;
  std::vector<double> y1;  // Y_n(1) per replica, replica order
  double ks_statistic = 0.0;
  double ks_critical = 0.0;  // 1% asymptotic critical value
  double ks_pvalue = 0.0;
  double var_y1 = 0.0;
  double var_se = 0.0;
  std::vector<CovarianceCheck> covariance;
  std::vector<VariancePoint> variance_curve;  // in units of S_m, not Y
  bool underpowered = false;
  bool ks_pass = false;
  bool var_pass = false;
  bool cov_pass = false;
  bool pass = false;
};

FcltReport fclt_experiment(const ChainSpec& chain, const CylinderFunction& phi, double sigma2,
                           const FcltOptions& opts);

/// Kolmogorov-Smirnov distance of a sample to the standard normal law.
double ks_normal(std::vector<double> sample);
/// Asymptotic Kolmogorov tail P(K > lambda).
double kolmogorov_tail(double lambda);

struct CesaroReport {
  std::vector<double> terms;     // <v, L^n 1>_nu, n < N
  std::vector<double> averages;  // c_N
  double ratio = 0.0;            // last term / first term
  bool vanishing = false;        // ratio < 1e-6
};

/// c_N = (1/N) sum_{n<N} <v, L^n 1>_nu for the operator divided by `scale`.
CesaroReport cesaro_mass_diagnostic(const TransferMatrix& L, const CylinderMeasure& nu,
                                    const CylinderFunction& v, std::size_t n,
                                    double scale = 1.0);

}  // namespace thermolab
