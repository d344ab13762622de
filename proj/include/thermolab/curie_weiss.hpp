#pragma once

// Mean-field (Curie-Weiss) model: magnetization fixed point, generalized
// conformal measures mu_gamma and Monte Carlo checks of their identities.
//
// A configuration of horizon N is summarized by its empirical magnetization
// m_N, which stands in for the Cesaro limit in f(ax) = beta a m(x).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "thermolab/lattice.hpp"

namespace thermolab {

enum class Regime { subcritical, supercritical };

std::string to_string(Regime r);

struct MagnetizationSolution {
  double beta = 0.0;
  std::vector<double> roots;  // sorted; {0} or {-g, 0, g}
  Regime regime = Regime::subcritical;
  double residual = 0.0;      // max |gamma - tanh(beta gamma)| over roots
};

MagnetizationSolution solve_magnetization(double beta, double tol = 1e-15);

struct CWSpectralData {
  double beta = 0.0;
  double gamma = 0.0;
  double eigenvalue = 0.0;  // 2 cosh(beta gamma)
  double plus_mass = 0.0;   // e^{beta gamma} / 2cosh(beta gamma)
  double minus_mass = 0.0;
};

CWSpectralData cw_spectral_data(double beta);

struct McBudget {
  std::size_t horizon = 10000;  // N
  std::size_t count = 100000;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct MagnetizationSample {
  double gamma = 0.0;
  std::size_t horizon = 0;
  std::vector<double> magnetization;  // m_N per sample
  double mean = 0.0;
  double se = 0.0;  // sample standard error of the mean
};

/// i.i.d. +-1 strings with P(+1) = (1 + gamma)/2; returns m_N per string.
MagnetizationSample sample_bernoulli(double gamma, const McBudget& budget);

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;
  double target = 0.0;
  double z = 0.0;           // (estimate - target) / se
  double bias_bound = 0.0;  // allowance for substituting m_N for the limit, 0 if none
  bool pass = false;        // |estimate - target| <= z_limit * se + bias_bound
};

struct ConformalMcReport {
  double beta = 0.0;
  double gamma = 0.0;
  std::size_t horizon = 0;
  std::size_t count = 0;
  McEstimate plus;       // int L 1_[+1] dmu_gamma vs e^{beta gamma}
  McEstimate minus;      // int L 1_[-1] dmu_gamma vs e^{-beta gamma}
  McEstimate total;      // <1, L 1> vs 2 cosh(beta gamma)
  double mass_identity = 0.0;  // max |e^{+-beta gamma} - 2cosh(beta gamma) mu_gamma([+-1])|
  bool underpowered = false;
  bool pass = false;
};

ConformalMcReport verify_generalized_conformal(double beta, const McBudget& budget);

// `center` is the single class of the subcritical regime (gamma = 0).
enum class Phase { plus, minus, center, undetermined };

std::string to_string(Phase p);

/// Mixture t mu_+ + (1-t) mu_-: magnetizations of `count` strings.
std::vector<double> sample_mixture(double beta, double t, const McBudget& budget);

struct PhaseClass {
  Phase phase = Phase::undetermined;
  std::size_t count = 0;
  double fraction = 0.0;
  double fraction_se = 0.0;  // sqrt(q(1-q)/count)
  // in-class ratio L 1_B(x) / 1_B(x) = 2 cosh(beta m_N(x)) vs 2 cosh(beta gamma)
  McEstimate ratio;
};

struct PhaseClassification {
  double beta = 0.0;
  double gamma = 0.0;
  double threshold = 0.0;  // |m_N| must exceed gamma/2 to be assigned a sign
  std::size_t horizon = 0;
  std::size_t count = 0;
  std::size_t undetermined = 0;
  double undetermined_fraction = 0.0;
  std::vector<PhaseClass> classes;  // classes with positive empirical mass
  std::size_t dimension = 0;        // classes.size()
  bool inconclusive = false;        // undetermined fraction above the limit
};

Phase classify(double m, double gamma);

PhaseClassification classify_phase(std::span<const double> magnetization, double beta,
                                   std::size_t horizon, double max_undetermined = 0.05);

struct ClassMarginalCheck {
  std::size_t depth = 0;
  std::size_t in_class = 0;
  CylinderMeasure empirical = CylinderMeasure::uniform(2, 1);  // plus-class depth-D marginal
  double max_z = 0.0;           // against mu_+ cylinder masses
  double mc_residual = 0.0;     // ||L* m - rho m||_1 of the empirical marginal
  double exact_residual = 0.0;  // same for the exact mu_+ marginal
  bool pass = false;
};

/// Draws the mixture with explicit first D symbols, conditions on the plus
/// class and compares its marginal with mu_+.
ClassMarginalCheck conditional_class_check(double beta, double t, std::size_t depth,
                                           const McBudget& budget, double z_limit = 4.0);

}  // namespace thermolab
