#pragma once

// Diagnostics on conformal measures: support lower bounds, the H1 domination
// constant, conditional measures, specification kernels and entropy rates.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thermolab/lattice.hpp"
#include "thermolab/numeric.hpp"
#include "thermolab/transfer.hpp"

namespace thermolab {

struct SupportReport {
  std::size_t depth = 0;
  double min_mass = 0.0;
  double ratio = 0.0;  // min_C nu(C) / lower_bound(C)
  Word worst;          // cylinder attaining the ratio (or the first zero-mass cylinder)
  double base = 0.0;   // min e^f / rho
  bool pass = false;
};

/// Every depth-n cylinder must carry at least (min e^f / rho)^n prod w(c_i).
SupportReport check_full_support(const CylinderMeasure& nu, const PotentialSpec& f,
                                 const Alphabet& alphabet, const AprioriWeights& w, double rho,
                                 std::size_t n, double tol = 1e-9);

struct H1Report {
  double max_ratio = 0.0;  // max over C = (a, C') of w(a) nu(C') / nu(C)
  double bound = 0.0;      // rho e^{||f||}
  Word worst;
  std::size_t untestable = 0;  // zero-mass cylinders skipped
  bool pass = false;
};

H1Report check_h1(const CylinderMeasure& nu, const AprioriWeights& w, const PotentialSpec& f,
                  const Alphabet& alphabet, double rho, double tol = 1e-9);

struct ConditionalMeasure {
  CylinderMeasure measure;  // nu(. & B) / nu(B)
  double mass = 0.0;        // nu(B)
  double residual = 0.0;    // ||L* nu_B - rho nu_B||_1
  bool invariant = false;   // residual <= tol
};

ConditionalMeasure conditional_conformal(const CylinderMeasure& nu, const CylinderFunction& indicator,
                                         const TransferMatrix& L, double rho, double tol = 1e-9);

struct KernelQuery {
  std::size_t n = 1;
  Word event;     // depth <= n, constrains the first coordinates of the volume
  Word boundary;  // extended periodically beyond its depth
};

struct KernelValue {
  double value = 0.0;
  double lower = 0.0;  // truncation-tail interval, equal to value when the tail is 0
  double upper = 0.0;
};

/// L^n(1_A)(y) / L^n(1)(y) at the periodic boundary configuration y.
KernelValue specification_kernel(const PotentialSpec& f, const Alphabet& alphabet,
                                 const AprioriWeights& w, const KernelQuery& q);

/// Kernel values of every depth-j event (index order) for one boundary.
std::vector<KernelValue> kernel_distribution(const PotentialSpec& f, const Alphabet& alphabet,
                                             const AprioriWeights& w, std::size_t n,
                                             std::size_t event_depth, const Word& boundary);

struct SensitivityTable {
  std::vector<std::size_t> n_list;
  std::vector<std::vector<KernelValue>> values;  // values[i][b] for n_list[i], boundary b
  std::vector<double> discrepancy;               // max pairwise |gamma_b - gamma_b'| per n
  double final_discrepancy = 0.0;
  bool monotone_decay = false;
};

SensitivityTable boundary_sensitivity_scan(const PotentialSpec& f, const Alphabet& alphabet,
                                           const AprioriWeights& w, const Word& event,
                                           const std::vector<Word>& boundaries,
                                           const std::vector<std::size_t>& n_list);

struct ConsistencyReport {
  double max_error = 0.0;  // max_A |nu(A) - sum_C nu(C) gamma_n(A | c_{n+1..D})|
  std::size_t events = 0;
};

/// Boundary average of the depth-n kernel over the depth-D cylinders of nu.
/// Needs D - n >= depth(f) - 1 so the boundary word fixes the kernel.
ConsistencyReport kernel_consistency(const PotentialSpec& f, const Alphabet& alphabet,
                                     const AprioriWeights& w, const CylinderMeasure& nu,
                                     std::size_t n, std::size_t event_depth);

struct EntropyReport {
  std::vector<std::size_t> n;
  std::vector<double> relative_entropy;  // H(mu | p^n) on depth-n cylinders
  LinearFit fit;                         // over the three largest n
  double rate = 0.0;                     // -slope
};

/// Relative entropy rate from marginals of increasing depth. Consecutive
/// marginals must be projection consistent to `tol` (inconsistent error).
EntropyReport relative_entropy_rate(const std::vector<CylinderMeasure>& marginals,
                                    const AprioriWeights& w, double tol = 1e-12);

/// Same, projecting a single deep measure to each depth in n_list.
EntropyReport relative_entropy_rate(const CylinderMeasure& mu, const AprioriWeights& w,
                                    const std::vector<std::size_t>& n_list);

struct PressureCheck {
  double log_rho = 0.0;
  double entropy = 0.0;        // closed form -mu(fbar)
  double entropy_slope = 0.0;  // least-squares estimate from marginals
  double energy = 0.0;         // mu(f)
  double defect = 0.0;         // entropy + energy - log_rho
  double invariance_residual = 0.0;  // ||mu o sigma^{-1} - mu||_1 at depth D
  bool pass = false;
};

/// Equilibrium measure mu = h nu of a potential with depth <= D, checked
/// against the variational identity h(mu) + mu(f) = log rho.
PressureCheck pressure_check(const PotentialSpec& f, const Alphabet& alphabet,
                             const AprioriWeights& w, std::size_t depth, double tol = 1e-6);

}  // namespace thermolab
