#pragma once

// Dyson potential f(x) = sum_{n>=2} x_1 x_n n^{-(2+eps)} on {-1,+1}^N:
// modulus of continuity, Birkhoff-sum flatness and polynomial decay of the
// normalized operator's iterates.
//
// Sequences are symbol vectors over Alphabet::spins() (symbol 0 = -1). Every
// value of f read off a finite sequence is an interval: the couplings past the
// last available coordinate contribute at most tail(len).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "thermolab/lattice.hpp"
#include "thermolab/numeric.hpp"
#include "thermolab/transfer.hpp"

namespace thermolab {

class DysonSpec {
 public:
  // Couplings are tabulated up to `truncation`; f reads at most that many coordinates.
  DysonSpec(double epsilon, std::size_t truncation);

  double epsilon() const noexcept { return epsilon_; }
  std::size_t truncation() const noexcept { return truncation_; }
  double coupling(std::size_t n) const;  // n^{-(2+eps)}, n >= 2
  // sum_{n > m} n^{-(2+eps)}, certified upper bound
  double tail(std::size_t m) const;

  // Value from the first min(len, truncation) coordinates and its tail bound.
  PotentialValue evaluate(std::span<const Symbol> x) const;
  PotentialSpec potential() const { return PotentialSpec::dyson(epsilon_, truncation_); }

 private:
  double epsilon_;
  std::size_t truncation_;
  std::vector<double> couplings_;
  double tail_at_truncation_;
};

// Number of leading coordinates on which x and y agree.
std::size_t agreement(std::span<const Symbol> x, std::span<const Symbol> y);

/// |f(x) - f(y)| as {value, tail}: the exact difference lies within value + tail.
PotentialValue dyson_difference(const DysonSpec& d, std::span<const Symbol> x,
                                std::span<const Symbol> y);

struct ModulusRow {
  std::size_t agree = 0;      // N
  double worst_difference = 0.0;
  double worst_ratio = 0.0;   // (|f(x)-f(y)| + 2 tail) N^eps
  double tail = 0.0;
};

struct ModulusReport {
  double epsilon = 0.0;
  std::size_t pairs = 0;
  std::size_t length = 0;  // coordinates per sampled sequence
  double bound = 20.0;
  std::vector<ModulusRow> rows;
  double worst_ratio = 0.0;
  bool pass = false;
};

/// Random pairs agreeing on exactly the first N coordinates for each N.
ModulusReport modulus_check(double epsilon, std::size_t pair_count,
                            const std::vector<std::size_t>& n_list, std::uint64_t seed,
                            std::size_t threads = 1, std::size_t margin = 2048);

/// sum_{j<n} f(sigma^j(a x)) - f(sigma^j(a y)) for a prefix a of length n.
/// Every term reads the same number of coordinates, len(x) = len(y).
PotentialValue birkhoff_difference(const DysonSpec& d, std::span<const Symbol> prefix,
                                   std::span<const Symbol> x, std::span<const Symbol> y);

// C with sum_{K>=N} 20 K^{-eps} <= C omega~(2^{-N}); needs eps > 1.
double flatness_constant(double epsilon);
// (log(1/r))^{-(eps-1)}
double omega_tilde(double epsilon, double r);

struct FlatnessRow {
  std::size_t agree = 0;
  double bound = 0.0;  // C omega~(2^{-N})
  double worst_discrepancy = 0.0;  // |Birkhoff difference| + tails
  double worst_ratio = 0.0;
};

struct FlatnessReport {
  double epsilon = 0.0;
  std::size_t n = 0;
  std::size_t pairs = 0;
  double constant = 0.0;
  std::vector<FlatnessRow> rows;
  double worst_ratio = 0.0;
  bool pass = false;
};

FlatnessReport birkhoff_flatness_check(double epsilon, std::size_t n, std::size_t pair_count,
                                       std::uint64_t seed,
                                       const std::vector<std::size_t>& agree_list = {1, 2, 4, 8,
                                                                                     16},
                                       std::size_t threads = 1, std::size_t margin = 1024);

struct DecayProfile {
  double epsilon = 0.0;
  std::size_t depth = 0;
  std::size_t truncation = 0;
  double normalization_residual = 0.0;
  double truncation_tail = 0.0;
  std::vector<double> norms;  // ||Lbar^n phi||_inf, n = 0..n_max
  FitWindow window;
  LinearFit fit;              // log norm vs log n over the window
  double slope = 0.0;
  double target_slope = 0.0;  // -(eps - 1)
  double slack = 0.5;
  bool degenerate = false;
  bool pass = false;
};

/// Normalizes the depth-(D+1) truncation at depth D, centers phi (x_1 when
/// absent) and fits the polynomial decay over the window (hi capped at D).
DecayProfile dyson_decay_profile(double epsilon, std::size_t depth, std::size_t n_max,
                                 std::optional<CylinderFunction> phi = std::nullopt,
                                 FitWindow window = {2, 10}, double slack = 0.5,
                                 double tol = 1e-12);

}  // namespace thermolab
