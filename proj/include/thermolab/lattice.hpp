#pragma once

// Alphabet, word indexing, cylinder containers and potentials.
//
// Words are encoded most-significant-first: the depth-D word (w_1, ..., w_D)
// over k symbols has index sum_i w_i k^{D-i}. Prepending symbol a to a depth-D
// word and dropping its last symbol is then a*k^{D-1} + index/k.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace thermolab {

using Symbol = std::uint32_t;

class Alphabet {
 public:
  explicit Alphabet(std::vector<double> labels);

  // {-1, +1}
  static Alphabet spins();

  std::size_t size() const noexcept { return labels_.size(); }
  double label(Symbol a) const { return labels_.at(a); }
  std::span<const double> labels() const noexcept { return labels_; }
  double max_abs_label() const noexcept;

 private:
  std::vector<double> labels_;
};

class AprioriWeights {
 public:
  AprioriWeights(std::vector<double> weights, bool normalized);

  static AprioriWeights uniform(std::size_t k);
  static AprioriWeights counting(std::size_t k);

  std::size_t size() const noexcept { return w_.size(); }
  double operator[](Symbol a) const { return w_.at(a); }
  std::span<const double> values() const noexcept { return w_; }
  bool normalized() const noexcept { return normalized_; }
  double total() const noexcept;

 private:
  std::vector<double> w_;
  bool normalized_;
};

class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {}

  std::size_t depth() const noexcept { return symbols_.size(); }
  Symbol operator[](std::size_t i) const { return symbols_.at(i); }
  std::span<const Symbol> symbols() const noexcept { return symbols_; }

  bool operator==(const Word&) const = default;

 private:
  std::vector<Symbol> symbols_;
};

// Default ceiling on k^D used by containers and operators (2^26 doubles).
inline constexpr std::size_t kDefaultStateBudget = std::size_t{1} << 26;

/// k^depth, throwing a capacity error if it exceeds `budget`.
std::size_t cylinder_count(std::size_t k, std::size_t depth,
                           std::size_t budget = kDefaultStateBudget);

std::size_t word_index(const Word& word, std::size_t k);
std::size_t word_index(std::span<const Symbol> symbols, std::size_t k);
Word decode_word(std::size_t index, std::size_t depth, std::size_t k);

class CylinderFunction {
 public:
  CylinderFunction(std::size_t k, std::size_t depth);
  CylinderFunction(std::size_t k, std::size_t depth, std::vector<double> values);

  static CylinderFunction constant(std::size_t k, std::size_t depth, double c);
  // x -> label(x_i), 1-based coordinate i <= depth
  static CylinderFunction coordinate(const Alphabet& alphabet, std::size_t depth,
                                     std::size_t i = 1);
  // 1 on the cylinder fixed by `prefix`, 0 elsewhere
  static CylinderFunction indicator(std::size_t k, std::size_t depth, const Word& prefix);

  std::size_t alphabet_size() const noexcept { return k_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

 private:
  std::size_t k_;
  std::size_t depth_;
  std::vector<double> values_;
};

class CylinderMeasure {
 public:
  CylinderMeasure(std::size_t k, std::size_t depth, std::vector<double> masses);

  static CylinderMeasure uniform(std::size_t k, std::size_t depth);
  // Product of the (normalized) a priori weights.
  static CylinderMeasure product(const AprioriWeights& w, std::size_t depth);
  static CylinderMeasure product(std::span<const double> marginal, std::size_t depth);

  std::size_t alphabet_size() const noexcept { return k_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t size() const noexcept { return masses_.size(); }
  std::span<const double> masses() const noexcept { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }
  double total() const noexcept { return total_; }

  // Masses divided by the total.
  CylinderMeasure normalized() const;
  // Integral of a cylinder function of the same or smaller depth.
  double integrate(const CylinderFunction& phi) const;
  // Mass of the cylinder fixed by `prefix` (depth <= this depth).
  double mass_of(const Word& prefix) const;

 private:
  std::size_t k_;
  std::size_t depth_;
  std::vector<double> masses_;
  double total_;
};

/// Marginal on the first depth-1 coordinates. Sums run over the last symbol in
/// increasing order, and the total is recomputed with compensated summation.
CylinderMeasure project_measure(const CylinderMeasure& m);

/// Repeated projection down to `depth`.
CylinderMeasure project_to_depth(const CylinderMeasure& m, std::size_t depth);

// Potentials ------------------------------------------------------------

struct ConstantPotential {
  double value = 0.0;
};

// f(x) = table[word_index(x_1..x_depth)]
struct TabulatedPotential {
  std::size_t alphabet_size = 2;
  std::size_t depth = 1;
  std::vector<double> table;
};

// f(x) = sum_{n=2}^{m} x_1 x_n n^{-(2+eps)}, with the neglected tail carried
// as a certified bound.
struct DysonPotential {
  double epsilon = 1.0;
  std::size_t truncation = 2;
  std::vector<double> couplings;  // couplings[n] = n^{-(2+eps)}, n < truncation + 1
  double tail = 0.0;              // sum_{n > truncation} n^{-(2+eps)}, upper bound
};

// Curie-Weiss potential under a fixed magnetization class: f(ax) = beta * a * gamma.
struct MeanFieldPotential {
  double beta = 1.0;
  double gamma = 0.0;
};

struct PotentialValue {
  double value = 0.0;
  double tail_bound = 0.0;  // |f(x) - value| <= tail_bound for every x in the cylinder
};

class PotentialSpec {
 public:
  using Kind = std::variant<ConstantPotential, TabulatedPotential, DysonPotential,
                            MeanFieldPotential>;

  static PotentialSpec constant(double c);
  static PotentialSpec tabulated(std::size_t k, std::size_t depth, std::vector<double> table);
  // f(x) = J x_1 x_2 over the alphabet labels
  static PotentialSpec ising(const Alphabet& alphabet, double coupling);
  // f(x) = g(x_1)
  static PotentialSpec first_coordinate(std::vector<double> g);
  static PotentialSpec dyson(double epsilon, std::size_t truncation);
  static PotentialSpec mean_field(double beta, double gamma);

  const Kind& kind() const noexcept { return kind_; }
  std::string kind_name() const;

  // Number of leading coordinates the (truncated) potential reads.
  std::size_t depth() const noexcept;
  // Certified bound on |f_exact - f_truncated| (0 unless dyson).
  double tail_bound() const noexcept;
  // Upper bound on sup |f| for the exact potential.
  double sup_norm(const Alphabet& alphabet) const;
  // Upper bound on sup{|f(x)-f(y)| : x_i = y_i, i <= n}.
  double variation(std::size_t n) const;

  // Values at depth `depth() <= d`, indexed by word_index of x_1..x_d.
  std::vector<double> tabulate(const Alphabet& alphabet, std::size_t d) const;

  // Mean-field only: the potential under the magnetization class of the
  // boundary (sign of the boundary's mean label). Other kinds return *this.
  PotentialSpec resolve_for_boundary(const Alphabet& alphabet, const Word& boundary) const;

 private:
  explicit PotentialSpec(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

PotentialValue evaluate_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                  std::span<const Symbol> word);
PotentialValue evaluate_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                  const Word& word);

double variation(const PotentialSpec& f, std::size_t n);

}  // namespace thermolab
