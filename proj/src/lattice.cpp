#include "thermolab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "thermolab/errors.hpp"
#include "thermolab/numeric.hpp"

namespace thermolab {

namespace {

std::size_t ipow(std::size_t k, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= k;
  return r;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

// Alphabet -----------------------------------------------------------------

Alphabet::Alphabet(std::vector<double> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "alphabet needs at least 2 symbols");
  }
  std::set<double> seen;
  for (double l : labels_) {
    if (!std::isfinite(l)) throw Error(ErrorKind::invalid_argument, "non-finite label");
    if (!seen.insert(l).second) {
      throw Error(ErrorKind::invalid_argument, "alphabet labels must be pairwise distinct");
    }
  }
}

Alphabet Alphabet::spins() { return Alphabet({-1.0, 1.0}); }

double Alphabet::max_abs_label() const noexcept {
  double m = 0.0;
  for (double l : labels_) m = std::max(m, std::abs(l));
  return m;
}

// AprioriWeights -------------------------------------------------------------

AprioriWeights::AprioriWeights(std::vector<double> weights, bool normalized)
    : w_(std::move(weights)), normalized_(normalized) {
  if (w_.size() < 2) throw Error(ErrorKind::invalid_argument, "need at least 2 weights");
  for (double x : w_) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorKind::invalid_argument, "a priori weights must be strictly positive");
    }
  }
  if (normalized_ && std::abs(total() - 1.0) > 64 * std::numeric_limits<double>::epsilon()) {
    throw Error(ErrorKind::invalid_argument, "normalized a priori weights must sum to 1");
  }
}

AprioriWeights AprioriWeights::uniform(std::size_t k) {
  return AprioriWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)), true);
}

AprioriWeights AprioriWeights::counting(std::size_t k) {
  return AprioriWeights(std::vector<double>(k, 1.0), false);
}

double AprioriWeights::total() const noexcept { return compensated_sum(w_); }

// Words ----------------------------------------------------------------------

std::size_t cylinder_count(std::size_t k, std::size_t depth, std::size_t budget) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < depth; ++i) {
    if (n > budget / k) {
      throw Error(ErrorKind::capacity, "k^D = " + std::to_string(k) + "^" +
                                           std::to_string(depth) + " exceeds the state budget " +
                                           std::to_string(budget));
    }
    n *= k;
  }
  return n;
}

std::size_t word_index(std::span<const Symbol> symbols, std::size_t k) {
  std::size_t index = 0;
  for (Symbol s : symbols) {
    if (s >= k) {
      throw Error(ErrorKind::invalid_symbol,
                  "symbol " + std::to_string(s) + " >= alphabet size " + std::to_string(k));
    }
    index = index * k + s;
  }
  return index;
}

std::size_t word_index(const Word& word, std::size_t k) { return word_index(word.symbols(), k); }

Word decode_word(std::size_t index, std::size_t depth, std::size_t k) {
  std::vector<Symbol> s(depth);
  for (std::size_t i = depth; i-- > 0;) {
    s[i] = static_cast<Symbol>(index % k);
    index /= k;
  }
  if (index != 0) throw Error(ErrorKind::invalid_argument, "index out of range for depth");
  return Word(std::move(s));
}

// CylinderFunction -------------------------------------------------------------

CylinderFunction::CylinderFunction(std::size_t k, std::size_t depth)
    : k_(k), depth_(depth), values_(cylinder_count(k, depth), 0.0) {}

CylinderFunction::CylinderFunction(std::size_t k, std::size_t depth, std::vector<double> values)
    : k_(k), depth_(depth), values_(std::move(values)) {
  if (values_.size() != cylinder_count(k, depth)) {
    throw Error(ErrorKind::invalid_argument, "cylinder function length must be k^D");
  }
}

CylinderFunction CylinderFunction::constant(std::size_t k, std::size_t depth, double c) {
  return CylinderFunction(k, depth, std::vector<double>(cylinder_count(k, depth), c));
}

CylinderFunction CylinderFunction::coordinate(const Alphabet& alphabet, std::size_t depth,
                                              std::size_t i) {
  if (i < 1 || i > depth) throw Error(ErrorKind::insufficient_depth, "coordinate beyond depth");
  const std::size_t k = alphabet.size();
  const std::size_t n = cylinder_count(k, depth);
  const std::size_t block = ipow(k, depth - i);
  std::vector<double> v(n);
  for (std::size_t w = 0; w < n; ++w) v[w] = alphabet.label(static_cast<Symbol>((w / block) % k));
  return CylinderFunction(k, depth, std::move(v));
}

CylinderFunction CylinderFunction::indicator(std::size_t k, std::size_t depth,
                                             const Word& prefix) {
  if (prefix.depth() > depth) throw Error(ErrorKind::insufficient_depth, "prefix deeper than D");
  CylinderFunction f(k, depth);
  const std::size_t block = ipow(k, depth - prefix.depth());
  const std::size_t start = word_index(prefix, k) * block;
  std::fill_n(f.values_.begin() + static_cast<std::ptrdiff_t>(start), block, 1.0);
  return f;
}

// CylinderMeasure --------------------------------------------------------------

CylinderMeasure::CylinderMeasure(std::size_t k, std::size_t depth, std::vector<double> masses)
    : k_(k), depth_(depth), masses_(std::move(masses)) {
  if (masses_.size() != cylinder_count(k, depth)) {
    throw Error(ErrorKind::invalid_argument, "cylinder measure length must be k^D");
  }
  for (double m : masses_) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw Error(ErrorKind::invalid_argument, "cylinder masses must be finite and >= 0");
    }
  }
  total_ = compensated_sum(masses_);
}

CylinderMeasure CylinderMeasure::uniform(std::size_t k, std::size_t depth) {
  const std::size_t n = cylinder_count(k, depth);
  return CylinderMeasure(k, depth, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

CylinderMeasure CylinderMeasure::product(std::span<const double> marginal, std::size_t depth) {
  const std::size_t k = marginal.size();
  const std::size_t n = cylinder_count(k, depth);
  std::vector<double> m(n, 1.0);
  for (std::size_t w = 0; w < n; ++w) {
    std::size_t rest = w;
    double p = 1.0;
    for (std::size_t i = 0; i < depth; ++i) {
      p *= marginal[rest % k];
      rest /= k;
    }
    m[w] = p;
  }
  return CylinderMeasure(k, depth, std::move(m));
}

CylinderMeasure CylinderMeasure::product(const AprioriWeights& w, std::size_t depth) {
  std::vector<double> p(w.values().begin(), w.values().end());
  const double t = w.total();
  for (double& x : p) x /= t;
  return product(p, depth);
}

CylinderMeasure CylinderMeasure::normalized() const {
  if (!(total_ > 0.0)) throw Error(ErrorKind::zero_mass, "cannot normalize a zero measure");
  std::vector<double> m(masses_);
  for (double& x : m) x /= total_;
  return CylinderMeasure(k_, depth_, std::move(m));
}

double CylinderMeasure::integrate(const CylinderFunction& phi) const {
  if (phi.alphabet_size() != k_ || phi.depth() > depth_) {
    throw Error(ErrorKind::depth_mismatch, "integrand deeper than the measure");
  }
  const std::size_t block = ipow(k_, depth_ - phi.depth());
  CompensatedSum acc;
  for (std::size_t w = 0; w < masses_.size(); ++w) acc += masses_[w] * phi[w / block];
  return acc.value();
}

double CylinderMeasure::mass_of(const Word& prefix) const {
  if (prefix.depth() > depth_) throw Error(ErrorKind::insufficient_depth, "prefix deeper than D");
  const std::size_t block = ipow(k_, depth_ - prefix.depth());
  const std::size_t start = word_index(prefix, k_) * block;
  return compensated_sum(std::span<const double>(masses_).subspan(start, block));
}

CylinderMeasure project_measure(const CylinderMeasure& m) {
  if (m.depth() < 2) throw Error(ErrorKind::depth_underflow, "cannot project a depth-1 measure");
  const std::size_t k = m.alphabet_size();
  const std::size_t n = m.size() / k;
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    CompensatedSum acc;
    for (std::size_t a = 0; a < k; ++a) acc += m[j * k + a];
    out[j] = acc.value();
  }
  return CylinderMeasure(k, m.depth() - 1, std::move(out));
}

CylinderMeasure project_to_depth(const CylinderMeasure& m, std::size_t depth) {
  if (depth < 1 || depth > m.depth()) {
    throw Error(ErrorKind::depth_underflow, "projection target depth out of range");
  }
  CylinderMeasure out = m;
  while (out.depth() > depth) out = project_measure(out);
  return out;
}

// Potentials -------------------------------------------------------------------

PotentialSpec PotentialSpec::constant(double c) { return PotentialSpec(ConstantPotential{c}); }

PotentialSpec PotentialSpec::tabulated(std::size_t k, std::size_t depth, std::vector<double> table) {
  if (depth < 1) throw Error(ErrorKind::invalid_argument, "tabulated depth must be >= 1");
  if (table.size() != cylinder_count(k, depth)) {
    throw Error(ErrorKind::invalid_argument, "tabulated potential needs k^m entries");
  }
  for (double v : table) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "non-finite potential value");
  }
  return PotentialSpec(TabulatedPotential{k, depth, std::move(table)});
}

PotentialSpec PotentialSpec::ising(const Alphabet& alphabet, double coupling) {
  const std::size_t k = alphabet.size();
  std::vector<double> t(k * k);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      t[a * k + b] = coupling * alphabet.label(static_cast<Symbol>(a)) *
                     alphabet.label(static_cast<Symbol>(b));
    }
  }
  return tabulated(k, 2, std::move(t));
}

PotentialSpec PotentialSpec::first_coordinate(std::vector<double> g) {
  const std::size_t k = g.size();
  return tabulated(k, 1, std::move(g));
}

PotentialSpec PotentialSpec::dyson(double epsilon, std::size_t truncation) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "dyson epsilon must be > 0");
  if (truncation < 2) throw Error(ErrorKind::invalid_argument, "dyson truncation must be >= 2");
  DysonPotential d;
  d.epsilon = epsilon;
  d.truncation = truncation;
  d.couplings.assign(truncation + 1, 0.0);
  for (std::size_t n = 2; n <= truncation; ++n) {
    d.couplings[n] = std::pow(static_cast<double>(n), -(2.0 + epsilon));
  }
  d.tail = power_tail_sum(truncation, 2.0 + epsilon);
  return PotentialSpec(std::move(d));
}

PotentialSpec PotentialSpec::mean_field(double beta, double gamma) {
  if (!(beta > 0.0)) throw Error(ErrorKind::invalid_argument, "mean-field beta must be > 0");
  if (!(gamma >= -1.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "magnetization must lie in [-1, 1]");
  }
  return PotentialSpec(MeanFieldPotential{beta, gamma});
}

std::string PotentialSpec::kind_name() const {
  return std::visit(overloaded{[](const ConstantPotential&) { return std::string("constant"); },
                               [](const TabulatedPotential&) { return std::string("tabulated"); },
                               [](const DysonPotential&) { return std::string("dyson"); },
                               [](const MeanFieldPotential&) { return std::string("mean-field"); }},
                    kind_);
}

std::size_t PotentialSpec::depth() const noexcept {
  return std::visit(overloaded{[](const ConstantPotential&) -> std::size_t { return 1; },
                               [](const TabulatedPotential& t) { return t.depth; },
                               [](const DysonPotential& d) { return d.truncation; },
                               [](const MeanFieldPotential&) -> std::size_t { return 1; }},
                    kind_);
}

double PotentialSpec::tail_bound() const noexcept {
  if (const auto* d = std::get_if<DysonPotential>(&kind_)) return d->tail;
  return 0.0;
}

double PotentialSpec::sup_norm(const Alphabet& alphabet) const {
  const double lab = alphabet.max_abs_label();
  return std::visit(
      overloaded{[](const ConstantPotential& c) { return std::abs(c.value); },
                 [](const TabulatedPotential& t) {
                   double m = 0.0;
                   for (double v : t.table) m = std::max(m, std::abs(v));
                   return m;
                 },
                 [lab](const DysonPotential& d) {
                   CompensatedSum s;
                   for (std::size_t n = d.truncation; n >= 2; --n) s += d.couplings[n];
                   s += d.tail;
                   return lab * lab * s.value();
                 },
                 [lab](const MeanFieldPotential& m) { return m.beta * std::abs(m.gamma) * lab; }},
      kind_);
}

double PotentialSpec::variation(std::size_t n) const {
  return std::visit(
      overloaded{
          [](const ConstantPotential&) { return 0.0; },
          [n](const TabulatedPotential& t) {
            if (n >= t.depth) return 0.0;
            const std::size_t k = t.alphabet_size;
            const std::size_t block = ipow(k, t.depth - n);
            double worst = 0.0;
            for (std::size_t start = 0; start < t.table.size(); start += block) {
              const auto first = t.table.begin() + static_cast<std::ptrdiff_t>(start);
              const auto [lo, hi] =
                  std::minmax_element(first, first + static_cast<std::ptrdiff_t>(block));
              worst = std::max(worst, *hi - *lo);
            }
            return worst;
          },
          [n](const DysonPotential& d) {
            // labels in [-1, 1]; coordinates beyond n may flip sign
            const std::size_t from = std::max<std::size_t>(n, 1);
            return 2.0 * power_tail_sum(from, 2.0 + d.epsilon);
          },
          [n](const MeanFieldPotential& m) { return n >= 1 ? 0.0 : 2.0 * m.beta * std::abs(m.gamma); },
      },
      kind_);
}

std::vector<double> PotentialSpec::tabulate(const Alphabet& alphabet, std::size_t d) const {
  if (d < depth()) {
    throw Error(ErrorKind::insufficient_depth, "tabulation depth " + std::to_string(d) +
                                                   " below potential depth " +
                                                   std::to_string(depth()));
  }
  const std::size_t k = alphabet.size();
  const std::size_t n = cylinder_count(k, d);
  std::vector<double> out(n);
  std::vector<Symbol> word(d, 0);
  for (std::size_t w = 0; w < n; ++w) {
    std::size_t rest = w;
    for (std::size_t i = d; i-- > 0;) {
      word[i] = static_cast<Symbol>(rest % k);
      rest /= k;
    }
    out[w] = evaluate_potential(*this, alphabet, word).value;
  }
  return out;
}

PotentialSpec PotentialSpec::resolve_for_boundary(const Alphabet& alphabet,
                                                  const Word& boundary) const {
  const auto* mf = std::get_if<MeanFieldPotential>(&kind_);
  if (mf == nullptr || boundary.depth() == 0) return *this;
  CompensatedSum s;
  for (Symbol a : boundary.symbols()) s += alphabet.label(a);
  const double mean = s.value();
  const double sign = mean > 0.0 ? 1.0 : (mean < 0.0 ? -1.0 : 0.0);
  return PotentialSpec(MeanFieldPotential{mf->beta, sign * std::abs(mf->gamma)});
}

PotentialValue evaluate_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                  std::span<const Symbol> word) {
  const std::size_t k = alphabet.size();
  if (word.size() < f.depth()) {
    throw Error(ErrorKind::insufficient_depth, "word depth " + std::to_string(word.size()) +
                                                   " below potential depth " +
                                                   std::to_string(f.depth()));
  }
  for (Symbol s : word) {
    if (s >= k) throw Error(ErrorKind::invalid_symbol, "symbol outside the alphabet");
  }
  return std::visit(
      overloaded{
          [](const ConstantPotential& c) { return PotentialValue{c.value, 0.0}; },
          [&](const TabulatedPotential& t) {
            if (t.alphabet_size != k) {
              throw Error(ErrorKind::invalid_argument, "table does not match the alphabet size");
            }
            return PotentialValue{t.table[word_index(word.first(t.depth), k)], 0.0};
          },
          [&](const DysonPotential& d) {
            if (alphabet.max_abs_label() > 1.0) {
              throw Error(ErrorKind::invalid_argument, "dyson potential needs labels in [-1, 1]");
            }
            // smallest couplings first
            CompensatedSum s;
            for (std::size_t n = d.truncation; n >= 2; --n) {
              s += d.couplings[n] * alphabet.label(word[n - 1]);
            }
            return PotentialValue{alphabet.label(word[0]) * s.value(), d.tail};
          },
          [&](const MeanFieldPotential& m) {
            return PotentialValue{m.beta * alphabet.label(word[0]) * m.gamma, 0.0};
          },
      },
      f.kind());
}

PotentialValue evaluate_potential(const PotentialSpec& f, const Alphabet& alphabet,
                                  const Word& word) {
  return evaluate_potential(f, alphabet, word.symbols());
}

double variation(const PotentialSpec& f, std::size_t n) { return f.variation(n); }

}  // namespace thermolab
