#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace thermolab {

/// Neumaier-compensated accumulator. Adding terms in a fixed order gives a
/// deterministic result with error independent of the number of terms.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

/// Compensated sum in increasing index order.
double compensated_sum(std::span<const double> values) noexcept;

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y ~ intercept + slope * x. Needs at least two
/// distinct abscissae; otherwise returns a fit with points < 2 and NaN slope.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Tail sum sum_{n > m} n^{-s} for s > 1: the first `exact_terms` terms are
/// summed directly and the rest bounded by the integral from m + exact_terms.
/// The result is an upper bound that is tight to ~1e-10 relative.
double power_tail_sum(std::size_t m, double s, std::size_t exact_terms = 100000);

}  // namespace thermolab
