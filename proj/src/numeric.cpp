#include "thermolab/numeric.hpp"

#include <limits>
#include <stdexcept>

#include "thermolab/errors.hpp"

namespace thermolab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::invalid_symbol: return "invalid-symbol";
    case ErrorKind::depth_underflow: return "depth-underflow";
    case ErrorKind::insufficient_depth: return "insufficient-depth";
    case ErrorKind::depth_mismatch: return "depth-mismatch";
    case ErrorKind::stability: return "stability";
    case ErrorKind::capacity: return "capacity";
    case ErrorKind::not_converged: return "not-converged";
    case ErrorKind::zero_mass: return "zero-mass";
    case ErrorKind::inconsistent: return "inconsistent";
    case ErrorKind::parse: return "parse";
  }
  return "unknown";
}

double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::invalid_argument, "fit_line: size mismatch");
  }
  LinearFit fit;
  fit.points = x.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.size() < 2) {
    fit.slope = fit.intercept = fit.r_squared = nan;
    return fit;
  }
  const double n = static_cast<double>(x.size());
  CompensatedSum sx, sy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx.value() / n;
  const double my = sy.value() / n;
  CompensatedSum sxx, sxy, syy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx.value() == 0.0) {
    fit.slope = fit.intercept = fit.r_squared = nan;
    return fit;
  }
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy.value() == 0.0 ? 1.0
                                     : (sxy.value() * sxy.value()) / (sxx.value() * syy.value());
  return fit;
}

double power_tail_sum(std::size_t m, double s, std::size_t exact_terms) {
  if (!(s > 1.0)) {
    throw Error(ErrorKind::invalid_argument, "power_tail_sum needs exponent > 1");
  }
  // Summed from the smallest term up so the large terms land last.
  CompensatedSum acc;
  const std::size_t last = m + exact_terms;
  const double cut = static_cast<double>(last);
  acc.add(std::pow(cut, 1.0 - s) / (s - 1.0));
  for (std::size_t n = last; n > m; --n) {
    acc.add(std::pow(static_cast<double>(n), -s));
  }
  return acc.value();
}

}  // namespace thermolab
