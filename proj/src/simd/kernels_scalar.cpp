#include <cmath>

#include "kernels_impl.hpp"

namespace thermolab::simd::scalar {

void apply_rows(std::size_t k, std::size_t rows, const double* coef, const double* phi,
                double* out) {
  const std::size_t stride = rows / k;
  for (std::size_t w = 0; w < rows; ++w) {
    const std::size_t tail = w / k;
    double acc = coef[w] * phi[tail];
    for (std::size_t a = 1; a < k; ++a) {
      acc += coef[a * rows + w] * phi[a * stride + tail];
    }
    out[w] = acc;
  }
}

void apply_cols(std::size_t k, std::size_t rows, const double* coef, const double* mass,
                double* out) {
  const std::size_t stride = rows / k;
  for (std::size_t a = 0; a < k; ++a) {
    const double* c = coef + a * rows;
    for (std::size_t j = 0; j < stride; ++j) {
      const std::size_t base = j * k;
      double acc = mass[base] * c[base];
      for (std::size_t r = 1; r < k; ++r) {
        acc += mass[base + r] * c[base + r];
      }
      out[a * stride + j] = acc;
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double max_abs(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i]));
  return m;
}

double max_abs_residual(const double* a, const double* b, double s, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i] - s * b[i]));
  return m;
}

double l1_residual(const double* a, const double* b, double s, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::fabs(a[i] - s * b[i]);
  return acc;
}

void scale(double* a, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) a[i] *= s;
}

}  // namespace thermolab::simd::scalar
