#pragma once

#include <cstddef>

namespace thermolab::simd {

namespace scalar {
void apply_rows(std::size_t k, std::size_t rows, const double* coef, const double* phi,
                double* out);
void apply_cols(std::size_t k, std::size_t rows, const double* coef, const double* mass,
                double* out);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
double max_abs_residual(const double* a, const double* b, double s, std::size_t n);
double l1_residual(const double* a, const double* b, double s, std::size_t n);
void scale(double* a, double s, std::size_t n);
}  // namespace scalar

#if defined(THERMOLAB_HAVE_AVX2)
namespace avx2 {
void apply_rows(std::size_t k, std::size_t rows, const double* coef, const double* phi,
                double* out);
void apply_cols(std::size_t k, std::size_t rows, const double* coef, const double* mass,
                double* out);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double max_abs(const double* a, std::size_t n);
double max_abs_residual(const double* a, const double* b, double s, std::size_t n);
double l1_residual(const double* a, const double* b, double s, std::size_t n);
void scale(double* a, double s, std::size_t n);
}  // namespace avx2
#endif

}  // namespace thermolab::simd
