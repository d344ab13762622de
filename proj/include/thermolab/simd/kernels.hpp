#pragma once

// Data-parallel inner loops of the transfer operator.
//
// Every kernel has a scalar reference implementation and, where the CPU
// supports it, an AVX2 variant. The active table is chosen once at startup
// (override with THERMOLAB_SIMD=scalar|avx2|auto) and can be swapped in tests.
//
// Coefficient layout is structure-of-arrays: coef[a * rows + w] is the weight
// of symbol a in output row w, and row w reads input index a * (rows / k) + w / k.

#include <cstddef>
#include <string_view>

namespace thermolab::simd {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa) noexcept;

struct KernelTable {
  Isa isa;

  // out[w] = sum_{a<k} coef[a*rows + w] * phi[a*(rows/k) + w/k], summed in
  // increasing a. Bit-identical across variants.
  void (*apply_rows)(std::size_t k, std::size_t rows, const double* coef, const double* phi,
                     double* out);

  // Adjoint of apply_rows: out[a*(rows/k) + j] = sum_{r<k} mass[j*k + r] *
  // coef[a*rows + j*k + r], summed in increasing r. Bit-identical across variants.
  void (*apply_cols)(std::size_t k, std::size_t rows, const double* coef, const double* mass,
                     double* out);

  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max_abs)(const double* a, std::size_t n);
  // max_i |a_i - s * b_i|
  double (*max_abs_residual)(const double* a, const double* b, double s, std::size_t n);
  // sum_i |a_i - s * b_i|
  double (*l1_residual)(const double* a, const double* b, double s, std::size_t n);
  // a_i *= s
  void (*scale)(double* a, double s, std::size_t n);
};

const KernelTable& scalar_kernels() noexcept;

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels() noexcept;

// The table used by the library.
const KernelTable& active() noexcept;

// Selects the active table. Returns false (and leaves the selection
// unchanged) when the requested ISA is unavailable.
bool select(Isa isa) noexcept;

}  // namespace thermolab::simd
