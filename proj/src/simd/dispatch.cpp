#include <atomic>
#include <cstdlib>
#include <string_view>

#include "kernels_impl.hpp"
#include "thermolab/simd/kernels.hpp"

namespace thermolab::simd {

namespace {

constexpr KernelTable kScalar{
    Isa::scalar,        scalar::apply_rows,       scalar::apply_cols,  scalar::dot,
    scalar::sum,        scalar::max_abs,          scalar::max_abs_residual,
    scalar::l1_residual, scalar::scale,
};

#if defined(THERMOLAB_HAVE_AVX2)
constexpr KernelTable kAvx2{
    Isa::avx2,        avx2::apply_rows,       avx2::apply_cols,  avx2::dot,
    avx2::sum,        avx2::max_abs,          avx2::max_abs_residual,
    avx2::l1_residual, avx2::scale,
};
#endif

bool cpu_has_avx2() noexcept {
#if defined(THERMOLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  const char* env = std::getenv("THERMOLAB_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return &kScalar;
  if (const KernelTable* t = avx2_kernels()) return t;
  return &kScalar;
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

const KernelTable& scalar_kernels() noexcept { return kScalar; }

const KernelTable* avx2_kernels() noexcept {
#if defined(THERMOLAB_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &kAvx2 : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) noexcept {
  const KernelTable* t = isa == Isa::avx2 ? avx2_kernels() : &kScalar;
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace thermolab::simd
