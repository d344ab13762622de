#pragma once

// Deterministic random streams.
//
// Every random quantity is drawn from a std::mt19937_64 seeded with
// stream_seed(master, module, replica): FNV-1a of the module name, combined
// with the master seed and the replica index through splitmix64. Streams
// never depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace thermolab::rng {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t stream_seed(std::uint64_t master, std::string_view module,
                                 std::uint64_t replica) noexcept {
  return splitmix64(splitmix64(master ^ fnv1a(module)) + replica);
}

class Stream {
 public:
  using result_type = std::mt19937_64::result_type;

  Stream(std::uint64_t master, std::string_view module, std::uint64_t replica)
      : eng_(stream_seed(master, module, replica)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return eng_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() noexcept { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace thermolab::rng
