#ifndef SHECOV_RNG_HPP
#define SHECOV_RNG_HPP

#include <cmath>
#include <cstdint>

namespace shecov {

// Counter-based Gaussian increments: every draw is addressed by
// (master_seed, path, step, mode), so paths are reproducible bit-for-bit and
// embarrassingly parallel, and common-random-number runs reuse increments by
// construction.

/// SplitMix64 finalizer over (master_seed, path) -> per-path seed.
inline std::uint64_t derive_path_seed(std::uint64_t master_seed, std::uint64_t path) {
  std::uint64_t z = master_seed + (path + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Named substream of a master seed (independent pair/sweep streams).
inline std::uint64_t derive_substream_seed(std::uint64_t master_seed,
                                           std::uint64_t stream, std::uint64_t index) {
  return derive_path_seed(derive_path_seed(master_seed, stream), index);
}

namespace philox {

struct Block {
  std::uint32_t x0, x1, x2, x3;
};

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline Block round_once(Block c, std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c.x0;
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c.x2;
  return {static_cast<std::uint32_t>(p1 >> 32) ^ c.x1 ^ k0,
          static_cast<std::uint32_t>(p1),
          static_cast<std::uint32_t>(p0 >> 32) ^ c.x3 ^ k1,
          static_cast<std::uint32_t>(p0)};
}

/// Philox4x32-10: 128-bit counter, 64-bit key, 10 rounds.
inline Block philox4x32_10(Block counter, std::uint32_t key0, std::uint32_t key1) {
  Block c = counter;
  for (int r = 0; r < 10; ++r) {
    c = round_once(c, key0, key1);
    key0 += kWeyl0;
    key1 += kWeyl1;
  }
  return c;
}

} // namespace philox

/// Uniform in (0, 1), never exactly 0 or 1.
inline double uniform_open(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

/// Standard normal draw addressed by (path_seed, step, mode); one Philox
/// block evaluated through Box-Muller.
inline double normal_draw(std::uint64_t path_seed, std::uint64_t step,
                          std::uint32_t mode) {
  const philox::Block out = philox::philox4x32_10(
      {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32),
       mode, 0u},
      static_cast<std::uint32_t>(path_seed),
      static_cast<std::uint32_t>(path_seed >> 32));
  const std::uint64_t a = (static_cast<std::uint64_t>(out.x0) << 32) | out.x1;
  const std::uint64_t b = (static_cast<std::uint64_t>(out.x2) << 32) | out.x3;
  const double u1 = uniform_open(a);
  const double u2 = uniform_open(b);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.28318530717958647692528676655900577 * u2);
}

} // namespace shecov

#endif
