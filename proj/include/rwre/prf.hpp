#pragma once

// Counter-based pseudorandom machinery: Philox4x32-10 block function,
// a stream generator built on it, and the hand-rolled variate samplers
// used throughout the simulator. Everything here is a pure function of
// (key, counter), which is what makes quenched re-runs and worker-count
// independent reductions possible.
//
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace rwre {

namespace detail {

inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;

inline void philox_round(std::array<std::uint32_t, 4>& ctr,
                         std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::array<std::uint32_t, 4> next = {
      static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
      static_cast<std::uint32_t>(p1),
      static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
      static_cast<std::uint32_t>(p0)};
  ctr = next;
  key[0] += kPhiloxW0;
  key[1] += kPhiloxW1;
}

}  // namespace detail

/// Philox4x32-10: maps a 128-bit counter and 64-bit key to 128 pseudorandom
/// bits. Stateless; the basis for every random stream in the project.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint64_t key) {
  std::array<std::uint32_t, 2> k = {static_cast<std::uint32_t>(key),
                                    static_cast<std::uint32_t>(key >> 32)};
  for (int round = 0; round < 10; ++round) detail::philox_round(ctr, k);
  return ctr;
}

/// A random stream: Philox keyed once, counter incremented per block.
/// Distinct (key, stream_id) pairs yield statistically independent streams.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() : CounterRng(0, 0) {}

  /// Stream derived from a master seed and two id words. Ids are fed
  /// through one Philox invocation so that related ids (0,1,2,...) still
  /// land on unrelated keys.
  CounterRng(std::uint64_t master_seed, std::uint64_t id_lo,
             std::uint64_t id_hi = 0) {
    const auto seeded = philox4x32(
        {static_cast<std::uint32_t>(id_lo), static_cast<std::uint32_t>(id_lo >> 32),
         static_cast<std::uint32_t>(id_hi), static_cast<std::uint32_t>(id_hi >> 32)},
        master_seed);
    key_ = (static_cast<std::uint64_t>(seeded[1]) << 32) | seeded[0];
    block_ = {seeded[2], seeded[3], 0, 0};
    index_ = 4;  // force refill on first draw
  }

  std::uint32_t next_u32() {
    if (index_ == 4) refill();
    return out_[index_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform on (0,1): 53 random bits, never exactly 0 or 1.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    // Modulo bias is < n / 2^64; negligible for the n used here (n <= 255
    // generators, trajectory counts), and bit-stable across platforms.
    return next_u64() % n;
  }

  double exponential() { return -std::log(uniform01()); }

  /// Standard normal via the polar (Marsaglia) method.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    have_spare_ = true;
    return u * factor;
  }

  /// Gamma(alpha, 1) via Marsaglia-Tsang, boosted for alpha < 1.
  double gamma(double alpha) {
    if (alpha < 1.0) {
      const double u = uniform01();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Dirichlet(alpha) as normalized independent Gamma draws.
  std::vector<double> dirichlet(const std::vector<double>& alpha) {
    std::vector<double> g(alpha.size());
    double total = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      g[i] = gamma(alpha[i]);
      total += g[i];
    }
    for (double& v : g) v /= total;
    return g;
  }

 private:
  void refill() {
    out_ = philox4x32(block_, key_);
    index_ = 0;
    // 128-bit counter increment
    if (++block_[0] == 0 && ++block_[1] == 0 && ++block_[2] == 0) ++block_[3];
  }

  std::uint64_t key_ = 0;
  std::array<std::uint32_t, 4> block_{};
  std::array<std::uint32_t, 4> out_{};
  int index_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// FNV-1a over bytes; used for config hashing and provenance only.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace rwre
