#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace remage {

// SplitMix64 finalizer. Used for the seed tree and for counter-based
// per-vertex landscape generation.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purpose tags for the seed tree. Distinct purposes never share a stream.
enum class Stream : std::uint64_t {
  Landscape = 0x4c414e44,  // "LAND"
  Chain = 0x4348414e,      // "CHAN"
  Marks = 0x4d41524b,      // "MARK"
  Subordinator = 0x5355424f,
  Trap = 0x54524150,
  Lepage = 0x4c455041,
  Labelling = 0x4c41424c,
  Skeleton = 0x534b454c,
  Oracle = 0x4f524143,
};

// Replica seeds are a pure function of (master, purpose, indices...).
inline std::uint64_t derive_seed(std::uint64_t master, Stream purpose,
                                 std::initializer_list<std::uint64_t> path = {}) {
  std::uint64_t h = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(purpose)));
  for (std::uint64_t p : path) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Uniform on the open interval (0,1) from the top 53 bits.
constexpr double open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Counter-based uniform keyed by (seed, index).
constexpr double counter_uniform(std::uint64_t seed, std::uint64_t index) noexcept {
  return open_unit(splitmix64(seed ^ splitmix64(index ^ 0xd1b54a32d192ed03ULL)));
}

// Thin wrapper over mt19937_64 with platform-independent conversions
// (std:: distributions are implementation-defined).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform() { return open_unit(engine_()); }

  // Mean-one exponential by inverse CDF on an open uniform (never log 0).
  double exponential() { return -std::log(uniform()); }

  // Uniform integer in [0, bound) by multiply-shift.
  std::uint64_t below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>(engine_()) * bound) >> 64);
  }

  double normal() {
    // Marsaglia polar; deterministic given the engine stream.
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * open_unit(engine_()) - 1.0;
      v = 2.0 * open_unit(engine_()) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace remage
