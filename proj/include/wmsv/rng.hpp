#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace wmsv {

// SplitMix64 step, used only to expand seeds into generator state.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// xoshiro256** keyed by (seed, stream, tag). Every simulated path owns its
/// own stream, so results do not depend on how paths are split among workers.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t tag = 0) {
    std::uint64_t sm = seed;
    const std::uint64_t a = splitmix64(sm);
    sm = a ^ (stream * 0xd1b54a32d192ed03ULL);
    const std::uint64_t b = splitmix64(sm);
    sm = b ^ (tag * 0x8cb92ba72f3d8dd7ULL + 0x632be59bd9b4e019ULL);
    for (auto& word : s_) word = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t out = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return out;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  double normal() { return normal_(*this); }

  double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(*this); }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<long>(mean)(*this);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  std::normal_distribution<double> normal_;
};

// Stream tags separating the independent random inputs of one path.
enum StreamTag : std::uint64_t {
  kTagVolatility = 0,
  kTagLogPrice = 1,
  kTagEuler = 2,
  kTagHeston = 3,
};

}  // namespace wmsv
