#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace vlab {

// Avalanche mixer used to derive per-path seeds from the master seed.
// Ensembles are a pure function of (master_seed, path_index), independent
// of scheduling.
inline std::uint64_t mix64(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic Gaussian stream: mt19937_64 + Box-Muller. The generator
// sequence is fully specified by the standard, so identical seeds yield
// bit-identical draws on every platform.
class GaussianRng {
 public:
  explicit GaussianRng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    // (0, 1]
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace vlab
