#pragma once

#include <cstdint>

namespace weakh::sde {

/// splitmix64 step: advances `state` and returns the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// PCG32 (XSH-RR output on a 64-bit LCG state).
class Pcg32 {
 public:
  Pcg32(std::uint64_t seed, std::uint64_t sequence);

  std::uint32_t next_u32();
  /// Uniform on (0, 1): never returns 0 or 1.
  double next_open01();

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

/// Independent stream for path `index` under `root_seed`.
Pcg32 path_stream(std::uint64_t root_seed, std::uint64_t index);

/// Standard normals by Box-Muller, both values of each pair used in order.
class NormalSource {
 public:
  explicit NormalSource(Pcg32 rng) : rng_(rng) {}
  double next();

 private:
  Pcg32 rng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace weakh::sde
