#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace curricula {

/// Deterministic random generator (xoshiro256**) with fully serializable
/// state. The standard <random> distributions are implementation-defined,
/// so uniform/normal draws are generated here with fixed algorithms to keep
/// every sequence bit-identical across toolchains.
class Rng {
 public:
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed);
  static Rng from_state(const State& state);

  const State& state() const { return state_; }

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 random bits.
  double next_double();

  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  /// Standard normal via Box-Muller (two uniform draws per call).
  double next_normal();

  /// Fisher-Yates shuffle with a fixed visit order.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.size() < 2) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(values[i], values[j]);
    }
  }

 private:
  Rng() = default;
  State state_{};
};

/// SplitMix64 finalizer; the basis for seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Counter-based seed split: independent sub-seed for (master, index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace curricula
