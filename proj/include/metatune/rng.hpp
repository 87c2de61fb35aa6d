#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace metatune {

/// 64-bit FNV-1a hash; stable across platforms and runs.
std::uint64_t stable_hash(std::string_view text) noexcept;

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed of one simulated run. Depends only on its four inputs so scheduling order
/// never changes results.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view space_id,
                          std::string_view hyperconfig_id,
                          std::uint64_t repeat) noexcept;

/// Random source used by every stochastic component.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard.
/// The distributions here are written out instead of using the <random>
/// distribution classes, whose algorithms are implementation defined, so seeded
/// runs are reproducible across standard libraries.
class Rng {
  public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Standard normal deviate (Box-Muller, one value per call).
    double normal();

    // UniformRandomBitGenerator interface, for std::shuffle-style algorithms.
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

}  // namespace metatune
