#include "metatune/rng.hpp"

#include <cmath>
#include <numbers>

namespace metatune {

std::uint64_t stable_hash(std::string_view text) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view space_id,
                          std::string_view hyperconfig_id,
                          std::uint64_t repeat) noexcept {
    std::uint64_t h = mix64(master_seed);
    h = mix64(h ^ stable_hash(space_id));
    h = mix64(h ^ stable_hash(hyperconfig_id));
    h = mix64(h ^ repeat);
    return h;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    // Rejection sampling removes the modulo bias.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = engine_();
        if (r >= threshold) {
            return r % n;
        }
    }
}

double Rng::normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) {
        u1 = uniform01();
    }
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace metatune
