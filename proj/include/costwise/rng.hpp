#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace costwise {

/// SplitMix64 finalizer. Used to derive independent substream seeds from a
/// base seed and a tuple of counters, so every (experiment, n, m, trial) owns
/// its own stream regardless of the order in which trials are scheduled.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a, for turning experiment labels into counters.
constexpr std::uint64_t hash_label(std::string_view label) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t substream_seed(std::uint64_t base,
                                       std::initializer_list<std::uint64_t> counters) noexcept {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t c : counters) s = splitmix64(s ^ splitmix64(c + 0x632be59bd9b4e019ULL));
    return s;
}

/// A seeded random stream. Conversions to reals are done by hand rather than
/// through <random> distributions, whose output is implementation-defined.
class Stream {
public:
    explicit Stream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t bits() { return engine_(); }

    /// Uniform on the open interval (0,1); never returns 0 or 1.
    double uniform_open() {
        constexpr double scale = 0x1.0p-53;
        return (static_cast<double>(engine_() >> 11) + 0.5) * scale;
    }

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

    /// Uniform index in {0, ..., count-1}.
    std::size_t index(std::size_t count) {
        // Lemire's multiply-shift without the rejection step; bias is < count / 2^64.
        const unsigned __int128 product =
            static_cast<unsigned __int128>(engine_()) * static_cast<unsigned __int128>(count);
        return static_cast<std::size_t>(product >> 64);
    }

private:
    std::mt19937_64 engine_;
};

} // namespace costwise
