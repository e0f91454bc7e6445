#pragma once

// Seed derivation and a replayable random stream.
//
// Every stochastic object in the library draws from its own RngStream whose
// seed is derived from the master seed by a stable 64-bit mixing hash, so a
// path's noise does not depend on thread count or evaluation order.
// The engine is std::mt19937_64 (bit-exact across platforms); the
// uniform/normal/exponential transforms are written out here because the
// standard distributions are implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace snsm {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// seed_child = mix64(parent ^ mix64(index)).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return mix64(parent ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

/// Sub-stream identifiers for one path.
enum class Stream : std::uint64_t {
    wiener = 1,
    bridge = 2,
    jumps = 3,
    chain = 4,
    initial = 5,
    audit = 6,
};

inline std::uint64_t stream_seed(std::uint64_t path_seed, Stream s) noexcept {
    return derive_seed(path_seed, static_cast<std::uint64_t>(s));
}

class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double theta = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace snsm
