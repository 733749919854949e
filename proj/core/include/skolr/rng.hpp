#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace skolr {

/// xoshiro256** seeded through SplitMix64. Every draw is defined bit-for-bit by the
/// algorithm below, so streams reproduce across platforms and standard libraries.
class Rng {
public:
    static constexpr std::string_view algorithm = "xoshiro256**/splitmix64";

    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (no cached second variate).
    double normal();
    /// Uniform integer in [0, bound), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t bound);
    /// Independent child stream derived from this generator's seed and a stream id.
    Rng split(std::uint64_t stream) const;

private:
    std::uint64_t seed_;
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace skolr
