#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace irof {

/// PCG32 (pcg_setseq_64_xsh_rr_32, O'Neill 2014).
///
/// Every draw used by the engine goes through this generator and the helpers below, never
/// through <random> distributions, whose outputs differ between standard libraries. The same
/// (seed, stream) pair therefore reproduces the same sequence on every platform.
class Pcg32 {
public:
    explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL, std::uint64_t stream = 0xda3e39cb94b95bdbULL)
        : inc_((stream << 1u) | 1u) {
        next();
        state_ += seed;
        next();
    }

    std::uint32_t next() noexcept {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const auto rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    /// Uniform integer in [0, bound), unbiased (Lemire's multiply-shift with rejection).
    std::uint32_t below(std::uint32_t bound) noexcept {
        std::uint64_t m = std::uint64_t{next()} * bound;
        auto low = static_cast<std::uint32_t>(m);
        if (low < bound) {
            const std::uint32_t threshold = (0u - bound) % bound;
            while (low < threshold) {
                m = std::uint64_t{next()} * bound;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32u);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept {
        const std::uint64_t hi = next() >> 5u;
        const std::uint64_t lo = next() >> 6u;
        return static_cast<double>((hi << 26u) | lo) * 0x1.0p-53;
    }

private:
    std::uint64_t state_ = 0;
    std::uint64_t inc_;
};

/// Fisher-Yates shuffle driven by Pcg32::below.
template <typename T>
void shuffle(std::span<T> values, Pcg32& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = rng.below(static_cast<std::uint32_t>(i));
        std::swap(values[i - 1], values[j]);
    }
}

/// The first `count` entries of a uniformly random permutation of 0..n-1.
inline std::vector<std::size_t> random_prefix(std::size_t n, std::size_t count, Pcg32& rng) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = 0; i < count && i < n; ++i) {
        const std::size_t j = i + rng.below(static_cast<std::uint32_t>(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(std::min(count, n));
    return perm;
}

/// Stream identifiers that keep the engine's random draws independent of each other.
enum class RngStream : std::uint64_t {
    SegmentOrder = 1,
    PixelOrder = 2,
    SquareOrder = 3,
    SquareNoise = 4,
    // Orderings of a "random" method under test; distinct from the null-hypothesis baseline.
    MethodSegmentOrder = 17,
    MethodPixelOrder = 18,
    MethodSquareOrder = 19,
};

/// Per-image seed: run seed xor image index.
[[nodiscard]] constexpr std::uint64_t image_seed(std::uint64_t run_seed, std::size_t index) noexcept {
    return run_seed ^ static_cast<std::uint64_t>(index);
}

[[nodiscard]] inline Pcg32 make_rng(std::uint64_t seed, RngStream stream) {
    return Pcg32(seed, static_cast<std::uint64_t>(stream));
}

} // namespace irof
