#pragma once

#include <cmath>
#include <cstdint>

namespace augscale {

// splitmix64 finalizer, used to derive stream states from (seed, stream_id).
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-seeded PCG32. A stream is addressed by (global_seed, stream_id);
// identical addresses replay the identical sequence, distinct stream_ids get
// independent state and increment. Streams are single-owner: share nothing,
// derive children with split().
class RngStream {
public:
    RngStream(std::uint64_t global_seed, std::uint64_t stream_id)
        : global_seed_(global_seed), stream_id_(stream_id) {
        const std::uint64_t seq = mix64(stream_id ^ mix64(global_seed + 0x632BE59BD9B4E019ULL));
        inc_ = (seq << 1u) | 1u;
        state_ = 0u;
        next_u32();
        state_ += mix64(global_seed ^ mix64(stream_id));
        next_u32();
    }

    std::uint64_t global_seed() const { return global_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    // Child stream for a sub-task; deterministic in (this stream, tag).
    RngStream split(std::uint64_t tag) const {
        return RngStream(global_seed_, mix64(stream_id_ ^ mix64(tag + 0x9E3779B97F4A7C15ULL)));
    }

    std::uint32_t next_u32() {
        const std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        const std::uint32_t xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        const std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
    }

    // Uniform in [0, 1), 24 bits of mantissa.
    float next_float() { return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f; }

    // Uniform in [0, 1), 53 bits.
    double next_double() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        return static_cast<double>(((hi << 32) | lo) >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be >= 1.
    std::uint64_t next_below(std::uint64_t n) {
        // multiply-shift; bias is negligible for the n used here (< 2^32)
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        const std::uint64_t r = (hi << 32) | lo;
        // 128-bit multiply-high
        const unsigned __int128 wide = static_cast<unsigned __int128>(r) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    // Uniform in [lo, hi].
    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Standard normal via Box-Muller; consumes two doubles per call.
    float next_gaussian() {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return static_cast<float>(r * std::cos(6.283185307179586477 * u2));
    }

private:
    std::uint64_t global_seed_;
    std::uint64_t stream_id_;
    std::uint64_t state_;
    std::uint64_t inc_;
};

}  // namespace augscale
