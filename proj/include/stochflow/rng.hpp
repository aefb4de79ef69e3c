#pragma once

/// @file rng.hpp
/// @brief Counter-based Philox4x32-10 generator with per-path streams.
///
/// Every path owns a stream addressed by (master seed, stream id). The key is
/// the master seed; the 128-bit counter is (stream id, block index). Drawing
/// from one stream never advances another, so paths can be simulated in any
/// order or on any number of workers and still see identical numbers.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace stochflow {

inline constexpr std::string_view kRngAlgorithmId = "philox4x32-10/box-muller";

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32 bijection with 10 rounds (Salmon et al. 2011).
constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
    constexpr std::uint32_t kMulA = 0xD2511F53u;
    constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kWeylA;
        key[1] += kWeylB;
    }
    return ctr;
}

/// Identifies one independent random stream.
struct RandomSource {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;

    RandomSource with_stream(std::uint64_t id) const { return {master_seed, id}; }
};

/// Sequential view of a single stream: uniforms and standard normals.
class PhiloxStream {
public:
    explicit PhiloxStream(RandomSource src)
        : key_{static_cast<std::uint32_t>(src.master_seed), static_cast<std::uint32_t>(src.master_seed >> 32)},
          stream_(src.stream_id) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        if (cached_words_ < 2) refill();
        const std::uint64_t hi = words_[4 - cached_words_];
        const std::uint64_t lo = words_[5 - cached_words_];
        cached_words_ -= 2;
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }

    /// Standard normal via Box–Muller; normals come in pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    std::uint64_t blocks_used() const { return block_; }

private:
    void refill() {
        const PhiloxBlock ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                              static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        words_ = philox4x32_10(ctr, key_);
        ++block_;
        cached_words_ = 4;
    }

    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxBlock words_{};
    int cached_words_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace stochflow
