#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace lfd {

/*
 * Counter-based random number generation (Philox 4x64, 10 rounds).
 *
 * Every random quantity in the library is a pure function of
 * (seed, purpose, a, b, c, draw index). Work items such as "epoch t,
 * null m, draw n" own disjoint substreams, so results do not depend on
 * evaluation order or thread count, and any cell can be regenerated in
 * isolation.
 */
namespace philox {

inline constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                          std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace philox

// Purpose tags separate draw families sharing one user seed.
namespace streams {
inline constexpr std::uint64_t kGradient = 1;  // per-epoch subgradient draws
inline constexpr std::uint64_t kEval = 2;      // Monte-Carlo size/power draws
inline constexpr std::uint64_t kEpochPick = 3; // randomized-epoch t* draws
inline constexpr std::uint64_t kValidate = 4;  // sampler smoke checks
inline constexpr std::uint64_t kDerive = 5;    // per-run seed derivation
}  // namespace streams

// One substream: a bufferless view on the Philox block function.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t purpose,
              std::uint64_t a = 0, std::uint64_t b = 0, std::uint64_t c = 0)
        : key_{seed, purpose}, base_{a, b, c}, seq_(0), pos_(4) {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            buf_ = philox::block({base_[0], base_[1], base_[2], seq_++}, key_);
            pos_ = 0;
        }
        return buf_[pos_++];
    }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; one fresh block per draw.
    double normal() {
        const std::uint64_t w0 = next_u64();
        const std::uint64_t w1 = next_u64();
        const double u1 = static_cast<double>((w0 >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(w1 >> 11) * 0x1.0p-53;        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        return r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Unbiased integer on {0, ..., n-1}.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t lim = (-n) % n;  // 2^64 mod n
        std::uint64_t x = next_u64();
        while (x < lim) x = next_u64();
        return x % n;
    }

private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 3> base_;
    std::uint64_t seq_;
    std::array<std::uint64_t, 4> buf_{};
    int pos_;
};

// Deterministic per-run seeds for harnesses running many independent replicas.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    return philox::block({index, 0, 0, 0}, {master_seed, streams::kDerive})[0];
}

}  // namespace lfd
