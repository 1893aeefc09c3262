#ifndef FRACTALMS_PHILOX_HPP
#define FRACTALMS_PHILOX_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace fractalms {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// block index and a 64-bit stream id. Two engines with the same (seed,
/// stream) produce the same sequence on every platform, and distinct
/// streams are independent, so Monte Carlo loops can assign one stream per
/// realization and be reproduced in any order.
class Philox4x32 {
public:
    using result_type = std::uint64_t;
    using block_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
        , stream_(stream)
    {
    }

    result_type operator()()
    {
        if (pos_ == 2) {
            refill();
        }
        const auto lo = static_cast<std::uint64_t>(buffer_[2 * pos_]);
        const auto hi = static_cast<std::uint64_t>(buffer_[2 * pos_ + 1]);
        ++pos_;
        return lo | (hi << 32);
    }

    /// Skip ahead to a block index (each block yields two 64-bit outputs).
    void seek(std::uint64_t block)
    {
        block_ = block;
        pos_ = 2;
    }

    std::uint64_t stream() const { return stream_; }

    /// The raw bijection: ten Philox rounds of `ctr` under `key`.
    static constexpr block_type encrypt(block_type ctr, key_type key)
    {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += kWeylA;
                key[1] += kWeylB;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMulA = 0xD2511F53u;
    static constexpr std::uint32_t kMulB = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;

    void refill()
    {
        const block_type ctr = {static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = encrypt(ctr, key_);
        ++block_;
        pos_ = 0;
    }

    key_type key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    block_type buffer_{};
    int pos_ = 2;
};

/// Uniform double in the open interval (0, 1) from the top 53 bits.
inline double uniform_open01(Philox4x32& rng)
{
    const std::uint64_t bits = rng() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

} // namespace fractalms

#endif // FRACTALMS_PHILOX_HPP
