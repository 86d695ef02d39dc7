#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cidsim {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// A stream is identified by a 64-bit key and the upper two counter words;
// the lower two words walk through the stream. Two streams with different
// (key, stream id) never overlap, so work can be scheduled in any order
// and still reproduce the same draws.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t key, std::uint32_t stream_hi, std::uint32_t stream_lo)
        : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
          stream_hi_(stream_hi), stream_lo_(stream_lo) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (used_ == 4) {
            refill();
        }
        return buffer_[used_++];
    }

    // Raw bijection, exposed for known-answer tests.
    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;

    void refill() {
        buffer_ = block({static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
                         stream_lo_, stream_hi_},
                        key_);
        ++position_;
        used_ = 0;
    }

    Key key_;
    std::uint32_t stream_hi_;
    std::uint32_t stream_lo_;
    std::uint64_t position_ = 0;
    Counter buffer_{};
    int used_ = 4;
};

using Rng = Philox4x32;

// What a stream is used for. Each purpose gets disjoint counter space.
enum class StreamPurpose : std::uint32_t {
    electorate = 1,
    poll_noise = 2,
    win_probability = 3,
    calibration = 4,
    assignment = 5,
    corpus = 6,
};

// Stream for one (seed, iteration, purpose, sub-index) tuple. `sub` lets one
// iteration own several independent streams of the same purpose (one per
// voting method, for instance).
inline Rng make_stream(std::uint64_t seed, std::uint64_t iteration, StreamPurpose purpose,
                       std::uint32_t sub = 0) {
    const auto hi = (static_cast<std::uint32_t>(purpose) << 24) | (sub & 0xFFFFFFu);
    // Iterations beyond 2^32 fold their high bits into the key.
    const std::uint64_t key = seed ^ ((iteration >> 32) * 0x9E3779B97F4A7C15ull);
    return Rng(key, hi, static_cast<std::uint32_t>(iteration));
}

}  // namespace cidsim
