#pragma once

#include <array>
#include <cstdint>

#include "udavi/grid.hpp"

namespace udavi {

// Stream purposes. Every independent consumer of randomness draws from its own
// (purpose, stream, substream) counter block, so draws for one sample never
// depend on batch composition, worker scheduling, or what other purposes drew.
enum class RngPurpose : uint32_t {
    Generic = 0,
    DataSynth = 1,
    Measure = 2,
    Split = 3,
    BatchDraw = 4,
    TrainBridge = 5,
    TrainDiffuse = 6,
    MemoryInit = 7,
    Inference = 8,
    ParamInit = 9,
    Eval = 10,
};

// Philox 4x64 counter-based generator (10 rounds), bit-compatible with the
// reference implementation. The 256-bit counter is laid out as
// [position, stream, substream, purpose]; the key is (seed, constant).
// Identical (seed, stream identity) + identical call sequence reproduces the
// sequence exactly, independent of any other stream.
class SeededRng {
public:
    explicit SeededRng(uint64_t seed, uint64_t stream = 0, uint64_t substream = 0,
                       uint32_t purpose = 0);

    // A fresh stream at position 0 with the same seed.
    SeededRng derive(RngPurpose purpose, uint64_t stream, uint64_t substream = 0) const;

    uint64_t next_u64();
    // Uniform on [0,1) with 53 random bits.
    double next_double();
    // Uniform on (0,1].
    double next_double_open();
    // Standard normal (Box-Muller, pairs cached).
    double next_normal();
    // Uniform integer in [lo, hi] inclusive.
    int64_t next_int(int64_t lo, int64_t hi);
    // Beta(alpha, 1) via inverse CDF u^(1/alpha).
    double next_beta_alpha1(double alpha);

    void fill_normal(ImageGrid& g);

    uint64_t seed() const { return seed_; }
    // Number of 64-bit words consumed so far on this stream.
    uint64_t stream_position() const { return position_ * 4 - (4 - uint64_t(buffer_index_)); }

    // Raw block function, exposed for known-answer tests.
    static std::array<uint64_t, 4> philox4x64_10(const std::array<uint64_t, 4>& counter,
                                                 const std::array<uint64_t, 2>& key);

private:
    void refill();

    uint64_t seed_;
    uint64_t stream_;
    uint64_t substream_;
    uint32_t purpose_;
    uint64_t position_ = 0;  // blocks generated
    std::array<uint64_t, 4> buffer_{};
    int buffer_index_ = 4;  // empty
    double cached_normal_ = 0.0;
    int cached_normal_valid_ = 0;
};

// i.i.d. standard normal grid; advances rng deterministically.
ImageGrid gaussian_sample(SeededRng& rng, int h, int w, int c);

}  // namespace udavi
