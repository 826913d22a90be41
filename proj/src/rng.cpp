#include "udavi/rng.hpp"

#include <cmath>

namespace udavi {

namespace {

constexpr uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr uint64_t kPhiloxW0 = 0x9E3779B97F4A7C15ULL;
constexpr uint64_t kPhiloxW1 = 0xBB67AE8584CAA73BULL;
constexpr uint64_t kKeyConst = 0x243F6A8885A308D3ULL;

inline uint64_t mulhilo(uint64_t a, uint64_t b, uint64_t* hi) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    *hi = static_cast<uint64_t>(p >> 64);
    return static_cast<uint64_t>(p);
}

inline void philox_round(std::array<uint64_t, 4>& ctr, const std::array<uint64_t, 2>& key) {
    uint64_t hi0, hi1;
    uint64_t lo0 = mulhilo(kPhiloxM0, ctr[0], &hi0);
    uint64_t lo1 = mulhilo(kPhiloxM1, ctr[2], &hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
}

}  // namespace

std::array<uint64_t, 4> SeededRng::philox4x64_10(const std::array<uint64_t, 4>& counter,
                                                 const std::array<uint64_t, 2>& key) {
    std::array<uint64_t, 4> ctr = counter;
    std::array<uint64_t, 2> k = key;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kPhiloxW0;
            k[1] += kPhiloxW1;
        }
        philox_round(ctr, k);
    }
    return ctr;
}

SeededRng::SeededRng(uint64_t seed, uint64_t stream, uint64_t substream, uint32_t purpose)
    : seed_(seed), stream_(stream), substream_(substream), purpose_(purpose) {}

SeededRng SeededRng::derive(RngPurpose purpose, uint64_t stream, uint64_t substream) const {
    return SeededRng(seed_, stream, substream, static_cast<uint32_t>(purpose));
}

void SeededRng::refill() {
    std::array<uint64_t, 4> counter = {position_, stream_, substream_,
                                       static_cast<uint64_t>(purpose_)};
    buffer_ = philox4x64_10(counter, {seed_, kKeyConst});
    ++position_;
    buffer_index_ = 0;
}

uint64_t SeededRng::next_u64() {
    if (buffer_index_ >= 4) refill();
    return buffer_[buffer_index_++];
}

double SeededRng::next_double() {
    return double(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_double_open() {
    return double((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double SeededRng::next_normal() {
    if (cached_normal_valid_) {
        cached_normal_valid_ = 0;
        return cached_normal_;
    }
    double u1 = next_double_open();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    cached_normal_valid_ = 1;
    return r * std::cos(theta);
}

int64_t SeededRng::next_int(int64_t lo, int64_t hi) {
    require(lo <= hi, ErrorKind::Logic, "next_int: empty range");
    uint64_t span = uint64_t(hi - lo) + 1;
    // Multiply-shift bounded draw; bias is < span / 2^64, negligible for the
    // desk-scale ranges used here.
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * span;
    return lo + int64_t(wide >> 64);
}

double SeededRng::next_beta_alpha1(double alpha) {
    require(alpha > 0.0, ErrorKind::Logic, "beta alpha must be positive");
    return std::pow(next_double_open(), 1.0 / alpha);
}

void SeededRng::fill_normal(ImageGrid& g) {
    for (double& v : g.values) v = next_normal();
}

ImageGrid gaussian_sample(SeededRng& rng, int h, int w, int c) {
    require(h > 0 && w > 0 && c > 0, ErrorKind::Logic, "gaussian_sample: shape must be positive");
    ImageGrid g(h, w, c, RangeTag::Unbounded);
    rng.fill_normal(g);
    return g;
}

}  // namespace udavi
