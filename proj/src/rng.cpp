#include "videoguide/rng.hpp"

#include <cmath>
#include <numbers>

namespace videoguide {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = std::uint64_t(a) * b;
    hi = std::uint32_t(p >> 32);
    lo = std::uint32_t(p);
}

// 53-bit mantissa, strictly inside (0, 1)
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = ((std::uint64_t(hi) << 32) | lo) >> 11;
    return (double(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::block Philox4x32::operator()(std::uint64_t counter) const {
    block ctr{std::uint32_t(counter), std::uint32_t(counter >> 32), std::uint32_t(stream_),
              std::uint32_t(stream_ >> 32)};
    std::uint32_t k0 = std::uint32_t(key_);
    std::uint32_t k1 = std::uint32_t(key_ >> 32);
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return ctr;
}

double RngStream::uniform() {
    const auto b = gen_(counter_++);
    return to_open_unit(b[0], b[1]);
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const auto b = gen_(counter_++);
    const double u1 = to_open_unit(b[0], b[1]);
    const double u2 = to_open_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

void RngStream::fill_normal(VideoLatent& z) {
    for (double& v : z.values()) v = normal();
}

VideoLatent RngStream::normal_like(const LatentShape& shape) {
    VideoLatent z(shape);
    fill_normal(z);
    return z;
}

}  // namespace videoguide
