#pragma once

#include <array>
#include <cstdint>

#include "videoguide/latent.hpp"

namespace videoguide {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// The 64-bit key is the seed; the upper half of the 128-bit counter is the
// stream id, so streams derived from (master seed, run index) never overlap.
class Philox4x32 {
public:
    using block = std::array<std::uint32_t, 4>;

    Philox4x32(std::uint64_t key, std::uint64_t stream) : key_(key), stream_(stream) {}

    block operator()(std::uint64_t counter) const;

private:
    std::uint64_t key_;
    std::uint64_t stream_;
};

// Standard normal draws from a Philox stream via the Box-Muller transform.
// Each counter value yields one 4x32 block -> two uniforms in (0,1) -> two
// normals. Draw order is fully determined by the number of values consumed.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0) : gen_(seed, stream), seed_(seed), stream_(stream) {}

    double normal();
    double uniform();  // in (0, 1)

    void fill_normal(VideoLatent& z);
    VideoLatent normal_like(const LatentShape& shape);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }
    std::uint64_t consumed_blocks() const { return counter_; }

private:
    Philox4x32 gen_;
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace videoguide
