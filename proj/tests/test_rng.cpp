#include <doctest.h>

#include <cmath>

#include "videoguide/rng.hpp"

using namespace videoguide;

TEST_CASE("philox4x32-10 known answers") {
    using block = Philox4x32::block;
    CHECK(Philox4x32(0, 0)(0) == block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox4x32(~0ull, ~0ull)(~0ull) == block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox4x32(0x299f31d0a4093822ull, 0x0370734413198a2eull)(0x85a308d3243f6a88ull) ==
          block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct") {
    RngStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int i = 0; i < 100; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        CHECK(x != c.normal());
        CHECK(x != d.normal());
    }
    CHECK(a.consumed_blocks() == 50);
}

TEST_CASE("uniform draws stay inside the open unit interval") {
    RngStream r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal draws have unit moments") {
    RngStream r(42);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("normal_like fills the whole latent in order") {
    RngStream a(5), b(5);
    const VideoLatent z = a.normal_like(LatentShape{2, 1, 2, 2});
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == b.normal());
}
