#include <doctest.h>

#include <cmath>

#include "videoguide/rng.hpp"
#include "videoguide/schedule.hpp"

using namespace videoguide;

TEST_CASE("constant beta schedule") {
    const auto s = build_linear_schedule(0.5, 0.5, 3);
    CHECK(s.alpha_bars() == std::vector<double>{1.0, 0.5, 0.25, 0.125});
}

TEST_CASE("alpha_bar is strictly decreasing") {
    for (const auto& spec : {kSamplerSchedule, kGuideSchedule}) {
        const auto s = build_linear_schedule(spec);
        for (int t = 1; t <= s.total_steps(); ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    }
}

TEST_CASE("alpha_bar_1000 matches an extended precision product") {
    const auto s = build_linear_schedule(1e-4, 2e-2, 1000);
    long double prod = 1.0L;
    for (int t = 1; t <= 1000; ++t) {
        const long double beta = 1e-4L + (2e-2L - 1e-4L) * (t - 1) / 999.0L;
        prod *= 1.0L - beta;
    }
    CHECK(std::abs(s.alpha_bar(1000) - double(prod)) / double(prod) < 1e-12);
    CHECK(s.beta(1) == 1e-4);
    CHECK(s.beta(1000) == 2e-2);
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(build_linear_schedule(0.0, 0.02, 10), DomainError);
    CHECK_THROWS_AS(build_linear_schedule(0.02, 0.01, 10), DomainError);
    CHECK_THROWS_AS(build_linear_schedule(0.01, 1.0, 10), DomainError);
    CHECK_THROWS_AS(build_linear_schedule(0.01, 0.02, 0), DomainError);
    const auto s = build_linear_schedule(kSamplerSchedule);
    CHECK_THROWS_AS(s.alpha_bar(1001), DomainError);
    CHECK_THROWS_AS(s.beta(0), DomainError);
}

TEST_CASE("ddim grids") {
    std::vector<int> identity(1000);
    for (int i = 0; i < 1000; ++i) identity[i] = 1000 - i;
    CHECK(ddim_grid(1000, 1000).timesteps() == identity);
    CHECK(ddim_grid(10, 2).timesteps() == std::vector<int>{10, 5});

    const auto g = ddim_grid(1000, 50);
    REQUIRE(g.size() == 50);
    CHECK(g.front() == 1000);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i - 1] - g[i] == 20);
    CHECK(g[49] == 20);
    CHECK(g.next(49) == 0);
    CHECK(g.next(0) == 980);
    CHECK_THROWS_AS(ddim_grid(10, 11), DomainError);
    CHECK_THROWS_AS(TimestepGrid({5, 5}), DomainError);
}

TEST_CASE("guidance sub-grids") {
    const auto s = build_linear_schedule(kGuideSchedule);
    std::vector<int> dense(25);
    for (int i = 0; i < 25; ++i) dense[i] = 25 - i;
    CHECK(guidance_subgrid(25, 25, s).timesteps() == dense);
    CHECK(guidance_subgrid(1000, 1, s).timesteps() == std::vector<int>{1000});

    const auto g = guidance_subgrid(980, 10, s);
    REQUIRE(g.size() == 10);
    for (int k = 0; k < 10; ++k) CHECK(g[k] == 980 - 39 * k);

    CHECK(guidance_subgrid(7, 11, s).timesteps() == std::vector<int>{7, 6, 5, 4, 3, 2, 1});
    CHECK_THROWS_AS(guidance_subgrid(980, 26, s), DomainError);
    CHECK_THROWS_AS(guidance_subgrid(980, 0, s), DomainError);
}

TEST_CASE("forward diffusion and renoising") {
    const auto s = build_linear_schedule(kSamplerSchedule);
    const auto g = build_linear_schedule(kGuideSchedule);
    RngStream rng(11);
    const LatentShape shape{};
    const VideoLatent z0 = rng.normal_like(shape), eps = rng.normal_like(shape);

    CHECK(renoise_to_domain(z0, 0, s, eps) == z0);
    const VideoLatent zero(shape);
    const VideoLatent pure = forward_diffuse(zero, 400, eps, s);
    for (std::size_t i = 0; i < eps.size(); ++i) CHECK(pure[i] == doctest::Approx(std::sqrt(1 - s.alpha_bar(400)) * eps[i]));

    const VideoLatent mid = forward_diffuse(z0, 500, eps, s);
    const VideoLatent cross = renoise_to_domain(z0, 500, g, eps);
    CHECK(renoise_to_domain(z0, 500, s, eps) == mid);
    for (std::size_t i = 0; i < z0.size(); ++i) {
        const double a = s.alpha_bar(500), b = g.alpha_bar(500);
        CHECK(std::abs(mid[i] - (std::sqrt(a) * z0[i] + std::sqrt(1 - a) * eps[i])) < 1e-12);
        CHECK(std::abs(cross[i] - (std::sqrt(b) * z0[i] + std::sqrt(1 - b) * eps[i])) < 1e-12);
    }
    CHECK(cross != mid);
    CHECK_THROWS_AS(forward_diffuse(z0, 0, eps, s), DomainError);
}
