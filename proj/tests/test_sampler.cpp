#include <doctest.h>

#include <cmath>

#include "videoguide/metrics.hpp"
#include "videoguide/rng.hpp"
#include "videoguide/sampler.hpp"

using namespace videoguide;

namespace {

double max_abs_diff(const VideoLatent& a, const VideoLatent& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("guidance mode text form") {
    CHECK(GuidanceMode::cfg(7.5).str() == "cfg:7.5");
    CHECK(GuidanceMode::cfg_plus_plus(0.8).str() == "cfg++:0.8");
    CHECK(GuidanceMode::parse("cfg++:0.8") == GuidanceMode::cfg_plus_plus(0.8));
    CHECK(GuidanceMode::parse("cfg:7.5") == GuidanceMode::cfg(7.5));
    CHECK_THROWS_AS(GuidanceMode::parse("cfg++:1.5"), DomainError);
    CHECK_THROWS_AS(GuidanceMode::parse("cfg:abc"), DomainError);
    CHECK_THROWS_AS(GuidanceMode::parse("pag:1"), DomainError);
    CHECK_THROWS_AS(GuidanceMode::cfg(-1).validate(), DomainError);
}

TEST_CASE("tweedie denoising") {
    RngStream rng(1);
    const LatentShape s{};
    const VideoLatent z0 = rng.normal_like(s), eps = rng.normal_like(s);
    CHECK(tweedie_denoise(z0, eps, 1.0) == z0);
    const double ab = 0.37;
    const VideoLatent zt = linear_combination(std::sqrt(ab), z0, std::sqrt(1 - ab), eps);
    CHECK(max_abs_diff(tweedie_denoise(zt, eps, ab), z0) < 1e-10);
    const VideoLatent out = tweedie_denoise(z0, eps, ab);
    for (std::size_t i = 0; i < s.size(); ++i)
        CHECK(std::abs(out[i] - (z0[i] - std::sqrt(1 - ab) * eps[i]) / std::sqrt(ab)) < 1e-12);
    CHECK_THROWS_AS(tweedie_denoise(z0, eps, 0.0), DomainError);
}

TEST_CASE("classifier-free combination") {
    RngStream rng(2);
    const LatentShape s{};
    const VideoLatent c = rng.normal_like(s), n = rng.normal_like(s);
    CHECK(cfg_combine(n, n, 7.5) == n);
    CHECK(max_abs_diff(cfg_combine(c, n, 1.0), c) < 1e-15);
    const VideoLatent g = cfg_combine(c, n, 7.5);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(g[i] - (n[i] + 7.5 * (c[i] - n[i]))) < 1e-12);
}

TEST_CASE("ddim step") {
    RngStream rng(3);
    const LatentShape s{};
    const VideoLatent z0 = rng.normal_like(s), eps = rng.normal_like(s);
    CHECK(ddim_step(z0, eps, 1.0) == z0);
    const VideoLatent pure = ddim_step(VideoLatent(s), eps, 0.2);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(pure[i] == doctest::Approx(std::sqrt(0.8) * eps[i]));
}

TEST_CASE("cfg and cfg++ coincide when both predictions agree") {
    const LatentShape s{};
    const auto p = MixtureVideoPrior::gaussian(s, 1.0, 0.4, 0.3);
    const PriorDenoiser d(p);
    RngStream rng(4);
    const VideoLatent z = rng.normal_like(s);
    for (double w : {0.3, 0.8}) {
        const auto a = guided_eps(d, z, 0.5, GuidanceMode::cfg(w), Condition::prompt(1));
        const auto b = guided_eps(d, z, 0.5, GuidanceMode::cfg_plus_plus(w), Condition::prompt(1));
        CHECK(ddim_step(tweedie_denoise(z, a.eps_hat, 0.5), a.renoise_term(GuidanceMode::cfg(w)), 0.7) ==
              ddim_step(tweedie_denoise(z, b.eps_hat, 0.5), b.renoise_term(GuidanceMode::cfg_plus_plus(w)), 0.7));
    }
}

TEST_CASE("sampling a point mass lands on it") {
    const LatentShape s{};
    const auto p = MixtureVideoPrior::gaussian(s, 1e-6, 0.0, 0.9);
    const PriorDenoiser d(p);
    const auto sched = build_linear_schedule(kSamplerSchedule);
    const auto grid = ddim_grid(1000, 50);
    for (const auto& mode : {GuidanceMode::cfg(7.5), GuidanceMode::cfg_plus_plus(0.8)}) {
        const auto r = sample(d, sched, grid, s, mode, Condition::null(), std::uint64_t(21));
        CHECK(max_abs_diff(r.sample, VideoLatent(s, 0.9)) < 1e-3);
        CHECK(r.trace.nfe == 100);
        CHECK(r.trace.steps.size() == 50);
    }
}

TEST_CASE("sampling is bit-identical under re-execution") {
    const LatentShape s{};
    const auto p = MixtureVideoPrior::gaussian(s, 1.0, 0.5);
    const PriorDenoiser d(p);
    const auto sched = build_linear_schedule(kSamplerSchedule);
    const auto grid = ddim_grid(1000, 50);
    SampleOptions opt;
    opt.record_snapshots = true;
    const auto a = sample(d, sched, grid, s, GuidanceMode::cfg(7.5), Condition::null(), std::uint64_t(5), opt);
    const auto b = sample(d, sched, grid, s, GuidanceMode::cfg(7.5), Condition::null(), std::uint64_t(5), opt);
    CHECK(a.sample == b.sample);
    CHECK(a.trace == b.trace);
    REQUIRE(a.trace.steps.front().z_t.has_value());
    CHECK(a.trace.steps.front().t == 1000);
    const auto c = sample(d, sched, grid, s, GuidanceMode::cfg(7.5), Condition::null(), std::uint64_t(6), opt);
    CHECK(c.sample != a.sample);
}

TEST_CASE("sampled means and correlations follow the prior") {
    const LatentShape s{};
    const double m = 0.4;
    const auto p = MixtureVideoPrior::gaussian(s, 1.0, 0.5, m);
    const PriorDenoiser d(p);
    const auto sched = build_linear_schedule(kSamplerSchedule);
    const auto grid = ddim_grid(1000, 50);
    std::vector<VideoLatent> out;
    double mean_err = 0.0;
    const int n = 400;
    VideoLatent acc(s);
    for (int i = 0; i < n; ++i) {
        RngStream rng(77, std::uint64_t(i));
        out.push_back(sample(d, sched, grid, s, GuidanceMode::cfg(7.5), Condition::null(), rng).sample);
        acc += out.back();
    }
    for (std::size_t i = 0; i < s.size(); ++i) mean_err += std::abs(acc[i] / n - m);
    CHECK(mean_err / double(s.size()) < 0.1);
    CHECK(std::abs(interframe_correlation(out) - 0.5) < 0.08);
}
