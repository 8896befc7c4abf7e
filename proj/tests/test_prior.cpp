#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "videoguide/metrics.hpp"
#include "videoguide/prior.hpp"
#include "videoguide/rng.hpp"
#include "videoguide/sampler.hpp"

using namespace videoguide;

namespace {

GaussianVideoComponent component(const LatentShape& s, double sigma, double rho, double mean) {
    GaussianVideoComponent c;
    c.sigma = sigma;
    c.rho = rho;
    c.means[Condition::null()] = std::vector<double>(s.frame_size(), mean);
    return c;
}

double max_abs_diff(const VideoLatent& a, const VideoLatent& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("prior validation") {
    const LatentShape s{};
    CHECK_THROWS_AS(MixtureVideoPrior(LatentShape{1, 1, 4, 4}, {{1.0, component({1, 1, 4, 4}, 1, 0, 0)}}),
                    DomainError);
    CHECK_THROWS_AS(MixtureVideoPrior(s, {}), DomainError);
    CHECK_THROWS_AS(MixtureVideoPrior(s, {{0.5, component(s, 1, 0, 0)}}), DomainError);
    CHECK_THROWS_AS(MixtureVideoPrior(s, {{1.0, component(s, 0, 0, 0)}}), DomainError);
    CHECK_THROWS_AS(MixtureVideoPrior(s, {{1.0, component(s, 1, 1, 0)}}), DomainError);
    GaussianVideoComponent no_null;
    no_null.means[Condition::prompt(2)] = std::vector<double>(s.frame_size(), 0.0);
    CHECK_THROWS_AS(MixtureVideoPrior(s, {{1.0, no_null}}), DomainError);
    GaussianVideoComponent short_mean = component(s, 1, 0, 0);
    short_mean.means[Condition::null()].pop_back();
    CHECK_THROWS_AS(MixtureVideoPrior(s, {{1.0, short_mean}}), ShapeError);
}

TEST_CASE("missing conditions fall back to the null mean") {
    const LatentShape s{};
    auto c = component(s, 1, 0, 0.25);
    CHECK(c.mean(Condition::prompt(9)) == c.mean(Condition::null()));
    CHECK(c.shared_eigenvalue(8) == doctest::Approx(1.0));
    c.rho = 0.5;
    CHECK(c.shared_eigenvalue(8) == doctest::Approx(4.5));
    CHECK(c.residual_eigenvalue() == doctest::Approx(0.5));
}

TEST_CASE("prior draws: rho 0 is uncorrelated, rho near 1 gives nearly identical frames") {
    const LatentShape s{};
    std::vector<VideoLatent> white, tied;
    const auto p0 = MixtureVideoPrior::gaussian(s, 1.0, 0.0);
    const auto p1 = MixtureVideoPrior::gaussian(s, 1.0, 0.999);
    RngStream rng(3);
    for (int i = 0; i < 1000; ++i) {
        white.push_back(sample_prior(p0, Condition::null(), rng));
        tied.push_back(sample_prior(p1, Condition::null(), rng));
    }
    CHECK(std::abs(interframe_correlation(white)) < 0.05);
    CHECK(interframe_correlation(tied) >= 0.99);
}

TEST_CASE("vanishing sigma draws the mean") {
    const LatentShape s{};
    const auto p = MixtureVideoPrior::gaussian(s, 1e-12, 0.3, 1.5);
    const VideoLatent z = sample_prior(p, Condition::null(), std::uint64_t(1));
    CHECK(max_abs_diff(z, VideoLatent(s, 1.5)) < 1e-10);
}

TEST_CASE("posterior mean at alpha_bar 1 is the input") {
    RngStream rng(4);
    const auto p = oracle::random_mixture(rng);
    const VideoLatent z = rng.normal_like(p.shape());
    CHECK(max_abs_diff(posterior_mean(p, z, 1.0, Condition::null()), z) < 1e-12);
}

TEST_CASE("posterior mean matches the scalar conjugate formula") {
    const LatentShape s{2, 1, 2, 2};
    const double m = 0.7, ab = 0.5;
    const auto p = MixtureVideoPrior::gaussian(s, 1.0, 0.0, m);
    RngStream rng(5);
    const VideoLatent z = rng.normal_like(s);
    const VideoLatent pm = posterior_mean(p, z, ab, Condition::null());
    // Per coordinate: m + sqrt(ab) sigma^2 / (ab sigma^2 + 1 - ab) (z - sqrt(ab) m), the gain is sqrt(0.5) here.
    const double gain = std::sqrt(0.5) * 1.0 / (0.5 * 1.0 + 0.5);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(pm[i] - (m + gain * (z[i] - std::sqrt(ab) * m))) < 1e-12);
}

TEST_CASE("deep in one basin the mixture reduces to that component") {
    const LatentShape s{2, 1, 2, 2};
    const auto a = component(s, 1.0, 0.4, 10.0), b = component(s, 1.0, 0.4, -10.0);
    const MixtureVideoPrior mix(s, {{0.5, a}, {0.5, b}});
    const MixtureVideoPrior only_a(s, {{1.0, a}});
    const double ab = 0.6;
    RngStream rng(6);
    VideoLatent z = rng.normal_like(s);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += std::sqrt(ab) * 10.0;
    const auto r = responsibilities(mix, z, ab, Condition::null());
    CHECK(r[0] > 1.0 - 1e-12);
    CHECK(r[1] < 1e-12);
    CHECK(max_abs_diff(posterior_mean(mix, z, ab, Condition::null()), posterior_mean(only_a, z, ab, Condition::null())) <
          1e-6);
    CHECK(nearest_mode(mix, z * (1.0 / std::sqrt(ab)), Condition::null()) == 0);
}

TEST_CASE("eps prediction vanishes on the mean of a point mass") {
    const LatentShape s{};
    const auto p = MixtureVideoPrior::gaussian(s, 1e-9, 0.2, 0.8);
    const auto sched_ab = 0.3;
    const VideoLatent z(s, std::sqrt(sched_ab) * 0.8);
    const VideoLatent e = eps_prediction(p, z, sched_ab, Condition::null());
    CHECK(std::sqrt(e.squared_norm()) < 1e-9);
    CHECK_THROWS_AS(eps_prediction(p, z, 1.0, Condition::null()), DomainError);
}

TEST_CASE("tweedie of the eps prediction is the posterior mean") {
    RngStream rng(7);
    for (int k = 0; k < 10; ++k) {
        const auto p = oracle::random_mixture(rng);
        const double ab = 0.05 + 0.9 * rng.uniform();
        const VideoLatent z = rng.normal_like(p.shape());
        const VideoLatent e = eps_prediction(p, z, ab, Condition::prompt(1));
        CHECK(max_abs_diff(tweedie_denoise(z, e, ab), posterior_mean(p, z, ab, Condition::prompt(1))) < 1e-10);
    }
}

TEST_CASE("eps prediction matches the finite-difference score of a dense oracle") {
    RngStream rng(8);
    for (int k = 0; k < 20; ++k) {
        const auto p = oracle::random_mixture(rng);
        const double ab = 0.05 + 0.9 * rng.uniform();
        const VideoLatent z = rng.normal_like(p.shape()) * 1.5;
        const VideoLatent e = eps_prediction(p, z, ab, Condition::null());
        const auto fd = oracle::finite_difference_eps(p, z, ab, Condition::null());
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(e[i] - fd[i]) < 1e-4);
    }
}

TEST_CASE("log marginal density agrees with the dense oracle") {
    RngStream rng(9);
    for (int k = 0; k < 10; ++k) {
        const auto p = oracle::random_mixture(rng);
        const double ab = 0.05 + 0.9 * rng.uniform();
        const VideoLatent z = rng.normal_like(p.shape());
        Eigen::VectorXd v(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) v[i] = z[i];
        CHECK(log_marginal_density(p, z, ab, Condition::prompt(1)) ==
              doctest::Approx(oracle::log_density(p, v, ab, Condition::prompt(1))).epsilon(1e-10));
    }
}

TEST_CASE("posterior mean is equivariant to mean shifts and frame permutations") {
    const LatentShape s{4, 1, 2, 2};
    const double ab = 0.4, shift = 1.25;
    const auto p = MixtureVideoPrior::gaussian(s, 0.9, 0.6, 0.0);
    const auto q = MixtureVideoPrior::gaussian(s, 0.9, 0.6, shift);
    RngStream rng(10);
    const VideoLatent z = rng.normal_like(s);
    VideoLatent zs = z;
    for (std::size_t i = 0; i < zs.size(); ++i) zs[i] += std::sqrt(ab) * shift;
    const VideoLatent base = posterior_mean(p, z, ab, Condition::null());
    const VideoLatent moved = posterior_mean(q, zs, ab, Condition::null());
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(moved[i] - base[i] - shift) < 1e-12);

    const int perm[4] = {2, 0, 3, 1};
    auto permute = [&](const VideoLatent& v) {
        VideoLatent out(s);
        for (int n = 0; n < 4; ++n)
            std::copy(v.frame(perm[n]).begin(), v.frame(perm[n]).end(), out.frame(n).begin());
        return out;
    };
    CHECK(max_abs_diff(posterior_mean(p, permute(z), ab, Condition::null()), permute(base)) < 1e-12);
}

TEST_CASE("mixture draws respect the component weights") {
    const LatentShape s{2, 1, 2, 2};
    const MixtureVideoPrior mix(s, {{0.25, component(s, 0.5, 0.2, 5.0)}, {0.75, component(s, 0.5, 0.2, -5.0)}});
    RngStream rng(12);
    int first = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) first += nearest_mode(mix, sample_prior(mix, Condition::null(), rng), Condition::null()) == 0;
    CHECK(std::abs(first / double(n) - 0.25) < 0.03);
}
