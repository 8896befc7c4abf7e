#include "videoguide/guidance.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace videoguide {

namespace {

std::string shortest(double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

}  // namespace

void GuidanceConfig::validate() const {
    if (interpolation_steps < 0) throw DomainError("interp_steps must be >= 0");
    if (!(interpolation_scale >= 0.5 && interpolation_scale <= 1.0))
        throw DomainError("beta must satisfy β ∈ [0.5, 1], got " + shortest(interpolation_scale));
    if (rollout_steps < 1 || rollout_steps > kMaxRolloutSteps)
        throw DomainError("tau must lie in [1, " + std::to_string(kMaxRolloutSteps) + "]");
    if (!(cutoff > 0.0 && cutoff < 1.0)) throw DomainError("gamma must lie in (0, 1)");
    if (filter_order < 1) throw DomainError("order must be >= 1");
    interp_guidance.validate();
    main_guidance.validate();
}

double beta_from_lambda(double lambda_reg) {
    if (!(lambda_reg >= 0.0)) throw DomainError("lambda_reg must be >= 0");
    return 1.0 / (1.0 + lambda_reg);
}

VideoLatent interpolate_denoised(const VideoLatent& z0_S, const VideoLatent& z0_G, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("interpolation beta must lie in [0, 1]");
    return linear_combination(beta, z0_S, 1.0 - beta, z0_G);
}

RolloutResult rollout_from(const VideoLatent& z_start, int t, const DiffusionModel& guide, int tau,
                           const GuidanceMode& mode, const Condition& condition) {
    if (tau < 1 || tau > kMaxRolloutSteps) throw DomainError("rollout needs 1 <= tau <= 24");
    const TimestepGrid points = guidance_subgrid(t, tau + 1, guide.schedule);
    const auto& sched = guide.schedule;
    VideoLatent z = z_start;
    RolloutResult out;
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double ab = sched.alpha_bar(points[j]);
        const GuidedEps e = guided_eps(guide.denoiser, z, ab, mode, condition);
        out.nfe += kEvalsPerGuidedStep;
        out.z0 = tweedie_denoise(z, e.eps_hat, ab);
        out.final_t = points[j];
        if (j + 1 < points.size()) z = ddim_step(out.z0, e.renoise_term(mode), sched.alpha_bar(points[j + 1]));
    }
    return out;
}

RolloutResult guide_rollout(const VideoLatent& z0_hat, int t, const DiffusionModel& guide, int tau,
                            const GuidanceMode& mode, const Condition& condition, RngStream& rng) {
    if (tau < 1) throw DomainError("guide_rollout needs tau >= 1");
    const VideoLatent eps = rng.normal_like(z0_hat.shape());
    return rollout_from(renoise_to_domain(z0_hat, t, guide.schedule, eps), t, guide, tau, mode, condition);
}

std::int64_t rollout_nfe(int t, int tau, const NoiseSchedule& guide_schedule) {
    return kEvalsPerGuidedStep * std::int64_t(guidance_subgrid(t, tau + 1, guide_schedule).size());
}

std::int64_t videoguide_nfe(const TimestepGrid& grid, const GuidanceConfig& config, const NoiseSchedule& guide_schedule) {
    std::int64_t n = kEvalsPerGuidedStep * std::int64_t(grid.size());
    for (std::size_t i = 0; i < grid.size() && int(i) < config.interpolation_steps; ++i)
        n += rollout_nfe(grid[i], config.rollout_steps, guide_schedule);
    return n;
}

SampleResult videoguide_sample(const DiffusionModel& sampler, const DiffusionModel* guide, const TimestepGrid& grid,
                               const LatentShape& shape, const GuidanceConfig& config, const Condition& condition,
                               RngStream& rng, const SampleOptions& options) {
    config.validate();
    grid.check_within(sampler.schedule);
    const bool external = guide != nullptr;
    const DiffusionModel& g = external ? *guide : sampler;
    const bool renoise = external || config.self_renoise;
    const int window = config.interpolation_steps;
    std::optional<ButterworthMask3D> mask;
    if (config.filter_enabled && window > 0)
        mask = butterworth_mask(shape.frames, shape.height, shape.width, config.cutoff, config.filter_order);

    SampleResult result;
    result.trace.seed = rng.seed();
    result.trace.stream = rng.stream();
    VideoLatent z = rng.normal_like(shape);
    const auto& sched = sampler.schedule;

    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int t = grid[i];
        const double ab = sched.alpha_bar(t);
        const double ab_prev = sched.alpha_bar(grid.next(i));
        const bool in_window = int(i) < window;
        const GuidanceMode& mode = in_window ? config.interp_guidance : config.main_guidance;

        const GuidedEps e = guided_eps(sampler.denoiser, z, ab, mode, condition);
        result.trace.base_nfe += kEvalsPerGuidedStep;
        VideoLatent z0 = tweedie_denoise(z, e.eps_hat, ab);
        if (options.record_snapshots) result.trace.steps.push_back({t, z, z0});
        else result.trace.steps.push_back({t, std::nullopt, std::nullopt});

        if (!in_window) {
            z = ddim_step(z0, e.renoise_term(mode), ab_prev);
            continue;
        }
        const RolloutResult r = renoise ? guide_rollout(z0, t, g, config.rollout_steps, mode, condition, rng)
                                        : rollout_from(z, t, g, config.rollout_steps, mode, condition);
        result.trace.guide_nfe += r.nfe;
        const VideoLatent z0_mixed = interpolate_denoised(z0, r.z0, config.interpolation_scale);
        z = ddim_step(z0_mixed, e.renoise_term(mode), ab_prev);
        if (mask) z = lowpass_highpass_mix(z, rng.normal_like(shape), *mask);
    }
    result.trace.nfe = result.trace.base_nfe + result.trace.guide_nfe;
    result.sample = std::move(z);
    return result;
}

SampleResult videoguide_sample(const DiffusionModel& sampler, const DiffusionModel* guide, const TimestepGrid& grid,
                               const LatentShape& shape, const GuidanceConfig& config, const Condition& condition,
                               std::uint64_t seed, const SampleOptions& options) {
    RngStream rng(seed);
    return videoguide_sample(sampler, guide, grid, shape, config, condition, rng, options);
}

SampleResult freeinit_baseline(const DiffusionModel& sampler, const TimestepGrid& grid, const LatentShape& shape,
                               int iterations, const ButterworthMask3D& mask, const GuidanceMode& mode,
                               const Condition& condition, RngStream& rng, const SampleOptions& options) {
    if (iterations < 1) throw DomainError("freeinit needs iterations >= 1");
    const std::uint64_t seed = rng.seed(), stream = rng.stream();
    const VideoLatent initial_noise = rng.normal_like(shape);
    VideoLatent z_init = initial_noise;
    SampleResult result;
    std::int64_t nfe = 0;
    for (int k = 0; k < iterations; ++k) {
        if (k > 0) {
            const VideoLatent diffused = forward_diffuse(result.sample, grid.front(), initial_noise, sampler.schedule);
            z_init = lowpass_highpass_mix(diffused, rng.normal_like(shape), mask);
        }
        result = sample_from(sampler.denoiser, sampler.schedule, grid, z_init, mode, condition, options);
        nfe += result.trace.nfe;
    }
    result.trace.base_nfe = nfe;
    result.trace.nfe = nfe;
    result.trace.seed = seed;
    result.trace.stream = stream;
    return result;
}

SampleResult freeinit_baseline(const DiffusionModel& sampler, const TimestepGrid& grid, const LatentShape& shape,
                               int iterations, const ButterworthMask3D& mask, const GuidanceMode& mode,
                               const Condition& condition, std::uint64_t seed, const SampleOptions& options) {
    RngStream rng(seed);
    return freeinit_baseline(sampler, grid, shape, iterations, mask, mode, condition, rng, options);
}

}  // namespace videoguide
