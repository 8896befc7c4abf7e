#pragma once

#include <cstdint>

#include "videoguide/freqfilter.hpp"
#include "videoguide/prior.hpp"
#include "videoguide/rng.hpp"
#include "videoguide/sampler.hpp"
#include "videoguide/schedule.hpp"

namespace videoguide {

struct GuidanceConfig {
    int interpolation_steps = 5;     // I: earliest grid steps that get interpolated
    double interpolation_scale = 0.5;  // beta, weight on the sampler's own estimate
    int rollout_steps = 10;          // tau
    double cutoff = 0.25;            // gamma
    int filter_order = 4;            // n
    GuidanceMode interp_guidance = GuidanceMode::cfg_plus_plus(0.8);
    GuidanceMode main_guidance = GuidanceMode::cfg(7.5);
    bool filter_enabled = true;
    // Self-guided runs renoise z_{0|t} before the rollout, as external guidance does.
    bool self_renoise = true;

    // Throws DomainError naming the offending field.
    void validate() const;

    friend bool operator==(const GuidanceConfig&, const GuidanceConfig&) = default;
};

inline constexpr int kMaxRolloutSteps = kGuidanceSubgridPoints - 1;

// beta = 1 / (1 + lambda_reg)
double beta_from_lambda(double lambda_reg);

// beta z0_S + (1 - beta) z0_G, the minimiser of |z - z0_S|^2 + lambda |z - z0_G|^2.
VideoLatent interpolate_denoised(const VideoLatent& z0_S, const VideoLatent& z0_G, double beta);

// A diffusion model the rollout can run: denoiser plus its own schedule.
struct DiffusionModel {
    const EpsPredictor& denoiser;
    const NoiseSchedule& schedule;
};

struct RolloutResult {
    VideoLatent z0;  // guide's Tweedie estimate after the rollout
    std::int64_t nfe = 0;
    int final_t = 0;
};

// tau DDIM steps under `guide` starting from z_start at timestep t, along the
// first tau + 1 points of guidance_subgrid(t). Denoises with the guided
// combination of `mode` and renoises per `mode` (eps_null for cfg++).
RolloutResult rollout_from(const VideoLatent& z_start, int t, const DiffusionModel& guide, int tau,
                           const GuidanceMode& mode, const Condition& condition);

// Renoises z0_hat into the guide's domain with fresh noise from rng, then rolls out.
RolloutResult guide_rollout(const VideoLatent& z0_hat, int t, const DiffusionModel& guide, int tau,
                            const GuidanceMode& mode, const Condition& condition, RngStream& rng);

// Guide evaluations one rollout from t costs.
std::int64_t rollout_nfe(int t, int tau, const NoiseSchedule& guide_schedule);

// nfe = 2 |grid| + sum over window steps of rollout_nfe.
std::int64_t videoguide_nfe(const TimestepGrid& grid, const GuidanceConfig& config, const NoiseSchedule& guide_schedule);

// Base DDIM loop with early-step interpolation. guide == nullptr selects the
// self-guided path. Random draws per window step, in order: renoise noise
// (if renoising), filter noise (if filtering).
SampleResult videoguide_sample(const DiffusionModel& sampler, const DiffusionModel* guide, const TimestepGrid& grid,
                               const LatentShape& shape, const GuidanceConfig& config, const Condition& condition,
                               RngStream& rng, const SampleOptions& options = {});

SampleResult videoguide_sample(const DiffusionModel& sampler, const DiffusionModel* guide, const TimestepGrid& grid,
                               const LatentShape& shape, const GuidanceConfig& config, const Condition& condition,
                               std::uint64_t seed, const SampleOptions& options = {});

// Iterated noise reinitialisation: sample, diffuse back to grid.front() with
// the initial noise, swap the high band for fresh noise, repeat.
SampleResult freeinit_baseline(const DiffusionModel& sampler, const TimestepGrid& grid, const LatentShape& shape,
                               int iterations, const ButterworthMask3D& mask, const GuidanceMode& mode,
                               const Condition& condition, RngStream& rng, const SampleOptions& options = {});

SampleResult freeinit_baseline(const DiffusionModel& sampler, const TimestepGrid& grid, const LatentShape& shape,
                               int iterations, const ButterworthMask3D& mask, const GuidanceMode& mode,
                               const Condition& condition, std::uint64_t seed, const SampleOptions& options = {});

}  // namespace videoguide
