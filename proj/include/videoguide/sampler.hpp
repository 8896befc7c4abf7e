#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "videoguide/latent.hpp"
#include "videoguide/prior.hpp"
#include "videoguide/rng.hpp"
#include "videoguide/schedule.hpp"

namespace videoguide {

// cfg(w): eps_null + w (eps_cond - eps_null) for both denoising and renoising.
// cfg_plus_plus(w): same combination for denoising, eps_null for renoising, w in [0, 1].
struct GuidanceMode {
    enum class Kind { cfg, cfg_plus_plus };

    Kind kind = Kind::cfg;
    double scale = 7.5;

    static GuidanceMode cfg(double w) { return {Kind::cfg, w}; }
    static GuidanceMode cfg_plus_plus(double w) { return {Kind::cfg_plus_plus, w}; }

    void validate() const;
    std::string str() const;
    static GuidanceMode parse(const std::string& text);

    friend bool operator==(const GuidanceMode&, const GuidanceMode&) = default;
};

struct StepRecord {
    int t = 0;
    std::optional<VideoLatent> z_t;
    std::optional<VideoLatent> z0;
};

struct SampleTrace {
    std::vector<StepRecord> steps;
    std::int64_t nfe = 0;
    std::int64_t base_nfe = 0;
    std::int64_t guide_nfe = 0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    friend bool operator==(const SampleTrace& a, const SampleTrace& b) {
        if (a.nfe != b.nfe || a.base_nfe != b.base_nfe || a.guide_nfe != b.guide_nfe || a.seed != b.seed ||
            a.stream != b.stream || a.steps.size() != b.steps.size())
            return false;
        for (std::size_t i = 0; i < a.steps.size(); ++i)
            if (a.steps[i].t != b.steps[i].t || a.steps[i].z_t != b.steps[i].z_t || a.steps[i].z0 != b.steps[i].z0)
                return false;
        return true;
    }
};

struct SampleResult {
    VideoLatent sample;
    SampleTrace trace;
};

struct SampleOptions {
    bool record_snapshots = false;
};

// (z_t - sqrt(1 - ab) eps) / sqrt(ab)
VideoLatent tweedie_denoise(const VideoLatent& z_t, const VideoLatent& eps_hat, double alpha_bar);

// eps_null + w (eps_cond - eps_null)
VideoLatent cfg_combine(const VideoLatent& eps_cond, const VideoLatent& eps_null, double w);

// sqrt(ab_prev) z0_hat + sqrt(1 - ab_prev) eps_renoise
VideoLatent ddim_step(const VideoLatent& z0_hat, const VideoLatent& eps_renoise, double alpha_bar_prev);

// Both epsilon evaluations at one timestep plus the guided combination.
struct GuidedEps {
    VideoLatent eps_cond;
    VideoLatent eps_null;
    VideoLatent eps_hat;

    const VideoLatent& renoise_term(const GuidanceMode& mode) const {
        return mode.kind == GuidanceMode::Kind::cfg ? eps_hat : eps_null;
    }
};

// Two denoiser evaluations (conditional and null).
GuidedEps guided_eps(const EpsPredictor& denoiser, const VideoLatent& z_t, double alpha_bar, const GuidanceMode& mode,
                     const Condition& condition);

inline constexpr std::int64_t kEvalsPerGuidedStep = 2;

// Deterministic DDIM from a given initial latent. The first `window_steps`
// grid steps use `window_mode`, the rest `mode`.
SampleResult sample_from(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                         VideoLatent z_init, const GuidanceMode& mode, const Condition& condition,
                         const SampleOptions& options = {}, int window_steps = 0,
                         const GuidanceMode& window_mode = GuidanceMode::cfg_plus_plus(0.8));

// z_T ~ N(0, I) from the stream, then sample_from.
SampleResult sample(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                    const LatentShape& shape, const GuidanceMode& mode, const Condition& condition, RngStream& rng,
                    const SampleOptions& options = {});

SampleResult sample(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                    const LatentShape& shape, const GuidanceMode& mode, const Condition& condition, std::uint64_t seed,
                    const SampleOptions& options = {});

}  // namespace videoguide
