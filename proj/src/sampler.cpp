#include "videoguide/sampler.hpp"

#include <charconv>
#include <cmath>

namespace videoguide {

void GuidanceMode::validate() const {
    if (!std::isfinite(scale) || scale < 0.0) throw DomainError("guidance scale must be >= 0");
    if (kind == Kind::cfg_plus_plus && scale > 1.0) throw DomainError("cfg++ guidance scale must lie in [0, 1]");
}

std::string GuidanceMode::str() const {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, scale).ptr;
    return std::string(kind == Kind::cfg ? "cfg:" : "cfg++:") + std::string(buf, end);
}

GuidanceMode GuidanceMode::parse(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw DomainError("guidance mode must look like cfg:7.5 or cfg++:0.8");
    const std::string kind = text.substr(0, colon);
    std::size_t used = 0;
    double w = 0.0;
    try {
        w = std::stod(text.substr(colon + 1), &used);
    } catch (const std::exception&) {
        throw DomainError("bad guidance scale in '" + text + "'");
    }
    if (used != text.size() - colon - 1) throw DomainError("bad guidance scale in '" + text + "'");
    GuidanceMode m;
    if (kind == "cfg")
        m = cfg(w);
    else if (kind == "cfg++")
        m = cfg_plus_plus(w);
    else
        throw DomainError("unknown guidance kind '" + kind + "'");
    m.validate();
    return m;
}

VideoLatent tweedie_denoise(const VideoLatent& z_t, const VideoLatent& eps_hat, double alpha_bar) {
    if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) throw DomainError("tweedie_denoise: alpha_bar must lie in (0, 1]");
    require_same_shape(z_t, eps_hat, "tweedie_denoise");
    const double s = std::sqrt(1.0 - alpha_bar);
    const double inv = 1.0 / std::sqrt(alpha_bar);
    VideoLatent out(z_t.shape());
    for (std::size_t i = 0; i < z_t.size(); ++i) out[i] = (z_t[i] - s * eps_hat[i]) * inv;
    return out;
}

VideoLatent cfg_combine(const VideoLatent& eps_cond, const VideoLatent& eps_null, double w) {
    require_same_shape(eps_cond, eps_null, "cfg_combine");
    VideoLatent out(eps_null.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_null[i] + w * (eps_cond[i] - eps_null[i]);
    return out;
}

VideoLatent ddim_step(const VideoLatent& z0_hat, const VideoLatent& eps_renoise, double alpha_bar_prev) {
    if (!(alpha_bar_prev > 0.0 && alpha_bar_prev <= 1.0)) throw DomainError("ddim_step: alpha_bar_prev must lie in (0, 1]");
    return linear_combination(std::sqrt(alpha_bar_prev), z0_hat, std::sqrt(1.0 - alpha_bar_prev), eps_renoise);
}

GuidedEps guided_eps(const EpsPredictor& denoiser, const VideoLatent& z_t, double alpha_bar, const GuidanceMode& mode,
                     const Condition& condition) {
    GuidedEps g{denoiser.predict(z_t, alpha_bar, condition), denoiser.predict(z_t, alpha_bar, Condition::null()), {}};
    g.eps_hat = cfg_combine(g.eps_cond, g.eps_null, mode.scale);
    return g;
}

SampleResult sample_from(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                         VideoLatent z, const GuidanceMode& mode, const Condition& condition,
                         const SampleOptions& options, int window_steps, const GuidanceMode& window_mode) {
    mode.validate();
    window_mode.validate();
    grid.check_within(schedule);
    SampleResult result;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int t = grid[i];
        const GuidanceMode& m = int(i) < window_steps ? window_mode : mode;
        const GuidedEps e = guided_eps(denoiser, z, schedule.alpha_bar(t), m, condition);
        result.trace.base_nfe += kEvalsPerGuidedStep;
        VideoLatent z0 = tweedie_denoise(z, e.eps_hat, schedule.alpha_bar(t));
        if (options.record_snapshots) result.trace.steps.push_back({t, z, z0});
        else result.trace.steps.push_back({t, std::nullopt, std::nullopt});
        z = ddim_step(z0, e.renoise_term(m), schedule.alpha_bar(grid.next(i)));
    }
    result.trace.nfe = result.trace.base_nfe;
    result.sample = std::move(z);
    return result;
}

SampleResult sample(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                    const LatentShape& shape, const GuidanceMode& mode, const Condition& condition, RngStream& rng,
                    const SampleOptions& options) {
    const std::uint64_t seed = rng.seed(), stream = rng.stream();
    VideoLatent z = rng.normal_like(shape);
    SampleResult r = sample_from(denoiser, schedule, grid, std::move(z), mode, condition, options);
    r.trace.seed = seed;
    r.trace.stream = stream;
    return r;
}

SampleResult sample(const EpsPredictor& denoiser, const NoiseSchedule& schedule, const TimestepGrid& grid,
                    const LatentShape& shape, const GuidanceMode& mode, const Condition& condition, std::uint64_t seed,
                    const SampleOptions& options) {
    RngStream rng(seed);
    return sample(denoiser, schedule, grid, shape, mode, condition, rng, options);
}

}  // namespace videoguide
