#pragma once

#include <vector>

#include "videoguide/latent.hpp"

namespace videoguide {

// Discrete variance schedule. betas are indexed 1..T (betas()[t-1]),
// alpha_bar(t) for t = 0..T with alpha_bar(0) = 1.
class NoiseSchedule {
public:
    NoiseSchedule(std::vector<double> betas);

    int total_steps() const { return int(betas_.size()); }
    double beta(int t) const;
    double alpha_bar(int t) const;

    const std::vector<double>& betas() const { return betas_; }
    const std::vector<double>& alpha_bars() const { return alpha_bars_; }

    friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

private:
    std::vector<double> betas_;
    std::vector<double> alpha_bars_;
};

struct LinearScheduleSpec {
    double beta_start = 1e-4;
    double beta_end = 2e-2;
    int total_steps = 1000;

    friend bool operator==(const LinearScheduleSpec&, const LinearScheduleSpec&) = default;
};

// Sampling-model and guiding-model defaults; deliberately different so the
// cross-domain renoising path is always exercised.
inline constexpr LinearScheduleSpec kSamplerSchedule{1e-4, 2e-2, 1000};
inline constexpr LinearScheduleSpec kGuideSchedule{8.5e-4, 1.2e-2, 1000};

NoiseSchedule build_linear_schedule(double beta_start, double beta_end, int total_steps);
inline NoiseSchedule build_linear_schedule(const LinearScheduleSpec& s) {
    return build_linear_schedule(s.beta_start, s.beta_end, s.total_steps);
}

// Strictly descending timesteps in [1, T].
class TimestepGrid {
public:
    explicit TimestepGrid(std::vector<int> timesteps);

    const std::vector<int>& timesteps() const { return steps_; }
    std::size_t size() const { return steps_.size(); }
    int operator[](std::size_t i) const { return steps_[i]; }
    int front() const { return steps_.front(); }

    // timestep the i-th reverse step lands on; 0 after the last entry
    int next(std::size_t i) const { return i + 1 < steps_.size() ? steps_[i + 1] : 0; }

    void check_within(const NoiseSchedule& schedule) const;

    friend bool operator==(const TimestepGrid&, const TimestepGrid&) = default;

private:
    std::vector<int> steps_;
};

// First entry T, spacing floor(T / steps). The step after the last entry
// maps to alpha_bar(0) = 1.
TimestepGrid ddim_grid(int total_steps, int steps);

inline constexpr int kGuidanceSubgridPoints = 25;

// 25-point grid over [1, t] with the ddim_grid spacing rule, truncated to its
// first `count` entries. For t < 25 the grid falls back to [t, t-1, ..., 1].
TimestepGrid guidance_subgrid(int t, int count, const NoiseSchedule& schedule);

// sqrt(ab_t) z0 + sqrt(1 - ab_t) eps
VideoLatent forward_diffuse(const VideoLatent& z0, int t, const VideoLatent& eps, const NoiseSchedule& schedule);

// Re-diffuses a denoised estimate under the target model's schedule.
VideoLatent renoise_to_domain(const VideoLatent& z0_hat, int t, const NoiseSchedule& target, const VideoLatent& eps);

}  // namespace videoguide
