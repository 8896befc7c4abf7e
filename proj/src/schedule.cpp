#include "videoguide/schedule.hpp"

#include <cmath>
#include <string>

namespace videoguide {

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    if (betas_.empty()) throw DomainError("schedule needs at least one step");
    alpha_bars_.reserve(betas_.size() + 1);
    alpha_bars_.push_back(1.0);
    for (double b : betas_) {
        if (!(b > 0.0 && b < 1.0)) throw DomainError("beta must lie in (0, 1), got " + std::to_string(b));
        alpha_bars_.push_back(alpha_bars_.back() * (1.0 - b));
    }
    if (!(alpha_bars_.back() > 0.0)) throw DomainError("alpha_bar underflowed to zero");
}

double NoiseSchedule::beta(int t) const {
    if (t < 1 || t > total_steps()) throw DomainError("timestep " + std::to_string(t) + " outside [1, T]");
    return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > total_steps()) throw DomainError("timestep " + std::to_string(t) + " outside [0, T]");
    return alpha_bars_[t];
}

NoiseSchedule build_linear_schedule(double beta_start, double beta_end, int total_steps) {
    if (total_steps < 1) throw DomainError("total_steps must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw DomainError("linear schedule needs 0 < beta_start <= beta_end < 1");
    std::vector<double> betas(total_steps);
    if (total_steps == 1) {
        betas[0] = beta_start;
    } else {
        const double span = beta_end - beta_start;
        for (int i = 0; i < total_steps; ++i) betas[i] = beta_start + span * double(i) / double(total_steps - 1);
        betas.back() = beta_end;
    }
    return NoiseSchedule(std::move(betas));
}

TimestepGrid::TimestepGrid(std::vector<int> timesteps) : steps_(std::move(timesteps)) {
    if (steps_.empty()) throw DomainError("timestep grid is empty");
    for (std::size_t i = 0; i < steps_.size(); ++i) {
        if (steps_[i] < 1) throw DomainError("timestep grid entries must be >= 1");
        if (i > 0 && steps_[i] >= steps_[i - 1]) throw DomainError("timestep grid must be strictly descending");
    }
}

void TimestepGrid::check_within(const NoiseSchedule& schedule) const {
    if (steps_.front() > schedule.total_steps())
        throw DomainError("grid starts at " + std::to_string(steps_.front()) + " beyond schedule T=" +
                          std::to_string(schedule.total_steps()));
}

namespace {

std::vector<int> floor_spaced(int top, int count) {
    const int spacing = top / count;
    std::vector<int> out(count);
    for (int i = 0; i < count; ++i) out[i] = top - i * spacing;
    return out;
}

}  // namespace

TimestepGrid ddim_grid(int total_steps, int steps) {
    if (steps < 1 || steps > total_steps)
        throw DomainError("ddim_grid needs 1 <= steps <= T (steps=" + std::to_string(steps) +
                          ", T=" + std::to_string(total_steps) + ")");
    return TimestepGrid(floor_spaced(total_steps, steps));
}

TimestepGrid guidance_subgrid(int t, int count, const NoiseSchedule& schedule) {
    if (t < 1 || t > schedule.total_steps()) throw DomainError("guidance_subgrid: t outside [1, T]");
    if (count < 1 || count > kGuidanceSubgridPoints) throw DomainError("guidance_subgrid: count outside [1, 25]");
    std::vector<int> full = t >= kGuidanceSubgridPoints ? floor_spaced(t, kGuidanceSubgridPoints)
                                                         : floor_spaced(t, t);
    if (std::size_t(count) < full.size()) full.resize(count);
    return TimestepGrid(std::move(full));
}

VideoLatent forward_diffuse(const VideoLatent& z0, int t, const VideoLatent& eps, const NoiseSchedule& schedule) {
    if (t < 1) throw DomainError("forward_diffuse: t must be >= 1");
    return renoise_to_domain(z0, t, schedule, eps);
}

VideoLatent renoise_to_domain(const VideoLatent& z0_hat, int t, const NoiseSchedule& target, const VideoLatent& eps) {
    require_same_shape(z0_hat, eps, "renoise_to_domain");
    const double ab = target.alpha_bar(t);
    return linear_combination(std::sqrt(ab), z0_hat, std::sqrt(1.0 - ab), eps);
}

}  // namespace videoguide
