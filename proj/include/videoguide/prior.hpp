#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "videoguide/latent.hpp"

namespace videoguide {

class RngStream;

// Null condition (phi) or a synthetic text prompt id.
struct Condition {
    std::optional<int> text;

    static Condition null() { return {}; }
    static Condition prompt(int id) { return {id}; }
    bool is_null() const { return !text.has_value(); }
    std::string str() const { return text ? "text(" + std::to_string(*text) + ")" : "null"; }

    friend auto operator<=>(const Condition&, const Condition&) = default;
};

// Gaussian over videos with covariance
//   sigma^2 [(1 - rho) I + rho (1_N 1_N^T (x) I_frame)],
// mean broadcast over frames. Conditioning shifts the mean only.
struct GaussianVideoComponent {
    std::map<Condition, std::vector<double>> means;  // each of length C*H*W
    double sigma = 1.0;
    double rho = 0.0;

    // Missing conditions resolve to the null mean.
    const std::vector<double>& mean(const Condition& c) const;

    // eigenvalue on the frame-mean subspace and on its complement
    double shared_eigenvalue(int frames) const { return sigma * sigma * (1.0 - rho + frames * rho); }
    double residual_eigenvalue() const { return sigma * sigma * (1.0 - rho); }

    friend bool operator==(const GaussianVideoComponent&, const GaussianVideoComponent&) = default;
};

struct WeightedComponent {
    double weight = 1.0;
    GaussianVideoComponent component;

    friend bool operator==(const WeightedComponent&, const WeightedComponent&) = default;
};

class MixtureVideoPrior {
public:
    MixtureVideoPrior(LatentShape shape, std::vector<WeightedComponent> components);

    const LatentShape& shape() const { return shape_; }
    const std::vector<WeightedComponent>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }

    // Single Gaussian with every entry of the null mean set to `mean`.
    static MixtureVideoPrior gaussian(LatentShape shape, double sigma, double rho, double mean = 0.0);

    friend bool operator==(const MixtureVideoPrior&, const MixtureVideoPrior&) = default;

private:
    LatentShape shape_;
    std::vector<WeightedComponent> components_;
};

// Ancestral draw: component by weight, then shared-across-frames part with
// variance rho sigma^2 plus per-frame part with variance (1 - rho) sigma^2.
VideoLatent sample_prior(const MixtureVideoPrior& prior, const Condition& condition, RngStream& rng);
VideoLatent sample_prior(const MixtureVideoPrior& prior, const Condition& condition, std::uint64_t seed);

// Softmax responsibilities of each component for z_t ~ marginal at alpha_bar.
std::vector<double> responsibilities(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                                     const Condition& condition);

// log p_t(z_t) including all normalising constants
double log_marginal_density(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                            const Condition& condition);

// Exact E[z_0 | z_t].
VideoLatent posterior_mean(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                           const Condition& condition);

// Exact epsilon prediction, (z_t - sqrt(ab) E[z_0|z_t]) / sqrt(1 - ab). Requires ab < 1.
VideoLatent eps_prediction(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                           const Condition& condition);

// Index of the component with the largest responsibility at alpha_bar = 1.
std::size_t nearest_mode(const MixtureVideoPrior& prior, const VideoLatent& z0, const Condition& condition);

// Any epsilon predictor the samplers can drive.
class EpsPredictor {
public:
    virtual ~EpsPredictor() = default;
    virtual VideoLatent predict(const VideoLatent& z_t, double alpha_bar, const Condition& condition) const = 0;
};

class PriorDenoiser final : public EpsPredictor {
public:
    explicit PriorDenoiser(const MixtureVideoPrior& prior) : prior_(&prior) {}

    VideoLatent predict(const VideoLatent& z_t, double alpha_bar, const Condition& condition) const override {
        return eps_prediction(*prior_, z_t, alpha_bar, condition);
    }
    const MixtureVideoPrior& prior() const { return *prior_; }

private:
    const MixtureVideoPrior* prior_;
};

}  // namespace videoguide
