#include "videoguide/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "videoguide/rng.hpp"

namespace videoguide {

const std::vector<double>& GaussianVideoComponent::mean(const Condition& c) const {
    if (auto it = means.find(c); it != means.end()) return it->second;
    return means.at(Condition::null());
}

MixtureVideoPrior::MixtureVideoPrior(LatentShape shape, std::vector<WeightedComponent> components)
    : shape_(shape), components_(std::move(components)) {
    if (shape_.frames < 2) throw DomainError("video priors need at least 2 frames");
    if (components_.empty()) throw DomainError("mixture prior needs at least one component");
    double total = 0.0;
    for (const auto& wc : components_) {
        if (!(wc.weight > 0.0)) throw DomainError("mixture weights must be positive");
        const auto& c = wc.component;
        if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) throw DomainError("component sigma must be positive");
        if (!(c.rho >= 0.0 && c.rho < 1.0)) throw DomainError("component rho must lie in [0, 1)");
        if (!c.means.contains(Condition::null())) throw DomainError("component lacks a null-condition mean");
        for (const auto& [cond, m] : c.means)
            if (m.size() != shape_.frame_size())
                throw ShapeError("component mean for " + cond.str() + " has " + std::to_string(m.size()) +
                                 " entries, frame size is " + std::to_string(shape_.frame_size()));
        total += wc.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture weights must sum to 1");
}

MixtureVideoPrior MixtureVideoPrior::gaussian(LatentShape shape, double sigma, double rho, double mean) {
    GaussianVideoComponent c;
    c.sigma = sigma;
    c.rho = rho;
    c.means[Condition::null()] = std::vector<double>(shape.frame_size(), mean);
    return MixtureVideoPrior(shape, {{1.0, std::move(c)}});
}

VideoLatent sample_prior(const MixtureVideoPrior& prior, const Condition& condition, RngStream& rng) {
    const auto& comps = prior.components();
    std::size_t k = comps.size() - 1;
    if (comps.size() > 1) {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) {
            acc += comps[i].weight;
            if (u < acc) {
                k = i;
                break;
            }
        }
    }
    const auto& c = comps[k].component;
    const auto& m = c.mean(condition);
    const LatentShape& shape = prior.shape();
    const std::size_t p = shape.frame_size();
    const double shared_sd = c.sigma * std::sqrt(c.rho);
    const double own_sd = c.sigma * std::sqrt(1.0 - c.rho);

    std::vector<double> shared(p);
    for (auto& s : shared) s = shared_sd * rng.normal();
    VideoLatent z(shape);
    for (int n = 0; n < shape.frames; ++n) {
        auto f = z.frame(n);
        for (std::size_t i = 0; i < p; ++i) f[i] = m[i] + shared[i] + own_sd * rng.normal();
    }
    return z;
}

VideoLatent sample_prior(const MixtureVideoPrior& prior, const Condition& condition, std::uint64_t seed) {
    RngStream rng(seed);
    return sample_prior(prior, condition, rng);
}

namespace {

// Per-component quantities of the marginal N(sqrt(ab) m, ab Sigma + (1 - ab) I),
// using the two-eigenvalue frame decomposition of Sigma.
struct ComponentTerms {
    std::vector<double> frame_mean;  // frame average of d = z - sqrt(ab) m, length P
    VideoLatent residual;            // d minus its frame average
    double shared_var = 0.0;         // ab lambda_shared + 1 - ab
    double residual_var = 0.0;       // ab lambda_residual + 1 - ab
    double log_likelihood = 0.0;     // log w_k + log N(z; ...)
};

ComponentTerms component_terms(const MixtureVideoPrior& prior, const WeightedComponent& wc, const VideoLatent& z,
                               double ab, const Condition& cond) {
    const LatentShape& shape = prior.shape();
    const auto& c = wc.component;
    const auto& m = c.mean(cond);
    const std::size_t p = shape.frame_size();
    const int frames = shape.frames;
    const double sab = std::sqrt(ab);

    ComponentTerms out;
    out.frame_mean.assign(p, 0.0);
    out.residual = VideoLatent(shape);
    for (int n = 0; n < frames; ++n) {
        auto zf = z.frame(n);
        auto rf = out.residual.frame(n);
        for (std::size_t i = 0; i < p; ++i) {
            rf[i] = zf[i] - sab * m[i];
            out.frame_mean[i] += rf[i];
        }
    }
    for (auto& v : out.frame_mean) v /= frames;
    double mean_sq = 0.0;
    for (double v : out.frame_mean) mean_sq += v * v;
    for (int n = 0; n < frames; ++n) {
        auto rf = out.residual.frame(n);
        for (std::size_t i = 0; i < p; ++i) rf[i] -= out.frame_mean[i];
    }
    out.shared_var = ab * c.shared_eigenvalue(frames) + (1.0 - ab);
    out.residual_var = ab * c.residual_eigenvalue() + (1.0 - ab);
    if (!(out.shared_var > 0.0 && out.residual_var > 0.0))
        throw NumericError("marginal covariance lost positive definiteness");

    const double quad = frames * mean_sq / out.shared_var + out.residual.squared_norm() / out.residual_var;
    const double logdet = double(p) * std::log(out.shared_var) + double(p) * (frames - 1) * std::log(out.residual_var);
    out.log_likelihood = std::log(wc.weight) - 0.5 * (quad + logdet + double(shape.size()) * std::log(2.0 * std::numbers::pi));
    return out;
}

void check_alpha_bar(double ab) {
    if (!(ab > 0.0 && ab <= 1.0)) throw DomainError("alpha_bar must lie in (0, 1]");
}

void check_input(const MixtureVideoPrior& prior, const VideoLatent& z) {
    if (z.shape() != prior.shape())
        throw ShapeError("latent shape " + z.shape().str() + " does not match prior shape " + prior.shape().str());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - top);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

std::vector<ComponentTerms> all_terms(const MixtureVideoPrior& prior, const VideoLatent& z, double ab,
                                      const Condition& cond) {
    check_alpha_bar(ab);
    check_input(prior, z);
    std::vector<ComponentTerms> terms;
    terms.reserve(prior.size());
    for (const auto& wc : prior.components()) terms.push_back(component_terms(prior, wc, z, ab, cond));
    return terms;
}

std::vector<double> weights_of(const std::vector<ComponentTerms>& terms) {
    std::vector<double> logits(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k) logits[k] = terms[k].log_likelihood;
    return softmax(logits);
}

// Sigma_k-weighted (shared_scale, residual_scale) application of A_k^{-1} d_k, accumulated into out.
void accumulate(VideoLatent& out, const ComponentTerms& t, double weight, double shared_scale, double residual_scale) {
    const auto& shape = out.shape();
    const std::size_t p = shape.frame_size();
    for (int n = 0; n < shape.frames; ++n) {
        auto of = out.frame(n);
        auto rf = t.residual.frame(n);
        for (std::size_t i = 0; i < p; ++i)
            of[i] += weight * (shared_scale * t.frame_mean[i] / t.shared_var + residual_scale * rf[i] / t.residual_var);
    }
}

}  // namespace

std::vector<double> responsibilities(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                                     const Condition& condition) {
    return weights_of(all_terms(prior, z_t, alpha_bar, condition));
}

double log_marginal_density(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                            const Condition& condition) {
    const auto terms = all_terms(prior, z_t, alpha_bar, condition);
    double top = terms.front().log_likelihood;
    for (const auto& t : terms) top = std::max(top, t.log_likelihood);
    double total = 0.0;
    for (const auto& t : terms) total += std::exp(t.log_likelihood - top);
    return top + std::log(total);
}

VideoLatent posterior_mean(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                           const Condition& condition) {
    const auto terms = all_terms(prior, z_t, alpha_bar, condition);
    const auto r = weights_of(terms);
    const double sab = std::sqrt(alpha_bar);
    const int frames = prior.shape().frames;
    VideoLatent out(prior.shape());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& c = prior.components()[k].component;
        const auto& m = c.mean(condition);
        for (int n = 0; n < frames; ++n) {
            auto of = out.frame(n);
            for (std::size_t i = 0; i < m.size(); ++i) of[i] += r[k] * m[i];
        }
        accumulate(out, terms[k], r[k], sab * c.shared_eigenvalue(frames), sab * c.residual_eigenvalue());
    }
    return out;
}

VideoLatent eps_prediction(const MixtureVideoPrior& prior, const VideoLatent& z_t, double alpha_bar,
                           const Condition& condition) {
    if (!(alpha_bar < 1.0)) throw DomainError("eps_prediction is undefined at alpha_bar = 1");
    // z - sqrt(ab) mu_k = (1 - ab) A_k^{-1} d_k, so eps_k = sqrt(1 - ab) A_k^{-1} d_k
    const auto terms = all_terms(prior, z_t, alpha_bar, condition);
    const auto r = weights_of(terms);
    const double s = std::sqrt(1.0 - alpha_bar);
    VideoLatent out(prior.shape());
    for (std::size_t k = 0; k < terms.size(); ++k) accumulate(out, terms[k], r[k], s, s);
    return out;
}

std::size_t nearest_mode(const MixtureVideoPrior& prior, const VideoLatent& z0, const Condition& condition) {
    const auto r = responsibilities(prior, z0, 1.0, condition);
    return std::size_t(std::max_element(r.begin(), r.end()) - r.begin());
}

}  // namespace videoguide
