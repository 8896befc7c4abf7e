#include "videoguide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "videoguide/rng.hpp"

namespace videoguide {

namespace {

VideoLatent frame_demeaned(const VideoLatent& video) {
    const auto& s = video.shape();
    VideoLatent out = video;
    const std::size_t plane = std::size_t(s.height) * s.width;
    for (int n = 0; n < s.frames; ++n) {
        auto f = out.frame(n);
        for (int c = 0; c < s.channels; ++c) {
            double mean = 0.0;
            for (std::size_t i = 0; i < plane; ++i) mean += f[c * plane + i];
            mean /= double(plane);
            for (std::size_t i = 0; i < plane; ++i) f[c * plane + i] -= mean;
        }
    }
    return out;
}

double consecutive_cosine(const VideoLatent& residual) {
    const int frames = residual.shape().frames;
    if (frames < 2) throw DomainError("consistency proxies need at least 2 frames");
    double total = 0.0;
    for (int n = 0; n + 1 < frames; ++n) {
        auto a = residual.frame(n);
        auto b = residual.frame(n + 1);
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0.0 && nb == 0.0) total += 1.0;
        else if (na == 0.0 || nb == 0.0) total += 0.0;
        else total += dot / std::sqrt(na * nb);
    }
    return total / double(frames - 1);
}

double norm_of_difference(std::span<const double> a, std::span<const double> b, std::span<const double> c, double wa,
                          double wb, double wc) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double v = wa * a[i] + wb * b[i] + wc * c[i];
        s += v * v;
    }
    return std::sqrt(s);
}

}  // namespace

double subject_consistency_proxy(const VideoLatent& video) { return consecutive_cosine(frame_demeaned(video)); }

double background_consistency_proxy(const VideoLatent& video) {
    const auto& s = video.shape();
    const auto mask = butterworth_mask(1, s.height, s.width, kMetricCutoff, kMetricOrder);
    const LatentShape frame_shape{1, s.channels, s.height, s.width};
    VideoLatent smoothed(s);
    for (int n = 0; n < s.frames; ++n) {
        auto f = video.frame(n);
        const VideoLatent single = lowpass(VideoLatent(frame_shape, std::vector<double>(f.begin(), f.end())), mask);
        std::copy(single.raw().begin(), single.raw().end(), smoothed.frame(n).begin());
    }
    return consecutive_cosine(frame_demeaned(smoothed));
}

double high_frequency_energy(const VideoLatent& video, double cutoff, int order) {
    const auto& s = video.shape();
    const auto mask = butterworth_mask(1, s.height, s.width, cutoff, order);
    const LatentShape frame_shape{1, s.channels, s.height, s.width};
    const double bins = double(s.height) * s.width;
    double energy = 0.0;
    for (int n = 0; n < s.frames; ++n) {
        auto f = video.frame(n);
        const VideoLatent single(frame_shape, std::vector<double>(f.begin(), f.end()));
        for (int c = 0; c < s.channels; ++c) {
            const auto spec = channel_spectrum(single, c);
            for (std::size_t i = 0; i < spec.size(); ++i) {
                const double h = 1.0 - mask.gains[i];
                energy += h * h * std::norm(spec[i]) / bins;
            }
        }
    }
    return energy / (double(s.frames) * s.channels);
}

ReferenceSpectrum reference_spectrum(const MixtureVideoPrior& prior, const Condition& condition, int draws,
                                     std::uint64_t seed) {
    RngStream rng(seed);
    return reference_spectrum(prior, condition, draws, rng);
}

ReferenceSpectrum reference_spectrum(const MixtureVideoPrior& prior, const Condition& condition, int draws,
                                     RngStream& rng) {
    if (draws < kMinReferenceDraws)
        throw DomainError("reference statistics need at least " + std::to_string(kMinReferenceDraws) + " draws");
    double total = 0.0;
    for (int i = 0; i < draws; ++i) total += high_frequency_energy(sample_prior(prior, condition, rng));
    return {total / draws, draws};
}

double imaging_quality_proxy(const VideoLatent& video, const ReferenceSpectrum& reference) {
    if (!(reference.high_frequency_energy > 0.0)) throw DomainError("reference high-frequency energy is zero");
    return high_frequency_energy(video) / reference.high_frequency_energy;
}

double motion_smoothness_proxy(const VideoLatent& video) {
    const int frames = video.shape().frames;
    if (frames < 3) throw DomainError("motion_smoothness_proxy needs at least 3 frames");
    double first = 0.0, second = 0.0;
    for (int n = 0; n + 1 < frames; ++n)
        first += norm_of_difference(video.frame(n + 1), video.frame(n), video.frame(n), 1.0, -1.0, 0.0);
    for (int n = 1; n + 1 < frames; ++n)
        second += norm_of_difference(video.frame(n + 1), video.frame(n), video.frame(n - 1), 1.0, -2.0, 1.0);
    first /= double(frames - 1);
    second /= double(frames - 2);
    return 1.0 - second / (first + kSmoothnessStabilizer);
}

double interframe_correlation(const std::vector<VideoLatent>& videos) {
    if (videos.size() < 2) throw DomainError("interframe_correlation needs at least 2 videos");
    const LatentShape& s = videos.front().shape();
    for (const auto& v : videos)
        if (v.shape() != s) throw ShapeError("interframe_correlation: videos differ in shape");
    if (s.frames < 2) throw DomainError("interframe_correlation needs at least 2 frames");
    const double count = double(videos.size());
    std::vector<double> mean(s.size(), 0.0);
    for (const auto& v : videos)
        for (std::size_t i = 0; i < s.size(); ++i) mean[i] += v[i];
    for (auto& m : mean) m /= count;

    const std::size_t p = s.frame_size();
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (const auto& v : videos)
        for (int n = 0; n + 1 < s.frames; ++n)
            for (std::size_t i = 0; i < p; ++i) {
                const double a = v[n * p + i] - mean[n * p + i];
                const double b = v[(n + 1) * p + i] - mean[(n + 1) * p + i];
                cov += a * b;
                var_a += a * a;
                var_b += b * b;
            }
    if (!(var_a > 0.0 && var_b > 0.0)) throw NumericError("interframe_correlation: degenerate variance");
    return cov / std::sqrt(var_a * var_b);
}

std::string MetricsReport::csv_header() {
    return "subject_consistency,background_consistency,imaging_quality,motion_smoothness,interframe_correlation,"
           "sample_count";
}

std::string MetricsReport::csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%d", subject_consistency_proxy,
                  background_consistency_proxy, imaging_quality_proxy, motion_smoothness_proxy, interframe_correlation,
                  sample_count);
    return buf;
}

MetricsReport summarize(const std::vector<VideoLatent>& videos, const ReferenceSpectrum& reference) {
    if (videos.empty()) throw DomainError("summarize needs at least one video");
    MetricsReport r;
    for (const auto& v : videos) {
        r.subject_consistency_proxy += subject_consistency_proxy(v);
        r.background_consistency_proxy += background_consistency_proxy(v);
        r.imaging_quality_proxy += imaging_quality_proxy(v, reference);
        r.motion_smoothness_proxy += motion_smoothness_proxy(v);
    }
    const double n = double(videos.size());
    r.subject_consistency_proxy /= n;
    r.background_consistency_proxy /= n;
    r.imaging_quality_proxy /= n;
    r.motion_smoothness_proxy /= n;
    r.interframe_correlation = videos.size() >= 2 ? interframe_correlation(videos) : 0.0;
    r.sample_count = int(videos.size());
    return r;
}

MeanStderr mean_stderr(const std::vector<double>& values) {
    if (values.empty()) throw DomainError("mean_stderr of an empty sample");
    const double n = double(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

MeanStderr paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("paired_difference: sample sizes differ");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return mean_stderr(d);
}

}  // namespace videoguide
