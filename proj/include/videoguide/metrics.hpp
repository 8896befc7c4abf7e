#pragma once

#include <string>
#include <vector>

#include "videoguide/freqfilter.hpp"
#include "videoguide/latent.hpp"
#include "videoguide/prior.hpp"
#include "videoguide/rng.hpp"

namespace videoguide {

// Proxies are computed on latents, not decoded frames; they track the
// direction of the perceptual metrics they are named after, not their values.

inline constexpr double kSmoothnessStabilizer = 1e-8;
inline constexpr double kMetricCutoff = 0.25;
inline constexpr int kMetricOrder = 4;

// Each frame has its own spatial mean removed (per channel), then the mean
// cosine of consecutive frames. A pair of all-zero residuals counts as 1,
// a single zero residual as 0.
double subject_consistency_proxy(const VideoLatent& video);

// Same as the subject proxy after a per-frame spatial Butterworth low-pass
// (gamma 0.25, n 4, zero temporal frequency slice of the 3D mask).
double background_consistency_proxy(const VideoLatent& video);

// Mean per-frame high-band spectral energy: per frame, sum over spatial DFT
// bins of |(1 - g) F|^2 / (H W), g from the Butterworth mask at zero temporal
// frequency, averaged over frames and channels.
double high_frequency_energy(const VideoLatent& video, double cutoff = kMetricCutoff, int order = kMetricOrder);

struct ReferenceSpectrum {
    double high_frequency_energy = 0.0;
    int draws = 0;
};

inline constexpr int kMinReferenceDraws = 1000;

// Mean high_frequency_energy of `draws` prior samples (stream `seed`).
ReferenceSpectrum reference_spectrum(const MixtureVideoPrior& prior, const Condition& condition, int draws,
                                     std::uint64_t seed);
ReferenceSpectrum reference_spectrum(const MixtureVideoPrior& prior, const Condition& condition, int draws,
                                     RngStream& rng);

// high_frequency_energy(video) / reference energy; 1 means no high-band loss.
double imaging_quality_proxy(const VideoLatent& video, const ReferenceSpectrum& reference);

// 1 - mean_k |x_{k+1} - 2 x_k + x_{k-1}| / (mean_k |x_{k+1} - x_k| + 1e-8)
double motion_smoothness_proxy(const VideoLatent& video);

// Pooled Pearson correlation of coordinate pairs (frame k, frame k+1) across
// the sample set, each coordinate centered by its across-sample mean.
double interframe_correlation(const std::vector<VideoLatent>& videos);

struct MetricsReport {
    double subject_consistency_proxy = 0.0;
    double background_consistency_proxy = 0.0;
    double imaging_quality_proxy = 0.0;
    double motion_smoothness_proxy = 0.0;
    double interframe_correlation = 0.0;
    int sample_count = 0;

    // subject,background,imaging,smoothness,interframe_correlation,sample_count
    static std::string csv_header();
    std::string csv_row() const;
};

// Means of the per-video proxies plus the pooled correlation.
MetricsReport summarize(const std::vector<VideoLatent>& videos, const ReferenceSpectrum& reference);

// Mean and standard error of a sample of scalars.
struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};
MeanStderr mean_stderr(const std::vector<double>& values);

// Paired difference a_i - b_i.
MeanStderr paired_difference(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace videoguide
