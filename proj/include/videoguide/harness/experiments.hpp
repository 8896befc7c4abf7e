#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "videoguide/guidance.hpp"
#include "videoguide/harness/config.hpp"
#include "videoguide/metrics.hpp"

namespace videoguide::harness {

enum class Method { unguided, videoguide, freeinit };
std::string to_string(Method method);

// Stream id for the imaging reference draws; run streams are 0..count-1.
inline constexpr std::uint64_t kReferenceStream = std::uint64_t(1) << 63;

// Schedules, priors and denoisers resolved from a config. Not copyable: the
// denoisers point into the stored priors.
class Models {
public:
    explicit Models(const ExperimentConfig& config);
    Models(const Models&) = delete;
    Models& operator=(const Models&) = delete;

    DiffusionModel sampler() const { return {sampler_denoiser_, sampler_schedule_}; }
    // nullptr when the config has no guide prior (self-guided).
    const DiffusionModel* guide() const { return guide_ ? &*guide_ : nullptr; }

    const MixtureVideoPrior& sampler_prior() const { return sampler_prior_; }
    const std::optional<MixtureVideoPrior>& guide_prior() const { return guide_prior_; }
    const NoiseSchedule& sampler_schedule() const { return sampler_schedule_; }
    const NoiseSchedule& guide_schedule() const { return guide_schedule_; }
    const TimestepGrid& grid() const { return grid_; }

private:
    MixtureVideoPrior sampler_prior_;
    std::optional<MixtureVideoPrior> guide_prior_;
    NoiseSchedule sampler_schedule_;
    NoiseSchedule guide_schedule_;
    TimestepGrid grid_;
    PriorDenoiser sampler_denoiser_;
    std::optional<PriorDenoiser> guide_denoiser_;
    std::optional<DiffusionModel> guide_;
};

// Calls fn(0..count-1) on up to `threads` workers (0: all cores). The
// exception of the lowest failing index is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

// Analytic evaluation count of one run of `method`.
std::int64_t analytic_nfe(Method method, const ExperimentConfig& config, const GuidanceConfig& guidance,
                          const Models& models);

struct RunBatch {
    std::vector<VideoLatent> samples;
    std::int64_t nfe_per_run = 0;  // identical for every run, checked
};

// Run i draws from stream (master_seed, i), so methods sharing a config see
// matched initial noise. Throws NumericError if a trace's nfe disagrees with
// analytic_nfe.
RunBatch run_batch(const ExperimentConfig& config, const Models& models, Method method,
                   const GuidanceConfig& guidance);

struct ProxySummary {
    std::vector<double> subject, background, imaging, smoothness;  // per sample
    MeanStderr subject_stats, background_stats, imaging_stats, smoothness_stats;
    double interframe_correlation = 0.0;
    int sample_count = 0;
};

ReferenceSpectrum harness_reference(const ExperimentConfig& config, const Models& models);
ProxySummary summarize_batch(const RunBatch& batch, const ReferenceSpectrum& reference);

// Sweep value applied to a copy of `guidance`; integer knobs reject fractions.
GuidanceConfig apply_sweep(const GuidanceConfig& guidance, const std::string& parameter, double value);

// Equal-weight union of the distinct components of both priors. Throws
// ConfigError when two components share a mean under `condition`.
MixtureVideoPrior union_prior(const MixtureVideoPrior& a, const std::optional<MixtureVideoPrior>& b,
                              const Condition& condition);

// Fraction of samples whose nearest union mode is k, for every k.
std::vector<double> mode_fractions(const std::vector<VideoLatent>& samples, const MixtureVideoPrior& modes,
                                   const Condition& condition);

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// Runs the experiment named by config.kind and returns its rows. The distill
// baseline is the same guided pipeline at beta = 1, so only the guide's
// contribution to the denoised estimates differs between its two runs.
Table run_table(const ExperimentConfig& config);

// `#` header lines (schema, seed, embedded config), column line, rows.
std::string render_csv(const ExperimentConfig& config, const Table& table);

// Line chart of every proxy column against the swept value.
std::string render_svg(const Table& table, const std::string& parameter);

// run_table, then writes config.output_path (and config.plot_path for
// ablations) through a temporary file. Nothing is left behind on failure.
Table run_experiment(const ExperimentConfig& config);

}  // namespace videoguide::harness
