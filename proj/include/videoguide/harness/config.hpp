#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "videoguide/guidance.hpp"
#include "videoguide/prior.hpp"
#include "videoguide/schedule.hpp"

namespace videoguide::harness {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { sample, guide, ablate, distill, baseline, nfe, cfg_compare };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& text);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::sample;

    MixtureVideoPrior sampler_prior = default_sampler_prior();
    std::optional<MixtureVideoPrior> guide_prior;  // absent: self-guided
    LinearScheduleSpec sampler_schedule = kSamplerSchedule;
    LinearScheduleSpec guide_schedule = kGuideSchedule;

    int grid_steps = 50;
    GuidanceConfig guidance;
    Condition condition = Condition::prompt(1);

    int sample_count = 100;
    std::uint64_t master_seed = 0;
    std::string output_path = "videoguide.csv";
    int threads = 0;  // 0: hardware concurrency
    std::string plot_path;

    int freeinit_iterations = 5;
    int reference_draws = 1000;

    std::string sweep_parameter = "beta";
    std::vector<double> sweep_values{0.9, 0.8, 0.7, 0.6, 0.5};

    int target_mode = 1;  // distill: index into the union of both priors' components

    // Throws ConfigError.
    void validate() const;

    static MixtureVideoPrior default_sampler_prior();

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Distillation setup: the sampler knows mode A only, the guide mixes A and
// B equally, and B (union index 1) is the target.
ExperimentConfig distill_preset();

// Flat sectioned key-value text:
//   [experiment] [guidance] [sampler.schedule] [guide.schedule]
//   [sampler.prior] [sampler.prior.K] [guide.prior] [guide.prior.K]
// `#` starts a comment. Unknown sections or keys are errors. A results CSV
// is also accepted: its embedded `# config:` block is parsed instead.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

// Canonical text form; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace videoguide::harness
