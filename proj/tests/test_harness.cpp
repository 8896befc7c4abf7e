#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "videoguide/harness/config.hpp"
#include "videoguide/harness/experiments.hpp"

using namespace videoguide;
using namespace videoguide::harness;

namespace {

ExperimentConfig small(ExperimentKind kind, int samples) {
    ExperimentConfig c;
    c.kind = kind;
    c.sample_count = samples;
    c.master_seed = 17;
    c.grid_steps = 20;
    c.threads = 1;
    return c;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

static std::string error_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "no error";
}

TEST_CASE("empty config gives the documented defaults") {
    const ExperimentConfig c = parse_config_text("");
    CHECK(c == ExperimentConfig{});
    CHECK_FALSE(c.guide_prior.has_value());
    CHECK(c.grid_steps == 50);
    CHECK(c.guidance == GuidanceConfig{});
    CHECK(c.sampler_schedule == kSamplerSchedule);
    CHECK(c.guide_schedule == kGuideSchedule);
}

TEST_CASE("config validation errors") {
    CHECK(error_of("[guidance]\nbeta = 0.3\n").find("β ∈ [0.5, 1]") != std::string::npos);
    CHECK(error_of("[experiment]\nkind = sample\n\nbogus = 1\n").find("line 4") != std::string::npos);
    CHECK(error_of("[experiment]\nsamples = 1\nsamples = 2\n").find("duplicate key") != std::string::npos);
    CHECK(error_of("[nowhere]\n").find("unknown section") != std::string::npos);
    CHECK(error_of("[guidance]\ntau = ten\n").find("line 2") != std::string::npos);
    CHECK(error_of("samples = 3\n").find("outside any section") != std::string::npos);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nsamples = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\ncondition = 7\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = render\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[guidance]\ninterp_mode = cfg++:2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[sampler.prior]\ncomponents = 2\n[sampler.prior.0]\nweight = 1\nsigma = 1\nrho = 0\n"
                                      "mean.null = 0\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[guide.prior]\ncomponents = 1\n[guide.prior.0]\nweight = 1\nsigma = 1\nrho = 0\n"
                                      "mean.null = 1,2,3\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config("/nonexistent/videoguide.ini"), ConfigError);
}

TEST_CASE("config round trip") {
    ExperimentConfig c = distill_preset();
    c.master_seed = 123456789012345ull;
    c.guidance.interpolation_scale = 0.7;
    c.guidance.filter_enabled = false;
    c.guidance.interp_guidance = GuidanceMode::cfg(3.25);
    c.guide_schedule.beta_end = 0.0111;
    c.sweep_parameter = "tau";
    c.sweep_values = {1, 5, 10};
    c.plot_path = "plots/tau.svg";
    std::vector<double> layout(16);
    for (int i = 0; i < 16; ++i) layout[i] = 0.1 * i - 0.333333333333;
    GaussianVideoComponent extra;
    extra.sigma = 0.7;
    extra.rho = 0.45;
    extra.means[Condition::null()] = layout;
    extra.means[Condition::prompt(3)] = std::vector<double>(16, 1.0 / 3.0);
    c.guide_prior = MixtureVideoPrior(LatentShape{}, {{0.3, c.guide_prior->components()[0].component},
                                                     {0.7, extra}});
    c.condition = Condition::prompt(3);
    const std::string text = serialize_config(c);
    const ExperimentConfig back = parse_config_text(text);
    CHECK(back == c);
    CHECK(serialize_config(back) == text);
}

TEST_CASE("results files reproduce their config") {
    const auto dir = std::filesystem::temp_directory_path() / "videoguide_harness_test";
    std::filesystem::create_directories(dir);
    ExperimentConfig c = small(ExperimentKind::sample, 1);
    c.output_path = (dir / "one.csv").string();
    const Table t = run_experiment(c);
    CHECK(t.rows.size() == 1);
    const std::string first = slurp(c.output_path);
    CHECK(first.find("# schema=1\n") != std::string::npos);
    CHECK(first.find("# master_seed=17\n") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(c.output_path + ".tmp"));
    const ExperimentConfig again = parse_config(c.output_path);
    CHECK(again == c);
    run_experiment(again);
    CHECK(slurp(c.output_path) == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("csv output does not depend on the thread count") {
    ExperimentConfig c = small(ExperimentKind::guide, 6);
    c.guide_prior = MixtureVideoPrior::gaussian(LatentShape{}, 1.0, 0.95);
    const std::string one = render_csv(c, run_table(c));
    c.threads = 3;
    const std::string three = render_csv(c, run_table(c));
    c.threads = 1;
    CHECK(render_csv(c, run_table(c)) == one);
    // Only the embedded threads key differs.
    const auto strip = [](std::string s) {
        const auto p = s.find("threads = ");
        return s.erase(p, s.find('\n', p) - p);
    };
    CHECK(strip(one) == strip(three));
}

TEST_CASE("evaluation count table") {
    ExperimentConfig c = small(ExperimentKind::nfe, 1);
    c.grid_steps = 50;
    c.guide_prior = MixtureVideoPrior::gaussian(LatentShape{}, 1.0, 0.95);
    const Table t = run_table(c);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0][1] == "freeinit");
    CHECK(t.rows[0][3] == "500");
    CHECK(t.rows[0][4] == "500");
    CHECK(t.rows[1][3] == "210");
    CHECK(t.rows[1][4] == "210");
    CHECK(t.rows[2][3] == "100");
    CHECK(std::stod(t.rows[0][5]) == doctest::Approx(500.0 / 210.0));
}

TEST_CASE("ablation rows follow the sweep") {
    ExperimentConfig c = small(ExperimentKind::ablate, 4);
    c.sweep_parameter = "interp_steps";
    c.sweep_values = {0, 2};
    const Table t = run_table(c);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][6] == "40");
    CHECK(t.rows[1][6] == std::to_string(40 + 2 * 2 * 11));
    const std::string svg = render_svg(t, "interp_steps");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("subject_consistency") != std::string::npos);
    CHECK_THROWS_AS(apply_sweep(GuidanceConfig{}, "tau", 2.5), ConfigError);
    CHECK_THROWS_AS(apply_sweep(GuidanceConfig{}, "beta", 0.2), ConfigError);
}

TEST_CASE("cfg comparison rows share the seed and coincide without a condition") {
    ExperimentConfig c = small(ExperimentKind::cfg_compare, 3);
    c.condition = Condition::null();
    const Table t = run_table(c);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][4] == t.rows[1][4]);
    CHECK(std::vector(t.rows[0].begin() + 6, t.rows[0].end()) == std::vector(t.rows[1].begin() + 6, t.rows[1].end()));
}

TEST_CASE("distillation bookkeeping") {
    ExperimentConfig c = distill_preset();
    c.sample_count = 20;
    c.grid_steps = 20;
    c.threads = 1;
    c.guidance.interpolation_scale = 1.0;
    Table t = run_table(c);
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[0][7] == t.rows[2][7]);
    CHECK(t.rows[1][7] == t.rows[3][7]);
    CHECK(t.rows[1][6] == "1");

    ExperimentConfig same = c;
    same.sampler_prior = *c.guide_prior;
    same.guidance.interpolation_scale = 0.5;
    same.sample_count = 100;
    t = run_table(same);
    const double a = std::stod(t.rows[1][7]), b = std::stod(t.rows[3][7]);
    const double se = std::hypot(std::stod(t.rows[1][8]), std::stod(t.rows[3][8]));
    CHECK(std::abs(a - b) <= 2.0 * se + 1e-12);

    ExperimentConfig clash = c;
    GaussianVideoComponent twin = c.sampler_prior.components()[0].component;
    twin.sigma = 2.0;
    clash.guide_prior = MixtureVideoPrior(LatentShape{}, {{0.5, c.sampler_prior.components()[0].component}, {0.5, twin}});
    CHECK_THROWS_AS(run_table(clash), ConfigError);

    ExperimentConfig no_guide = c;
    no_guide.guide_prior.reset();
    CHECK_THROWS_AS(run_table(no_guide), ConfigError);
}

TEST_CASE("parallel_for reports the lowest failing index") {
    std::vector<int> hit(50, 0);
    parallel_for(50, 4, [&](int i) { hit[i] += 1; });
    CHECK(std::count(hit.begin(), hit.end(), 1) == 50);
    CHECK_THROWS_WITH(parallel_for(50, 4,
                                   [](int i) {
                                       if (i % 7 == 3) throw std::runtime_error(std::to_string(i));
                                   }),
                      "3");
}

TEST_CASE("failed runs leave no output behind") {
    const auto dir = std::filesystem::temp_directory_path() / "videoguide_harness_fail";
    std::filesystem::create_directories(dir);
    ExperimentConfig c = small(ExperimentKind::distill, 2);
    c.output_path = (dir / "x.csv").string();
    CHECK_THROWS_AS(run_experiment(c), ConfigError);
    CHECK_FALSE(std::filesystem::exists(c.output_path));
    CHECK_FALSE(std::filesystem::exists(c.output_path + ".tmp"));
    std::filesystem::remove_all(dir);
}
