#include "videoguide/harness/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace videoguide::harness {

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

const std::vector<std::string> kProxyColumns{
    "experiment",        "method",
    "param",             "value",
    "seed",              "sample_count",
    "nfe",               "subject_consistency",
    "subject_consistency_se", "background_consistency",
    "background_consistency_se", "imaging_quality",
    "imaging_quality_se", "motion_smoothness",
    "motion_smoothness_se", "interframe_correlation",
};

std::vector<std::string> proxy_row(const ExperimentConfig& c, const std::string& method, const std::string& param,
                                   const std::string& value, const RunBatch& batch, const ProxySummary& s) {
    return {to_string(c.kind),
            method,
            param,
            value,
            std::to_string(c.master_seed),
            std::to_string(s.sample_count),
            std::to_string(batch.nfe_per_run),
            num(s.subject_stats.mean),
            num(s.subject_stats.stderr_),
            num(s.background_stats.mean),
            num(s.background_stats.stderr_),
            num(s.imaging_stats.mean),
            num(s.imaging_stats.stderr_),
            num(s.smoothness_stats.mean),
            num(s.smoothness_stats.stderr_),
            s.sample_count >= 2 ? num(s.interframe_correlation) : std::string()};
}

std::string guide_label(const Models& m) { return m.guide() ? "external" : "self"; }

Table sample_table(const ExperimentConfig& c, const Models& m) {
    const RunBatch batch = run_batch(c, m, Method::unguided, c.guidance);
    const ReferenceSpectrum ref = harness_reference(c, m);
    Table t{{"experiment", "method", "seed", "stream", "nfe", "subject_consistency", "background_consistency",
             "imaging_quality", "motion_smoothness"},
            {}};
    for (std::size_t i = 0; i < batch.samples.size(); ++i) {
        const auto& v = batch.samples[i];
        t.rows.push_back({to_string(c.kind), to_string(Method::unguided), std::to_string(c.master_seed),
                          std::to_string(i), std::to_string(batch.nfe_per_run), num(subject_consistency_proxy(v)),
                          num(background_consistency_proxy(v)), num(imaging_quality_proxy(v, ref)),
                          num(motion_smoothness_proxy(v))});
    }
    return t;
}

Table comparison_table(const ExperimentConfig& c, const Models& m, const std::vector<Method>& methods) {
    const ReferenceSpectrum ref = harness_reference(c, m);
    Table t{kProxyColumns, {}};
    for (Method method : methods) {
        const RunBatch batch = run_batch(c, m, method, c.guidance);
        std::string param = "-", value = "-";
        if (method == Method::videoguide) param = "guide", value = guide_label(m);
        if (method == Method::freeinit) param = "iterations", value = std::to_string(c.freeinit_iterations);
        t.rows.push_back(proxy_row(c, to_string(method), param, value, batch, summarize_batch(batch, ref)));
    }
    return t;
}

Table ablate_table(const ExperimentConfig& c, const Models& m) {
    const ReferenceSpectrum ref = harness_reference(c, m);
    Table t{kProxyColumns, {}};
    for (double v : c.sweep_values) {
        const GuidanceConfig g = apply_sweep(c.guidance, c.sweep_parameter, v);
        const RunBatch batch = run_batch(c, m, Method::videoguide, g);
        t.rows.push_back(proxy_row(c, to_string(Method::videoguide), c.sweep_parameter, num(v), batch,
                                   summarize_batch(batch, ref)));
    }
    return t;
}

Table cfg_compare_table(const ExperimentConfig& c, const Models& m) {
    const ReferenceSpectrum ref = harness_reference(c, m);
    Table t{kProxyColumns, {}};
    for (const GuidanceMode& mode : {GuidanceMode::cfg(7.5), GuidanceMode::cfg_plus_plus(0.8)}) {
        GuidanceConfig g = c.guidance;
        g.interp_guidance = mode;
        const RunBatch batch = run_batch(c, m, Method::videoguide, g);
        t.rows.push_back(
            proxy_row(c, to_string(Method::videoguide), "interp_mode", mode.str(), batch, summarize_batch(batch, ref)));
    }
    return t;
}

Table distill_table(const ExperimentConfig& c, const Models& m) {
    if (!m.guide_prior()) throw ConfigError("distill needs a guide prior");
    const MixtureVideoPrior modes = union_prior(m.sampler_prior(), m.guide_prior(), c.condition);
    if (c.target_mode < 0 || std::size_t(c.target_mode) >= modes.size())
        throw ConfigError("target_mode " + std::to_string(c.target_mode) + " outside the " +
                          std::to_string(modes.size()) + " union modes");
    Table t{{"experiment", "method", "seed", "sample_count", "nfe", "mode", "is_target", "fraction", "fraction_se"}, {}};
    GuidanceConfig plain = c.guidance;
    plain.interpolation_scale = 1.0;
    for (const auto& [label, g] : {std::pair{std::string("unguided"), plain}, std::pair{std::string("videoguide"), c.guidance}}) {
        const RunBatch batch = run_batch(c, m, Method::videoguide, g);
        const auto fractions = mode_fractions(batch.samples, modes, c.condition);
        const double n = double(batch.samples.size());
        for (std::size_t k = 0; k < fractions.size(); ++k) {
            const double p = fractions[k];
            t.rows.push_back({to_string(c.kind), label, std::to_string(c.master_seed),
                              std::to_string(batch.samples.size()), std::to_string(batch.nfe_per_run),
                              std::to_string(k), int(k) == c.target_mode ? "1" : "0", num(p),
                              num(std::sqrt(p * (1.0 - p) / n))});
        }
    }
    return t;
}

Table nfe_table(const ExperimentConfig& c, const Models& m) {
    ExperimentConfig single = c;
    single.sample_count = 1;
    Table t{{"experiment", "method", "seed", "nfe_measured", "nfe_analytic", "ratio_to_videoguide"}, {}};
    const RunBatch vg = run_batch(single, m, Method::videoguide, c.guidance);
    for (Method method : {Method::freeinit, Method::videoguide, Method::unguided}) {
        const RunBatch b = method == Method::videoguide ? vg : run_batch(single, m, method, c.guidance);
        t.rows.push_back({to_string(c.kind), to_string(method), std::to_string(c.master_seed),
                          std::to_string(b.nfe_per_run), std::to_string(analytic_nfe(method, c, c.guidance, m)),
                          num(double(b.nfe_per_run) / double(vg.nfe_per_run))});
    }
    return t;
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    const fs::path tmp = target.string() + ".tmp";
    try {
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
            out << content;
            out.flush();
            if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
        fs::rename(tmp, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::unguided: return "unguided";
        case Method::videoguide: return "videoguide";
        case Method::freeinit: return "freeinit";
    }
    return "unknown";
}

Models::Models(const ExperimentConfig& config)
    : sampler_prior_(config.sampler_prior),
      guide_prior_(config.guide_prior),
      sampler_schedule_(build_linear_schedule(config.sampler_schedule)),
      guide_schedule_(build_linear_schedule(config.guide_schedule)),
      grid_(ddim_grid(config.sampler_schedule.total_steps, config.grid_steps)),
      sampler_denoiser_(sampler_prior_) {
    if (guide_prior_) {
        guide_denoiser_.emplace(*guide_prior_);
        guide_.emplace(DiffusionModel{*guide_denoiser_, guide_schedule_});
    }
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    int workers = threads > 0 ? threads : int(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, count);
    std::atomic<int> next{0};
    std::mutex failure_mutex;
    int failed_index = count;
    std::exception_ptr failure;
    auto work = [&]() {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
}

std::int64_t analytic_nfe(Method method, const ExperimentConfig& config, const GuidanceConfig& guidance,
                          const Models& models) {
    const std::int64_t base = kEvalsPerGuidedStep * std::int64_t(models.grid().size());
    switch (method) {
        case Method::unguided: return base;
        case Method::freeinit: return base * config.freeinit_iterations;
        case Method::videoguide: {
            const NoiseSchedule& g = models.guide() ? models.guide_schedule() : models.sampler_schedule();
            return videoguide_nfe(models.grid(), guidance, g);
        }
    }
    return 0;
}

RunBatch run_batch(const ExperimentConfig& config, const Models& models, Method method,
                   const GuidanceConfig& guidance) {
    guidance.validate();
    const LatentShape shape = models.sampler_prior().shape();
    const DiffusionModel sampler = models.sampler();
    std::optional<ButterworthMask3D> mask;
    if (method == Method::freeinit)
        mask = butterworth_mask(shape.frames, shape.height, shape.width, guidance.cutoff, guidance.filter_order);

    const int count = config.sample_count;
    std::vector<std::optional<VideoLatent>> samples(count);
    std::vector<std::int64_t> nfe(count, 0);
    parallel_for(count, config.threads, [&](int i) {
        RngStream rng(config.master_seed, std::uint64_t(i));
        SampleResult r = [&]() {
            switch (method) {
                case Method::unguided:
                    return sample(sampler.denoiser, sampler.schedule, models.grid(), shape, guidance.main_guidance,
                                  config.condition, rng);
                case Method::videoguide:
                    return videoguide_sample(sampler, models.guide(), models.grid(), shape, guidance, config.condition,
                                             rng);
                case Method::freeinit:
                    return freeinit_baseline(sampler, models.grid(), shape, config.freeinit_iterations, *mask,
                                             guidance.main_guidance, config.condition, rng);
            }
            throw std::logic_error("unknown method");
        }();
        if (!r.sample.all_finite()) throw NumericError(to_string(method) + " run " + std::to_string(i) + " diverged");
        nfe[i] = r.trace.nfe;
        samples[i] = std::move(r.sample);
    });

    const std::int64_t expected = analytic_nfe(method, config, guidance, models);
    RunBatch batch;
    batch.nfe_per_run = expected;
    for (int i = 0; i < count; ++i) {
        if (nfe[i] != expected)
            throw NumericError(to_string(method) + " run " + std::to_string(i) + " used " + std::to_string(nfe[i]) +
                               " evaluations, expected " + std::to_string(expected));
        batch.samples.push_back(std::move(*samples[i]));
    }
    return batch;
}

ReferenceSpectrum harness_reference(const ExperimentConfig& config, const Models& models) {
    RngStream rng(config.master_seed, kReferenceStream);
    return reference_spectrum(models.sampler_prior(), config.condition, config.reference_draws, rng);
}

ProxySummary summarize_batch(const RunBatch& batch, const ReferenceSpectrum& reference) {
    ProxySummary s;
    for (const auto& v : batch.samples) {
        s.subject.push_back(subject_consistency_proxy(v));
        s.background.push_back(background_consistency_proxy(v));
        s.imaging.push_back(imaging_quality_proxy(v, reference));
        s.smoothness.push_back(motion_smoothness_proxy(v));
    }
    s.subject_stats = mean_stderr(s.subject);
    s.background_stats = mean_stderr(s.background);
    s.imaging_stats = mean_stderr(s.imaging);
    s.smoothness_stats = mean_stderr(s.smoothness);
    s.sample_count = int(batch.samples.size());
    if (batch.samples.size() >= 2) s.interframe_correlation = interframe_correlation(batch.samples);
    return s;
}

GuidanceConfig apply_sweep(const GuidanceConfig& guidance, const std::string& parameter, double value) {
    auto integer = [&]() {
        if (value != std::floor(value)) throw ConfigError(parameter + " sweep values must be integers");
        return int(value);
    };
    GuidanceConfig g = guidance;
    if (parameter == "beta") g.interpolation_scale = value;
    else if (parameter == "interp_steps") g.interpolation_steps = integer();
    else if (parameter == "tau") g.rollout_steps = integer();
    else if (parameter == "gamma") g.cutoff = value;
    else if (parameter == "order") g.filter_order = integer();
    else throw ConfigError("cannot sweep '" + parameter + "'");
    try {
        g.validate();
    } catch (const DomainError& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
    return g;
}

MixtureVideoPrior union_prior(const MixtureVideoPrior& a, const std::optional<MixtureVideoPrior>& b,
                              const Condition& condition) {
    std::vector<GaussianVideoComponent> distinct;
    auto add = [&](const MixtureVideoPrior& p) {
        for (const auto& wc : p.components())
            if (std::find(distinct.begin(), distinct.end(), wc.component) == distinct.end())
                distinct.push_back(wc.component);
    };
    add(a);
    if (b) {
        if (b->shape() != a.shape()) throw ConfigError("union_prior: prior shapes differ");
        add(*b);
    }
    for (std::size_t i = 0; i < distinct.size(); ++i)
        for (std::size_t j = i + 1; j < distinct.size(); ++j)
            if (distinct[i].mean(condition) == distinct[j].mean(condition))
                throw ConfigError("modes " + std::to_string(i) + " and " + std::to_string(j) + " coincide under " +
                                  condition.str());
    std::vector<WeightedComponent> comps;
    for (auto& c : distinct) comps.push_back({1.0 / double(distinct.size()), std::move(c)});
    return MixtureVideoPrior(a.shape(), std::move(comps));
}

std::vector<double> mode_fractions(const std::vector<VideoLatent>& samples, const MixtureVideoPrior& modes,
                                   const Condition& condition) {
    if (samples.empty()) throw DomainError("mode_fractions of an empty sample");
    std::vector<double> f(modes.size(), 0.0);
    for (const auto& s : samples) f[nearest_mode(modes, s, condition)] += 1.0;
    for (auto& v : f) v /= double(samples.size());
    return f;
}

Table run_table(const ExperimentConfig& config) {
    config.validate();
    const Models m(config);
    switch (config.kind) {
        case ExperimentKind::sample: return sample_table(config, m);
        case ExperimentKind::guide: return comparison_table(config, m, {Method::unguided, Method::videoguide});
        case ExperimentKind::baseline:
            return comparison_table(config, m, {Method::unguided, Method::freeinit, Method::videoguide});
        case ExperimentKind::ablate: return ablate_table(config, m);
        case ExperimentKind::distill: return distill_table(config, m);
        case ExperimentKind::nfe: return nfe_table(config, m);
        case ExperimentKind::cfg_compare: return cfg_compare_table(config, m);
    }
    throw std::logic_error("unknown experiment kind");
}

std::string render_csv(const ExperimentConfig& config, const Table& table) {
    std::ostringstream os;
    os << "# videoguide results\n";
    os << "# schema=1\n";
    os << "# kind=" << to_string(config.kind) << "\n";
    os << "# master_seed=" << config.master_seed << "\n";
    os << "# config:\n";
    std::istringstream cfg(serialize_config(config));
    for (std::string line; std::getline(cfg, line);) os << (line.empty() ? "#" : "# " + line) << "\n";
    os << "# end-config\n";
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
        os << "\n";
    };
    emit(table.columns);
    for (const auto& r : table.rows) emit(r);
    return os.str();
}

std::string render_svg(const Table& table, const std::string& parameter) {
    const auto col = [&](const std::string& name) {
        auto it = std::find(table.columns.begin(), table.columns.end(), name);
        if (it == table.columns.end()) throw DomainError("render_svg: table has no column '" + name + "'");
        return std::size_t(it - table.columns.begin());
    };
    const std::size_t xc = col("value");
    const std::vector<std::pair<std::string, std::string>> series{{"subject_consistency", "#1f77b4"},
                                                                  {"background_consistency", "#ff7f0e"},
                                                                  {"imaging_quality", "#2ca02c"},
                                                                  {"motion_smoothness", "#d62728"}};
    if (table.rows.empty()) throw DomainError("render_svg: empty table");
    std::vector<double> xs;
    for (const auto& r : table.rows) xs.push_back(std::stod(r[xc]));
    double ymin = 1e300, ymax = -1e300;
    for (const auto& [name, colour] : series)
        for (const auto& r : table.rows) {
            const double y = std::stod(r[col(name)]), se = std::stod(r[col(name + "_se")]);
            ymin = std::min(ymin, y - se);
            ymax = std::max(ymax, y + se);
        }
    const double xmin = *std::min_element(xs.begin(), xs.end()), xmax = *std::max_element(xs.begin(), xs.end());
    const double xspan = xmax > xmin ? xmax - xmin : 1.0, yspan = ymax > ymin ? ymax - ymin : 1.0;
    const double W = 640, H = 400, L = 70, R = 190, T = 30, B = 50;
    auto px = [&](double x) { return L + (x - xmin) / xspan * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / yspan * (H - T - B); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << parameter << "</text>\n";
    for (double x : xs)
        os << "<text x=\"" << num(px(x)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(x) << "</text>\n";
    for (int k = 0; k <= 4; ++k) {
        const double y = ymin + yspan * k / 4.0;
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(std::round(y * 1e4) / 1e4)
           << "</text>\n";
    }
    int legend = 0;
    for (const auto& [name, colour] : series) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < table.rows.size(); ++i) pts.emplace_back(xs[i], std::stod(table.rows[i][col(name)]));
        std::sort(pts.begin(), pts.end());
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (const auto& [x, y] : pts) os << num(px(x)) << "," << num(py(y)) << " ";
        os << "\"/>\n";
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const double y = std::stod(table.rows[i][col(name)]), se = std::stod(table.rows[i][col(name + "_se")]);
            os << "<line x1=\"" << num(px(xs[i])) << "\" y1=\"" << num(py(y - se)) << "\" x2=\"" << num(px(xs[i]))
               << "\" y2=\"" << num(py(y + se)) << "\" stroke=\"" << colour << "\"/>\n";
        }
        const double ly = T + 16 + 20 * legend++;
        os << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32 << "\" y2=\"" << ly
           << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

Table run_experiment(const ExperimentConfig& config) {
    Table table = run_table(config);
    const std::string csv = render_csv(config, table);
    std::string svg;
    if (!config.plot_path.empty() && config.kind == ExperimentKind::ablate)
        svg = render_svg(table, config.sweep_parameter);
    write_atomic(config.output_path, csv);
    if (!svg.empty()) {
        try {
            write_atomic(config.plot_path, svg);
        } catch (...) {
            std::error_code ec;
            std::filesystem::remove(config.output_path, ec);
            throw;
        }
    }
    return table;
}

}  // namespace videoguide::harness
