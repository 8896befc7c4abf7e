#include "videoguide/harness/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace videoguide::harness {

namespace {

const std::map<ExperimentKind, std::string>& kind_names() {
    static const std::map<ExperimentKind, std::string> names{
        {ExperimentKind::sample, "sample"},     {ExperimentKind::guide, "guide"},
        {ExperimentKind::ablate, "ablate"},     {ExperimentKind::distill, "distill"},
        {ExperimentKind::baseline, "baseline"}, {ExperimentKind::nfe, "nfe"},
        {ExperimentKind::cfg_compare, "cfg-compare"},
    };
    return names;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

// Shortest text that parses back to the same double.
std::string fmt(double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

struct Line {
    int number;
    std::string key;
    std::string value;
};

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError(line > 0 ? "line " + std::to_string(line) + ": " + what : what);
}

double to_double(const Line& l) {
    const char* b = l.value.data();
    const char* e = b + l.value.size();
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail(l.number, "'" + l.key + "' expects a number, got '" + l.value + "'");
    return v;
}

long long to_integer(const Line& l) {
    const char* b = l.value.data();
    const char* e = b + l.value.size();
    long long v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail(l.number, "'" + l.key + "' expects an integer, got '" + l.value + "'");
    return v;
}

int to_int(const Line& l) { return int(to_integer(l)); }

std::uint64_t to_u64(const Line& l) {
    const char* b = l.value.data();
    const char* e = b + l.value.size();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail(l.number, "'" + l.key + "' expects an unsigned integer");
    return v;
}

bool to_bool(const Line& l) {
    if (l.value == "true" || l.value == "1" || l.value == "on") return true;
    if (l.value == "false" || l.value == "0" || l.value == "off") return false;
    fail(l.number, "'" + l.key + "' expects true/false");
}

std::vector<double> to_doubles(const Line& l) {
    std::vector<double> out;
    for (const auto& part : split(l.value, ',')) out.push_back(to_double({l.number, l.key, part}));
    if (out.empty()) fail(l.number, "'" + l.key + "' expects a list of numbers");
    return out;
}

Condition to_condition(const Line& l) {
    if (l.value == "null") return Condition::null();
    return Condition::prompt(to_int(l));
}

GuidanceMode to_mode(const Line& l) {
    try {
        return GuidanceMode::parse(l.value);
    } catch (const std::exception& e) {
        fail(l.number, e.what());
    }
}

struct ComponentDraft {
    std::optional<double> weight, sigma, rho;
    std::map<Condition, std::pair<int, std::vector<double>>> means;
    int line = 0;
};

struct PriorDraft {
    LatentShape shape{};
    bool shape_given = false;
    int components = 0;
    int line = 0;
    std::map<int, ComponentDraft> parts;
};

MixtureVideoPrior build_prior(const PriorDraft& d, const std::string& name, const LatentShape& fallback_shape) {
    const LatentShape shape = d.shape_given ? d.shape : fallback_shape;
    if (d.components < 1) fail(d.line, name + ": components must be >= 1");
    std::vector<WeightedComponent> comps;
    for (int k = 0; k < d.components; ++k) {
        auto it = d.parts.find(k);
        if (it == d.parts.end()) fail(d.line, name + ": missing section [" + name + "." + std::to_string(k) + "]");
        const auto& p = it->second;
        const std::string sec = name + "." + std::to_string(k);
        if (!p.weight || !p.sigma || !p.rho) fail(p.line, sec + " needs weight, sigma and rho");
        WeightedComponent wc;
        wc.weight = *p.weight;
        wc.component.sigma = *p.sigma;
        wc.component.rho = *p.rho;
        for (const auto& [cond, v] : p.means) {
            const auto& [line, values] = v;
            std::vector<double> m;
            if (values.size() == 1) m.assign(shape.frame_size(), values[0]);
            else if (values.size() == shape.frame_size()) m = values;
            else
                fail(line, sec + ": mean needs 1 or " + std::to_string(shape.frame_size()) + " values, got " +
                               std::to_string(values.size()));
            wc.component.means[cond] = std::move(m);
        }
        if (!wc.component.means.contains(Condition::null())) fail(p.line, sec + " needs mean.null");
        comps.push_back(std::move(wc));
    }
    for (const auto& [k, p] : d.parts)
        if (k < 0 || k >= d.components) fail(p.line, name + "." + std::to_string(k) + " exceeds components");
    try {
        return MixtureVideoPrior(shape, std::move(comps));
    } catch (const std::exception& e) {
        fail(d.line, name + ": " + e.what());
    }
}

// Config lines embedded in a results CSV, without their "# " prefix.
std::optional<std::string> embedded_config(const std::string& text) {
    if (text.find("# schema=") == std::string::npos) return std::nullopt;
    std::istringstream is(text);
    std::string line, out;
    bool inside = false;
    while (std::getline(is, line)) {
        if (line == "# config:") {
            inside = true;
            continue;
        }
        if (line == "# end-config") return out;
        if (inside) out += (line.rfind("# ", 0) == 0 ? line.substr(2) : line.substr(line.rfind('#', 0) == 0 ? 1 : 0)) + "\n";
    }
    throw ConfigError("results file has no complete '# config:' block");
}

void serialize_prior(std::ostringstream& os, const std::string& name, const MixtureVideoPrior& prior) {
    const auto& s = prior.shape();
    os << "\n[" << name << "]\n";
    os << "shape = " << s.frames << "," << s.channels << "," << s.height << "," << s.width << "\n";
    os << "components = " << prior.size() << "\n";
    for (std::size_t k = 0; k < prior.size(); ++k) {
        const auto& wc = prior.components()[k];
        os << "\n[" << name << "." << k << "]\n";
        os << "weight = " << fmt(wc.weight) << "\n";
        os << "sigma = " << fmt(wc.component.sigma) << "\n";
        os << "rho = " << fmt(wc.component.rho) << "\n";
        for (const auto& [cond, m] : wc.component.means) {
            os << "mean." << (cond.is_null() ? std::string("null") : std::to_string(*cond.text)) << " = ";
            bool constant = true;
            for (double v : m) constant = constant && v == m.front();
            if (constant) {
                os << fmt(m.front());
            } else {
                for (std::size_t i = 0; i < m.size(); ++i) os << (i ? "," : "") << fmt(m[i]);
            }
            os << "\n";
        }
    }
}

void serialize_schedule(std::ostringstream& os, const std::string& name, const LinearScheduleSpec& s) {
    os << "\n[" << name << "]\n";
    os << "beta_start = " << fmt(s.beta_start) << "\n";
    os << "beta_end = " << fmt(s.beta_end) << "\n";
    os << "total_steps = " << s.total_steps << "\n";
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kind_names().at(kind); }

ExperimentKind parse_kind(const std::string& text) {
    for (const auto& [k, name] : kind_names())
        if (name == text) return k;
    throw ConfigError("unknown experiment kind '" + text + "'");
}

MixtureVideoPrior ExperimentConfig::default_sampler_prior() {
    const LatentShape shape{};
    GaussianVideoComponent c;
    c.sigma = 1.0;
    c.rho = 0.3;
    c.means[Condition::null()] = std::vector<double>(shape.frame_size(), 0.0);
    c.means[Condition::prompt(1)] = std::vector<double>(shape.frame_size(), 0.5);
    return MixtureVideoPrior(shape, {{1.0, std::move(c)}});
}

ExperimentConfig distill_preset() {
    const LatentShape shape{};
    auto component = [&](double mean) {
        GaussianVideoComponent c;
        c.sigma = 1.0;
        c.rho = 0.3;
        c.means[Condition::null()] = std::vector<double>(shape.frame_size(), mean);
        c.means[Condition::prompt(1)] = std::vector<double>(shape.frame_size(), mean);
        return c;
    };
    ExperimentConfig c;
    c.kind = ExperimentKind::distill;
    c.sampler_prior = MixtureVideoPrior(shape, {{1.0, component(2.0)}});
    c.guide_prior = MixtureVideoPrior(shape, {{0.5, component(2.0)}, {0.5, component(-2.0)}});
    c.target_mode = 1;
    c.sample_count = 500;
    return c;
}

void ExperimentConfig::validate() const {
    try {
        guidance.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("guidance: ") + e.what());
    }
    if (sample_count < 1) throw ConfigError("samples must be >= 1");
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (freeinit_iterations < 1) throw ConfigError("freeinit_iterations must be >= 1");
    if (reference_draws < 1000) throw ConfigError("reference_draws must be >= 1000");
    if (output_path.empty()) throw ConfigError("out must not be empty");
    for (const auto* s : {&sampler_schedule, &guide_schedule}) {
        try {
            build_linear_schedule(*s);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("schedule: ") + e.what());
        }
    }
    if (grid_steps < 1 || grid_steps > sampler_schedule.total_steps)
        throw ConfigError("grid_steps must lie in [1, sampler total_steps]");
    if (guide_prior && guide_prior->shape() != sampler_prior.shape())
        throw ConfigError("guide prior shape differs from sampler prior shape");
    if (guide_schedule.total_steps < sampler_schedule.total_steps)
        throw ConfigError("guide schedule must cover the sampler's timesteps");
    if (!condition.is_null()) {
        bool found = false;
        auto scan = [&](const MixtureVideoPrior& p) {
            for (const auto& wc : p.components()) found = found || wc.component.means.contains(condition);
        };
        scan(sampler_prior);
        if (guide_prior) scan(*guide_prior);
        if (!found) throw ConfigError("condition " + condition.str() + " is not declared by any prior component");
    }
    if (kind == ExperimentKind::ablate) {
        static const std::set<std::string> params{"beta", "interp_steps", "tau", "gamma", "order"};
        if (!params.contains(sweep_parameter)) throw ConfigError("cannot sweep '" + sweep_parameter + "'");
        if (sweep_values.empty()) throw ConfigError("sweep needs at least one value");
    }
}

ExperimentConfig parse_config_text(const std::string& raw) {
    const std::string text = embedded_config(raw).value_or(raw);
    ExperimentConfig cfg;
    std::optional<PriorDraft> sampler_draft, guide_draft;
    std::set<std::string> seen_sections;
    std::set<std::pair<std::string, std::string>> seen_keys;

    std::string section;
    std::istringstream is(text);
    std::string rawline;
    int number = 0;
    while (std::getline(is, rawline)) {
        ++number;
        std::string line = rawline;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(number, "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!seen_sections.insert(section).second) fail(number, "duplicate section [" + section + "]");
            auto prior_section = [&](const std::string& base, std::optional<PriorDraft>& draft) -> bool {
                if (section == base) {
                    if (!draft) draft.emplace();
                    draft->line = number;
                    return true;
                }
                if (section.rfind(base + ".", 0) == 0) {
                    const Line l{number, section, section.substr(base.size() + 1)};
                    const int k = to_int(l);
                    if (!draft) draft.emplace();
                    draft->parts[k].line = number;
                    return true;
                }
                return false;
            };
            if (section == "experiment" || section == "guidance" || section == "sampler.schedule" ||
                section == "guide.schedule")
                continue;
            if (prior_section("sampler.prior", sampler_draft) || prior_section("guide.prior", guide_draft)) continue;
            fail(number, "unknown section [" + section + "]");
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(number, "expected key = value");
        const Line l{number, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        if (section.empty()) fail(number, "key '" + l.key + "' outside any section");
        if (!seen_keys.insert({section, l.key}).second) fail(number, "duplicate key '" + l.key + "'");
        auto unknown = [&]() { fail(number, "unknown key '" + l.key + "' in [" + section + "]"); };

        if (section == "experiment") {
            if (l.key == "kind") {
                try {
                    cfg.kind = parse_kind(l.value);
                } catch (const ConfigError& e) {
                    fail(number, e.what());
                }
            } else if (l.key == "samples") cfg.sample_count = to_int(l);
            else if (l.key == "seed") cfg.master_seed = to_u64(l);
            else if (l.key == "out") cfg.output_path = l.value;
            else if (l.key == "threads") cfg.threads = to_int(l);
            else if (l.key == "plot") cfg.plot_path = l.value;
            else if (l.key == "grid_steps") cfg.grid_steps = to_int(l);
            else if (l.key == "condition") cfg.condition = to_condition(l);
            else if (l.key == "freeinit_iterations") cfg.freeinit_iterations = to_int(l);
            else if (l.key == "reference_draws") cfg.reference_draws = to_int(l);
            else if (l.key == "sweep") {
                const auto colon = l.value.find(':');
                if (colon == std::string::npos) fail(number, "sweep expects name:v1,v2,...");
                cfg.sweep_parameter = trim(l.value.substr(0, colon));
                cfg.sweep_values = to_doubles({number, l.key, l.value.substr(colon + 1)});
            } else if (l.key == "target_mode") cfg.target_mode = to_int(l);
            else unknown();
        } else if (section == "guidance") {
            auto& g = cfg.guidance;
            if (l.key == "interp_steps") g.interpolation_steps = to_int(l);
            else if (l.key == "beta") g.interpolation_scale = to_double(l);
            else if (l.key == "tau") g.rollout_steps = to_int(l);
            else if (l.key == "gamma") g.cutoff = to_double(l);
            else if (l.key == "order") g.filter_order = to_int(l);
            else if (l.key == "interp_mode") g.interp_guidance = to_mode(l);
            else if (l.key == "main_mode") g.main_guidance = to_mode(l);
            else if (l.key == "filter") g.filter_enabled = to_bool(l);
            else if (l.key == "self_renoise") g.self_renoise = to_bool(l);
            else unknown();
        } else if (section == "sampler.schedule" || section == "guide.schedule") {
            auto& s = section == "sampler.schedule" ? cfg.sampler_schedule : cfg.guide_schedule;
            if (l.key == "beta_start") s.beta_start = to_double(l);
            else if (l.key == "beta_end") s.beta_end = to_double(l);
            else if (l.key == "total_steps") s.total_steps = to_int(l);
            else unknown();
        } else {
            const bool sampler = section.rfind("sampler.prior", 0) == 0;
            PriorDraft& d = sampler ? *sampler_draft : *guide_draft;
            const std::string base = sampler ? "sampler.prior" : "guide.prior";
            if (section == base) {
                if (l.key == "shape") {
                    const auto dims = to_doubles(l);
                    if (dims.size() != 4) fail(number, "shape expects frames,channels,height,width");
                    d.shape = {int(dims[0]), int(dims[1]), int(dims[2]), int(dims[3])};
                    d.shape_given = true;
                } else if (l.key == "components") d.components = to_int(l);
                else unknown();
            } else {
                auto& p = d.parts[to_int({number, section, section.substr(base.size() + 1)})];
                if (l.key == "weight") p.weight = to_double(l);
                else if (l.key == "sigma") p.sigma = to_double(l);
                else if (l.key == "rho") p.rho = to_double(l);
                else if (l.key.rfind("mean.", 0) == 0) {
                    const Condition c = to_condition({number, l.key, l.key.substr(5)});
                    p.means[c] = {number, to_doubles(l)};
                } else unknown();
            }
        }
    }
    if (sampler_draft) cfg.sampler_prior = build_prior(*sampler_draft, "sampler.prior", LatentShape{});
    if (guide_draft) cfg.guide_prior = build_prior(*guide_draft, "guide.prior", cfg.sampler_prior.shape());
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n";
    os << "kind = " << to_string(c.kind) << "\n";
    os << "samples = " << c.sample_count << "\n";
    os << "seed = " << c.master_seed << "\n";
    os << "out = " << c.output_path << "\n";
    os << "threads = " << c.threads << "\n";
    if (!c.plot_path.empty()) os << "plot = " << c.plot_path << "\n";
    os << "grid_steps = " << c.grid_steps << "\n";
    os << "condition = " << (c.condition.is_null() ? std::string("null") : std::to_string(*c.condition.text)) << "\n";
    os << "freeinit_iterations = " << c.freeinit_iterations << "\n";
    os << "reference_draws = " << c.reference_draws << "\n";
    os << "sweep = " << c.sweep_parameter << ":";
    for (std::size_t i = 0; i < c.sweep_values.size(); ++i) os << (i ? "," : "") << fmt(c.sweep_values[i]);
    os << "\n";
    os << "target_mode = " << c.target_mode << "\n";

    const auto& g = c.guidance;
    os << "\n[guidance]\n";
    os << "interp_steps = " << g.interpolation_steps << "\n";
    os << "beta = " << fmt(g.interpolation_scale) << "\n";
    os << "tau = " << g.rollout_steps << "\n";
    os << "gamma = " << fmt(g.cutoff) << "\n";
    os << "order = " << g.filter_order << "\n";
    os << "interp_mode = " << g.interp_guidance.str() << "\n";
    os << "main_mode = " << g.main_guidance.str() << "\n";
    os << "filter = " << (g.filter_enabled ? "true" : "false") << "\n";
    os << "self_renoise = " << (g.self_renoise ? "true" : "false") << "\n";

    serialize_schedule(os, "sampler.schedule", c.sampler_schedule);
    serialize_schedule(os, "guide.schedule", c.guide_schedule);
    serialize_prior(os, "sampler.prior", c.sampler_prior);
    if (c.guide_prior) serialize_prior(os, "guide.prior", *c.guide_prior);
    return os.str();
}

}  // namespace videoguide::harness
