#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "videoguide/guidance.hpp"
#include "videoguide/harness/config.hpp"
#include "videoguide/harness/experiments.hpp"
#include "videoguide/metrics.hpp"

namespace py = pybind11;
using namespace videoguide;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

VideoLatent to_latent(const Array& a) {
    if (a.ndim() != 4) throw ShapeError("expected a (frames, channels, height, width) array");
    const LatentShape s{int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3))};
    return VideoLatent(s, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const VideoLatent& z) {
    const auto& s = z.shape();
    Array out({s.frames, s.channels, s.height, s.width});
    std::copy(z.raw().begin(), z.raw().end(), out.mutable_data());
    return out;
}

std::vector<VideoLatent> to_latents(const std::vector<Array>& xs) {
    std::vector<VideoLatent> out;
    for (const auto& x : xs) out.push_back(to_latent(x));
    return out;
}

Condition to_condition(const std::optional<int>& text) { return text ? Condition::prompt(*text) : Condition::null(); }

// Prior, schedule and denoiser kept together; the denoiser points into prior.
struct Model {
    MixtureVideoPrior prior;
    NoiseSchedule schedule;
    PriorDenoiser denoiser;

    Model(MixtureVideoPrior p, NoiseSchedule s) : prior(std::move(p)), schedule(std::move(s)), denoiser(prior) {}
    Model(const Model&) = delete;
    DiffusionModel diffusion() const { return {denoiser, schedule}; }
};

std::map<Condition, std::vector<double>> to_means(const std::map<std::string, std::vector<double>>& means) {
    std::map<Condition, std::vector<double>> out;
    for (const auto& [key, m] : means) out[key == "null" ? Condition::null() : Condition::prompt(std::stoi(key))] = m;
    return out;
}

}  // namespace

PYBIND11_MODULE(_videoguide, m) {
    m.doc() = "Guided diffusion sampling on analytic Gaussian mixture video priors.";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<harness::ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_property_readonly("total_steps", &NoiseSchedule::total_steps)
        .def("alpha_bar", &NoiseSchedule::alpha_bar, py::arg("t"))
        .def("beta", &NoiseSchedule::beta, py::arg("t"))
        .def_property_readonly("alpha_bars", [](const NoiseSchedule& s) { return Array(py::cast(s.alpha_bars())); });
    m.def("build_linear_schedule", py::overload_cast<double, double, int>(&build_linear_schedule),
          py::arg("beta_start") = kSamplerSchedule.beta_start, py::arg("beta_end") = kSamplerSchedule.beta_end,
          py::arg("total_steps") = kSamplerSchedule.total_steps);
    m.def("ddim_grid", [](int total, int steps) { return ddim_grid(total, steps).timesteps(); }, py::arg("total_steps"),
          py::arg("steps"));
    m.def("guidance_subgrid",
          [](int t, int count, const NoiseSchedule& s) { return guidance_subgrid(t, count, s).timesteps(); },
          py::arg("t"), py::arg("count"), py::arg("schedule"));

    py::class_<MixtureVideoPrior>(m, "MixtureVideoPrior")
        .def(py::init([](std::tuple<int, int, int, int> shape,
                         const std::vector<std::tuple<double, double, double, std::map<std::string, std::vector<double>>>>&
                             components) {
                 const auto [n, c, h, w] = shape;
                 std::vector<WeightedComponent> comps;
                 for (const auto& [weight, sigma, rho, means] : components)
                     comps.push_back({weight, GaussianVideoComponent{to_means(means), sigma, rho}});
                 return MixtureVideoPrior(LatentShape{n, c, h, w}, std::move(comps));
             }),
             py::arg("shape"), py::arg("components"),
             "components: list of (weight, sigma, rho, {'null' or prompt id: per-frame mean of length C*H*W})")
        .def_static(
            "gaussian",
            [](std::tuple<int, int, int, int> shape, double sigma, double rho, double mean) {
                const auto [n, c, h, w] = shape;
                return MixtureVideoPrior::gaussian(LatentShape{n, c, h, w}, sigma, rho, mean);
            },
            py::arg("shape") = std::tuple{8, 1, 4, 4}, py::arg("sigma") = 1.0, py::arg("rho") = 0.0,
            py::arg("mean") = 0.0)
        .def_property_readonly("shape",
                               [](const MixtureVideoPrior& p) {
                                   const auto& s = p.shape();
                                   return std::tuple{s.frames, s.channels, s.height, s.width};
                               })
        .def("__len__", &MixtureVideoPrior::size);

    m.def("sample_prior",
          [](const MixtureVideoPrior& p, std::optional<int> text, std::uint64_t seed) {
              return to_array(sample_prior(p, to_condition(text), seed));
          },
          py::arg("prior"), py::arg("condition") = py::none(), py::arg("seed") = 0);
    m.def("posterior_mean",
          [](const MixtureVideoPrior& p, const Array& z, double ab, std::optional<int> text) {
              return to_array(posterior_mean(p, to_latent(z), ab, to_condition(text)));
          },
          py::arg("prior"), py::arg("z_t"), py::arg("alpha_bar"), py::arg("condition") = py::none());
    m.def("eps_prediction",
          [](const MixtureVideoPrior& p, const Array& z, double ab, std::optional<int> text) {
              return to_array(eps_prediction(p, to_latent(z), ab, to_condition(text)));
          },
          py::arg("prior"), py::arg("z_t"), py::arg("alpha_bar"), py::arg("condition") = py::none());
    m.def("log_marginal_density",
          [](const MixtureVideoPrior& p, const Array& z, double ab, std::optional<int> text) {
              return log_marginal_density(p, to_latent(z), ab, to_condition(text));
          },
          py::arg("prior"), py::arg("z_t"), py::arg("alpha_bar"), py::arg("condition") = py::none());

    py::class_<GuidanceMode>(m, "GuidanceMode")
        .def_static("cfg", &GuidanceMode::cfg, py::arg("scale"))
        .def_static("cfg_plus_plus", &GuidanceMode::cfg_plus_plus, py::arg("scale"))
        .def_static("parse", &GuidanceMode::parse)
        .def("__str__", &GuidanceMode::str)
        .def("__eq__", [](const GuidanceMode& a, const GuidanceMode& b) { return a == b; });

    py::class_<GuidanceConfig>(m, "GuidanceConfig")
        .def(py::init<>())
        .def_readwrite("interp_steps", &GuidanceConfig::interpolation_steps)
        .def_readwrite("beta", &GuidanceConfig::interpolation_scale)
        .def_readwrite("tau", &GuidanceConfig::rollout_steps)
        .def_readwrite("gamma", &GuidanceConfig::cutoff)
        .def_readwrite("order", &GuidanceConfig::filter_order)
        .def_readwrite("interp_mode", &GuidanceConfig::interp_guidance)
        .def_readwrite("main_mode", &GuidanceConfig::main_guidance)
        .def_readwrite("filter", &GuidanceConfig::filter_enabled)
        .def_readwrite("self_renoise", &GuidanceConfig::self_renoise)
        .def("validate", &GuidanceConfig::validate);

    m.def("beta_from_lambda", &beta_from_lambda, py::arg("lambda_reg"));
    m.def("interpolate_denoised",
          [](const Array& s, const Array& g, double beta) {
              return to_array(interpolate_denoised(to_latent(s), to_latent(g), beta));
          },
          py::arg("z0_sampler"), py::arg("z0_guide"), py::arg("beta"));

    py::class_<Model>(m, "Model")
        .def(py::init([](const MixtureVideoPrior& p, const NoiseSchedule& s) { return new Model(p, s); }),
             py::arg("prior"), py::arg("schedule"));

    m.def("sample",
          [](const Model& model, const GuidanceMode& mode, std::optional<int> text, std::uint64_t seed,
             std::uint64_t stream, int steps) {
              RngStream rng(seed, stream);
              const auto r = sample(model.denoiser, model.schedule, ddim_grid(model.schedule.total_steps(), steps),
                                    model.prior.shape(), mode, to_condition(text), rng);
              return py::make_tuple(to_array(r.sample), r.trace.nfe);
          },
          py::arg("model"), py::arg("mode") = GuidanceMode::cfg(7.5), py::arg("condition") = py::none(),
          py::arg("seed") = 0, py::arg("stream") = 0, py::arg("steps") = 50,
          "Returns (sample, nfe).");
    m.def("videoguide_sample",
          [](const Model& sampler, const Model* guide, const GuidanceConfig& config, std::optional<int> text,
             std::uint64_t seed, std::uint64_t stream, int steps) {
              RngStream rng(seed, stream);
              std::optional<DiffusionModel> g;
              if (guide) g.emplace(guide->diffusion());
              const auto r = videoguide_sample(sampler.diffusion(), g ? &*g : nullptr,
                                               ddim_grid(sampler.schedule.total_steps(), steps), sampler.prior.shape(),
                                               config, to_condition(text), rng);
              return py::make_tuple(to_array(r.sample), r.trace.nfe);
          },
          py::arg("sampler"), py::arg("guide") = py::none(), py::arg("config") = GuidanceConfig{},
          py::arg("condition") = py::none(), py::arg("seed") = 0, py::arg("stream") = 0, py::arg("steps") = 50,
          "Returns (sample, nfe). guide=None runs the self-guided loop.");
    m.def("freeinit_baseline",
          [](const Model& sampler, int iterations, double gamma, int order, const GuidanceMode& mode,
             std::optional<int> text, std::uint64_t seed, std::uint64_t stream, int steps) {
              RngStream rng(seed, stream);
              const auto& s = sampler.prior.shape();
              const auto r = freeinit_baseline(sampler.diffusion(), ddim_grid(sampler.schedule.total_steps(), steps), s,
                                               iterations, butterworth_mask(s.frames, s.height, s.width, gamma, order),
                                               mode, to_condition(text), rng);
              return py::make_tuple(to_array(r.sample), r.trace.nfe);
          },
          py::arg("sampler"), py::arg("iterations") = 5, py::arg("gamma") = 0.25, py::arg("order") = 4,
          py::arg("mode") = GuidanceMode::cfg(7.5), py::arg("condition") = py::none(), py::arg("seed") = 0,
          py::arg("stream") = 0, py::arg("steps") = 50);

    m.def("butterworth_mask",
          [](int frames, int height, int width, double gamma, int order) {
              const auto mask = butterworth_mask(frames, height, width, gamma, order);
              Array out({frames, height, width});
              std::copy(mask.gains.begin(), mask.gains.end(), out.mutable_data());
              return out;
          },
          py::arg("frames"), py::arg("height"), py::arg("width"), py::arg("gamma") = 0.25, py::arg("order") = 4);
    m.def("butterworth_gain", &butterworth_gain, py::arg("radius"), py::arg("cutoff"), py::arg("order"));
    auto mask_for = [](const VideoLatent& z, double gamma, int order) {
        const auto& s = z.shape();
        return butterworth_mask(s.frames, s.height, s.width, gamma, order);
    };
    m.def("lowpass_highpass_mix",
          [mask_for](const Array& z, const Array& noise, double gamma, int order) {
              const VideoLatent a = to_latent(z);
              return to_array(lowpass_highpass_mix(a, to_latent(noise), mask_for(a, gamma, order)));
          },
          py::arg("z"), py::arg("noise"), py::arg("gamma") = 0.25, py::arg("order") = 4);
    m.def("lowpass",
          [mask_for](const Array& z, double gamma, int order) {
              const VideoLatent a = to_latent(z);
              return to_array(lowpass(a, mask_for(a, gamma, order)));
          },
          py::arg("z"), py::arg("gamma") = 0.25, py::arg("order") = 4);
    m.def("highpass",
          [mask_for](const Array& z, double gamma, int order) {
              const VideoLatent a = to_latent(z);
              return to_array(highpass(a, mask_for(a, gamma, order)));
          },
          py::arg("z"), py::arg("gamma") = 0.25, py::arg("order") = 4);

    m.def("subject_consistency_proxy", [](const Array& z) { return subject_consistency_proxy(to_latent(z)); });
    m.def("background_consistency_proxy", [](const Array& z) { return background_consistency_proxy(to_latent(z)); });
    m.def("motion_smoothness_proxy", [](const Array& z) { return motion_smoothness_proxy(to_latent(z)); });
    m.def("high_frequency_energy", [](const Array& z) { return high_frequency_energy(to_latent(z)); });
    m.def("interframe_correlation",
          [](const std::vector<Array>& zs) { return interframe_correlation(to_latents(zs)); });

    m.def("parse_config",
          [](const std::string& text) { return harness::serialize_config(harness::parse_config_text(text)); },
          py::arg("text"), "Validates config text (or a results CSV) and returns its canonical form.");
    m.def("run_experiment_csv",
          [](const std::string& text) {
              const auto c = harness::parse_config_text(text);
              py::gil_scoped_release release;
              return harness::render_csv(c, harness::run_table(c));
          },
          py::arg("text"), "Runs the configured experiment and returns the CSV text without writing files.");
}
