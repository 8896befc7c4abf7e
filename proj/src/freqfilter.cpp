#include "videoguide/freqfilter.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <tuple>

namespace videoguide {

namespace {

// FFTW planning is not thread-safe; executing a cached plan on new arrays is.
class PlanCache {
public:
    struct Plans {
        fftw_plan forward;
        fftw_plan backward;
    };

    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    Plans get(int n0, int n1, int n2) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(n0, n1, n2);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t n = std::size_t(n0) * n1 * n2;
        auto* a = fftw_alloc_complex(n);
        auto* b = fftw_alloc_complex(n);
        Plans p{fftw_plan_dft_3d(n0, n1, n2, a, b, FFTW_FORWARD, FFTW_ESTIMATE),
                fftw_plan_dft_3d(n0, n1, n2, a, b, FFTW_BACKWARD, FFTW_ESTIMATE)};
        fftw_free(a);
        fftw_free(b);
        plans_.emplace(key, p);
        return p;
    }

    ~PlanCache() {
        for (auto& [_, p] : plans_) {
            fftw_destroy_plan(p.forward);
            fftw_destroy_plan(p.backward);
        }
    }

private:
    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, Plans> plans_;
};

struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)), size(n) {}
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    fftw_complex* data;
    std::size_t size;
};

std::vector<std::complex<double>> transform(const std::vector<std::complex<double>>& in, const LatentShape& s,
                                            bool forward) {
    const auto plans = PlanCache::instance().get(s.frames, s.height, s.width);
    FftwBuffer a(in.size()), b(in.size());
    std::copy(in.begin(), in.end(), reinterpret_cast<std::complex<double>*>(a.data));
    fftw_execute_dft(forward ? plans.forward : plans.backward, a.data, b.data);
    const auto* out = reinterpret_cast<const std::complex<double>*>(b.data);
    return {out, out + in.size()};
}

void check_mask(const VideoLatent& z, const ButterworthMask3D& mask) {
    const auto& s = z.shape();
    if (s.frames != mask.frames || s.height != mask.height || s.width != mask.width)
        throw ShapeError("mask lattice " + std::to_string(mask.frames) + "x" + std::to_string(mask.height) + "x" +
                         std::to_string(mask.width) + " does not match latent " + s.str());
}

double max_abs(const VideoLatent& z) {
    double m = 0.0;
    for (double v : z.values()) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

double normalized_frequency(int k, int n) {
    const int s = k <= n / 2 ? k : k - n;
    return 2.0 * double(s) / double(n);
}

double frequency_radius(int kt, int kh, int kw, int frames, int height, int width) {
    const double ft = normalized_frequency(kt, frames);
    const double fh = normalized_frequency(kh, height);
    const double fw = normalized_frequency(kw, width);
    return std::sqrt((ft * ft + fh * fh + fw * fw) / 3.0);
}

ButterworthMask3D butterworth_mask(int frames, int height, int width, double gamma, int order) {
    if (frames < 1 || height < 1 || width < 1) throw DomainError("mask lattice dimensions must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("butterworth cutoff must lie in (0, 1)");
    if (order < 1) throw DomainError("butterworth order must be >= 1");
    ButterworthMask3D m{frames, height, width, gamma, order, {}};
    m.gains.resize(std::size_t(frames) * height * width);
    for (int kt = 0; kt < frames; ++kt)
        for (int kh = 0; kh < height; ++kh)
            for (int kw = 0; kw < width; ++kw)
                m.gains[(std::size_t(kt) * height + kh) * width + kw] =
                    butterworth_gain(frequency_radius(kt, kh, kw, frames, height, width), gamma, order);
    return m;
}

std::vector<std::complex<double>> channel_spectrum(const VideoLatent& z, int channel) {
    const auto& s = z.shape();
    std::vector<std::complex<double>> buf(std::size_t(s.frames) * s.height * s.width);
    std::size_t j = 0;
    for (int n = 0; n < s.frames; ++n)
        for (int h = 0; h < s.height; ++h)
            for (int w = 0; w < s.width; ++w) buf[j++] = z[z.index(n, channel, h, w)];
    return transform(buf, s, true);
}

void inverse_channel_spectrum(std::vector<std::complex<double>> spectrum, VideoLatent& out, int channel) {
    const auto& s = out.shape();
    const auto spatial = transform(spectrum, s, false);
    const double scale = 1.0 / double(spatial.size());
    double worst = 0.0;
    std::size_t j = 0;
    for (int n = 0; n < s.frames; ++n)
        for (int h = 0; h < s.height; ++h)
            for (int w = 0; w < s.width; ++w, ++j) {
                out[out.index(n, channel, h, w)] = spatial[j].real() * scale;
                worst = std::max(worst, std::abs(spatial[j].imag() * scale));
            }
    if (worst > 1e-10 * std::max(1.0, max_abs(out)))
        throw NumericError("inverse transform left an imaginary residue of " + std::to_string(worst));
}

VideoLatent lowpass_highpass_mix(const VideoLatent& z, const VideoLatent& noise, const ButterworthMask3D& mask) {
    require_same_shape(z, noise, "lowpass_highpass_mix");
    check_mask(z, mask);
    const auto all = [&](double g) { return std::all_of(mask.gains.begin(), mask.gains.end(), [g](double x) { return x == g; }); };
    if (all(1.0)) return z;
    if (all(0.0)) return noise;
    VideoLatent out(z.shape());
    for (int c = 0; c < z.shape().channels; ++c) {
        auto fz = channel_spectrum(z, c);
        const auto fn = channel_spectrum(noise, c);
        for (std::size_t i = 0; i < fz.size(); ++i) fz[i] = mask.gains[i] * fz[i] + (1.0 - mask.gains[i]) * fn[i];
        inverse_channel_spectrum(std::move(fz), out, c);
    }
    return out;
}

namespace {

VideoLatent apply_gains(const VideoLatent& z, const ButterworthMask3D& mask, bool complement) {
    check_mask(z, mask);
    VideoLatent out(z.shape());
    for (int c = 0; c < z.shape().channels; ++c) {
        auto fz = channel_spectrum(z, c);
        for (std::size_t i = 0; i < fz.size(); ++i) fz[i] *= complement ? 1.0 - mask.gains[i] : mask.gains[i];
        inverse_channel_spectrum(std::move(fz), out, c);
    }
    return out;
}

}  // namespace

VideoLatent lowpass(const VideoLatent& z, const ButterworthMask3D& mask) { return apply_gains(z, mask, false); }

VideoLatent highpass(const VideoLatent& z, const ButterworthMask3D& mask) { return apply_gains(z, mask, true); }

}  // namespace videoguide
