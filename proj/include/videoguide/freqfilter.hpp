#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "videoguide/latent.hpp"

namespace videoguide {

// Butterworth low-pass gains over the (frames, height, width) DFT lattice in
// standard FFT bin order. Per-axis frequency f = 2 s / L for signed bin s
// (Nyquist on even axes counted as positive), radius d = |f|_2 / sqrt(3),
// gain = 1 / (1 + (d / cutoff)^(2 order)).
struct ButterworthMask3D {
    int frames = 0;
    int height = 0;
    int width = 0;
    double cutoff = 0.25;
    int order = 4;
    std::vector<double> gains;

    double gain(int kt, int kh, int kw) const { return gains[(std::size_t(kt) * height + kh) * width + kw]; }
    std::size_t size() const { return gains.size(); }

    friend bool operator==(const ButterworthMask3D&, const ButterworthMask3D&) = default;
};

// Signed normalized frequency of bin k on an axis of length n, in [-1, 1].
double normalized_frequency(int k, int n);

// Radius d in [0, 1] of the lattice bin (kt, kh, kw).
double frequency_radius(int kt, int kh, int kw, int frames, int height, int width);

inline double butterworth_gain(double radius, double cutoff, int order) {
    return 1.0 / (1.0 + std::pow(radius / cutoff, 2.0 * order));
}

ButterworthMask3D butterworth_mask(int frames, int height, int width, double gamma, int order);

// Forward / inverse unnormalized 3D DFT of one channel; lattice is (frames, height, width).
std::vector<std::complex<double>> channel_spectrum(const VideoLatent& z, int channel);
void inverse_channel_spectrum(std::vector<std::complex<double>> spectrum, VideoLatent& out, int channel);

// IDFT(mask . DFT(z) + (1 - mask) . DFT(noise)), per channel.
VideoLatent lowpass_highpass_mix(const VideoLatent& z, const VideoLatent& noise, const ButterworthMask3D& mask);

// IDFT(mask . DFT(z)) and IDFT((1 - mask) . DFT(z)).
VideoLatent lowpass(const VideoLatent& z, const ButterworthMask3D& mask);
VideoLatent highpass(const VideoLatent& z, const ButterworthMask3D& mask);

}  // namespace videoguide
