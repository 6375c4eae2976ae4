#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "deconfound/netcore/tensor.hpp"

namespace dcfd::features {

struct Waveform {
    std::vector<double> samples;
    double sample_rate = 16000.0;
};

// Fixed extractor geometry: 40 log mel filterbank coefficients over 25 ms
// Hamming windows with a 10 ms hop (so 1 s at 16 kHz yields 98 frames).
inline constexpr std::size_t kMelFilters = 40;
inline constexpr double kWindowSeconds = 0.025;
inline constexpr double kHopSeconds = 0.010;
inline constexpr double kFilterEnergyFloor = 1e-10;

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

// In-place iterative radix-2 FFT on interleaved complex data; n must be a
// power of two.
void fft_radix2(std::vector<double>& re, std::vector<double>& im);

// 40 triangular mel filters spanning 0..sr/2, evaluated at the positive FFT
// bin centers. Row f holds filter f's weight per bin (nfft/2 + 1 bins).
// Adjacent triangles overlap, so every bin between the first filter's left
// edge and the last filter's right edge carries positive total weight.
std::vector<std::vector<double>> mel_filterbank(std::size_t nfft, double sample_rate);

// Waveform -> [T x 40] log mel filterbank energies.
// T = floor((N - win) / hop) + 1; N < win is a data error.
net::Tensor compute_mfb(const Waveform& w);

// Per-session z-normalization pooled over every frame of every utterance in
// the session, per coefficient. Coefficients with zero variance are set to
// zero. Operates in place on the referenced tensors.
void znormalize_session(std::vector<net::Tensor*>& session_features);
void znormalize(std::map<std::string, std::vector<net::Tensor*>>& by_session);

}  // namespace dcfd::features
