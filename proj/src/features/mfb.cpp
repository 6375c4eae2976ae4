#include "deconfound/features/mfb.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::features {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft_radix2(std::vector<double>& re, std::vector<double>& im) {
    const std::size_t n = re.size();
    if (n != im.size()) throw std::invalid_argument("fft: re/im size mismatch");
    if (n == 0 || (n & (n - 1)) != 0) {
        throw std::invalid_argument("fft: length must be a power of two");
    }
    // Bit-reversal permutation.
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) {
            std::swap(re[i], re[j]);
            std::swap(im[i], im[j]);
        }
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
        const double wr = std::cos(ang), wi = std::sin(ang);
        for (std::size_t i = 0; i < n; i += len) {
            double cr = 1.0, ci = 0.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::size_t a = i + k, b = i + k + len / 2;
                const double tr = re[b] * cr - im[b] * ci;
                const double ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                const double ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
    }
}

std::vector<std::vector<double>> mel_filterbank(std::size_t nfft, double sample_rate) {
    const std::size_t bins = nfft / 2 + 1;
    const double mel_max = hz_to_mel(sample_rate / 2.0);
    // 42 edge points define 40 triangles: filter f spans edges [f, f+2] with
    // its peak at edge f+1.
    std::vector<double> edge_hz(kMelFilters + 2);
    for (std::size_t i = 0; i < edge_hz.size(); ++i) {
        edge_hz[i] = mel_to_hz(mel_max * static_cast<double>(i) /
                               static_cast<double>(kMelFilters + 1));
    }
    std::vector<std::vector<double>> fb(kMelFilters, std::vector<double>(bins, 0.0));
    for (std::size_t f = 0; f < kMelFilters; ++f) {
        const double lo = edge_hz[f], mid = edge_hz[f + 1], hi = edge_hz[f + 2];
        for (std::size_t b = 0; b < bins; ++b) {
            const double hz = sample_rate * static_cast<double>(b) / static_cast<double>(nfft);
            double w = 0.0;
            if (hz > lo && hz < mid) {
                w = (hz - lo) / (mid - lo);
            } else if (hz == mid) {
                w = 1.0;
            } else if (hz > mid && hz < hi) {
                w = (hi - hz) / (hi - mid);
            }
            fb[f][b] = w;
        }
    }
    return fb;
}

net::Tensor compute_mfb(const Waveform& w) {
    if (w.sample_rate <= 0.0) throw DataError("compute_mfb: non-positive sample rate");
    const std::size_t win = static_cast<std::size_t>(std::lround(kWindowSeconds * w.sample_rate));
    const std::size_t hop = static_cast<std::size_t>(std::lround(kHopSeconds * w.sample_rate));
    if (win == 0 || hop == 0) throw DataError("compute_mfb: degenerate window geometry");
    const std::size_t n = w.samples.size();
    if (n < win) {
        throw DataError("compute_mfb: waveform shorter than one analysis window (" +
                        std::to_string(n) + " < " + std::to_string(win) + " samples)");
    }
    const std::size_t frames = (n - win) / hop + 1;
    const std::size_t nfft = next_pow2(win);
    const std::size_t bins = nfft / 2 + 1;

    // Symmetric Hamming window.
    std::vector<double> window(win);
    for (std::size_t i = 0; i < win; ++i) {
        window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                           static_cast<double>(win - 1));
    }
    const auto fb = mel_filterbank(nfft, w.sample_rate);

    net::Tensor out({frames, kMelFilters});
    std::vector<double> re(nfft), im(nfft), power(bins);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t start = t * hop;
        for (std::size_t i = 0; i < nfft; ++i) {
            re[i] = i < win ? w.samples[start + i] * window[i] : 0.0;
            im[i] = 0.0;
        }
        fft_radix2(re, im);
        for (std::size_t b = 0; b < bins; ++b) {
            power[b] = re[b] * re[b] + im[b] * im[b];  // magnitude-squared spectrum
        }
        for (std::size_t f = 0; f < kMelFilters; ++f) {
            double e = 0.0;
            for (std::size_t b = 0; b < bins; ++b) e += fb[f][b] * power[b];
            out.at(t, f) = std::log(std::max(e, kFilterEnergyFloor));
        }
    }
    return out;
}

void znormalize_session(std::vector<net::Tensor*>& session_features) {
    if (session_features.empty()) return;
    const std::size_t D = session_features.front()->dim(1);
    for (net::Tensor* t : session_features) {
        if (t->rank() != 2 || t->dim(1) != D) {
            throw std::invalid_argument("znormalize: inconsistent feature shapes in session");
        }
    }
    std::vector<double> mean(D, 0.0), var(D, 0.0);
    std::size_t n = 0;
    for (const net::Tensor* t : session_features) {
        for (std::size_t i = 0; i < t->dim(0); ++i) {
            for (std::size_t d = 0; d < D; ++d) mean[d] += t->at(i, d);
        }
        n += t->dim(0);
    }
    for (double& m : mean) m /= static_cast<double>(n);
    for (const net::Tensor* t : session_features) {
        for (std::size_t i = 0; i < t->dim(0); ++i) {
            for (std::size_t d = 0; d < D; ++d) {
                const double dv = t->at(i, d) - mean[d];
                var[d] += dv * dv;
            }
        }
    }
    for (double& v : var) v /= static_cast<double>(n);  // population variance
    for (net::Tensor* t : session_features) {
        for (std::size_t i = 0; i < t->dim(0); ++i) {
            for (std::size_t d = 0; d < D; ++d) {
                if (var[d] == 0.0) {
                    t->at(i, d) = 0.0;  // constant coefficient: defined as zero
                } else {
                    t->at(i, d) = (t->at(i, d) - mean[d]) / std::sqrt(var[d]);
                }
            }
        }
    }
}

void znormalize(std::map<std::string, std::vector<net::Tensor*>>& by_session) {
    for (auto& [session, tensors] : by_session) {
        znormalize_session(tensors);
    }
}

}  // namespace dcfd::features
