// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Waveform <-> T-F conversions and the log-mel degradation front end.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rndvoc/core.hpp"
#include "rndvoc/fft.hpp"
#include "rndvoc/rnd.hpp"

namespace rndvoc {

// ---------------------------------------------------------------------------
// STFT
// ---------------------------------------------------------------------------

/// Periodic Hann window, w[i] = 0.5 - 0.5 cos(2 pi i / n). Satisfies the
/// squared-window constant-overlap-add condition at hop = n/4.
inline std::vector<double> hann_window(int n) {
    require(n > 0, "hann_window: size must be positive");
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
    return w;
}

struct StftConfig {
    int n_fft = 1024;
    int hop = 256;
    std::vector<double> window;  // length n_fft
    bool center_padding = true;  // reflect-pad n_fft/2 on both sides

    static StftConfig hann(int n_fft = 1024, int hop = 256, bool center = true) {
        StftConfig cfg;
        cfg.n_fft = n_fft;
        cfg.hop = hop;
        cfg.window = hann_window(n_fft);
        cfg.center_padding = center;
        return cfg;
    }

    int bins() const { return n_fft / 2 + 1; }
    void validate() const;
};

/// Max relative deviation of the squared-window overlap sum from its mean,
/// over one hop of the fully-overlapped region.
inline double cola_deviation(const StftConfig& cfg) {
    const int n = cfg.n_fft;
    const int h = cfg.hop;
    std::vector<double> acc(static_cast<std::size_t>(n) * 2, 0.0);
    for (int start = 0; start + n <= static_cast<int>(acc.size()); start += h)
        for (int i = 0; i < n; ++i)
            acc[start + i] += cfg.window[i] * cfg.window[i];
    // samples in [n - h, n) see every overlapping window exactly once
    double mean = 0.0;
    for (int i = n - h; i < n; ++i) mean += acc[i];
    mean /= h;
    double dev = 0.0;
    for (int i = n - h; i < n; ++i)
        dev = std::max(dev, std::abs(acc[i] - mean));
    return mean > 0.0 ? dev / mean : 1.0;
}

inline void StftConfig::validate() const {
    require(hop > 0 && n_fft >= hop, "stft config: need n_fft >= hop > 0");
    require(is_power_of_two(static_cast<std::size_t>(n_fft)),
            "stft config: n_fft must be a power of two");
    require(static_cast<int>(window.size()) == n_fft,
            "stft config: window length must equal n_fft");
    for (double w : window)
        require(std::isfinite(w), "stft config: non-finite window value");
    require(cola_deviation(*this) < 1e-3,
            "stft config: window violates constant-overlap-add at this hop");
}

/// Frame count under the padding convention: with center padding,
/// T = floor(len / hop) + 1; without, T = floor((len - n_fft) / hop) + 1.
inline int stft_frames(std::size_t len, const StftConfig& cfg) {
    const std::size_t padded = len + (cfg.center_padding ? cfg.n_fft : 0);
    if (padded < static_cast<std::size_t>(cfg.n_fft)) return 0;
    return static_cast<int>((padded - cfg.n_fft) / cfg.hop) + 1;
}

/// Windowed one-sided STFT. Forward transform is unnormalized.
inline ComplexSpectrogram stft(const AudioBuffer& audio, const StftConfig& cfg) {
    cfg.validate();
    require(!audio.samples.empty(), "stft: empty input");
    require(audio.all_finite(), "stft: non-finite samples");

    const int n = cfg.n_fft;
    const int pad = cfg.center_padding ? n / 2 : 0;
    const std::size_t len = audio.samples.size();
    std::vector<double> x(len + 2 * pad, 0.0);
    std::copy(audio.samples.begin(), audio.samples.end(), x.begin() + pad);
    if (pad > 0) {
        // reflect (no repeated edge sample); short signals fall back to zeros
        for (int i = 0; i < pad; ++i) {
            const std::size_t src = static_cast<std::size_t>(pad - i);
            if (src < len) x[i] = audio.samples[src];
            const std::size_t rsrc = len >= 2 + static_cast<std::size_t>(i)
                                         ? len - 2 - static_cast<std::size_t>(i)
                                         : len;  // out of range -> stays zero
            if (rsrc < len) x[pad + len + i] = audio.samples[rsrc];
        }
    }

    const int frames = stft_frames(len, cfg);
    require(frames >= 1, "input too short: fewer samples than one frame");

    ComplexSpectrogram spec;
    spec.real = Mat(cfg.bins(), frames);
    spec.imag = Mat(cfg.bins(), frames);
    parallel_for(static_cast<std::size_t>(frames), [&](std::size_t t0, std::size_t t1) {
        std::vector<double> frame(n);
        for (std::size_t t = t0; t < t1; ++t) {
            const double* src = x.data() + t * cfg.hop;
            for (int i = 0; i < n; ++i) frame[i] = src[i] * cfg.window[i];
            const auto half = rfft(frame.data(), static_cast<std::size_t>(n));
            for (int k = 0; k < cfg.bins(); ++k) {
                spec.real(k, static_cast<int>(t)) = half[k].real();
                spec.imag(k, static_cast<int>(t)) = half[k].imag();
            }
        }
    });
    return spec;
}

/// Largest out_len synthesizable from T frames under the padding convention.
inline std::size_t istft_capacity(int frames, const StftConfig& cfg) {
    const std::size_t total = static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.n_fft;
    return cfg.center_padding ? total - cfg.n_fft / 2 : total;
}

/// Weighted overlap-add synthesis with per-sample squared-window
/// normalization (exact inverse of stft wherever the window sum is nonzero).
/// With center padding the first n_fft/2 synthesized samples are dropped.
inline AudioBuffer istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                         std::size_t out_len, int sample_rate) {
    cfg.validate();
    spec.check();
    require(spec.bins() == cfg.bins(),
            "istft: spectrogram has " + std::to_string(spec.bins()) +
                " rows, config expects " + std::to_string(cfg.bins()));
    const int frames = spec.frames();
    require(frames >= 1, "istft: empty spectrogram");
    require(out_len <= istft_capacity(frames, cfg),
            "istft: requested length exceeds synthesizable length");

    const int n = cfg.n_fft;
    const int h = cfg.hop;

    // Per-frame inverse transforms into scratch (independent, parallel).
    std::vector<double> synth(static_cast<std::size_t>(frames) * n);
    parallel_for(static_cast<std::size_t>(frames), [&](std::size_t t0, std::size_t t1) {
        std::vector<std::complex<double>> half(cfg.bins());
        for (std::size_t t = t0; t < t1; ++t) {
            for (int k = 0; k < cfg.bins(); ++k)
                half[k] = std::complex<double>(spec.real(k, static_cast<int>(t)),
                                               spec.imag(k, static_cast<int>(t)));
            const auto frame = irfft(half.data(), static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i)
                synth[t * n + i] = frame[i] * cfg.window[i];
        }
    });

    // Gather formulation of overlap-add: each output sample sums its
    // contributing frames in ascending frame order, matching the sequential
    // accumulation exactly for any thread count.
    const std::size_t total = static_cast<std::size_t>(frames - 1) * h + n;
    const std::size_t skip = cfg.center_padding ? static_cast<std::size_t>(n / 2) : 0;
    AudioBuffer out;
    out.sample_rate = sample_rate;
    out.samples.assign(out_len, 0.0);
    parallel_for(out_len, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const std::size_t pos = i + skip;
            if (pos >= total) continue;
            const int t_last = static_cast<int>(pos / h);
            const int t_first = std::max(0, static_cast<int>((pos >= static_cast<std::size_t>(n - 1)
                                                                 ? (pos - (n - 1) + h - 1) / h
                                                                 : 0)));
            double num = 0.0, den = 0.0;
            for (int t = t_first; t <= std::min(t_last, frames - 1); ++t) {
                const std::size_t off = pos - static_cast<std::size_t>(t) * h;
                if (off >= static_cast<std::size_t>(n)) continue;
                num += synth[static_cast<std::size_t>(t) * n + off];
                den += cfg.window[off] * cfg.window[off];
            }
            out.samples[i] = den > 1e-12 ? num / den : 0.0;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Mel filterbank
// ---------------------------------------------------------------------------

enum class MelScale { Htk, Slaney };

struct MelConfig {
    int n_mels = 80;
    double f_min = 0.0;
    double f_max = 8000.0;
    int sample_rate = 22050;
    int n_fft = 1024;
    double log_floor = 1e-5;          // clamp before the log
    MelScale scale = MelScale::Htk;   // pitch scale formula
    bool area_normalize = true;       // 2 / bandwidth per triangle

    int bins() const { return n_fft / 2 + 1; }
    void validate() const {
        require(sample_rate > 0, "mel config: sample_rate must be positive");
        require(n_fft > 0, "mel config: n_fft must be positive");
        require(0.0 <= f_min && f_min < f_max && f_max <= sample_rate / 2.0,
                "mel config: need 0 <= f_min < f_max <= sample_rate/2");
        require(n_mels > 0 && n_mels < bins(),
                "mel config: need 0 < n_mels < n_fft/2 + 1");
        require(log_floor > 0.0, "mel config: log_floor must be positive");
    }
};

inline double hz_to_mel(double hz, MelScale scale) {
    if (scale == MelScale::Htk)
        return 2595.0 * std::log10(1.0 + hz / 700.0);
    // Slaney: linear below 1 kHz, logarithmic above
    constexpr double lin = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / lin;
    const double log_step = std::log(6.4) / 27.0;
    if (hz < min_log_hz) return hz / lin;
    return min_log_mel + std::log(hz / min_log_hz) / log_step;
}

inline double mel_to_hz(double mel, MelScale scale) {
    if (scale == MelScale::Htk)
        return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    constexpr double lin = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    constexpr double min_log_mel = min_log_hz / lin;
    const double log_step = std::log(6.4) / 27.0;
    if (mel < min_log_mel) return mel * lin;
    return min_log_hz * std::exp((mel - min_log_mel) * log_step);
}

/// Triangular filters on the configured mel scale, pseudo-inverse attached.
inline MelFilterbank build_mel_filterbank(const MelConfig& cfg,
                                          double sv_floor_rel = kDefaultSvFloor) {
    cfg.validate();
    const int f = cfg.bins();
    const int m = cfg.n_mels;

    const double mel_lo = hz_to_mel(cfg.f_min, cfg.scale);
    const double mel_hi = hz_to_mel(cfg.f_max, cfg.scale);
    std::vector<double> edges(m + 2);
    for (int i = 0; i < m + 2; ++i)
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (m + 1), cfg.scale);

    MelFilterbank fb;
    fb.A = Mat(m, f);
    for (int r = 0; r < m; ++r) {
        const double f0 = edges[r], f1 = edges[r + 1], f2 = edges[r + 2];
        const double norm = cfg.area_normalize ? 2.0 / (f2 - f0) : 1.0;
        for (int k = 0; k < f; ++k) {
            const double hz = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
            const double up = (hz - f0) / (f1 - f0);
            const double down = (f2 - hz) / (f2 - f1);
            fb.A(r, k) = std::max(0.0, std::min(up, down)) * norm;
        }
    }

    auto [pinv, report] = compute_pinv(fb.A, sv_floor_rel);
    require(report.rank == m, "filterbank rank deficient");
    fb.A_pinv = std::move(pinv);
    fb.report = report;
    return fb;
}

/// Log-mel degradation: log(max(A |S|, log_floor)), natural log.
inline Mat mel_from_magnitude(const Mat& magnitude, const MelFilterbank& fb,
                              double log_floor) {
    require(magnitude.rows() == fb.freq_bins(),
            "mel: magnitude has " + std::to_string(magnitude.rows()) +
                " rows, filterbank expects " + std::to_string(fb.freq_bins()));
    require(log_floor > 0.0, "mel: log_floor must be positive");
    Mat out = matmul(fb.A, magnitude);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::log(std::max(out.data()[i], log_floor));
    return out;
}

inline Mat mel_spectrogram(const ComplexSpectrogram& spec, const MelFilterbank& fb,
                           double log_floor) {
    return mel_from_magnitude(spec.magnitude(), fb, log_floor);
}

}  // namespace rndvoc
