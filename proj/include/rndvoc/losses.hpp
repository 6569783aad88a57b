// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Training losses as pure evaluators: spectral reconstruction terms, the
// omnidirectional phase loss built from nine fixed 3x3 differential kernels,
// hinge adversarial terms, and feature matching. No gradients here.

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "rndvoc/core.hpp"
#include "rndvoc/dsp.hpp"

namespace rndvoc {

// ---------------------------------------------------------------------------
// Omnidirectional phase differentials
// ---------------------------------------------------------------------------

/// Nine fixed 3x3 kernels. Kernel j pairs the center bin with neighbor
/// offset (df, dt) = (j/3 - 1, j%3 - 1): +1 at center, -1 at the neighbor,
/// so the response is phase[center] - phase[neighbor]. Kernel 4 (the middle
/// one) is the pure center tap and returns the phase itself.
struct PhaseKernelBank {
    // kernels[j][(df+1)*3 + (dt+1)]
    std::array<std::array<double, 9>, 9> kernels{};

    static PhaseKernelBank standard() {
        PhaseKernelBank bank;
        for (int j = 0; j < 9; ++j) {
            if (j == 4) {
                bank.kernels[j][4] = 1.0;
            } else {
                bank.kernels[j][4] = 1.0;
                bank.kernels[j][j] = -1.0;
            }
        }
        return bank;
    }

    void validate() const {
        for (int j = 0; j < 9; ++j) {
            double sum = 0.0;
            for (double v : kernels[j]) sum += v;
            require(std::abs(sum - (j == 4 ? 1.0 : 0.0)) < 1e-12,
                    "phase kernel bank: wrong kernel sum");
            require(kernels[j][4] == 1.0, "phase kernel bank: center tap must be +1");
        }
        // the eight off-center kernels must cover the eight neighbors once each
        std::array<int, 9> hits{};
        for (int j = 0; j < 9; ++j) {
            if (j == 4) continue;
            int neighbor = -1;
            for (int p = 0; p < 9; ++p) {
                if (p == 4) continue;
                if (kernels[j][p] == -1.0) {
                    require(neighbor == -1, "phase kernel bank: multiple neighbors");
                    neighbor = p;
                }
            }
            require(neighbor >= 0, "phase kernel bank: kernel without neighbor tap");
            ++hits[neighbor];
        }
        for (int p = 0; p < 9; ++p)
            require(p == 4 || hits[p] == 1, "phase kernel bank: neighbor covered twice");
    }
};

/// Correlation of the phase field with each kernel, replicate padding at the
/// edges, output 9 x F x T. Channel 4 equals the input.
inline std::vector<Mat> omni_phase_diff(const Mat& phase, const PhaseKernelBank& bank) {
    require(phase.all_finite(), "omni_phase_diff: non-finite phase");
    const int f = phase.rows();
    const int t = phase.cols();
    std::vector<Mat> out(9, Mat(f, t));
    for (int j = 0; j < 9; ++j) {
        Mat& dst = out[j];
        const auto& k = bank.kernels[j];
        parallel_for(static_cast<std::size_t>(f), [&](std::size_t r0, std::size_t r1) {
            for (std::size_t r = r0; r < r1; ++r) {
                for (int c = 0; c < t; ++c) {
                    double acc = 0.0;
                    for (int df = -1; df <= 1; ++df) {
                        for (int dt = -1; dt <= 1; ++dt) {
                            const double w = k[(df + 1) * 3 + (dt + 1)];
                            if (w == 0.0) continue;
                            const int rr = std::clamp(static_cast<int>(r) + df, 0, f - 1);
                            const int cc = std::clamp(c + dt, 0, t - 1);
                            acc += w * phase(rr, cc);
                        }
                    }
                    dst(static_cast<int>(r), c) = acc;
                }
            }
        });
    }
    return out;
}

/// Distance to the nearest multiple of 2 pi: |x - 2 pi round(x / 2 pi)|,
/// always in [0, pi].
inline double anti_wrap(double x) {
    return std::abs(x - kTwoPi * std::round(x / kTwoPi));
}

inline Mat anti_wrap(const Mat& x) {
    Mat out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = anti_wrap(x.data()[i]);
    return out;
}

/// Mean anti-wrapped difference of the two phase fields' differentials over
/// all nine directions.
inline double loss_phase(const Mat& phase_true, const Mat& phase_est,
                         const PhaseKernelBank& bank) {
    require(phase_true.same_shape(phase_est), "loss_phase: shape mismatch");
    const auto dt = omni_phase_diff(phase_true, bank);
    const auto de = omni_phase_diff(phase_est, bank);
    double sum = 0.0;
    for (int j = 0; j < 9; ++j)
        for (std::size_t i = 0; i < dt[j].size(); ++i)
            sum += anti_wrap(dt[j].data()[i] - de[j].data()[i]);
    return sum / (9.0 * phase_true.size());
}

// ---------------------------------------------------------------------------
// Reconstruction losses
// ---------------------------------------------------------------------------

inline double loss_log_amplitude(const Mat& mag_true, const Mat& mag_est,
                                 double log_floor = 1e-5) {
    require(mag_true.same_shape(mag_est), "loss_log_amplitude: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < mag_true.size(); ++i)
        sum += std::abs(std::log(std::max(mag_true.data()[i], log_floor)) -
                        std::log(std::max(mag_est.data()[i], log_floor)));
    return sum / mag_true.size();
}

inline double loss_ri(const ComplexSpectrogram& spec_true,
                      const ComplexSpectrogram& spec_est) {
    spec_true.check();
    spec_est.check();
    require(spec_true.real.same_shape(spec_est.real), "loss_ri: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < spec_true.real.size(); ++i) {
        sum += std::abs(spec_true.real.data()[i] - spec_est.real.data()[i]);
        sum += std::abs(spec_true.imag.data()[i] - spec_est.imag.data()[i]);
    }
    return sum / (2.0 * spec_true.real.size());
}

/// Mean absolute log-mel difference of the two waveforms through the shared
/// analysis front end.
inline double loss_mel(const AudioBuffer& audio_true, const AudioBuffer& audio_est,
                       const StftConfig& stft_cfg, const MelFilterbank& fb,
                       double log_floor) {
    const Mat mel_t = mel_spectrogram(stft(audio_true, stft_cfg), fb, log_floor);
    const Mat mel_e = mel_spectrogram(stft(audio_est, stft_cfg), fb, log_floor);
    require(mel_t.same_shape(mel_e), "loss_mel: waveform lengths give different frame counts");
    double sum = 0.0;
    for (std::size_t i = 0; i < mel_t.size(); ++i)
        sum += std::abs(mel_t.data()[i] - mel_e.data()[i]);
    return sum / mel_t.size();
}

/// Squared distance to the STFT-consistent manifold: MSE between the
/// spectrogram and stft(istft(.)). Synthesis runs at (T-1) * hop samples so
/// the re-analysis frame count matches.
inline double loss_consistency(const ComplexSpectrogram& spec_est,
                               const StftConfig& stft_cfg) {
    spec_est.check();
    const int frames = spec_est.frames();
    require(frames >= 2, "loss_consistency: need at least two frames");
    const std::size_t len = static_cast<std::size_t>(frames - 1) * stft_cfg.hop;
    const AudioBuffer audio = istft(spec_est, stft_cfg, len, 1);
    const ComplexSpectrogram spec2 = stft(audio, stft_cfg);
    require(spec2.frames() == frames, "loss_consistency: frame count changed");
    double sum = 0.0;
    for (std::size_t i = 0; i < spec_est.real.size(); ++i) {
        const double dr = spec_est.real.data()[i] - spec2.real.data()[i];
        const double di = spec_est.imag.data()[i] - spec2.imag.data()[i];
        sum += dr * dr + di * di;
    }
    return sum / (2.0 * spec_est.real.size());
}

// ---------------------------------------------------------------------------
// Adversarial losses (discriminator outputs supplied by the caller)
// ---------------------------------------------------------------------------

/// One sub-discriminator's view of a waveform: its scalar score and the
/// per-layer feature tensors (flattened).
struct DiscriminatorView {
    double score = 0.0;
    std::vector<std::vector<double>> features;
};

inline double hinge_discriminator(const std::vector<DiscriminatorView>& real_views,
                                  const std::vector<DiscriminatorView>& fake_views) {
    require(!real_views.empty() && real_views.size() == fake_views.size(),
            "hinge_discriminator: mismatched view counts");
    double sum = 0.0;
    for (std::size_t m = 0; m < real_views.size(); ++m)
        sum += std::max(0.0, 1.0 - real_views[m].score) +
               std::max(0.0, 1.0 + fake_views[m].score);
    return sum / real_views.size();
}

inline double hinge_generator(const std::vector<DiscriminatorView>& fake_views) {
    require(!fake_views.empty(), "hinge_generator: no views");
    double sum = 0.0;
    for (const auto& v : fake_views) sum += std::max(0.0, 1.0 - v.score);
    return sum / fake_views.size();
}

/// Mean absolute feature difference, averaged per tensor and normalized by
/// the total number of feature tensors (L * M when every view has L layers).
inline double feature_match(const std::vector<DiscriminatorView>& real_views,
                            const std::vector<DiscriminatorView>& fake_views) {
    require(!real_views.empty() && real_views.size() == fake_views.size(),
            "feature_match: mismatched view counts");
    double sum = 0.0;
    std::size_t tensors = 0;
    for (std::size_t m = 0; m < real_views.size(); ++m) {
        const auto& fr = real_views[m].features;
        const auto& ff = fake_views[m].features;
        require(fr.size() == ff.size(), "feature_match: layer count mismatch");
        for (std::size_t l = 0; l < fr.size(); ++l) {
            require(fr[l].size() == ff[l].size() && !fr[l].empty(),
                    "feature_match: feature shape mismatch");
            double acc = 0.0;
            for (std::size_t i = 0; i < fr[l].size(); ++i)
                acc += std::abs(ff[l][i] - fr[l][i]);
            sum += acc / fr[l].size();
            ++tensors;
        }
    }
    require(tensors > 0, "feature_match: no feature tensors");
    return sum / tensors;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct LossWeights {
    double lambda_a = 45.0;
    double lambda_p = 100.0;
    double lambda_ri = 45.0;
    double lambda_mel = 45.0;
    double lambda_c = 1.0;
    double lambda_g = 1.0;
    double lambda_fm = 2.0;

    void validate() const {
        for (double v : {lambda_a, lambda_p, lambda_ri, lambda_mel, lambda_c,
                         lambda_g, lambda_fm})
            require(std::isfinite(v) && v >= 0.0,
                    "loss weights must be finite and nonnegative");
    }
};

struct LossTerms {
    double amplitude = 0.0;
    double phase = 0.0;
    double real_imag = 0.0;
    double mel = 0.0;
    double consistency = 0.0;
    double adversarial = 0.0;
    double feature_matching = 0.0;
};

struct LossBreakdown {
    LossTerms raw;       // unweighted evaluator outputs
    LossTerms weighted;  // after multiplying by the lambdas
    double total = 0.0;
};

inline LossBreakdown total_generator_loss(const LossTerms& terms,
                                          const LossWeights& w) {
    w.validate();
    LossBreakdown out;
    out.raw = terms;
    out.weighted.amplitude = w.lambda_a * terms.amplitude;
    out.weighted.phase = w.lambda_p * terms.phase;
    out.weighted.real_imag = w.lambda_ri * terms.real_imag;
    out.weighted.mel = w.lambda_mel * terms.mel;
    out.weighted.consistency = w.lambda_c * terms.consistency;
    out.weighted.adversarial = w.lambda_g * terms.adversarial;
    out.weighted.feature_matching = w.lambda_fm * terms.feature_matching;
    out.total = out.weighted.amplitude + out.weighted.phase + out.weighted.real_imag +
                out.weighted.mel + out.weighted.consistency + out.weighted.adversarial +
                out.weighted.feature_matching;
    return out;
}

}  // namespace rndvoc
