// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Batch command-line front end. Exit codes: 0 success, 1 usage error,
// 2 data/validation error, 3 invariant violation (verify failures).

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rndvoc/rndvoc.hpp"

namespace {

using namespace rndvoc;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInvariant = 3;

struct CountTarget {
    double params_m = 0.0;  // millions, 0 = unpublished
    double macs_g = 0.0;    // Giga per --seconds at --sample-rate, 0 = unpublished
};

CountTarget lookup_target(const std::string& preset, double seconds, int rate) {
    CountTarget t;
    if (preset == "ljspeech" || preset == "libritts") t.params_m = 3.14;
    if (preset == "lite") t.params_m = 0.71;
    if (preset == "ultralite") t.params_m = 0.08;
    if (seconds == 5.0) {
        if (preset == "ljspeech" && rate == 22050) t.macs_g = 34.10;
        if (preset == "lite" && rate == 22050) t.macs_g = 9.54;
        if (preset == "lite" && rate == 24000) t.macs_g = 10.39;
        if (preset == "ultralite" && rate == 22050) t.macs_g = 1.66;
        if (preset == "ultralite" && rate == 24000) t.macs_g = 1.81;
    }
    return t;
}

Mat load_mel_file(const std::string& path, const Preset& preset) {
    const Tensor t = load_tensor(path, "mel");
    require(t.shape.size() == 2, "mel file: tensor must be 2-D");
    const Mat mel = tensor_to_mat(t);
    require(mel.rows() == preset.mel.n_mels,
            "mel file has " + std::to_string(mel.rows()) + " bands, preset '" +
                preset.name + "' expects " + std::to_string(preset.mel.n_mels));
    return mel;
}

ComplexSpectrogram load_spec_or_audio(const std::string& path, const Preset& preset) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".wav") {
        AudioBuffer audio = read_wav(path);
        if (audio.sample_rate != preset.mel.sample_rate)
            std::fprintf(stderr,
                         "warning: %s is %d Hz, preset '%s' assumes %d Hz\n",
                         path.c_str(), audio.sample_rate, preset.name.c_str(),
                         preset.mel.sample_rate);
        return stft(audio, preset.stft_cfg);
    }
    const Tensor t = load_tensor(path, "spectrogram");
    require(t.shape.size() == 3 && t.shape[0] == 2,
            "spectrogram file: tensor must be [2, F, T] (real and imaginary planes)");
    const int f = static_cast<int>(t.shape[1]);
    const int frames = static_cast<int>(t.shape[2]);
    ComplexSpectrogram spec{Mat(f, frames), Mat(f, frames)};
    for (int r = 0; r < f; ++r)
        for (int c = 0; c < frames; ++c) {
            spec.real(r, c) = t.data[static_cast<std::size_t>(r) * frames + c];
            spec.imag(r, c) =
                t.data[(static_cast<std::size_t>(f) + r) * frames + c];
        }
    return spec;
}

int cmd_mel_extract(const std::string& in, const std::string& preset_name,
                    const std::string& out) {
    const Preset preset = resolve_preset(preset_name);
    AudioBuffer audio = read_wav(in);
    if (audio.sample_rate != preset.mel.sample_rate)
        std::fprintf(stderr, "warning: %s is %d Hz, preset '%s' assumes %d Hz\n",
                     in.c_str(), audio.sample_rate, preset.name.c_str(),
                     preset.mel.sample_rate);
    const MelFilterbank fb = build_mel_filterbank(preset.mel);
    const Mat mel = mel_spectrogram(stft(audio, preset.stft_cfg), fb,
                                    preset.mel.log_floor);
    save_tensor(mat_to_tensor(mel, "mel"), out);
    std::printf("mel.bands=%d\nmel.frames=%d\nmel.out=%s\n", mel.rows(), mel.cols(),
                out.c_str());
    return kExitOk;
}

int cmd_range_vocode(const std::string& in, const std::string& preset_name,
                     const std::string& out) {
    const Preset preset = resolve_preset(preset_name);
    const MelFilterbank fb = build_mel_filterbank(preset.mel);
    const Mat mel = load_mel_file(in, preset);
    Mat range = range_project(mel, fb);
    for (std::size_t i = 0; i < range.size(); ++i)
        range.data()[i] = std::max(0.0, range.data()[i]);
    const auto spec = assemble_spectrum(range, Mat(range.rows(), range.cols()));
    const AudioBuffer audio =
        istft(spec, preset.stft_cfg,
              static_cast<std::size_t>(mel.cols()) * preset.stft_cfg.hop,
              preset.mel.sample_rate);
    write_wav(audio, out);
    std::printf("audio.samples=%zu\naudio.out=%s\n", audio.samples.size(), out.c_str());
    return kExitOk;
}

int cmd_vocode(const std::string& in, const std::string& weights,
               const std::string& preset_name, const std::string& out,
               const std::string& dump_dir) {
    const Preset preset = resolve_preset(preset_name);
    const MelFilterbank fb = build_mel_filterbank(preset.mel);
    const Mat mel = load_mel_file(in, preset);
    const WeightBundle bundle = load_weights(weights, preset.gen);
    const GeneratorOutput result = generator_forward(mel, fb, preset.gen,
                                                     preset.stft_cfg,
                                                     preset.mel.sample_rate, bundle);
    write_wav(result.audio, out);
    if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        const auto dir = std::filesystem::path(dump_dir);
        save_tensor(mat_to_tensor(result.range, "range"), (dir / "range.rndt").string());
        save_tensor(mat_to_tensor(result.null_raw, "null_raw"),
                    (dir / "null_raw.rndt").string());
        save_tensor(mat_to_tensor(result.magnitude, "magnitude"),
                    (dir / "magnitude.rndt").string());
        save_tensor(mat_to_tensor(result.magnitude_preclamp, "magnitude_preclamp"),
                    (dir / "magnitude_preclamp.rndt").string());
        save_tensor(mat_to_tensor(result.phase, "phase"), (dir / "phase.rndt").string());
    }
    std::printf("audio.samples=%zu\naudio.out=%s\n", result.audio.samples.size(),
                out.c_str());
    return kExitOk;
}

int cmd_count(const std::string& preset_name, double seconds, int sample_rate) {
    const Preset preset = resolve_preset(preset_name);
    const int rate = sample_rate > 0 ? sample_rate : preset.mel.sample_rate;
    const std::uint64_t params = count_params(preset.gen);
    const std::uint64_t macs = count_macs(preset.gen, seconds, rate,
                                          preset.stft_cfg.hop);
    const CountTarget target = lookup_target(preset_name, seconds, rate);

    std::printf("preset=%s\nseconds=%g\nsample_rate=%d\n", preset_name.c_str(), seconds,
                rate);
    std::printf("params=%" PRIu64 "\nparams_millions=%.6f\n", params, params / 1e6);
    if (target.params_m > 0.0)
        std::printf("params_target_millions=%.2f\nparams_deviation_percent=%+.2f\n",
                    target.params_m, 100.0 * (params / 1e6 - target.params_m) /
                                         target.params_m);
    else
        std::printf("params_target_millions=n/a\n");
    std::printf("macs=%" PRIu64 "\nmacs_giga=%.6f\n", macs, macs / 1e9);
    if (target.macs_g > 0.0)
        std::printf("macs_target_giga=%.2f\nmacs_deviation_percent=%+.2f\n",
                    target.macs_g, 100.0 * (macs / 1e9 - target.macs_g) / target.macs_g);
    else
        std::printf("macs_target_giga=n/a\n");
    return kExitOk;
}

int cmd_gen_weights(const std::string& preset_name, std::uint64_t seed,
                    const std::string& out) {
    const Preset preset = resolve_preset(preset_name);
    const WeightBundle bundle = init_random(preset.gen, seed);
    save_weights(bundle, out);
    std::printf("weights.tensors=%zu\nweights.scalars=%" PRIu64 "\nweights.out=%s\n",
                bundle.size(), bundle.total_scalars(), out.c_str());
    return kExitOk;
}

int cmd_loss_eval(const std::string& ref, const std::string& est,
                  const std::string& preset_name) {
    const Preset preset = resolve_preset(preset_name);
    const MelFilterbank fb = build_mel_filterbank(preset.mel);
    const ComplexSpectrogram spec_ref = load_spec_or_audio(ref, preset);
    const ComplexSpectrogram spec_est = load_spec_or_audio(est, preset);
    require(spec_ref.real.same_shape(spec_est.real),
            "loss-eval: inputs produce different spectrogram shapes");

    const Mat mag_ref = spec_ref.magnitude();
    const Mat mag_est = spec_est.magnitude();
    const PhaseKernelBank bank = PhaseKernelBank::standard();

    LossTerms terms;
    terms.amplitude = loss_log_amplitude(mag_ref, mag_est, preset.mel.log_floor);
    terms.phase = loss_phase(spec_ref.phase(), spec_est.phase(), bank);
    terms.real_imag = loss_ri(spec_ref, spec_est);
    {
        const Mat mel_ref = mel_from_magnitude(mag_ref, fb, preset.mel.log_floor);
        const Mat mel_est = mel_from_magnitude(mag_est, fb, preset.mel.log_floor);
        double sum = 0.0;
        for (std::size_t i = 0; i < mel_ref.size(); ++i)
            sum += std::abs(mel_ref.data()[i] - mel_est.data()[i]);
        terms.mel = sum / mel_ref.size();
    }
    terms.consistency = loss_consistency(spec_est, preset.stft_cfg);
    // adversarial and feature-matching terms need discriminator outputs,
    // which the CLI does not have; they stay zero here.
    const LossBreakdown breakdown = total_generator_loss(terms, preset.loss);

    std::printf("loss.amplitude=%.12g\n", breakdown.raw.amplitude);
    std::printf("loss.phase=%.12g\n", breakdown.raw.phase);
    std::printf("loss.real_imag=%.12g\n", breakdown.raw.real_imag);
    std::printf("loss.mel=%.12g\n", breakdown.raw.mel);
    std::printf("loss.consistency=%.12g\n", breakdown.raw.consistency);
    std::printf("loss.adversarial=%.12g\n", breakdown.raw.adversarial);
    std::printf("loss.feature_matching=%.12g\n", breakdown.raw.feature_matching);
    std::printf("weighted.amplitude=%.12g\n", breakdown.weighted.amplitude);
    std::printf("weighted.phase=%.12g\n", breakdown.weighted.phase);
    std::printf("weighted.real_imag=%.12g\n", breakdown.weighted.real_imag);
    std::printf("weighted.mel=%.12g\n", breakdown.weighted.mel);
    std::printf("weighted.consistency=%.12g\n", breakdown.weighted.consistency);
    std::printf("total=%.12g\n", breakdown.total);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct CheckReport {
    bool all_pass = true;
    void report(const std::string& name, double value, double tolerance,
                bool larger_is_better = false) {
        const bool pass = larger_is_better ? value >= tolerance : value <= tolerance;
        const double margin = larger_is_better
                                  ? value / tolerance
                                  : (value == 0.0 ? 1e308 : tolerance / value);
        std::printf("check.%s value=%.6g tolerance=%.6g margin=%.6g status=%s\n",
                    name.c_str(), value, tolerance, margin, pass ? "pass" : "fail");
        all_pass = all_pass && pass;
    }
};

int cmd_verify(const std::string& preset_name, std::uint64_t seed,
               const std::string& weights_path, double tol_scale) {
    const Preset preset = resolve_preset(preset_name);
    CheckReport rep;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    rep.report("cola_deviation", cola_deviation(preset.stft_cfg), 1e-10 * tol_scale);

    const MelFilterbank fb = build_mel_filterbank(preset.mel);
    {
        const Mat ap = matmul(fb.A, fb.A_pinv);
        const Mat pa = matmul(fb.A_pinv, fb.A);
        double worst = (matmul(ap, fb.A) - fb.A).max_abs();
        worst = std::max(worst, (matmul(pa, fb.A_pinv) - fb.A_pinv).max_abs());
        Mat apt(ap.cols(), ap.rows());
        for (int i = 0; i < ap.rows(); ++i)
            for (int j = 0; j < ap.cols(); ++j) apt(j, i) = ap(i, j);
        worst = std::max(worst, (ap - apt).max_abs());
        Mat pat(pa.cols(), pa.rows());
        for (int i = 0; i < pa.rows(); ++i)
            for (int j = 0; j < pa.cols(); ++j) pat(j, i) = pa(i, j);
        worst = std::max(worst, (pa - pat).max_abs());
        rep.report("pinv_moore_penrose", worst, 1e-5 * tol_scale);
    }

    {
        const int f = fb.freq_bins();
        double worst_rel = 0.0, worst_dot = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            Mat u(f, 1), v(f, 1);
            for (int i = 0; i < f; ++i) {
                u(i, 0) = unit(rng);
                v(i, 0) = unit(rng);
            }
            const Mat range_u = matmul(fb.A_pinv, matmul(fb.A, u));
            const Mat null_u = null_project(u, fb);
            const Mat null_v = null_project(v, fb);
            double err = 0.0, norm = 0.0, dot = 0.0, nu = 0.0, nv = 0.0;
            for (int i = 0; i < f; ++i) {
                const double d = u(i, 0) - (range_u(i, 0) + null_u(i, 0));
                err += d * d;
                norm += u(i, 0) * u(i, 0);
                dot += range_u(i, 0) * null_v(i, 0);
                nu += u(i, 0) * u(i, 0);
                nv += v(i, 0) * v(i, 0);
            }
            worst_rel = std::max(worst_rel, std::sqrt(err / norm));
            worst_dot = std::max(worst_dot, std::abs(dot) / std::sqrt(nu * nv));
        }
        rep.report("rnd_exact_decomposition", worst_rel, 1e-6 * tol_scale);
        rep.report("rnd_orthogonality", worst_dot, 1e-6 * tol_scale);
    }

    {
        double worst_snr = 1e9;
        for (int trial = 0; trial < 3; ++trial) {
            const std::size_t n = preset.mel.sample_rate + 1000 * trial;
            AudioBuffer audio;
            audio.sample_rate = preset.mel.sample_rate;
            audio.samples.resize(n);
            for (auto& v : audio.samples) v = 0.5 * unit(rng);
            const auto spec = stft(audio, preset.stft_cfg);
            const auto back = istft(spec, preset.stft_cfg, n, audio.sample_rate);
            double sig = 0.0, err = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sig += audio.samples[i] * audio.samples[i];
                const double d = audio.samples[i] - back.samples[i];
                err += d * d;
            }
            worst_snr = std::min(worst_snr,
                                 err == 0.0 ? 300.0 : 10.0 * std::log10(sig / err));
        }
        rep.report("stft_roundtrip_snr_db", worst_snr, 60.0 / tol_scale, true);
    }

    {
        // degradation consistency of one random-weight forward pass
        const WeightBundle bundle = init_random(preset.gen, seed);
        const int frames = 40;
        Mat mel(preset.mel.n_mels, frames);
        for (std::size_t i = 0; i < mel.size(); ++i) mel.data()[i] = unit(rng) - 2.0;
        const auto out = generator_forward(mel, fb, preset.gen, preset.stft_cfg,
                                           preset.mel.sample_rate, bundle);
        const Mat redegraded = matmul(fb.A, out.magnitude_preclamp);
        const Mat target = exp_mel(mel);
        const double rel = (redegraded - target).max_abs() / target.max_abs();
        rep.report("degradation_consistency", rel, 1e-4 * tol_scale);

        // determinism across thread counts
        const unsigned saved = thread_count();
        set_thread_count(1);
        const auto out1 = generator_forward(mel, fb, preset.gen, preset.stft_cfg,
                                            preset.mel.sample_rate, bundle);
        set_thread_count(4);
        const auto out4 = generator_forward(mel, fb, preset.gen, preset.stft_cfg,
                                            preset.mel.sample_rate, bundle);
        set_thread_count(saved);
        double mismatches = 0.0;
        for (std::size_t i = 0; i < out1.magnitude.size(); ++i)
            if (out1.magnitude.data()[i] != out4.magnitude.data()[i]) mismatches += 1.0;
        for (std::size_t i = 0; i < out1.audio.samples.size(); ++i)
            if (out1.audio.samples[i] != out4.audio.samples[i]) mismatches += 1.0;
        rep.report("thread_determinism_mismatches", mismatches, 0.0);
    }

    {
        const PhaseKernelBank bank = PhaseKernelBank::standard();
        bank.validate();
        Mat phase(32, 24);
        for (std::size_t i = 0; i < phase.size(); ++i) phase.data()[i] = kPi * unit(rng);
        const auto diffs = omni_phase_diff(phase, bank);
        double worst = 0.0;
        for (int j = 0; j < 9; ++j) {
            if (j == 4) {  // identity kernel
                for (std::size_t i = 0; i < phase.size(); ++i)
                    worst = std::max(worst,
                                     std::abs(diffs[4].data()[i] - phase.data()[i]));
                continue;
            }
            const int df = j / 3 - 1, dt = j % 3 - 1;
            for (int f = 1; f + 1 < phase.rows(); ++f)
                for (int t = 1; t + 1 < phase.cols(); ++t) {
                    const double want = phase(f, t) - phase(f + df, t + dt);
                    worst = std::max(worst, std::abs(diffs[j](f, t) - want));
                }
        }
        rep.report("phase_kernel_oracle", worst, 0.0);

        Mat other(32, 24);
        for (std::size_t i = 0; i < other.size(); ++i) other.data()[i] = kPi * unit(rng);
        const double base = loss_phase(phase, other, bank);
        double worst_wrap = 0.0;
        for (int k = -2; k <= 2; ++k) {
            Mat shifted = phase;
            for (std::size_t i = 0; i < shifted.size(); ++i)
                shifted.data()[i] += kTwoPi * k;
            worst_wrap = std::max(worst_wrap,
                                  std::abs(loss_phase(shifted, other, bank) - base));
        }
        rep.report("phase_wrap_invariance", worst_wrap, 1e-10 * tol_scale);
    }

    {
        const WeightBundle bundle =
            weights_path.empty() ? init_random(preset.gen, seed)
                                 : load_weights(weights_path, preset.gen);
        const auto dir = std::filesystem::temp_directory_path() / "rndvoc_verify";
        std::filesystem::create_directories(dir);
        const auto path = (dir / "roundtrip.rndw").string();
        save_weights(bundle, path);
        const WeightBundle back = load_weights(path, preset.gen);
        double mismatches = 0.0;
        for (const auto& t : bundle.tensors()) {
            const Tensor& o = back.get(t.name);
            for (std::size_t i = 0; i < t.data.size(); ++i)
                if (t.data[i] != o.data[i]) mismatches += 1.0;
        }
        rep.report("weights_roundtrip_mismatches", mismatches, 0.0);
        rep.report("manifest_count_consistency",
                   static_cast<double>(bundle.total_scalars()) -
                       static_cast<double>(count_params(preset.gen)),
                   0.0);
    }

    std::printf("verify.status=%s\n", rep.all_pass ? "pass" : "fail");
    return rep.all_pass ? kExitOk : kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"range-null decomposition vocoder toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    unsigned threads = 1;
    app.add_option("--threads", threads, "worker threads (0 = hardware concurrency)")
        ->capture_default_str();

    std::string in, out, preset = "ljspeech", weights, dump_dir, ref, est;
    double seconds = 5.0;
    int sample_rate = 0;
    std::uint64_t seed = 0;
    double tol_scale = 1.0;

    // every --preset accepts a shipped name or a JSON config-file path
    auto* mel_cmd = app.add_subcommand("mel-extract", "WAV to mel-matrix tensor file");
    mel_cmd->add_option("--in", in, "input WAV (mono)")->required();
    mel_cmd->add_option("--preset", preset, "preset name or config file")
        ->capture_default_str();
    mel_cmd->add_option("--out", out, "output tensor file")->required();

    auto* range_cmd = app.add_subcommand(
        "range-vocode", "no-network baseline: range projection + zero phase");
    range_cmd->add_option("--in", in, "input mel tensor file")->required();
    range_cmd->add_option("--preset", preset, "preset name")->capture_default_str();
    range_cmd->add_option("--out", out, "output WAV")->required();

    auto* vocode_cmd = app.add_subcommand("vocode", "full generator forward pass");
    vocode_cmd->add_option("--in", in, "input mel tensor file")->required();
    vocode_cmd->add_option("--weights", weights, "weight bundle file")->required();
    vocode_cmd->add_option("--preset", preset, "preset name")->capture_default_str();
    vocode_cmd->add_option("--out", out, "output WAV")->required();
    vocode_cmd->add_option("--dump-spectra", dump_dir,
                           "directory for range/null/magnitude/phase tensors");

    auto* count_cmd = app.add_subcommand("count", "parameter and MAC accounting");
    count_cmd->add_option("--preset", preset, "preset name")->capture_default_str();
    count_cmd->add_option("--seconds", seconds, "audio duration")->capture_default_str();
    count_cmd->add_option("--sample-rate", sample_rate,
                          "sample rate (default: preset rate)");

    auto* loss_cmd = app.add_subcommand("loss-eval", "itemized loss report");
    loss_cmd->add_option("--ref", ref, "reference WAV or [2,F,T] spectrogram tensor")
        ->required();
    loss_cmd->add_option("--est", est, "estimate WAV or [2,F,T] spectrogram tensor")
        ->required();
    loss_cmd->add_option("--preset", preset, "preset (loss weights and analysis)")
        ->capture_default_str();

    auto* gen_cmd = app.add_subcommand("gen-weights", "seeded random weight bundle");
    gen_cmd->add_option("--preset", preset, "preset name")->capture_default_str();
    gen_cmd->add_option("--seed", seed, "PRNG seed")->capture_default_str();
    gen_cmd->add_option("--out", out, "output weight file")->required();

    auto* verify_cmd =
        app.add_subcommand("verify", "run the module property checks");
    verify_cmd->add_option("--preset", preset, "preset name")->capture_default_str();
    verify_cmd->add_option("--seed", seed, "PRNG seed")->capture_default_str();
    verify_cmd->add_option("--weights", weights, "validate this weight file too");
    verify_cmd->add_option("--tolerance-scale", tol_scale,
                           "scale every tolerance (smaller = stricter)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    set_thread_count(threads);
    try {
        if (app.got_subcommand(mel_cmd)) return cmd_mel_extract(in, preset, out);
        if (app.got_subcommand(range_cmd)) return cmd_range_vocode(in, preset, out);
        if (app.got_subcommand(vocode_cmd))
            return cmd_vocode(in, weights, preset, out, dump_dir);
        if (app.got_subcommand(count_cmd)) return cmd_count(preset, seconds, sample_rate);
        if (app.got_subcommand(loss_cmd)) return cmd_loss_eval(ref, est, preset);
        if (app.got_subcommand(gen_cmd)) return cmd_gen_weights(preset, seed, out);
        if (app.got_subcommand(verify_cmd))
            return cmd_verify(preset, seed, weights, tol_scale);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return kExitInvariant;
    }
    return kExitUsage;
}
