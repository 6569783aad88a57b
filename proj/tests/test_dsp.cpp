// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "rndvoc/dsp.hpp"
#include "rndvoc/wav.hpp"

using namespace rndvoc;

TEST_CASE("hann window satisfies squared-window COLA at quarter hop") {
    auto cfg = StftConfig::hann(1024, 256);
    REQUIRE(cola_deviation(cfg) < 1e-10);
    cfg.validate();
}

TEST_CASE("windows that break constant-overlap-add are rejected") {
    auto cfg = StftConfig::hann(1024, 256);
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> dist(0.1, 1.0);
    for (auto& w : cfg.window) w = dist(rng);
    CHECK_THROWS_WITH(cfg.validate(),
                      Catch::Matchers::ContainsSubstring("overlap-add"));
}

TEST_CASE("stft of zeros is a zero spectrogram with the expected frame count") {
    AudioBuffer audio{std::vector<double>(1024, 0.0), 22050};
    auto cfg = StftConfig::hann(1024, 256, /*center=*/false);
    const auto spec = stft(audio, cfg);
    REQUIRE(spec.bins() == 513);
    REQUIRE(spec.frames() == 1);
    REQUIRE(spec.real.max_abs() == 0.0);
    REQUIRE(spec.imag.max_abs() == 0.0);
}

TEST_CASE("stft frame counts under both padding conventions") {
    auto centered = StftConfig::hann(1024, 256, true);
    auto plain = StftConfig::hann(1024, 256, false);
    CHECK(stft_frames(22050, centered) == 87);
    CHECK(stft_frames(25600, centered) == 101);
    CHECK(stft_frames(1024, plain) == 1);
    CHECK(stft_frames(1023, plain) == 0);

    AudioBuffer tiny{std::vector<double>(100, 0.1), 22050};
    CHECK_THROWS_WITH(stft(tiny, plain), Catch::Matchers::ContainsSubstring("too short"));
}

TEST_CASE("windowed cosine at an exact bin concentrates energy there") {
    const int n = 1024;
    auto cfg = StftConfig::hann(n, 256, false);
    AudioBuffer audio;
    audio.sample_rate = 22050;
    audio.samples.resize(n);
    for (int i = 0; i < n; ++i)
        audio.samples[i] = std::cos(kTwoPi * 16.0 * i / n);

    const auto spec = stft(audio, cfg);
    const Mat mag = spec.magnitude();

    // oracle: direct summation of the windowed frame
    std::vector<double> frame(n);
    for (int i = 0; i < n; ++i) frame[i] = audio.samples[i] * cfg.window[i];
    const auto dft = oracles::naive_dft(frame);
    for (int k = 0; k < spec.bins(); ++k)
        REQUIRE(mag(k, 0) == Catch::Approx(std::abs(dft[k])).margin(1e-8));

    // coherent gain of the periodic Hann window is 1/2
    double gain = 0.0;
    for (double w : cfg.window) gain += w;
    gain /= n;
    REQUIRE(mag(16, 0) == Catch::Approx(gain * 512.0).margin(1e-6));

    int argmax = 0;
    for (int k = 0; k < spec.bins(); ++k)
        if (mag(k, 0) > mag(argmax, 0)) argmax = k;
    CHECK(argmax == 16);
    for (int k = 0; k < spec.bins(); ++k)
        if (std::abs(k - 16) > 2) CHECK(mag(k, 0) < 1e-6);
}

TEST_CASE("stft/istft roundtrip reaches 60 dB on random signals") {
    auto cfg = StftConfig::hann(1024, 256, true);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto x = oracles::random_signal(22050 + 331 * seed, 100 + seed);
        AudioBuffer audio{x, 22050};
        const auto spec = stft(audio, cfg);
        const auto back = istft(spec, cfg, x.size(), 22050);
        REQUIRE(back.samples.size() == x.size());
        REQUIRE(oracles::snr_db(x, back.samples) >= 60.0);
    }
}

TEST_CASE("istft of a zero spectrogram is silence") {
    auto cfg = StftConfig::hann(1024, 256, true);
    ComplexSpectrogram spec{Mat(513, 8), Mat(513, 8)};
    const auto audio = istft(spec, cfg, 7 * 256, 22050);
    for (double v : audio.samples) REQUIRE(v == 0.0);
}

TEST_CASE("single-frame spectrogram of a windowed impulse reproduces it") {
    const int n = 1024;
    auto cfg = StftConfig::hann(n, 256, false);
    AudioBuffer audio;
    audio.sample_rate = 22050;
    audio.samples.assign(n, 0.0);
    audio.samples[300] = 0.8;

    const auto spec = stft(audio, cfg);
    REQUIRE(spec.frames() == 1);
    const auto back = istft(spec, cfg, n, 22050);
    // hand overlap-add with a single frame: x restored wherever the window
    // is nonzero
    for (int i = 0; i < n; ++i) {
        if (cfg.window[i] * cfg.window[i] > 1e-12)
            REQUIRE(back.samples[i] == Catch::Approx(audio.samples[i]).margin(1e-6));
    }
}

TEST_CASE("istft matches a sequential scatter overlap-add oracle") {
    // the library gathers contributions per output sample; the oracle
    // scatters frame by frame like a textbook OLA loop
    auto cfg = StftConfig::hann(256, 64, false);
    const int frames = 7;
    ComplexSpectrogram spec{oracles::random_mat(129, frames, 61),
                            oracles::random_mat(129, frames, 62)};
    const std::size_t total = (frames - 1) * 64 + 256;
    std::vector<double> num(total, 0.0), den(total, 0.0);
    for (int t = 0; t < frames; ++t) {
        std::vector<std::complex<double>> half(129);
        for (int k = 0; k < 129; ++k)
            half[k] = {spec.real(k, t), spec.imag(k, t)};
        const auto frame = irfft(half.data(), 256);
        for (int i = 0; i < 256; ++i) {
            num[t * 64 + i] += cfg.window[i] * frame[i];
            den[t * 64 + i] += cfg.window[i] * cfg.window[i];
        }
    }
    const auto got = istft(spec, cfg, total, 22050);
    for (std::size_t i = 0; i < total; ++i) {
        const double want = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
        REQUIRE(got.samples[i] == Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("stft and istft are bit-identical across thread counts") {
    auto cfg = StftConfig::hann(1024, 256, true);
    AudioBuffer audio;
    audio.sample_rate = 22050;
    audio.samples = oracles::random_signal(9999, 77);

    const unsigned saved = thread_count();
    set_thread_count(1);
    const auto spec1 = stft(audio, cfg);
    const auto back1 = istft(spec1, cfg, audio.samples.size(), 22050);
    set_thread_count(4);
    const auto spec4 = stft(audio, cfg);
    const auto back4 = istft(spec4, cfg, audio.samples.size(), 22050);
    set_thread_count(saved);

    for (std::size_t i = 0; i < spec1.real.size(); ++i) {
        REQUIRE(spec1.real.data()[i] == spec4.real.data()[i]);
        REQUIRE(spec1.imag.data()[i] == spec4.imag.data()[i]);
    }
    for (std::size_t i = 0; i < back1.samples.size(); ++i)
        REQUIRE(back1.samples[i] == back4.samples[i]);
}

TEST_CASE("istft rejects lengths beyond the synthesizable range") {
    auto cfg = StftConfig::hann(1024, 256, true);
    ComplexSpectrogram spec{Mat(513, 4), Mat(513, 4)};
    CHECK_THROWS_WITH(istft(spec, cfg, istft_capacity(4, cfg) + 1, 22050),
                      Catch::Matchers::ContainsSubstring("exceeds"));
}

// ---------------------------------------------------------------------------
// Mel filterbank
// ---------------------------------------------------------------------------

static MelConfig ljspeech_mel() {
    MelConfig cfg;
    cfg.n_mels = 80;
    cfg.f_max = 8000.0;
    cfg.sample_rate = 22050;
    return cfg;
}

TEST_CASE("ljspeech filterbank shape and nonnegativity") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    REQUIRE(fb.A.rows() == 80);
    REQUIRE(fb.A.cols() == 513);
    for (std::size_t i = 0; i < fb.A.size(); ++i) REQUIRE(fb.A.data()[i] >= 0.0);
    REQUIRE(fb.report.rank == 80);
    REQUIRE(fb.report.max_reconstruction_error < 1e-5);
}

TEST_CASE("at most two triangles overlap on any frequency bin") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    for (int c = 0; c < fb.A.cols(); ++c) {
        int active = 0;
        for (int r = 0; r < fb.A.rows(); ++r)
            if (fb.A(r, c) > 0.0) ++active;
        REQUIRE(active <= 2);
    }
}

TEST_CASE("each filter row is positive somewhere with contiguous support") {
    for (const char* which : {"lj", "libri"}) {
        MelConfig cfg = ljspeech_mel();
        if (std::string(which) == "libri") {
            cfg.n_mels = 100;
            cfg.f_max = 12000.0;
            cfg.sample_rate = 24000;
        }
        const auto fb = build_mel_filterbank(cfg);
        for (int r = 0; r < fb.A.rows(); ++r) {
            int first = -1, last = -1;
            for (int c = 0; c < fb.A.cols(); ++c) {
                if (fb.A(r, c) > 0.0) {
                    if (first < 0) first = c;
                    last = c;
                }
            }
            REQUIRE(first >= 0);
            for (int c = first; c <= last; ++c) REQUIRE(fb.A(r, c) > 0.0);
        }
    }
}

TEST_CASE("single-filter bank is nonnegative and unimodal") {
    MelConfig cfg = ljspeech_mel();
    cfg.n_mels = 1;
    cfg.f_max = 11025.0;
    const auto fb = build_mel_filterbank(cfg);
    REQUIRE(fb.A.rows() == 1);
    int peak = 0;
    for (int c = 0; c < fb.A.cols(); ++c)
        if (fb.A(0, c) > fb.A(0, peak)) peak = c;
    for (int c = 1; c <= peak; ++c) REQUIRE(fb.A(0, c) >= fb.A(0, c - 1) - 1e-12);
    for (int c = peak + 1; c < fb.A.cols(); ++c)
        REQUIRE(fb.A(0, c) <= fb.A(0, c - 1) + 1e-12);
}

TEST_CASE("pseudo-inverse residual small for both presets") {
    for (int preset = 0; preset < 2; ++preset) {
        MelConfig cfg = ljspeech_mel();
        if (preset == 1) {
            cfg.n_mels = 100;
            cfg.f_max = 12000.0;
            cfg.sample_rate = 24000;
        }
        const auto fb = build_mel_filterbank(cfg);
        const Mat lhs = oracles::matmul_naive(oracles::matmul_naive(fb.A, fb.A_pinv), fb.A);
        REQUIRE(oracles::max_abs_diff(lhs, fb.A) < 1e-5);
    }
}

TEST_CASE("mel scale conversions invert each other") {
    for (auto scale : {MelScale::Htk, MelScale::Slaney})
        for (double hz : {0.0, 55.0, 440.0, 999.0, 1000.0, 4000.0, 11025.0})
            REQUIRE(mel_to_hz(hz_to_mel(hz, scale), scale) == Catch::Approx(hz).margin(1e-6));
}

TEST_CASE("mel spectrogram matches the naive triple-loop oracle") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    const Mat mag = oracles::random_mat(513, 7, 42, 0.0, 2.0);
    const Mat got = mel_from_magnitude(mag, fb, 1e-5);
    const Mat prod = oracles::matmul_naive(fb.A, mag);
    for (int r = 0; r < got.rows(); ++r)
        for (int c = 0; c < got.cols(); ++c) {
            const double want = std::log(std::max(prod(r, c), 1e-5));
            REQUIRE(got(r, c) == Catch::Approx(want).epsilon(1e-6));
        }
}

TEST_CASE("mel of all-ones magnitude replicates the row sums") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    const Mat mag(513, 5, 1.0);
    const Mat mel = mel_from_magnitude(mag, fb, 1e-5);
    for (int r = 0; r < mel.rows(); ++r) {
        double rowsum = 0.0;
        for (int c = 0; c < 513; ++c) rowsum += fb.A(r, c);
        for (int t = 0; t < 5; ++t)
            REQUIRE(mel(r, t) == Catch::Approx(std::log(std::max(rowsum, 1e-5))));
    }
}

TEST_CASE("mel of silence hits the log floor everywhere") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    const Mat mel = mel_from_magnitude(Mat(513, 4), fb, 1e-5);
    for (std::size_t i = 0; i < mel.size(); ++i)
        REQUIRE(mel.data()[i] == Catch::Approx(std::log(1e-5)));
}

TEST_CASE("mel is monotone under magnitude scaling") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    const Mat mag = oracles::random_mat(513, 6, 7, 0.0, 1.0);
    Mat scaled = mag;
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled.data()[i] *= 3.5;
    const Mat a = mel_from_magnitude(mag, fb, 1e-5);
    const Mat b = mel_from_magnitude(scaled, fb, 1e-5);
    for (std::size_t i = 0; i < a.size(); ++i)
        REQUIRE(b.data()[i] >= a.data()[i] - 1e-12);
}

TEST_CASE("exp_mel inverts the log above the floor") {
    const auto fb = build_mel_filterbank(ljspeech_mel());
    const Mat mag = oracles::random_mat(513, 5, 9, 0.5, 2.0);
    const Mat mel = mel_from_magnitude(mag, fb, 1e-5);
    const Mat bar = exp_mel(mel);
    const Mat direct = oracles::matmul_naive(fb.A, mag);
    for (std::size_t i = 0; i < bar.size(); ++i)
        REQUIRE(bar.data()[i] == Catch::Approx(direct.data()[i]).epsilon(1e-5));

    const Mat again = exp_mel(Mat(3, 3));  // zeros -> ones
    for (std::size_t i = 0; i < again.size(); ++i) REQUIRE(again.data()[i] == 1.0);
}

TEST_CASE("rank-deficient mel request is rejected") {
    MelConfig cfg = ljspeech_mel();
    cfg.n_mels = 512;  // more filters than distinct bins in range
    cfg.f_max = 1000.0;
    CHECK_THROWS_AS(build_mel_filterbank(cfg), Error);
}

// ---------------------------------------------------------------------------
// WAV I/O
// ---------------------------------------------------------------------------

TEST_CASE("wav float32 roundtrip is exact at f32 precision") {
    const auto dir = std::filesystem::temp_directory_path() / "rndvoc_dsp_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "f32.wav").string();

    AudioBuffer audio;
    audio.sample_rate = 22050;
    audio.samples = oracles::random_signal(1234, 5);
    write_wav(audio, path, WavFormat::Float32);
    const auto back = read_wav(path);
    REQUIRE(back.sample_rate == 22050);
    REQUIRE(back.samples.size() == audio.samples.size());
    for (std::size_t i = 0; i < audio.samples.size(); ++i)
        REQUIRE(back.samples[i] == static_cast<double>(static_cast<float>(audio.samples[i])));
}

TEST_CASE("wav pcm16 roundtrip stays within quantization error") {
    const auto dir = std::filesystem::temp_directory_path() / "rndvoc_dsp_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "pcm16.wav").string();

    AudioBuffer audio;
    audio.sample_rate = 24000;
    audio.samples = oracles::random_signal(999, 6, 0.9);
    write_wav(audio, path, WavFormat::Pcm16);
    const auto back = read_wav(path);
    REQUIRE(back.sample_rate == 24000);
    for (std::size_t i = 0; i < audio.samples.size(); ++i)
        REQUIRE(back.samples[i] == Catch::Approx(audio.samples[i]).margin(1.0 / 32768.0));
}

TEST_CASE("multichannel wav is rejected with a clear message") {
    const auto dir = std::filesystem::temp_directory_path() / "rndvoc_dsp_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "stereo.wav").string();
    // hand-build a 2-channel PCM16 file
    std::string blob;
    auto u16 = [&](std::uint16_t v) {
        blob.push_back(static_cast<char>(v & 0xff));
        blob.push_back(static_cast<char>(v >> 8));
    };
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    };
    blob += "RIFF";
    u32(36 + 8);
    blob += "WAVEfmt ";
    u32(16);
    u16(1);
    u16(2);  // stereo
    u32(22050);
    u32(22050 * 4);
    u16(4);
    u16(16);
    blob += "data";
    u32(8);
    for (int i = 0; i < 4; ++i) u16(0);
    {
        std::ofstream out(path, std::ios::binary);
        out << blob;
    }
    CHECK_THROWS_WITH(read_wav(path), Catch::Matchers::ContainsSubstring("mono"));
}
