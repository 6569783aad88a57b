// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rndvoc/core.hpp"

namespace rndvoc {

enum class WavFormat { Pcm16, Float32 };

namespace detail {

inline void wav_put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void wav_put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint16_t wav_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t wav_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Reads a mono WAV file, PCM 16-bit or IEEE float 32-bit. Multichannel
/// input and other encodings are rejected.
inline AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    require(blob.size() >= 12, "'" + path + "': too small to be a WAV file");
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    require(std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
            "'" + path + "': not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;

    std::size_t pos = 12;
    while (pos + 8 <= blob.size()) {
        const char* id = blob.data() + pos;
        const std::uint32_t size = detail::wav_u32(p + pos + 4);
        const std::size_t body = pos + 8;
        require(body + size <= blob.size(), "'" + path + "': truncated chunk");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            require(size >= 16, "'" + path + "': fmt chunk too small");
            format = detail::wav_u16(p + body);
            channels = detail::wav_u16(p + body + 2);
            sample_rate = detail::wav_u32(p + body + 4);
            bits = detail::wav_u16(p + body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = p + body;
            data_size = size;
        }
        pos = body + size + (size & 1);  // chunks are word-aligned
    }

    require(format != 0, "'" + path + "': missing fmt chunk");
    require(data != nullptr, "'" + path + "': missing data chunk");
    require(channels == 1,
            "'" + path + "': " + std::to_string(channels) +
                " channels; only mono input is supported");

    AudioBuffer audio;
    audio.sample_rate = static_cast<int>(sample_rate);
    if (format == 1 && bits == 16) {
        const std::size_t n = data_size / 2;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto raw = static_cast<std::int16_t>(detail::wav_u16(data + 2 * i));
            audio.samples[i] = raw / 32768.0;
        }
    } else if (format == 3 && bits == 32) {
        const std::size_t n = data_size / 4;
        audio.samples.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t b = detail::wav_u32(data + 4 * i);
            float v;
            std::memcpy(&v, &b, 4);
            audio.samples[i] = v;
        }
    } else {
        throw Error("'" + path + "': unsupported encoding (format tag " +
                    std::to_string(format) + ", " + std::to_string(bits) +
                    " bits); expected 16-bit PCM or 32-bit float");
    }
    require(audio.all_finite(), "'" + path + "': non-finite samples");
    return audio;
}

inline void write_wav(const AudioBuffer& audio, const std::string& path,
                      WavFormat format = WavFormat::Float32) {
    require(audio.sample_rate > 0, "write_wav: sample rate not set");
    require(audio.all_finite(), "write_wav: non-finite samples");
    const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
    const bool pcm = format == WavFormat::Pcm16;
    const std::uint16_t bytes_per = pcm ? 2 : 4;
    const std::uint32_t data_size = n * bytes_per;

    std::string out;
    out += "RIFF";
    // fmt(8+18) + fact(8+4, float only) + data(8+size)
    const std::uint32_t riff = 4 + 26 + (pcm ? 0 : 12) + 8 + data_size;
    detail::wav_put_u32(out, riff);
    out += "WAVE";
    out += "fmt ";
    detail::wav_put_u32(out, 18);
    detail::wav_put_u16(out, pcm ? 1 : 3);
    detail::wav_put_u16(out, 1);  // mono
    detail::wav_put_u32(out, static_cast<std::uint32_t>(audio.sample_rate));
    detail::wav_put_u32(out, static_cast<std::uint32_t>(audio.sample_rate) * bytes_per);
    detail::wav_put_u16(out, bytes_per);
    detail::wav_put_u16(out, pcm ? 16 : 32);
    detail::wav_put_u16(out, 0);  // no extension
    if (!pcm) {
        out += "fact";
        detail::wav_put_u32(out, 4);
        detail::wav_put_u32(out, n);
    }
    out += "data";
    detail::wav_put_u32(out, data_size);
    if (pcm) {
        for (double v : audio.samples) {
            const long q = std::lrint(std::min(1.0, std::max(-1.0, v)) * 32768.0);
            const auto clamped =
                static_cast<std::int16_t>(std::min(32767l, std::max(-32768l, q)));
            detail::wav_put_u16(out, static_cast<std::uint16_t>(clamped));
        }
    } else {
        for (double v : audio.samples) {
            const float f = static_cast<float>(v);
            std::uint32_t b;
            std::memcpy(&b, &f, 4);
            detail::wav_put_u32(out, b);
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    require(file.good(), "cannot open '" + path + "' for writing");
    file << out;
    require(file.good(), "write failed for '" + path + "'");
}

}  // namespace rndvoc
