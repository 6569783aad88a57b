// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Architecture hyperparameters, the band-region layout, shipped presets, and
// the flat JSON config-file round trip.

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rndvoc/core.hpp"
#include "rndvoc/dsp.hpp"
#include "rndvoc/losses.hpp"

namespace rndvoc {

// ---------------------------------------------------------------------------
// Band-region layout
// ---------------------------------------------------------------------------

/// Splits the F frequency bins into regions of increasing width ("from fine
/// to coarse"). Region i covers bins [boundaries[i], boundaries[i+1]), is
/// right-padded to a multiple of its stride, and compresses to
/// subband_counts[i] sub-band tokens.
struct RegionLayout {
    std::vector<int> boundaries;      // I+1 ascending bin indices, 0 .. F
    std::vector<int> freq_strides;    // compression factor per region
    std::vector<int> freq_kernels;    // frequency kernel per region (== stride)
    std::vector<int> subband_counts;  // tokens per region
    std::vector<int> pad_per_region;  // right padding in bins

    int regions() const { return static_cast<int>(freq_strides.size()); }
    int total_subbands() const {
        int n = 0;
        for (int c : subband_counts) n += c;
        return n;
    }
    int region_width(int i) const { return boundaries[i + 1] - boundaries[i]; }
    int padded_width(int i) const { return region_width(i) + pad_per_region[i]; }

    /// Derives kernels, sub-band counts, and padding from boundaries+strides.
    static RegionLayout from_boundaries(std::vector<int> boundaries,
                                        std::vector<int> strides) {
        RegionLayout l;
        l.boundaries = std::move(boundaries);
        l.freq_strides = std::move(strides);
        require(l.boundaries.size() == l.freq_strides.size() + 1,
                "region layout: need one more boundary than strides");
        l.freq_kernels = l.freq_strides;
        for (int i = 0; i < l.regions(); ++i) {
            const int width = l.boundaries[i + 1] - l.boundaries[i];
            const int s = l.freq_strides[i];
            require(width > 0 && s > 0, "region layout: empty region or zero stride");
            const int count = (width + s - 1) / s;
            l.subband_counts.push_back(count);
            l.pad_per_region.push_back(count * s - width);
        }
        return l;
    }

    void validate(int freq_bins) const {
        const int I = regions();
        require(I >= 1, "region layout: no regions");
        require(static_cast<int>(boundaries.size()) == I + 1 &&
                    static_cast<int>(freq_kernels.size()) == I &&
                    static_cast<int>(subband_counts.size()) == I &&
                    static_cast<int>(pad_per_region.size()) == I,
                "region layout: field sizes disagree");
        require(boundaries.front() == 0, "region layout: first boundary must be 0");
        require(boundaries.back() == freq_bins,
                "region layout: last boundary must equal the bin count");
        for (int i = 0; i < I; ++i) {
            require(boundaries[i] < boundaries[i + 1],
                    "region layout: boundaries must be ascending");
            require(freq_strides[i] > 0, "region layout: stride must be positive");
            require(freq_kernels[i] == freq_strides[i],
                    "region layout: frequency kernel must equal stride");
            require(subband_counts[i] * freq_strides[i] ==
                        region_width(i) + pad_per_region[i],
                    "region layout: padded width must be count * stride");
            require(pad_per_region[i] >= 0 && pad_per_region[i] < freq_strides[i],
                    "region layout: padding must be in [0, stride)");
            if (i > 0) {
                require(freq_strides[i] >= freq_strides[i - 1],
                        "region layout: strides must be non-decreasing");
                require(region_width(i) >= region_width(i - 1),
                        "region layout: widths must be non-decreasing");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Generator configuration
// ---------------------------------------------------------------------------

struct GeneratorConfig {
    int freq_bins = 513;          // F = n_fft/2 + 1
    int mel_bands = 80;           // F_m
    int channels = 256;           // C
    int channels_squeezed = 64;   // C' = C/4
    int blocks = 6;               // dual-path blocks B
    int convnext_per_block = 2;   // P
    RegionLayout layout;
    int nbm_time_kernel = 7;      // depthwise time kernel, odd
    int cbm_groups = 8;           // grouped-conv groups in the cross-band stages
    double ln_eps = 1e-6;

    int total_subbands() const { return layout.total_subbands(); }

    void validate() const {
        require(freq_bins > 1, "generator config: freq_bins must be > 1");
        require(mel_bands > 0 && mel_bands < freq_bins,
                "generator config: need 0 < mel_bands < freq_bins");
        require(channels > 0 && channels % 4 == 0,
                "generator config: channels must be a positive multiple of 4");
        require(channels_squeezed == channels / 4,
                "generator config: squeezed channels must be channels/4");
        require(blocks >= 1, "generator config: need at least one block");
        require(convnext_per_block >= 1,
                "generator config: need at least one ConvNeXt block");
        require(nbm_time_kernel >= 1 && nbm_time_kernel % 2 == 1,
                "generator config: time kernel must be odd");
        require(cbm_groups >= 1 && channels % cbm_groups == 0,
                "generator config: groups must divide channels");
        require(ln_eps > 0.0, "generator config: ln_eps must be positive");
        layout.validate(freq_bins);
    }
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct Preset {
    std::string name;
    GeneratorConfig gen;
    MelConfig mel;
    StftConfig stft_cfg;
    LossWeights loss;
};

inline std::vector<std::string> preset_names() {
    return {"ljspeech", "libritts", "lite", "ultralite"};
}

/// The four shipped configurations. The full models keep 24 sub-bands over
/// three regions; the lite models trade channels for finer band splits so
/// the compute budget tracks the published figures.
inline Preset make_preset(const std::string& name) {
    Preset p;
    p.name = name;
    p.stft_cfg = StftConfig::hann(1024, 256, true);

    p.mel.n_fft = 1024;
    p.mel.log_floor = 1e-5;
    if (name == "libritts") {
        p.mel.sample_rate = 24000;
        p.mel.n_mels = 100;
        p.mel.f_max = 12000.0;
    } else {
        p.mel.sample_rate = 22050;
        p.mel.n_mels = 80;
        p.mel.f_max = 8000.0;
    }

    p.gen.freq_bins = 513;
    p.gen.mel_bands = p.mel.n_mels;
    if (name == "ljspeech" || name == "libritts") {
        p.gen.channels = 256;
        p.gen.blocks = 6;
        p.gen.layout = RegionLayout::from_boundaries({0, 96, 288, 513}, {8, 24, 64});
    } else if (name == "lite") {
        p.gen.channels = 128;
        p.gen.blocks = 4;
        p.gen.layout = RegionLayout::from_boundaries({0, 96, 288, 513}, {4, 12, 32});
    } else if (name == "ultralite") {
        p.gen.channels = 32;
        p.gen.blocks = 4;
        p.gen.layout = RegionLayout::from_boundaries({0, 96, 288, 513}, {2, 6, 16});
    } else {
        throw Error("unknown preset '" + name +
                    "' (expected ljspeech, libritts, lite, or ultralite)");
    }
    p.gen.channels_squeezed = p.gen.channels / 4;
    p.gen.validate();
    p.mel.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Flat JSON config file
// ---------------------------------------------------------------------------

inline nlohmann::json preset_to_json(const Preset& p) {
    nlohmann::json j;
    j["preset"] = p.name;
    j["sample_rate"] = p.mel.sample_rate;
    j["n_fft"] = p.stft_cfg.n_fft;
    j["hop"] = p.stft_cfg.hop;
    j["center_padding"] = p.stft_cfg.center_padding;
    j["n_mels"] = p.mel.n_mels;
    j["f_min"] = p.mel.f_min;
    j["f_max"] = p.mel.f_max;
    j["log_floor"] = p.mel.log_floor;
    j["mel_scale"] = p.mel.scale == MelScale::Htk ? "htk" : "slaney";
    j["mel_area_normalize"] = p.mel.area_normalize;
    j["freq_bins"] = p.gen.freq_bins;
    j["channels"] = p.gen.channels;
    j["channels_squeezed"] = p.gen.channels_squeezed;
    j["blocks"] = p.gen.blocks;
    j["convnext_per_block"] = p.gen.convnext_per_block;
    j["nbm_time_kernel"] = p.gen.nbm_time_kernel;
    j["cbm_groups"] = p.gen.cbm_groups;
    j["ln_eps"] = p.gen.ln_eps;
    j["region_boundaries"] = p.gen.layout.boundaries;
    j["region_strides"] = p.gen.layout.freq_strides;
    j["lambda_a"] = p.loss.lambda_a;
    j["lambda_p"] = p.loss.lambda_p;
    j["lambda_ri"] = p.loss.lambda_ri;
    j["lambda_mel"] = p.loss.lambda_mel;
    j["lambda_c"] = p.loss.lambda_c;
    j["lambda_g"] = p.loss.lambda_g;
    j["lambda_fm"] = p.loss.lambda_fm;
    return j;
}

inline void save_preset(const Preset& p, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), "cannot open '" + path + "' for writing");
    out << preset_to_json(p).dump(2) << "\n";
    require(out.good(), "write failed for '" + path + "'");
}

inline Preset preset_from_json(const nlohmann::json& j) {
    try {
        Preset p = make_preset(j.at("preset").get<std::string>());
        p.mel.sample_rate = j.at("sample_rate").get<int>();
        p.stft_cfg = StftConfig::hann(j.at("n_fft").get<int>(), j.at("hop").get<int>(),
                                      j.at("center_padding").get<bool>());
        p.mel.n_fft = p.stft_cfg.n_fft;
        p.mel.n_mels = j.at("n_mels").get<int>();
        p.mel.f_min = j.at("f_min").get<double>();
        p.mel.f_max = j.at("f_max").get<double>();
        p.mel.log_floor = j.at("log_floor").get<double>();
        p.mel.scale = j.at("mel_scale").get<std::string>() == "slaney" ? MelScale::Slaney
                                                                       : MelScale::Htk;
        p.mel.area_normalize = j.at("mel_area_normalize").get<bool>();
        p.gen.freq_bins = j.at("freq_bins").get<int>();
        p.gen.mel_bands = p.mel.n_mels;
        p.gen.channels = j.at("channels").get<int>();
        p.gen.channels_squeezed = j.at("channels_squeezed").get<int>();
        p.gen.blocks = j.at("blocks").get<int>();
        p.gen.convnext_per_block = j.at("convnext_per_block").get<int>();
        p.gen.nbm_time_kernel = j.at("nbm_time_kernel").get<int>();
        p.gen.cbm_groups = j.at("cbm_groups").get<int>();
        p.gen.ln_eps = j.at("ln_eps").get<double>();
        p.gen.layout = RegionLayout::from_boundaries(
            j.at("region_boundaries").get<std::vector<int>>(),
            j.at("region_strides").get<std::vector<int>>());
        p.loss.lambda_a = j.at("lambda_a").get<double>();
        p.loss.lambda_p = j.at("lambda_p").get<double>();
        p.loss.lambda_ri = j.at("lambda_ri").get<double>();
        p.loss.lambda_mel = j.at("lambda_mel").get<double>();
        p.loss.lambda_c = j.at("lambda_c").get<double>();
        p.loss.lambda_g = j.at("lambda_g").get<double>();
        p.loss.lambda_fm = j.at("lambda_fm").get<double>();
        p.gen.validate();
        p.mel.validate();
        p.loss.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("config file: ") + e.what());
    }
}

inline Preset load_preset(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("'" + path + "': " + e.what());
    }
    return preset_from_json(j);
}

/// Accepts either a shipped preset name or a path to a config file.
inline Preset resolve_preset(const std::string& name_or_path) {
    for (const auto& name : preset_names())
        if (name == name_or_path) return make_preset(name);
    if (name_or_path.find('.') != std::string::npos ||
        name_or_path.find('/') != std::string::npos)
        return load_preset(name_or_path);
    throw Error("unknown preset '" + name_or_path +
                "' (expected ljspeech, libritts, lite, ultralite, or a config file path)");
}

}  // namespace rndvoc
