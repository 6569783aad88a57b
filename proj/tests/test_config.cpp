// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "rndvoc/config.hpp"

using namespace rndvoc;

TEST_CASE("all shipped presets validate") {
    for (const auto& name : preset_names()) {
        const Preset p = make_preset(name);
        REQUIRE(p.gen.freq_bins == 513);
        REQUIRE(p.gen.channels_squeezed * 4 == p.gen.channels);
        REQUIRE(p.stft_cfg.n_fft == 1024);
        REQUIRE(p.stft_cfg.hop == 256);
        p.stft_cfg.validate();
        p.loss.validate();
    }
    CHECK(make_preset("ljspeech").mel.n_mels == 80);
    CHECK(make_preset("ljspeech").mel.f_max == 8000.0);
    CHECK(make_preset("ljspeech").mel.sample_rate == 22050);
    CHECK(make_preset("libritts").mel.n_mels == 100);
    CHECK(make_preset("libritts").mel.f_max == 12000.0);
    CHECK(make_preset("libritts").mel.sample_rate == 24000);
    CHECK(make_preset("ljspeech").gen.blocks == 6);
    CHECK(make_preset("ljspeech").gen.channels == 256);
    CHECK(make_preset("lite").gen.blocks == 4);
    CHECK(make_preset("lite").gen.channels == 128);
    CHECK(make_preset("ultralite").gen.channels == 32);
}

TEST_CASE("unknown preset names are rejected with the valid list") {
    CHECK_THROWS_WITH(make_preset("bigvgan"),
                      Catch::Matchers::ContainsSubstring("ultralite"));
}

TEST_CASE("region layout derivation fills counts and padding") {
    const auto l = RegionLayout::from_boundaries({0, 96, 288, 513}, {8, 24, 64});
    l.validate(513);
    REQUIRE(l.subband_counts == std::vector<int>{12, 8, 4});
    REQUIRE(l.pad_per_region == std::vector<int>{0, 0, 31});
    REQUIRE(l.total_subbands() == 24);
    // trim(pad(width)) == width for every region
    for (int i = 0; i < l.regions(); ++i)
        REQUIRE(l.padded_width(i) - l.pad_per_region[i] == l.region_width(i));
}

TEST_CASE("layout validation rejects inconsistent data") {
    auto good = RegionLayout::from_boundaries({0, 8, 16, 33}, {2, 4, 8});
    good.validate(33);

    auto bad = good;
    bad.boundaries.back() = 32;
    CHECK_THROWS_AS(bad.validate(33), Error);

    bad = good;
    bad.freq_strides = {8, 4, 2};  // decreasing
    bad.freq_kernels = bad.freq_strides;
    CHECK_THROWS_AS(bad.validate(33), Error);

    bad = good;
    bad.subband_counts[1] += 1;
    CHECK_THROWS_AS(bad.validate(33), Error);

    CHECK_THROWS_AS(RegionLayout::from_boundaries({0, 16, 8}, {2, 4}).validate(8), Error);
}

TEST_CASE("generator config validation catches bad widths") {
    GeneratorConfig cfg = make_preset("ultralite").gen;
    cfg.channels = 30;  // not a multiple of 4
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = make_preset("ultralite").gen;
    cfg.channels_squeezed = 16;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = make_preset("ultralite").gen;
    cfg.cbm_groups = 7;
    CHECK_THROWS_AS(cfg.validate(), Error);

    cfg = make_preset("ultralite").gen;
    cfg.nbm_time_kernel = 4;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("config file round trip is the identity") {
    for (const auto& name : preset_names()) {
        Preset p = make_preset(name);
        p.loss.lambda_mel = 17.5;  // non-default survives the trip
        const nlohmann::json j = preset_to_json(p);
        const Preset q = preset_from_json(j);
        const nlohmann::json j2 = preset_to_json(q);
        REQUIRE(j == j2);
        REQUIRE(q.gen.channels == p.gen.channels);
        REQUIRE(q.gen.layout.boundaries == p.gen.layout.boundaries);
        REQUIRE(q.loss.lambda_mel == 17.5);
        REQUIRE(q.mel.f_max == p.mel.f_max);
    }
}

TEST_CASE("config files round-trip through disk") {
    const auto dir = std::filesystem::temp_directory_path() / "rndvoc_config_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "custom.json").string();

    Preset p = make_preset("ultralite");
    p.loss.lambda_p = 64.0;
    save_preset(p, path);
    const Preset q = load_preset(path);
    REQUIRE(preset_to_json(q) == preset_to_json(p));

    REQUIRE(resolve_preset(path).loss.lambda_p == 64.0);
    REQUIRE(resolve_preset("lite").gen.channels == 128);
    CHECK_THROWS_AS(resolve_preset("nonexistent"), Error);
    CHECK_THROWS_AS(resolve_preset((dir / "missing.json").string()), Error);
}

TEST_CASE("config parsing errors are reported as data errors") {
    nlohmann::json j = preset_to_json(make_preset("lite"));
    j.erase("hop");
    CHECK_THROWS_AS(preset_from_json(j), Error);
    j = preset_to_json(make_preset("lite"));
    j["channels"] = "many";
    CHECK_THROWS_AS(preset_from_json(j), Error);
}
