// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Weight-bundle serialization and seeded initialization. The on-disk format
// ("RNDVOC01", f32 little-endian payloads) and the name->shape manifest are
// documented in docs/formats.md; the manifest is derived deterministically
// from GeneratorConfig so independent implementations reproduce bundles
// bit-for-bit.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rndvoc/config.hpp"
#include "rndvoc/core.hpp"

namespace rndvoc {

constexpr char kWeightMagic[8] = {'R', 'N', 'D', 'V', 'O', 'C', '0', '1'};
constexpr std::uint8_t kDtypeF32 = 0;

struct Tensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<float> data;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

inline std::string shape_string(const std::vector<std::uint32_t>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i)
        s += (i ? "," : "") + std::to_string(shape[i]);
    return s + "]";
}

class WeightBundle {
public:
    void add(Tensor t) {
        require(!t.name.empty(), "weight bundle: empty tensor name");
        require(t.data.size() == t.count(),
                "weight bundle: tensor '" + t.name + "' has inconsistent element count");
        require(index_.emplace(t.name, tensors_.size()).second,
                "name collision: tensor '" + t.name + "' already present");
        tensors_.push_back(std::move(t));
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    const Tensor& get(const std::string& name) const {
        auto it = index_.find(name);
        require(it != index_.end(), "missing tensor '" + name + "'");
        return tensors_[it->second];
    }

    Tensor& mutable_get(const std::string& name) {
        auto it = index_.find(name);
        require(it != index_.end(), "missing tensor '" + name + "'");
        return tensors_[it->second];
    }

    const std::vector<Tensor>& tensors() const { return tensors_; }
    std::size_t size() const { return tensors_.size(); }

    std::uint64_t total_scalars() const {
        std::uint64_t n = 0;
        for (const auto& t : tensors_) n += t.count();
        return n;
    }

private:
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

enum class InitRule {
    FanInUniform,       // uniform in +-sqrt(1/fan_in)
    One,                // layer-norm scale
    Zero,               // layer-norm shift, GRN affine
    PReluSlope,         // 0.25
    IdentityPlusNoise,  // band mixer: I + uniform(+-0.1 sqrt(1/N))
};

struct ManifestEntry {
    std::string name;
    std::vector<std::uint32_t> shape;
    InitRule rule = InitRule::FanInUniform;
    int fan_in = 1;  // inputs contributing to one output element
};

/// Canonical tensor list for a configuration: encoder regions, then the
/// dual-path blocks in order (cross-band stages, then the ConvNeXt blocks),
/// then the magnitude and phase decoder regions. Order is part of the format.
inline std::vector<ManifestEntry> weight_manifest(const GeneratorConfig& cfg) {
    cfg.validate();
    const auto C = static_cast<std::uint32_t>(cfg.channels);
    const auto Cs = static_cast<std::uint32_t>(cfg.channels_squeezed);
    const auto N = static_cast<std::uint32_t>(cfg.total_subbands());
    const auto G = static_cast<std::uint32_t>(cfg.cbm_groups);
    const auto Kt = static_cast<std::uint32_t>(cfg.nbm_time_kernel);

    std::vector<ManifestEntry> m;
    auto push = [&m](std::string name, std::vector<std::uint32_t> shape, InitRule rule,
                     int fan_in) {
        m.push_back({std::move(name), std::move(shape), rule, fan_in});
    };
    auto push_ln = [&](const std::string& prefix) {
        push(prefix + ".gamma", {C}, InitRule::One, 1);
        push(prefix + ".beta", {C}, InitRule::Zero, 1);
    };

    for (int i = 0; i < cfg.layout.regions(); ++i) {
        const auto s = static_cast<std::uint32_t>(cfg.layout.freq_strides[i]);
        const std::string r = "hsem.region" + std::to_string(i);
        push(r + ".conv.weight", {C, 1, s, 3}, InitRule::FanInUniform,
             static_cast<int>(s) * 3);
        push(r + ".conv.bias", {C}, InitRule::FanInUniform, static_cast<int>(s) * 3);
        push_ln(r + ".ln");
    }

    for (int b = 0; b < cfg.blocks; ++b) {
        const std::string d = "dpb" + std::to_string(b);
        const int gconv_fan = cfg.channels / cfg.cbm_groups * 3;
        push_ln(d + ".cbm.ln1");
        push(d + ".cbm.gconv1.weight", {C, C / G, 3}, InitRule::FanInUniform, gconv_fan);
        push(d + ".cbm.gconv1.bias", {C}, InitRule::FanInUniform, gconv_fan);
        push(d + ".cbm.prelu1.alpha", {1}, InitRule::PReluSlope, 1);
        push_ln(d + ".cbm.ln2");
        push(d + ".cbm.squeeze.weight", {Cs, C, 3}, InitRule::FanInUniform,
             cfg.channels * 3);
        push(d + ".cbm.squeeze.bias", {Cs}, InitRule::FanInUniform, cfg.channels * 3);
        push(d + ".cbm.bandmixer.weight", {N, N}, InitRule::IdentityPlusNoise,
             static_cast<int>(N));
        push(d + ".cbm.restore.weight", {C, Cs, 3}, InitRule::FanInUniform,
             cfg.channels_squeezed * 3);
        push(d + ".cbm.restore.bias", {C}, InitRule::FanInUniform,
             cfg.channels_squeezed * 3);
        push_ln(d + ".cbm.ln3");
        push(d + ".cbm.gconv2.weight", {C, C / G, 3}, InitRule::FanInUniform, gconv_fan);
        push(d + ".cbm.gconv2.bias", {C}, InitRule::FanInUniform, gconv_fan);
        push(d + ".cbm.prelu2.alpha", {1}, InitRule::PReluSlope, 1);

        for (int p = 0; p < cfg.convnext_per_block; ++p) {
            const std::string n = d + ".nbm.block" + std::to_string(p);
            push(n + ".dwconv.weight", {C, 1, Kt}, InitRule::FanInUniform,
                 cfg.nbm_time_kernel);
            push(n + ".dwconv.bias", {C}, InitRule::FanInUniform, cfg.nbm_time_kernel);
            push_ln(n + ".ln");
            push(n + ".pw1.weight", {C, C}, InitRule::FanInUniform, cfg.channels);
            push(n + ".pw1.bias", {C}, InitRule::FanInUniform, cfg.channels);
            push(n + ".grn.gamma", {C}, InitRule::Zero, 1);
            push(n + ".grn.beta", {C}, InitRule::Zero, 1);
            push(n + ".pw2.weight", {C, C}, InitRule::FanInUniform, cfg.channels);
            push(n + ".pw2.bias", {C}, InitRule::FanInUniform, cfg.channels);
        }
    }

    for (const char* dec : {"hmdm", "hpdm"}) {
        const std::uint32_t out_ch = std::string(dec) == "hmdm" ? 1 : 2;
        for (int i = 0; i < cfg.layout.regions(); ++i) {
            const auto s = static_cast<std::uint32_t>(cfg.layout.freq_strides[i]);
            const std::string r = std::string(dec) + ".region" + std::to_string(i);
            push(r + ".pointwise.weight", {C, C}, InitRule::FanInUniform, cfg.channels);
            push(r + ".pointwise.bias", {C}, InitRule::FanInUniform, cfg.channels);
            push_ln(r + ".ln");
            // each output bin receives one frequency tap from all C channels
            // over the 3 time taps
            push(r + ".trconv.weight", {C, out_ch, s, 3}, InitRule::FanInUniform,
                 cfg.channels * 3);
            push(r + ".trconv.bias", {out_ch}, InitRule::FanInUniform,
                 cfg.channels * 3);
        }
    }
    return m;
}

/// Exact learnable-scalar count implied by the manifest.
inline std::uint64_t count_params(const GeneratorConfig& cfg) {
    std::uint64_t n = 0;
    for (const auto& e : weight_manifest(cfg)) {
        std::uint64_t c = 1;
        for (auto d : e.shape) c *= d;
        n += c;
    }
    return n;
}

/// Checks a bundle against the manifest: every required tensor present with
/// the exact shape, nothing extra. Errors name the offending tensor.
inline void validate_bundle(const WeightBundle& bundle, const GeneratorConfig& cfg) {
    const auto manifest = weight_manifest(cfg);
    std::unordered_map<std::string, const ManifestEntry*> expected;
    for (const auto& e : manifest) expected.emplace(e.name, &e);
    for (const auto& t : bundle.tensors()) {
        auto it = expected.find(t.name);
        require(it != expected.end(), "unexpected tensor '" + t.name + "'");
        require(t.shape == it->second->shape,
                "tensor '" + t.name + "' has shape " + shape_string(t.shape) +
                    ", expected " + shape_string(it->second->shape));
    }
    for (const auto& e : manifest)
        require(bundle.has(e.name), "missing tensor '" + e.name + "'");
}

// ---------------------------------------------------------------------------
// Seeded initialization
// ---------------------------------------------------------------------------

/// SplitMix64. Fixed algorithm so bundles are reproducible across platforms;
/// see docs/formats.md.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    /// Uniform double in [0, 1), 53 mantissa bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Uniform double in [-bound, bound).
    double uniform_pm(double bound) { return (2.0 * uniform01() - 1.0) * bound; }
};

/// Manifest-complete bundle drawn from one SplitMix64 stream in manifest
/// order. Values are rounded to f32 so in-memory bundles match their
/// serialized form exactly.
inline WeightBundle init_random(const GeneratorConfig& cfg, std::uint64_t seed) {
    SplitMix64 rng(seed);
    WeightBundle bundle;
    for (const auto& e : weight_manifest(cfg)) {
        Tensor t;
        t.name = e.name;
        t.shape = e.shape;
        std::size_t count = 1;
        for (auto d : e.shape) count *= d;
        t.data.resize(count);
        switch (e.rule) {
            case InitRule::One:
                for (auto& v : t.data) v = 1.0f;
                break;
            case InitRule::Zero:
                for (auto& v : t.data) v = 0.0f;
                break;
            case InitRule::PReluSlope:
                for (auto& v : t.data) v = 0.25f;
                break;
            case InitRule::IdentityPlusNoise: {
                const auto n = e.shape[0];
                const double bound = 0.1 * std::sqrt(1.0 / e.fan_in);
                for (std::uint32_t r = 0; r < n; ++r)
                    for (std::uint32_t c = 0; c < n; ++c)
                        t.data[r * n + c] = static_cast<float>(
                            (r == c ? 1.0 : 0.0) + rng.uniform_pm(bound));
                break;
            }
            case InitRule::FanInUniform: {
                const double bound = std::sqrt(1.0 / e.fan_in);
                for (auto& v : t.data) v = static_cast<float>(rng.uniform_pm(bound));
                break;
            }
        }
        bundle.add(std::move(t));
    }
    return bundle;
}

/// All-zero bundle (useful for the closed-form generator identities).
inline WeightBundle init_zeros(const GeneratorConfig& cfg) {
    WeightBundle bundle;
    for (const auto& e : weight_manifest(cfg)) {
        Tensor t;
        t.name = e.name;
        t.shape = e.shape;
        std::size_t count = 1;
        for (auto d : e.shape) count *= d;
        t.data.assign(count, 0.0f);
        bundle.add(std::move(t));
    }
    return bundle;
}

// ---------------------------------------------------------------------------
// Binary file format
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Cursor {
    const unsigned char* p;
    std::size_t remaining;
    void need(std::size_t n, const char* what) {
        require(remaining >= n, std::string("weight file truncated reading ") + what);
    }
    std::uint16_t u16() {
        need(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        remaining -= 2;
        return v;
    }
    std::uint32_t u32() {
        need(4, "u32");
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        remaining -= 4;
        return v;
    }
    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        remaining -= 8;
        return v;
    }
    std::uint8_t u8() {
        need(1, "u8");
        std::uint8_t v = *p;
        ++p;
        --remaining;
        return v;
    }
    std::string str(std::size_t n) {
        need(n, "name");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        remaining -= n;
        return s;
    }
};

inline std::uint32_t f32_bits(float v) {
    std::uint32_t b;
    std::memcpy(&b, &v, 4);
    return b;
}
inline float bits_f32(std::uint32_t b) {
    float v;
    std::memcpy(&v, &b, 4);
    return v;
}

}  // namespace detail

inline void save_weights(const WeightBundle& bundle, const std::string& path) {
    std::string header(kWeightMagic, sizeof(kWeightMagic));
    detail::put_u32(header, static_cast<std::uint32_t>(bundle.size()));

    // record section size is needed up front to place payload offsets
    std::size_t records_size = 0;
    for (const auto& t : bundle.tensors()) {
        require(t.name.size() <= 0xffff, "tensor name too long: " + t.name);
        require(t.shape.size() <= 0xff, "tensor rank too large: " + t.name);
        records_size += 2 + t.name.size() + 1 + 4 * t.shape.size() + 1 + 8;
    }

    std::uint64_t offset = header.size() + records_size;
    std::string records;
    std::string payload;
    for (const auto& t : bundle.tensors()) {
        detail::put_u16(records, static_cast<std::uint16_t>(t.name.size()));
        records += t.name;
        records.push_back(static_cast<char>(t.shape.size()));
        for (auto d : t.shape) detail::put_u32(records, d);
        records.push_back(static_cast<char>(kDtypeF32));
        detail::put_u64(records, offset);
        for (float v : t.data) detail::put_u32(payload, detail::f32_bits(v));
        offset += 4 * t.data.size();
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open '" + path + "' for writing");
    out << header << records << payload;
    require(out.good(), "write failed for '" + path + "'");
}

/// Loads the raw bundle without checking it against any manifest.
inline WeightBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());

    require(blob.size() >= sizeof(kWeightMagic) + 4, "weight file too small");
    require(std::memcmp(blob.data(), kWeightMagic, sizeof(kWeightMagic)) == 0,
            "bad magic: not a RNDVOC01 weight file");

    detail::Cursor cur{reinterpret_cast<const unsigned char*>(blob.data()) +
                           sizeof(kWeightMagic),
                       blob.size() - sizeof(kWeightMagic)};
    const std::uint32_t count = cur.u32();
    // each record occupies at least 12 bytes, so this bounds allocation
    require(count <= cur.remaining / 12,
            "tensor count " + std::to_string(count) + " exceeds the file size");

    struct Record {
        std::string name;
        std::vector<std::uint32_t> shape;
        std::uint64_t offset;
        std::uint64_t bytes;
    };
    std::vector<Record> recs;
    recs.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Record r;
        r.name = cur.str(cur.u16());
        const std::uint8_t rank = cur.u8();
        std::uint64_t elems = 1;
        for (int d = 0; d < rank; ++d) {
            r.shape.push_back(cur.u32());
            const std::uint64_t dim = r.shape.back();
            require(dim == 0 ||
                        elems <= std::numeric_limits<std::uint64_t>::max() / 4 / dim,
                    "tensor '" + r.name + "' dimensions overflow");
            elems *= dim;
        }
        const std::uint8_t dtype = cur.u8();
        require(dtype == kDtypeF32,
                "tensor '" + r.name + "' has unsupported dtype tag " +
                    std::to_string(dtype));
        r.offset = cur.u64();
        r.bytes = 4 * elems;
        require(r.offset <= blob.size() && r.bytes <= blob.size() - r.offset,
                "tensor '" + r.name + "' payload out of bounds");
        recs.push_back(std::move(r));
    }

    // offsets must not overlap
    std::vector<const Record*> by_offset;
    by_offset.reserve(recs.size());
    for (const auto& r : recs) by_offset.push_back(&r);
    std::sort(by_offset.begin(), by_offset.end(),
              [](const Record* a, const Record* b) { return a->offset < b->offset; });
    std::uint64_t prev_end = 0;
    for (const Record* r : by_offset) {
        require(r->offset >= prev_end,
                "tensor '" + r->name + "' payload overlaps another");
        prev_end = r->offset + r->bytes;
    }

    WeightBundle bundle;
    for (const auto& r : recs) {
        Tensor t;
        t.name = r.name;
        t.shape = r.shape;
        t.data.resize(r.bytes / 4);
        const unsigned char* p =
            reinterpret_cast<const unsigned char*>(blob.data()) + r.offset;
        for (std::size_t i = 0; i < t.data.size(); ++i) {
            std::uint32_t b = 0;
            for (int k = 0; k < 4; ++k)
                b |= static_cast<std::uint32_t>(p[4 * i + k]) << (8 * k);
            t.data[i] = detail::bits_f32(b);
        }
        bundle.add(std::move(t));  // also rejects duplicate names
    }
    return bundle;
}

/// Loads and validates against the manifest implied by cfg.
inline WeightBundle load_weights(const std::string& path, const GeneratorConfig& cfg) {
    WeightBundle bundle = load_bundle(path);
    validate_bundle(bundle, cfg);
    return bundle;
}

// Single-tensor files (mel matrices, dumped spectra) reuse the same format.

inline void save_tensor(const Tensor& tensor, const std::string& path) {
    WeightBundle b;
    b.add(tensor);
    save_weights(b, path);
}

inline Tensor load_tensor(const std::string& path, const std::string& expected_name) {
    WeightBundle b = load_bundle(path);
    require(b.size() == 1, "'" + path + "' holds " + std::to_string(b.size()) +
                               " tensors, expected exactly one");
    const Tensor& t = b.tensors().front();
    require(expected_name.empty() || t.name == expected_name,
            "'" + path + "' holds tensor '" + t.name + "', expected '" +
                expected_name + "'");
    return t;
}

inline Tensor mat_to_tensor(const Mat& m, const std::string& name) {
    Tensor t;
    t.name = name;
    t.shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
    t.data.resize(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        t.data[i] = static_cast<float>(m.data()[i]);
    return t;
}

inline Mat tensor_to_mat(const Tensor& t) {
    require(t.shape.size() == 2, "tensor '" + t.name + "' is not a matrix");
    Mat m(static_cast<int>(t.shape[0]), static_cast<int>(t.shape[1]));
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = t.data[i];
    return m;
}

}  // namespace rndvoc
