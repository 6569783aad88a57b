// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Scalar reference of every network stage, computed one output element at a
// time straight from the layer definitions. Shares only the weight-bundle
// container with the library; the arithmetic is organized differently on
// purpose so it can serve as an independent oracle.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rndvoc/config.hpp"
#include "rndvoc/core.hpp"
#include "rndvoc/weights.hpp"

namespace refnet {

using rndvoc::GeneratorConfig;
using rndvoc::Mat;
using rndvoc::Tensor3;
using rndvoc::WeightBundle;

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline const std::vector<float>& vals(const WeightBundle& w, const std::string& name) {
    return w.get(name).data;
}

// LN over channels at one (n, t) position.
inline void apply_ln(Tensor3& x, const std::vector<float>& gamma,
                     const std::vector<float>& beta, double eps) {
    const int C = x.channels();
    for (int n = 0; n < x.bands(); ++n)
        for (int t = 0; t < x.frames(); ++t) {
            double mean = 0.0;
            for (int c = 0; c < C; ++c) mean += x.at(n, c, t);
            mean /= C;
            double var = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = x.at(n, c, t) - mean;
                var += d * d;
            }
            var /= C;
            for (int c = 0; c < C; ++c)
                x.at(n, c, t) = (x.at(n, c, t) - mean) / std::sqrt(var + eps) * gamma[c] +
                                beta[c];
        }
}

inline Tensor3 hsem(const Mat& range_mag, const GeneratorConfig& cfg,
                    const WeightBundle& w) {
    const int C = cfg.channels;
    const int T = range_mag.cols();
    Tensor3 out(cfg.total_subbands(), C, T);
    int n_base = 0;
    for (int i = 0; i < cfg.layout.regions(); ++i) {
        const int s = cfg.layout.freq_strides[i];
        const std::string r = "hsem.region" + std::to_string(i);
        const auto& wt = vals(w, r + ".conv.weight");
        const auto& bias = vals(w, r + ".conv.bias");
        for (int n = 0; n < cfg.layout.subband_counts[i]; ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    double acc = bias[c];
                    for (int fk = 0; fk < s; ++fk)
                        for (int dt = -1; dt <= 1; ++dt) {
                            const int f = cfg.layout.boundaries[i] + n * s + fk;
                            const int tt = t + dt;
                            if (f >= cfg.layout.boundaries[i + 1]) continue;
                            if (tt < 0 || tt >= T) continue;
                            acc += static_cast<double>(wt[(c * s + fk) * 3 + dt + 1]) *
                                   range_mag(f, tt);
                        }
                    out.at(n_base + n, c, t) = acc;
                }
        // normalize this region's rows
        Tensor3 region(cfg.layout.subband_counts[i], C, T);
        for (int n = 0; n < region.bands(); ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t)
                    region.at(n, c, t) = out.at(n_base + n, c, t);
        apply_ln(region, vals(w, r + ".ln.gamma"), vals(w, r + ".ln.beta"), cfg.ln_eps);
        for (int n = 0; n < region.bands(); ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t)
                    out.at(n_base + n, c, t) = region.at(n, c, t);
        n_base += cfg.layout.subband_counts[i];
    }
    return out;
}

inline Tensor3 cbm(const Tensor3& x, const GeneratorConfig& cfg, const WeightBundle& w,
                   int block_idx) {
    const int N = x.bands(), C = x.channels(), T = x.frames();
    const int Cs = cfg.channels_squeezed;
    const int gs = C / cfg.cbm_groups;
    const std::string d = "dpb" + std::to_string(block_idx) + ".cbm";

    auto gconv_stage = [&](const Tensor3& in, const std::string& ln, const std::string& gc,
                           const std::string& pr) {
        Tensor3 y = in;
        apply_ln(y, vals(w, d + "." + ln + ".gamma"), vals(w, d + "." + ln + ".beta"),
                 cfg.ln_eps);
        const auto& gw = vals(w, d + "." + gc + ".weight");
        const auto& gb = vals(w, d + "." + gc + ".bias");
        const double alpha = vals(w, d + "." + pr + ".alpha")[0];
        Tensor3 out = in;
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    double acc = gb[c];
                    const int base = (c / gs) * gs;
                    for (int ci = 0; ci < gs; ++ci)
                        for (int dn = -1; dn <= 1; ++dn) {
                            const int nn = n + dn;
                            if (nn < 0 || nn >= N) continue;
                            acc += static_cast<double>(gw[(c * gs + ci) * 3 + dn + 1]) *
                                   y.at(nn, base + ci, t);
                        }
                    out.at(n, c, t) += acc > 0.0 ? acc : alpha * acc;
                }
        return out;
    };

    Tensor3 x1 = gconv_stage(x, "ln1", "gconv1", "prelu1");

    Tensor3 u = x1;
    apply_ln(u, vals(w, d + ".ln2.gamma"), vals(w, d + ".ln2.beta"), cfg.ln_eps);
    const auto& sqw = vals(w, d + ".squeeze.weight");
    const auto& sqb = vals(w, d + ".squeeze.bias");
    const auto& bm = vals(w, d + ".bandmixer.weight");
    const auto& rw = vals(w, d + ".restore.weight");
    const auto& rb = vals(w, d + ".restore.bias");

    Tensor3 v(N, Cs, T);
    for (int n = 0; n < N; ++n)
        for (int cs = 0; cs < Cs; ++cs)
            for (int t = 0; t < T; ++t) {
                double acc = sqb[cs];
                for (int c = 0; c < C; ++c)
                    for (int dn = -1; dn <= 1; ++dn) {
                        const int nn = n + dn;
                        if (nn < 0 || nn >= N) continue;
                        acc += static_cast<double>(sqw[(cs * C + c) * 3 + dn + 1]) *
                               u.at(nn, c, t);
                    }
                v.at(n, cs, t) = silu(acc);
            }

    Tensor3 mixed(N, Cs, T);
    for (int n = 0; n < N; ++n)
        for (int cs = 0; cs < Cs; ++cs)
            for (int t = 0; t < T; ++t) {
                double acc = 0.0;
                for (int m = 0; m < N; ++m)
                    acc += static_cast<double>(bm[n * N + m]) * v.at(m, cs, t);
                mixed.at(n, cs, t) = acc;
            }

    Tensor3 x2 = x1;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t) {
                double acc = rb[c];
                for (int cs = 0; cs < Cs; ++cs)
                    for (int dn = -1; dn <= 1; ++dn) {
                        const int nn = n + dn;
                        if (nn < 0 || nn >= N) continue;
                        acc += static_cast<double>(rw[(c * Cs + cs) * 3 + dn + 1]) *
                               mixed.at(nn, cs, t);
                    }
                x2.at(n, c, t) += silu(acc);
            }

    return gconv_stage(x2, "ln3", "gconv2", "prelu2");
}

inline Tensor3 nbm(const Tensor3& x, const GeneratorConfig& cfg, const WeightBundle& w,
                   int block_idx) {
    const int N = x.bands(), C = x.channels(), T = x.frames();
    const int K = cfg.nbm_time_kernel;
    Tensor3 cur = x;
    for (int p = 0; p < cfg.convnext_per_block; ++p) {
        const std::string b =
            "dpb" + std::to_string(block_idx) + ".nbm.block" + std::to_string(p);
        const auto& dww = vals(w, b + ".dwconv.weight");
        const auto& dwb = vals(w, b + ".dwconv.bias");
        const auto& w1 = vals(w, b + ".pw1.weight");
        const auto& b1 = vals(w, b + ".pw1.bias");
        const auto& gg = vals(w, b + ".grn.gamma");
        const auto& gb = vals(w, b + ".grn.beta");
        const auto& w2 = vals(w, b + ".pw2.weight");
        const auto& b2 = vals(w, b + ".pw2.bias");

        Tensor3 next = cur;
        for (int n = 0; n < N; ++n) {
            Tensor3 dw(1, C, T);
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    double acc = dwb[c];
                    for (int k = 0; k < K; ++k) {
                        const int tt = t + k - K / 2;
                        if (tt < 0 || tt >= T) continue;
                        acc += static_cast<double>(dww[c * K + k]) * cur.at(n, c, tt);
                    }
                    dw.at(0, c, t) = acc;
                }
            apply_ln(dw, vals(w, b + ".ln.gamma"), vals(w, b + ".ln.beta"), cfg.ln_eps);
            Tensor3 hid(1, C, T);
            for (int c2 = 0; c2 < C; ++c2)
                for (int t = 0; t < T; ++t) {
                    double acc = b1[c2];
                    for (int c = 0; c < C; ++c)
                        acc += static_cast<double>(w1[c2 * C + c]) * dw.at(0, c, t);
                    hid.at(0, c2, t) = gelu(acc);
                }
            std::vector<double> norms(C);
            double mean_norm = 0.0;
            for (int c = 0; c < C; ++c) {
                double sq = 0.0;
                for (int t = 0; t < T; ++t) sq += hid.at(0, c, t) * hid.at(0, c, t);
                norms[c] = std::sqrt(sq);
                mean_norm += norms[c];
            }
            mean_norm /= C;
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    const double v = hid.at(0, c, t);
                    hid.at(0, c, t) =
                        gg[c] * (v * (norms[c] / (mean_norm + cfg.ln_eps))) + gb[c] + v;
                }
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    double acc = b2[c];
                    for (int c2 = 0; c2 < C; ++c2)
                        acc += static_cast<double>(w2[c * C + c2]) * hid.at(0, c2, t);
                    next.at(n, c, t) += acc;
                }
        }
        cur = next;
    }
    return cur;
}

// Decoder branch ("hmdm" with 1 plane, "hpdm" with 2). Returns the planes
// before the exp / atan2 head.
inline std::vector<Mat> decode_planes(const Tensor3& o, const GeneratorConfig& cfg,
                                      const WeightBundle& w, const std::string& branch,
                                      int out_ch) {
    const int C = cfg.channels;
    const int T = o.frames();
    std::vector<Mat> planes(out_ch, Mat(cfg.freq_bins, T));
    int n_base = 0;
    for (int i = 0; i < cfg.layout.regions(); ++i) {
        const int s = cfg.layout.freq_strides[i];
        const std::string r = branch + ".region" + std::to_string(i);
        const auto& pw = vals(w, r + ".pointwise.weight");
        const auto& pwb = vals(w, r + ".pointwise.bias");
        const auto& trw = vals(w, r + ".trconv.weight");
        const auto& trb = vals(w, r + ".trconv.bias");

        Tensor3 g(cfg.layout.subband_counts[i], C, T);
        for (int n = 0; n < g.bands(); ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) {
                    double acc = pwb[c];
                    for (int ci = 0; ci < C; ++ci)
                        acc += static_cast<double>(pw[c * C + ci]) * o.at(n_base + n, ci, t);
                    g.at(n, c, t) = acc;
                }
        apply_ln(g, vals(w, r + ".ln.gamma"), vals(w, r + ".ln.beta"), cfg.ln_eps);
        for (int n = 0; n < g.bands(); ++n)
            for (int c = 0; c < C; ++c)
                for (int t = 0; t < T; ++t) g.at(n, c, t) = gelu(g.at(n, c, t));

        for (int n = 0; n < g.bands(); ++n)
            for (int fk = 0; fk < s; ++fk) {
                const int f = cfg.layout.boundaries[i] + n * s + fk;
                if (f >= cfg.layout.boundaries[i + 1]) continue;
                for (int oc = 0; oc < out_ch; ++oc)
                    for (int t = 0; t < T; ++t) {
                        double acc = trb[oc];
                        for (int c = 0; c < C; ++c)
                            for (int dt = -1; dt <= 1; ++dt) {
                                const int tt = t + dt;
                                if (tt < 0 || tt >= T) continue;
                                acc += static_cast<double>(
                                           trw[((c * out_ch + oc) * s + fk) * 3 + dt + 1]) *
                                       g.at(n, c, tt);
                            }
                        planes[oc](f, t) = acc;
                    }
            }
        n_base += cfg.layout.subband_counts[i];
    }
    return planes;
}

inline Mat hmdm(const Tensor3& o, const GeneratorConfig& cfg, const WeightBundle& w) {
    Mat out = decode_planes(o, cfg, w, "hmdm", 1)[0];
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
    return out;
}

inline Mat hpdm(const Tensor3& o, const GeneratorConfig& cfg, const WeightBundle& w) {
    auto planes = decode_planes(o, cfg, w, "hpdm", 2);
    Mat phase(planes[0].rows(), planes[0].cols());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        const double re = planes[0].data()[i];
        const double im = planes[1].data()[i];
        double ph = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
        if (ph <= -rndvoc::kPi) ph = rndvoc::kPi;
        phase.data()[i] = ph;
    }
    return phase;
}

}  // namespace refnet
