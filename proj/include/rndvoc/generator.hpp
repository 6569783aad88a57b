// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Forward pass of the null-space network: band-split encoder, stacked
// dual-path blocks (cross-band + narrow-band), and the magnitude/phase
// decoders, wired into the range-null reconstruction. Everything here is a
// pure function of (input, config, weights); loops parallelize only over
// disjoint output slices so results are bit-identical for any thread count.

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rndvoc/config.hpp"
#include "rndvoc/core.hpp"
#include "rndvoc/dsp.hpp"
#include "rndvoc/rnd.hpp"
#include "rndvoc/weights.hpp"

namespace rndvoc {

namespace detail {

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }
inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }
inline double prelu(double x, double alpha) { return x > 0.0 ? x : alpha * x; }

inline const Tensor& fetch(const WeightBundle& w, const std::string& name,
                           const std::vector<std::uint32_t>& shape) {
    const Tensor& t = w.get(name);
    require(t.shape == shape, "tensor '" + name + "' has shape " +
                                  shape_string(t.shape) + ", expected " +
                                  shape_string(shape));
    return t;
}

/// Layer normalization over the channel axis, one statistic per
/// (sub-band, frame) position, learnable per-channel affine.
inline Tensor3 ln_channels(const Tensor3& x, const float* gamma, const float* beta,
                           double eps) {
    const int N = x.bands(), C = x.channels(), T = x.frames();
    Tensor3 out(N, C, T);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            for (int t = 0; t < T; ++t) {
                double mean = 0.0, sq = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double v = x.at(static_cast<int>(n), c, t);
                    mean += v;
                    sq += v * v;
                }
                mean /= C;
                const double var = sq / C - mean * mean;
                const double inv = 1.0 / std::sqrt(std::max(var, 0.0) + eps);
                for (int c = 0; c < C; ++c) {
                    const double v = x.at(static_cast<int>(n), c, t);
                    out.at(static_cast<int>(n), c, t) =
                        (v - mean) * inv * gamma[c] + beta[c];
                }
            }
        }
    });
    return out;
}

/// Same normalization on a contiguous C x T slab (buffers laid out [c*T+t]).
inline void ln_slab(const double* x, double* out, int C, int T, const float* gamma,
                    const float* beta, double eps) {
    for (int t = 0; t < T; ++t) {
        double mean = 0.0, sq = 0.0;
        for (int c = 0; c < C; ++c) {
            const double v = x[static_cast<std::size_t>(c) * T + t];
            mean += v;
            sq += v * v;
        }
        mean /= C;
        const double var = sq / C - mean * mean;
        const double inv = 1.0 / std::sqrt(std::max(var, 0.0) + eps);
        for (int c = 0; c < C; ++c) {
            const double v = x[static_cast<std::size_t>(c) * T + t];
            out[static_cast<std::size_t>(c) * T + t] = (v - mean) * inv * gamma[c] + beta[c];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Hierarchical spectral encoder
// ---------------------------------------------------------------------------

/// Per region: right-pad the frequency span to a stride multiple, compress it
/// with a strided 2-D conv (1 -> C channels, frequency stride folds bins into
/// sub-band tokens, time kernel 3 with same-padding), then normalize over
/// channels. Regions concatenate along the sub-band axis.
inline Tensor3 hsem_encode(const Mat& range_mag, const GeneratorConfig& cfg,
                           const WeightBundle& w) {
    cfg.validate();
    require(range_mag.rows() == cfg.freq_bins,
            "hsem_encode: input has " + std::to_string(range_mag.rows()) +
                " rows, config expects " + std::to_string(cfg.freq_bins));
    const int C = cfg.channels;
    const int T = range_mag.cols();
    const auto& layout = cfg.layout;
    Tensor3 out(cfg.total_subbands(), C, T);

    int n_base = 0;
    for (int i = 0; i < layout.regions(); ++i) {
        const int s = layout.freq_strides[i];
        const int ni = layout.subband_counts[i];
        const int b0 = layout.boundaries[i];
        const int b1 = layout.boundaries[i + 1];
        const std::string r = "hsem.region" + std::to_string(i);
        const auto& wt = detail::fetch(w, r + ".conv.weight",
                                       {static_cast<std::uint32_t>(C), 1,
                                        static_cast<std::uint32_t>(s), 3});
        const auto& bias = detail::fetch(w, r + ".conv.bias",
                                         {static_cast<std::uint32_t>(C)});
        const auto& gamma = detail::fetch(w, r + ".ln.gamma",
                                          {static_cast<std::uint32_t>(C)});
        const auto& beta = detail::fetch(w, r + ".ln.beta",
                                         {static_cast<std::uint32_t>(C)});

        parallel_for(static_cast<std::size_t>(ni), [&](std::size_t nn0, std::size_t nn1) {
            std::vector<double> acc(T);
            for (std::size_t n = nn0; n < nn1; ++n) {
                const int gn = n_base + static_cast<int>(n);
                for (int c = 0; c < C; ++c) {
                    std::fill(acc.begin(), acc.end(), static_cast<double>(bias.data[c]));
                    for (int fk = 0; fk < s; ++fk) {
                        const int f = b0 + static_cast<int>(n) * s + fk;
                        if (f >= b1) continue;  // right padding is zero
                        const double* src = range_mag.row(f);
                        for (int dt = -1; dt <= 1; ++dt) {
                            const double wv = wt.data[(c * s + fk) * 3 + (dt + 1)];
                            const int lo = std::max(0, -dt);
                            const int hi = std::min(T, T - dt);
                            for (int t = lo; t < hi; ++t) acc[t] += wv * src[t + dt];
                        }
                    }
                    for (int t = 0; t < T; ++t) out.at(gn, c, t) = acc[t];
                }
                // normalize over channels at each frame
                for (int t = 0; t < T; ++t) {
                    double mean = 0.0, sq = 0.0;
                    for (int c = 0; c < C; ++c) {
                        const double v = out.at(gn, c, t);
                        mean += v;
                        sq += v * v;
                    }
                    mean /= C;
                    const double var = sq / C - mean * mean;
                    const double inv = 1.0 / std::sqrt(std::max(var, 0.0) + cfg.ln_eps);
                    for (int c = 0; c < C; ++c)
                        out.at(gn, c, t) = (out.at(gn, c, t) - mean) * inv *
                                               gamma.data[c] +
                                           beta.data[c];
                }
            }
        });
        n_base += ni;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cross-band module
// ---------------------------------------------------------------------------

namespace detail {

/// Residual stage: x + PReLU(GConv1d(LN(x))), grouped kernel-3 conv along the
/// sub-band axis, frames independent.
inline Tensor3 cbm_gconv_stage(const Tensor3& x, const GeneratorConfig& cfg,
                               const WeightBundle& w, const std::string& prefix,
                               int stage) {
    const int N = x.bands(), C = x.channels(), T = x.frames();
    const int G = cfg.cbm_groups;
    const int gs = C / G;
    const std::string sfx = std::to_string(stage);
    const auto Cu = static_cast<std::uint32_t>(C);
    const auto& gamma = fetch(w, prefix + ".ln" + (stage == 1 ? "1" : "3") + ".gamma", {Cu});
    const auto& beta = fetch(w, prefix + ".ln" + (stage == 1 ? "1" : "3") + ".beta", {Cu});
    const auto& gw = fetch(w, prefix + ".gconv" + sfx + ".weight",
                           {Cu, static_cast<std::uint32_t>(gs), 3});
    const auto& gb = fetch(w, prefix + ".gconv" + sfx + ".bias", {Cu});
    const auto& alpha = fetch(w, prefix + ".prelu" + sfx + ".alpha", {1});

    const Tensor3 y = ln_channels(x, gamma.data.data(), beta.data.data(), cfg.ln_eps);
    Tensor3 out = x;
    const double a = alpha.data[0];
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
        std::vector<double> acc(T);
        for (std::size_t n = n0; n < n1; ++n) {
            for (int c = 0; c < C; ++c) {
                const int group = c / gs;
                std::fill(acc.begin(), acc.end(), static_cast<double>(gb.data[c]));
                for (int dn = -1; dn <= 1; ++dn) {
                    const int nn = static_cast<int>(n) + dn;
                    if (nn < 0 || nn >= N) continue;
                    for (int ci = 0; ci < gs; ++ci) {
                        const double wv = gw.data[(c * gs + ci) * 3 + (dn + 1)];
                        const double* src = y.channel(nn, group * gs + ci);
                        for (int t = 0; t < T; ++t) acc[t] += wv * src[t];
                    }
                }
                double* dst = out.channel(static_cast<int>(n), c);
                for (int t = 0; t < T; ++t) dst[t] += prelu(acc[t], a);
            }
        }
    });
    return out;
}

}  // namespace detail

/// Three residual stages along the sub-band axis: neighbor-mixing grouped
/// conv, the squeeze -> band-mixer -> restore bottleneck that shuffles all
/// sub-bands globally, and a second neighbor-mixing grouped conv.
inline Tensor3 cbm_forward(const Tensor3& x, const GeneratorConfig& cfg,
                           const WeightBundle& w, int block_idx) {
    cfg.validate();
    const int N = x.bands(), C = x.channels(), T = x.frames();
    require(N == cfg.total_subbands() && C == cfg.channels,
            "cbm_forward: tensor shape does not match config");
    const int Cs = cfg.channels_squeezed;
    const std::string prefix = "dpb" + std::to_string(block_idx) + ".cbm";
    const auto Cu = static_cast<std::uint32_t>(C);
    const auto Csu = static_cast<std::uint32_t>(Cs);
    const auto Nu = static_cast<std::uint32_t>(N);

    const Tensor3 x1 = detail::cbm_gconv_stage(x, cfg, w, prefix, 1);

    const auto& gamma2 = detail::fetch(w, prefix + ".ln2.gamma", {Cu});
    const auto& beta2 = detail::fetch(w, prefix + ".ln2.beta", {Cu});
    const auto& sqw = detail::fetch(w, prefix + ".squeeze.weight", {Csu, Cu, 3});
    const auto& sqb = detail::fetch(w, prefix + ".squeeze.bias", {Csu});
    const auto& bm = detail::fetch(w, prefix + ".bandmixer.weight", {Nu, Nu});
    const auto& rw = detail::fetch(w, prefix + ".restore.weight", {Cu, Csu, 3});
    const auto& rb = detail::fetch(w, prefix + ".restore.bias", {Cu});

    const Tensor3 u =
        detail::ln_channels(x1, gamma2.data.data(), beta2.data.data(), cfg.ln_eps);

    // squeeze to C' channels, kernel 3 along sub-bands, SiLU
    Tensor3 v(N, Cs, T);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
        std::vector<double> acc(T);
        for (std::size_t n = n0; n < n1; ++n) {
            for (int cs = 0; cs < Cs; ++cs) {
                std::fill(acc.begin(), acc.end(), static_cast<double>(sqb.data[cs]));
                for (int dn = -1; dn <= 1; ++dn) {
                    const int nn = static_cast<int>(n) + dn;
                    if (nn < 0 || nn >= N) continue;
                    for (int c = 0; c < C; ++c) {
                        const double wv = sqw.data[(cs * C + c) * 3 + (dn + 1)];
                        const double* src = u.channel(nn, c);
                        for (int t = 0; t < T; ++t) acc[t] += wv * src[t];
                    }
                }
                double* dst = v.channel(static_cast<int>(n), cs);
                for (int t = 0; t < T; ++t) dst[t] = detail::silu(acc[t]);
            }
        }
    });

    // global sub-band shuffle: dense N x N map applied across sub-bands
    Tensor3 mixed(N, Cs, T);
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
        for (std::size_t n = n0; n < n1; ++n) {
            for (int m = 0; m < N; ++m) {
                const double wv = bm.data[n * N + m];
                for (int cs = 0; cs < Cs; ++cs) {
                    const double* src = v.channel(m, cs);
                    double* dst = mixed.channel(static_cast<int>(n), cs);
                    for (int t = 0; t < T; ++t) dst[t] += wv * src[t];
                }
            }
        }
    });

    // restore to C channels, SiLU, residual back onto x1
    Tensor3 x2 = x1;
    parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
        std::vector<double> acc(T);
        for (std::size_t n = n0; n < n1; ++n) {
            for (int c = 0; c < C; ++c) {
                std::fill(acc.begin(), acc.end(), static_cast<double>(rb.data[c]));
                for (int dn = -1; dn <= 1; ++dn) {
                    const int nn = static_cast<int>(n) + dn;
                    if (nn < 0 || nn >= N) continue;
                    for (int cs = 0; cs < Cs; ++cs) {
                        const double wv = rw.data[(c * Cs + cs) * 3 + (dn + 1)];
                        const double* src = mixed.channel(nn, cs);
                        for (int t = 0; t < T; ++t) acc[t] += wv * src[t];
                    }
                }
                double* dst = x2.channel(static_cast<int>(n), c);
                for (int t = 0; t < T; ++t) dst[t] += detail::silu(acc[t]);
            }
        }
    });

    return detail::cbm_gconv_stage(x2, cfg, w, prefix, 2);
}

// ---------------------------------------------------------------------------
// Narrow-band module
// ---------------------------------------------------------------------------

/// P ConvNeXt-v2-style blocks along the time axis; all sub-bands share the
/// weights (the sub-band axis acts as batch). Hidden width stays at C.
inline Tensor3 nbm_forward(const Tensor3& x, const GeneratorConfig& cfg,
                           const WeightBundle& w, int block_idx) {
    cfg.validate();
    const int N = x.bands(), C = x.channels(), T = x.frames();
    require(N == cfg.total_subbands() && C == cfg.channels,
            "nbm_forward: tensor shape does not match config");
    const int K = cfg.nbm_time_kernel;
    const int half = K / 2;
    const auto Cu = static_cast<std::uint32_t>(C);
    Tensor3 cur = x;

    for (int p = 0; p < cfg.convnext_per_block; ++p) {
        const std::string prefix =
            "dpb" + std::to_string(block_idx) + ".nbm.block" + std::to_string(p);
        const auto& dww = detail::fetch(w, prefix + ".dwconv.weight",
                                        {Cu, 1, static_cast<std::uint32_t>(K)});
        const auto& dwb = detail::fetch(w, prefix + ".dwconv.bias", {Cu});
        const auto& gamma = detail::fetch(w, prefix + ".ln.gamma", {Cu});
        const auto& beta = detail::fetch(w, prefix + ".ln.beta", {Cu});
        const auto& w1 = detail::fetch(w, prefix + ".pw1.weight", {Cu, Cu});
        const auto& b1 = detail::fetch(w, prefix + ".pw1.bias", {Cu});
        const auto& grn_g = detail::fetch(w, prefix + ".grn.gamma", {Cu});
        const auto& grn_b = detail::fetch(w, prefix + ".grn.beta", {Cu});
        const auto& w2 = detail::fetch(w, prefix + ".pw2.weight", {Cu, Cu});
        const auto& b2 = detail::fetch(w, prefix + ".pw2.bias", {Cu});

        Tensor3 next = cur;
        parallel_for(static_cast<std::size_t>(N), [&](std::size_t n0, std::size_t n1) {
            const std::size_t slab = static_cast<std::size_t>(C) * T;
            std::vector<double> d(slab), l(slab), h(slab), g(C), acc(T);
            for (std::size_t n = n0; n < n1; ++n) {
                const int nn = static_cast<int>(n);
                // depthwise time conv, symmetric zero padding
                for (int c = 0; c < C; ++c) {
                    const double* src = cur.channel(nn, c);
                    double* dst = d.data() + static_cast<std::size_t>(c) * T;
                    for (int t = 0; t < T; ++t) {
                        double acc = dwb.data[c];
                        for (int k = 0; k < K; ++k) {
                            const int tt = t + k - half;
                            if (tt < 0 || tt >= T) continue;
                            acc += static_cast<double>(dww.data[c * K + k]) * src[tt];
                        }
                        dst[t] = acc;
                    }
                }
                detail::ln_slab(d.data(), l.data(), C, T, gamma.data.data(),
                                beta.data.data(), cfg.ln_eps);
                // pointwise expand (width C), exact GELU
                for (int c2 = 0; c2 < C; ++c2) {
                    double* dst = h.data() + static_cast<std::size_t>(c2) * T;
                    for (int t = 0; t < T; ++t) dst[t] = b1.data[c2];
                    for (int c = 0; c < C; ++c) {
                        const double wv = w1.data[c2 * C + c];
                        const double* src = l.data() + static_cast<std::size_t>(c) * T;
                        for (int t = 0; t < T; ++t) dst[t] += wv * src[t];
                    }
                    for (int t = 0; t < T; ++t) dst[t] = detail::gelu(dst[t]);
                }
                // global response normalization over channels
                double gmean = 0.0;
                for (int c = 0; c < C; ++c) {
                    const double* src = h.data() + static_cast<std::size_t>(c) * T;
                    double sq = 0.0;
                    for (int t = 0; t < T; ++t) sq += src[t] * src[t];
                    g[c] = std::sqrt(sq);
                    gmean += g[c];
                }
                gmean /= C;
                for (int c = 0; c < C; ++c) {
                    const double nx = g[c] / (gmean + cfg.ln_eps);
                    double* src = h.data() + static_cast<std::size_t>(c) * T;
                    const double gg = grn_g.data[c];
                    const double bb = grn_b.data[c];
                    for (int t = 0; t < T; ++t) src[t] = gg * (src[t] * nx) + bb + src[t];
                }
                // pointwise project back, residual
                for (int c = 0; c < C; ++c) {
                    double* dst = next.channel(nn, c);
                    std::fill(acc.begin(), acc.end(), static_cast<double>(b2.data[c]));
                    for (int c2 = 0; c2 < C; ++c2) {
                        const double wv = w2.data[c * C + c2];
                        const double* src = h.data() + static_cast<std::size_t>(c2) * T;
                        for (int t = 0; t < T; ++t) acc[t] += wv * src[t];
                    }
                    for (int t = 0; t < T; ++t) dst[t] += acc[t];
                }
            }
        });
        cur = std::move(next);
    }
    return cur;
}

/// One dual-path block: cross-band mixing followed by narrow-band (time)
/// modeling.
inline Tensor3 dpb_forward(const Tensor3& x, const GeneratorConfig& cfg,
                           const WeightBundle& w, int block_idx) {
    return nbm_forward(cbm_forward(x, cfg, w, block_idx), cfg, w, block_idx);
}

// ---------------------------------------------------------------------------
// Hierarchical decoders
// ---------------------------------------------------------------------------

namespace detail {

/// Region pipeline shared by the two decoder branches: pointwise conv, LN,
/// GELU, then a transposed 2-D conv whose frequency stride unfolds sub-band
/// tokens back to bins (stride == kernel, so each bin comes from exactly one
/// token); region padding is trimmed before concatenation.
inline std::vector<Mat> region_decode(const Tensor3& o, const GeneratorConfig& cfg,
                                      const WeightBundle& w, const std::string& branch,
                                      int out_ch) {
    cfg.validate();
    const int N = o.bands(), C = o.channels(), T = o.frames();
    require(N == cfg.total_subbands() && C == cfg.channels,
            branch + ": tensor shape does not match config");
    const auto Cu = static_cast<std::uint32_t>(C);
    std::vector<Mat> planes(out_ch, Mat(cfg.freq_bins, T));

    int n_base = 0;
    for (int i = 0; i < cfg.layout.regions(); ++i) {
        const int s = cfg.layout.freq_strides[i];
        const int ni = cfg.layout.subband_counts[i];
        const int b0 = cfg.layout.boundaries[i];
        const int b1 = cfg.layout.boundaries[i + 1];
        const std::string r = branch + ".region" + std::to_string(i);
        const auto& pw = fetch(w, r + ".pointwise.weight", {Cu, Cu});
        const auto& pwb = fetch(w, r + ".pointwise.bias", {Cu});
        const auto& gamma = fetch(w, r + ".ln.gamma", {Cu});
        const auto& beta = fetch(w, r + ".ln.beta", {Cu});
        const auto& trw = fetch(w, r + ".trconv.weight",
                                {Cu, static_cast<std::uint32_t>(out_ch),
                                 static_cast<std::uint32_t>(s), 3});
        const auto& trb = fetch(w, r + ".trconv.bias",
                                {static_cast<std::uint32_t>(out_ch)});

        parallel_for(static_cast<std::size_t>(ni), [&](std::size_t nn0, std::size_t nn1) {
            const std::size_t slab = static_cast<std::size_t>(C) * T;
            std::vector<double> p(slab), l(slab), acc(T);
            for (std::size_t n = nn0; n < nn1; ++n) {
                const int gn = n_base + static_cast<int>(n);
                for (int c = 0; c < C; ++c) {
                    double* dst = p.data() + static_cast<std::size_t>(c) * T;
                    for (int t = 0; t < T; ++t) dst[t] = pwb.data[c];
                    for (int ci = 0; ci < C; ++ci) {
                        const double wv = pw.data[c * C + ci];
                        const double* src = o.channel(gn, ci);
                        for (int t = 0; t < T; ++t) dst[t] += wv * src[t];
                    }
                }
                ln_slab(p.data(), l.data(), C, T, gamma.data.data(), beta.data.data(),
                        cfg.ln_eps);
                for (std::size_t k = 0; k < slab; ++k) l[k] = gelu(l[k]);

                for (int oc = 0; oc < out_ch; ++oc) {
                    for (int fk = 0; fk < s; ++fk) {
                        const int f = b0 + static_cast<int>(n) * s + fk;
                        if (f >= b1) continue;  // trim region padding
                        std::fill(acc.begin(), acc.end(),
                                  static_cast<double>(trb.data[oc]));
                        for (int c = 0; c < C; ++c) {
                            const double* src = l.data() + static_cast<std::size_t>(c) * T;
                            for (int dt = -1; dt <= 1; ++dt) {
                                const double wv =
                                    trw.data[((c * out_ch + oc) * s + fk) * 3 + (dt + 1)];
                                const int lo = std::max(0, -dt);
                                const int hi = std::min(T, T - dt);
                                for (int t = lo; t < hi; ++t) acc[t] += wv * src[t + dt];
                            }
                        }
                        double* row = planes[oc].row(f);
                        for (int t = 0; t < T; ++t) row[t] = acc[t];
                    }
                }
            }
        });
        n_base += ni;
    }
    return planes;
}

}  // namespace detail

/// Magnitude decoder; the exp keeps the null-space estimate strictly positive.
inline Mat hmdm_decode(const Tensor3& o, const GeneratorConfig& cfg,
                       const WeightBundle& w) {
    std::vector<Mat> planes = detail::region_decode(o, cfg, w, "hmdm", 1);
    Mat& out = planes[0];
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
    return std::move(out);
}

/// Phase decoder: two pseudo-real/imag planes combined by atan2 into (-pi, pi].
inline Mat hpdm_decode(const Tensor3& o, const GeneratorConfig& cfg,
                       const WeightBundle& w) {
    std::vector<Mat> planes = detail::region_decode(o, cfg, w, "hpdm", 2);
    const Mat& re = planes[0];
    const Mat& im = planes[1];
    Mat phase(re.rows(), re.cols());
    for (std::size_t i = 0; i < phase.size(); ++i) {
        const double r = re.data()[i];
        const double m = im.data()[i];
        double ph = (r == 0.0 && m == 0.0) ? 0.0 : std::atan2(m, r);
        if (ph <= -kPi) ph = kPi;
        phase.data()[i] = ph;
    }
    return phase;
}

// ---------------------------------------------------------------------------
// Full forward pass
// ---------------------------------------------------------------------------

struct GeneratorOutput {
    Mat range;                // range-space magnitude (unclamped)
    Mat null_raw;             // magnitude decoder output before null projection
    Mat magnitude;            // final magnitude, clamped at zero
    Mat magnitude_preclamp;   // range + null-projected estimate
    Mat phase;                // (-pi, pi]
    AudioBuffer audio;
};

inline GeneratorOutput generator_forward(const Mat& x_mel, const MelFilterbank& fb,
                                         const GeneratorConfig& cfg,
                                         const StftConfig& stft_cfg, int sample_rate,
                                         const WeightBundle& w) {
    cfg.validate();
    require(x_mel.rows() == cfg.mel_bands,
            "generator_forward: mel input has " + std::to_string(x_mel.rows()) +
                " rows, config expects " + std::to_string(cfg.mel_bands));
    require(fb.mel_bands() == cfg.mel_bands && fb.freq_bins() == cfg.freq_bins,
            "generator_forward: filterbank shape does not match config");

    auto stage = [](const char* name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(std::string("generator_forward[") + name + "]: " + e.what());
        }
    };

    GeneratorOutput out;
    out.range = stage("range_project", [&] { return range_project(x_mel, fb); });
    Tensor3 feats = stage("hsem_encode", [&] { return hsem_encode(out.range, cfg, w); });
    for (int b = 0; b < cfg.blocks; ++b) {
        const std::string name = "dpb" + std::to_string(b);
        feats = stage(name.c_str(), [&] { return dpb_forward(feats, cfg, w, b); });
    }
    out.null_raw = stage("hmdm_decode", [&] { return hmdm_decode(feats, cfg, w); });
    out.phase = stage("hpdm_decode", [&] { return hpdm_decode(feats, cfg, w); });
    MagnitudeAssembly assembly = stage("assemble_magnitude", [&] {
        return assemble_magnitude(out.range, out.null_raw, fb);
    });
    out.magnitude = std::move(assembly.magnitude);
    out.magnitude_preclamp = std::move(assembly.preclamp);
    const ComplexSpectrogram spec = stage("assemble_spectrum", [&] {
        return assemble_spectrum(out.magnitude, out.phase);
    });
    out.audio = stage("istft", [&] {
        return istft(spec, stft_cfg,
                     static_cast<std::size_t>(x_mel.cols()) * stft_cfg.hop, sample_rate);
    });
    return out;
}

// ---------------------------------------------------------------------------
// Cost accounting
// ---------------------------------------------------------------------------

/// Multiply-accumulates for one frame. Convs count
/// out_elems * kernel_volume * in_ch / groups, transposed convs the mirrored
/// quantity, dense maps in*out per position; the two fixed filterbank
/// products of the range/null projections are included, normalizations and
/// activations are not.
inline std::uint64_t count_macs_per_frame(const GeneratorConfig& cfg) {
    cfg.validate();
    const std::uint64_t C = cfg.channels;
    const std::uint64_t Cs = cfg.channels_squeezed;
    const std::uint64_t N = cfg.total_subbands();
    const std::uint64_t G = cfg.cbm_groups;
    const std::uint64_t F = cfg.freq_bins;
    const std::uint64_t Fm = cfg.mel_bands;
    const std::uint64_t Kt = cfg.nbm_time_kernel;
    const std::uint64_t P = cfg.convnext_per_block;

    std::uint64_t tokens_x_stride = 0;  // sum_i N_i * s_i (padded region widths)
    for (int i = 0; i < cfg.layout.regions(); ++i)
        tokens_x_stride += static_cast<std::uint64_t>(cfg.layout.subband_counts[i]) *
                           cfg.layout.freq_strides[i];

    const std::uint64_t proj = 3 * F * Fm;           // A+ X, plus A M and A+(A M)
    const std::uint64_t hsem = C * 3 * tokens_x_stride;
    const std::uint64_t gconv = N * C * 3 * (C / G);
    const std::uint64_t squeeze = N * Cs * C * 3;
    const std::uint64_t mixer = N * N * Cs;
    const std::uint64_t restore = N * C * Cs * 3;
    const std::uint64_t nbm = P * (N * C * Kt + 2 * N * C * C);
    const std::uint64_t dpb = 2 * gconv + squeeze + mixer + restore + nbm;
    const std::uint64_t hmdm = N * C * C + C * 3 * tokens_x_stride;
    const std::uint64_t hpdm = N * C * C + 2 * C * 3 * tokens_x_stride;

    return proj + hsem + static_cast<std::uint64_t>(cfg.blocks) * dpb + hmdm + hpdm;
}

/// Total multiply-accumulates for ceil(seconds * sample_rate / hop) frames.
inline std::uint64_t count_macs(const GeneratorConfig& cfg, double seconds,
                                int sample_rate, int hop = 256) {
    require(seconds > 0.0 && sample_rate > 0 && hop > 0,
            "count_macs: invalid duration, rate, or hop");
    const auto frames = static_cast<std::uint64_t>(
        std::ceil(seconds * sample_rate / static_cast<double>(hop)));
    return frames * count_macs_per_frame(cfg);
}

}  // namespace rndvoc
