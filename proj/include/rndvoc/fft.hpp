// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <complex>
#include <vector>

#include "rndvoc/core.hpp"

namespace rndvoc {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 transform. No normalization on the forward
/// direction; the inverse applies 1/n (so test vectors are bit-stable and
/// independent of any backend's scaling convention).
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    require(is_power_of_two(n), "fft: length must be a power of two");

    // bit-reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv;
    }
}

/// Real-input forward transform; returns the one-sided half, n/2 + 1 bins.
inline std::vector<std::complex<double>> rfft(const double* x, std::size_t n) {
    std::vector<std::complex<double>> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = std::complex<double>(x[i], 0.0);
    fft_inplace(a, false);
    a.resize(n / 2 + 1);
    return a;
}

/// Inverse of rfft: expands one-sided bins by conjugate symmetry, applies 1/n.
inline std::vector<double> irfft(const std::complex<double>* half, std::size_t n) {
    std::vector<std::complex<double>> a(n);
    for (std::size_t k = 0; k <= n / 2; ++k) a[k] = half[k];
    for (std::size_t k = n / 2 + 1; k < n; ++k) a[k] = std::conj(half[n - k]);
    fft_inplace(a, true);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
    return out;
}

}  // namespace rndvoc
