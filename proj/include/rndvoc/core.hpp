// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rndvoc {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Error for invalid data, shapes, configs, or files. CLI maps this to
/// exit code 2.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

// ---------------------------------------------------------------------------
// Threading
//
// One process-wide worker count, set once at startup (CLI --threads).
// parallel_for assigns each index to exactly one thread and every iteration
// runs the same instruction sequence as the sequential loop, so loops whose
// iterations write disjoint outputs are bit-identical for any thread count.
// ---------------------------------------------------------------------------

inline unsigned& detail_thread_count() {
    static unsigned n = 1;
    return n;
}

inline void set_thread_count(unsigned n) {
    detail_thread_count() =
        n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

inline unsigned thread_count() { return detail_thread_count(); }

template <typename Body>
void parallel_for(std::size_t count, Body&& body) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(thread_count(), count));
    if (workers <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(count, w * chunk);
        const std::size_t end = std::min(count, begin + chunk);
        if (begin == end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// Dense row-major matrix of doubles
// ---------------------------------------------------------------------------

class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * cols, fill) {
        require(rows >= 0 && cols >= 0, "Mat: negative dimension");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    double operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row(int r) const {
        return data_.data() + static_cast<std::size_t>(r) * cols_;
    }

    bool same_shape(const Mat& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

/// C = A * B, accumulation over k in ascending order (fixed summation order;
/// rows are computed independently, so the row-parallel path is bit-identical
/// to the sequential one).
inline Mat matmul(const Mat& a, const Mat& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Mat c(a.rows(), b.cols());
    parallel_for(static_cast<std::size_t>(a.rows()), [&](std::size_t r0, std::size_t r1) {
        for (std::size_t r = r0; r < r1; ++r) {
            double* out = c.row(static_cast<int>(r));
            const double* arow = a.row(static_cast<int>(r));
            for (int k = 0; k < a.cols(); ++k) {
                const double av = arow[k];
                const double* brow = b.row(k);
                for (int j = 0; j < b.cols(); ++j) out[j] += av * brow[j];
            }
        }
    });
    return c;
}

inline Mat operator-(const Mat& a, const Mat& b) {
    require(a.same_shape(b), "Mat subtraction: shape mismatch");
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
    return c;
}

inline Mat operator+(const Mat& a, const Mat& b) {
    require(a.same_shape(b), "Mat addition: shape mismatch");
    Mat c(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
    return c;
}

// ---------------------------------------------------------------------------
// 3-D feature tensor, sub-band x channel x time, time contiguous
// ---------------------------------------------------------------------------

class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int n, int c, int t)
        : n_(n), c_(c), t_(t),
          data_(static_cast<std::size_t>(n) * c * t, 0.0) {
        require(n >= 0 && c >= 0 && t >= 0, "Tensor3: negative dimension");
    }

    int bands() const { return n_; }
    int channels() const { return c_; }
    int frames() const { return t_; }
    std::size_t size() const { return data_.size(); }

    double& at(int n, int c, int t) {
        return data_[(static_cast<std::size_t>(n) * c_ + c) * t_ + t];
    }
    double at(int n, int c, int t) const {
        return data_[(static_cast<std::size_t>(n) * c_ + c) * t_ + t];
    }

    double* channel(int n, int c) {
        return data_.data() + (static_cast<std::size_t>(n) * c_ + c) * t_;
    }
    const double* channel(int n, int c) const {
        return data_.data() + (static_cast<std::size_t>(n) * c_ + c) * t_;
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor3& o) const {
        return n_ == o.n_ && c_ == o.c_ && t_ == o.t_;
    }

private:
    int n_ = 0;
    int c_ = 0;
    int t_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Audio and spectrogram containers
// ---------------------------------------------------------------------------

struct AudioBuffer {
    std::vector<double> samples;  // nominally in [-1, 1]
    int sample_rate = 0;          // Hz

    bool all_finite() const {
        for (double v : samples)
            if (!std::isfinite(v)) return false;
        return true;
    }
    /// The two shipped presets run at 22.05 kHz / 24 kHz; other rates work
    /// but callers may want to warn.
    bool is_preset_rate() const {
        return sample_rate == 22050 || sample_rate == 24000;
    }
};

/// One-sided complex spectrogram, F = n_fft/2 + 1 rows, T columns.
struct ComplexSpectrogram {
    Mat real;
    Mat imag;

    int bins() const { return real.rows(); }
    int frames() const { return real.cols(); }

    void check() const {
        require(real.same_shape(imag), "spectrogram: real/imag shape mismatch");
    }

    Mat magnitude() const {
        check();
        Mat m(real.rows(), real.cols());
        for (std::size_t i = 0; i < m.size(); ++i)
            m.data()[i] = std::hypot(real.data()[i], imag.data()[i]);
        return m;
    }

    /// Principal phase in (-pi, pi]; exact zeros map to phase 0.
    Mat phase() const {
        check();
        Mat p(real.rows(), real.cols());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double re = real.data()[i];
            const double im = imag.data()[i];
            double ph = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
            if (ph <= -kPi) ph = kPi;
            p.data()[i] = ph;
        }
        return p;
    }
};

}  // namespace rndvoc
