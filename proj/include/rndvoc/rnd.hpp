// Copyright 2026 the rndvoc authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Range-null decomposition over the mel degradation matrix A:
// pseudo-inverse construction, range-space projection of a log-mel
// observation, null-space projection, and final spectrum assembly.

#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <utility>

#include "rndvoc/core.hpp"

namespace rndvoc {

struct PseudoInverseReport {
    int rank = 0;
    double max_reconstruction_error = 0.0;  // ||A A+ A - A||_max
    double singular_value_floor = 0.0;      // absolute truncation threshold used
};

/// Default relative singular-value cutoff for numerical rank.
constexpr double kDefaultSvFloor = 1e-8;

/// Moore-Penrose pseudo-inverse via SVD, truncating singular values below
/// sv_floor_rel * sigma_max. Requires A wide-or-square (rows <= cols) with
/// no zero row.
inline std::pair<Mat, PseudoInverseReport> compute_pinv(
    const Mat& a, double sv_floor_rel = kDefaultSvFloor) {
    const int fm = a.rows();
    const int f = a.cols();
    require(fm > 0 && f > 0, "compute_pinv: empty matrix");
    require(fm <= f, "compute_pinv: more rows than columns");
    require(a.all_finite(), "compute_pinv: non-finite entries");
    for (int r = 0; r < fm; ++r) {
        bool nonzero = false;
        for (int c = 0; c < f; ++c)
            if (a(r, c) != 0.0) { nonzero = true; break; }
        require(nonzero, "rank deficient filterbank: row " + std::to_string(r) +
                             " is all zero");
    }

    Eigen::MatrixXd ea(fm, f);
    for (int r = 0; r < fm; ++r)
        for (int c = 0; c < f; ++c) ea(r, c) = a(r, c);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ea, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double floor_abs = sv_floor_rel * sv(0);

    int rank = 0;
    Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > floor_abs) {
            inv_sv(i) = 1.0 / sv(i);
            ++rank;
        }
    }

    Eigen::MatrixXd pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().transpose();

    Mat out(f, fm);
    for (int r = 0; r < f; ++r)
        for (int c = 0; c < fm; ++c) out(r, c) = pinv(r, c);

    Eigen::MatrixXd resid = ea * pinv * ea - ea;
    PseudoInverseReport report;
    report.rank = rank;
    report.max_reconstruction_error = resid.cwiseAbs().maxCoeff();
    report.singular_value_floor = floor_abs;
    return {std::move(out), report};
}

/// Mel degradation matrix together with its pseudo-inverse.
struct MelFilterbank {
    Mat A;       // F_m x F, nonnegative triangular filters
    Mat A_pinv;  // F x F_m
    PseudoInverseReport report;

    int mel_bands() const { return A.rows(); }
    int freq_bins() const { return A.cols(); }
};

/// Elementwise exp, undoing the log of the mel degradation.
inline Mat exp_mel(const Mat& x_mel) {
    require(x_mel.all_finite(), "exp_mel: non-finite entries");
    Mat out(x_mel.rows(), x_mel.cols());
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::exp(x_mel.data()[i]);
    return out;
}

/// Range-space solution: A+ * exp(X_mel). Entries may be negative (A+ has
/// mixed signs); they are preserved as-is.
inline Mat range_project(const Mat& x_mel, const MelFilterbank& fb) {
    require(x_mel.rows() == fb.mel_bands(),
            "range_project: mel matrix has " + std::to_string(x_mel.rows()) +
                " rows, filterbank expects " + std::to_string(fb.mel_bands()));
    return matmul(fb.A_pinv, exp_mel(x_mel));
}

/// Null-space projection M - A+(A M). The two-product form keeps the cost at
/// O(F_m * F * T) instead of materializing the F x F projector.
inline Mat null_project(const Mat& m, const MelFilterbank& fb) {
    require(m.rows() == fb.freq_bins(),
            "null_project: matrix has " + std::to_string(m.rows()) +
                " rows, filterbank expects " + std::to_string(fb.freq_bins()));
    require(m.all_finite(), "null_project: non-finite entries");
    return m - matmul(fb.A_pinv, matmul(fb.A, m));
}

struct MagnitudeAssembly {
    Mat magnitude;  // clamped at zero
    Mat preclamp;   // range + null-projected estimate, before the clamp
};

/// Superposition of the range solution and the null-projected estimate.
/// The clamp keeps the polar form valid; degradation consistency is defined
/// on the pre-clamp value.
inline MagnitudeAssembly assemble_magnitude(const Mat& range_part,
                                            const Mat& null_estimate,
                                            const MelFilterbank& fb) {
    require(range_part.same_shape(null_estimate),
            "assemble_magnitude: shape mismatch");
    MagnitudeAssembly out;
    out.preclamp = range_part + null_project(null_estimate, fb);
    out.magnitude = Mat(out.preclamp.rows(), out.preclamp.cols());
    for (std::size_t i = 0; i < out.preclamp.size(); ++i)
        out.magnitude.data()[i] = std::max(0.0, out.preclamp.data()[i]);
    return out;
}

/// Polar to rectangular: real = mag cos(phase), imag = mag sin(phase).
inline ComplexSpectrogram assemble_spectrum(const Mat& magnitude, const Mat& phase) {
    require(magnitude.same_shape(phase), "assemble_spectrum: shape mismatch");
    require(phase.all_finite(), "assemble_spectrum: non-finite phase");
    ComplexSpectrogram spec;
    spec.real = Mat(magnitude.rows(), magnitude.cols());
    spec.imag = Mat(magnitude.rows(), magnitude.cols());
    for (std::size_t i = 0; i < magnitude.size(); ++i) {
        const double m = magnitude.data()[i];
        require(m >= 0.0, "assemble_spectrum: negative magnitude");
        spec.real.data()[i] = m * std::cos(phase.data()[i]);
        spec.imag.data()[i] = m * std::sin(phase.data()[i]);
    }
    return spec;
}

}  // namespace rndvoc
