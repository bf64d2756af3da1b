#pragma once

#include <cmath>
#include <string>

#include "binary_io.hpp"
#include "kernels.hpp"

namespace kernel_lab {

enum class Provenance { DirectInterpolant, SGD, EigenPro };

/// f(z) = sum_i coefficients.row(i) * K(centers.row(i), z).
struct KernelModel {
    Matrix centers;       // n x d
    Matrix coefficients;  // n x c
    KernelConfig kernel;
    Provenance provenance = Provenance::DirectInterpolant;

    Eigen::Index size() const { return centers.rows(); }
    Eigen::Index dim() const { return centers.cols(); }
    Eigen::Index outputs() const { return coefficients.cols(); }

    void validate() const {
        kernel.validate();
        if (coefficients.rows() != centers.rows()) {
            throw InputError("model: " + std::to_string(coefficients.rows()) + " coefficient rows for " +
                             std::to_string(centers.rows()) + " centers");
        }
    }
};

inline Matrix predict(const KernelModel& model, const Matrix& Z, const GramOptions& opts = {}) {
    model.validate();
    if (Z.cols() != model.dim()) {
        throw InputError("predict: query dimension " + std::to_string(Z.cols()) + " != model dimension " +
                         std::to_string(model.dim()));
    }
    Matrix out(Z.rows(), model.outputs());
    const Eigen::Index block = std::max<Eigen::Index>(1, opts.block_rows);
    for (Eigen::Index r0 = 0; r0 < Z.rows(); r0 += block) {
        const Eigen::Index rows = std::min(block, Z.rows() - r0);
        const Matrix Zb = Z.middleRows(r0, rows);
        out.middleRows(r0, rows).noalias() = gram(Zb, model.centers, model.kernel, opts) * model.coefficients;
    }
    return out;
}

/// RKHS norm sqrt(sum_c alpha_c^T K alpha_c); for several outputs this is the
/// root of the summed per-column squared norms.
inline double rkhs_norm(const KernelModel& model, const GramOptions& opts = {}) {
    model.validate();
    if (model.size() == 0) throw InputError("rkhs_norm: model has no centers");
    const Matrix K = gram(model.centers, model.kernel, opts);
    const double quad = (model.coefficients.transpose() * K * model.coefficients).trace();
    const double scale = model.coefficients.cwiseAbs().sum();
    const double tol = 1e-10 * scale * scale;
    if (quad < -tol) {
        throw NumericError("rkhs_norm: quadratic form <alpha, K alpha> = " + std::to_string(quad) +
                           " is negative beyond roundoff");
    }
    return std::sqrt(std::max(quad, 0.0));
}

// Binary container: "IKM1", family u8, bandwidth f64, n u64, d u64, c u64,
// then row-major centers and coefficients as little-endian f64.
inline std::vector<char> serialize_model(const KernelModel& model) {
    model.validate();
    binary::Writer w;
    w.bytes("IKM1");
    w.u8(static_cast<std::uint8_t>(model.kernel.family));
    w.f64(model.kernel.bandwidth);
    w.u64(static_cast<std::uint64_t>(model.size()));
    w.u64(static_cast<std::uint64_t>(model.dim()));
    w.u64(static_cast<std::uint64_t>(model.outputs()));
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i)
        for (Eigen::Index j = 0; j < model.centers.cols(); ++j) w.f64(model.centers(i, j));
    for (Eigen::Index i = 0; i < model.coefficients.rows(); ++i)
        for (Eigen::Index j = 0; j < model.coefficients.cols(); ++j) w.f64(model.coefficients(i, j));
    return w.data();
}

inline KernelModel deserialize_model(std::vector<char> bytes, const std::string& source = "model") {
    binary::Reader r(std::move(bytes), source);
    if (r.bytes(4) != "IKM1") {
        throw FormatError(source + ": bad magic, expected IKM1", 0);
    }
    KernelModel model;
    const auto family = r.u8();
    if (family > 1) r.fail("unknown kernel family code " + std::to_string(family));
    model.kernel.family = static_cast<KernelFamily>(family);
    model.kernel.bandwidth = r.f64();
    if (!(model.kernel.bandwidth > 0.0) || !std::isfinite(model.kernel.bandwidth)) r.fail("invalid bandwidth");
    const auto n = r.u64();
    const auto d = r.u64();
    const auto c = r.u64();
    const std::uint64_t payload = (n * d + n * c) * sizeof(double);
    if (r.remaining() < payload) r.fail("truncated payload, expected " + std::to_string(payload) + " bytes");
    model.centers.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    model.coefficients.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i)
        for (Eigen::Index j = 0; j < model.centers.cols(); ++j) model.centers(i, j) = r.f64();
    for (Eigen::Index i = 0; i < model.coefficients.rows(); ++i)
        for (Eigen::Index j = 0; j < model.coefficients.cols(); ++j) model.coefficients(i, j) = r.f64();
    return model;
}

inline void save_model(const KernelModel& model, const std::string& path) {
    binary::write_file(path, serialize_model(model));
}

inline KernelModel load_model(const std::string& path) { return deserialize_model(binary::read_file(path), path); }

}  // namespace kernel_lab
