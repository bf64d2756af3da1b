#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"

namespace kernel_lab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class KernelFamily : std::uint8_t { Gaussian = 0, Laplacian = 1 };

inline std::string_view to_string(KernelFamily family) {
    return family == KernelFamily::Gaussian ? "gaussian" : "laplacian";
}

inline KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "gaussian" || name == "Gaussian") return KernelFamily::Gaussian;
    if (name == "laplacian" || name == "Laplacian" || name == "laplace") return KernelFamily::Laplacian;
    throw InputError("unknown kernel family '" + std::string(name) + "'");
}

/// Gaussian: exp(-|x-z|^2 / (2 sigma^2)).  Laplacian: exp(-|x-z| / sigma).
struct KernelConfig {
    KernelFamily family = KernelFamily::Gaussian;
    double bandwidth = 1.0;

    void validate() const {
        if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
            throw InputError("kernel bandwidth must be positive and finite, got " + std::to_string(bandwidth));
        }
    }

    // Kernel value from a squared distance (clamped at zero).
    double from_squared_distance(double d2) const {
        d2 = std::max(d2, 0.0);
        if (family == KernelFamily::Gaussian) return std::exp(-d2 / (2.0 * bandwidth * bandwidth));
        return std::exp(-std::sqrt(d2) / bandwidth);
    }

    friend bool operator==(const KernelConfig&, const KernelConfig&) = default;
};

struct GramOptions {
    Eigen::Index block_rows = 1024;
    std::uint64_t memory_budget_bytes = std::uint64_t{4} << 30;
};

inline void require_budget(Eigen::Index rows, Eigen::Index cols, const GramOptions& opts, std::string_view what) {
    const auto required = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) * sizeof(double);
    if (required > opts.memory_budget_bytes) {
        throw ResourceError(std::string(what) + " of " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " needs " + std::to_string(required) + " bytes, budget is " +
                                std::to_string(opts.memory_budget_bytes),
                            required);
    }
}

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, std::string_view what) {
    if (!m.allFinite()) throw InputError(std::string(what) + " contains non-finite values");
}

// Squared distance from the expanded identity |x|^2 + |z|^2 - 2<x,z>, with a
// direct difference recomputation where the identity loses most digits.
template <typename DerivedX, typename DerivedZ>
double refine_squared_distance(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z,
                               double xx, double zz, double expanded) {
    if (expanded > 1e-6 * (xx + zz)) return expanded;
    return (x - z).squaredNorm();
}

}  // namespace detail

template <typename DerivedX, typename DerivedZ>
double eval_kernel(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z, const KernelConfig& cfg) {
    cfg.validate();
    if (x.size() != z.size()) {
        throw InputError("eval_kernel: dimension mismatch " + std::to_string(x.size()) + " vs " +
                         std::to_string(z.size()));
    }
    detail::require_finite(x, "eval_kernel: x");
    detail::require_finite(z, "eval_kernel: z");
    const double xx = x.squaredNorm();
    const double zz = z.squaredNorm();
    const double xz = x.dot(z);
    return cfg.from_squared_distance(detail::refine_squared_distance(x, z, xx, zz, xx + zz - 2.0 * xz));
}

namespace detail {

inline Matrix cross_gram(const Matrix& X, const Matrix& Z, const KernelConfig& cfg, const GramOptions& opts) {
    cfg.validate();
    if (X.cols() != Z.cols()) {
        throw InputError("gram: feature dimension mismatch " + std::to_string(X.cols()) + " vs " +
                         std::to_string(Z.cols()));
    }
    require_budget(X.rows(), Z.rows(), opts, "gram matrix");
    require_finite(X, "gram: X");
    require_finite(Z, "gram: Z");

    Matrix K(X.rows(), Z.rows());
    const Vector zz = Z.rowwise().squaredNorm();
    const Eigen::Index block = std::max<Eigen::Index>(1, opts.block_rows);
    for (Eigen::Index r0 = 0; r0 < X.rows(); r0 += block) {
        const Eigen::Index rows = std::min(block, X.rows() - r0);
        const auto Xb = X.middleRows(r0, rows);
        const Vector xx = Xb.rowwise().squaredNorm();
        auto Kb = K.middleRows(r0, rows);
        Kb.noalias() = -2.0 * Xb * Z.transpose();
        for (Eigen::Index j = 0; j < Kb.cols(); ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double d2 = refine_squared_distance(Xb.row(i), Z.row(j), xx(i), zz(j), Kb(i, j) + xx(i) + zz(j));
                Kb(i, j) = cfg.from_squared_distance(d2);
            }
        }
    }
    return K;
}

}  // namespace detail

/// Symmetric Gram of one point set: exactly symmetric with unit diagonal.
inline Matrix gram(const Matrix& X, const KernelConfig& cfg, const GramOptions& opts = {}) {
    Matrix K = detail::cross_gram(X, X, cfg, opts);
    const Eigen::Index n = K.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        K(j, j) = 1.0;
        for (Eigen::Index i = j + 1; i < n; ++i) K(j, i) = K(i, j);
    }
    return K;
}

/// Cross-Gram matrix K(X_i, Z_j) for row point sets, built in row blocks of
/// opts.block_rows. Passing the same matrix object twice takes the symmetric path.
inline Matrix gram(const Matrix& X, const Matrix& Z, const KernelConfig& cfg, const GramOptions& opts = {}) {
    if (&X == &Z) return gram(X, cfg, opts);
    return detail::cross_gram(X, Z, cfg, opts);
}

}  // namespace kernel_lab
