#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kernels.hpp"
#include "random.hpp"

namespace kernel_lab {

struct EigenOptions {
    // Matrices up to this order use a full dense decomposition; larger ones use Lanczos.
    Eigen::Index dense_threshold = 1000;
    // Ritz pairs are accepted when |S v - theta v| <= tolerance * theta_max.
    double tolerance = 1e-10;
    // Cap on Lanczos steps; 0 means the matrix order.
    Eigen::Index max_iterations = 0;
    std::uint64_t seed = 0x1A2C05ULL;
};

/// Leading eigenpairs of a symmetric matrix, largest first.
struct TopEigen {
    Vector values;   // k, descending
    Matrix vectors;  // M x k, orthonormal columns
    double tail = 0.0;  // (k+1)-th eigenvalue
    Eigen::Index iterations = 0;
    bool dense = true;
};

namespace detail {

// Sign convention: the largest-magnitude entry of each eigenvector is positive.
inline void normalize_signs(Matrix& V) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        Eigen::Index idx = 0;
        V.col(j).cwiseAbs().maxCoeff(&idx);
        if (V(idx, j) < 0.0) V.col(j) = -V.col(j);
    }
}

inline void dense_top(const Matrix& S, Eigen::Index need, Vector& values, Matrix& vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(S);
    if (es.info() != Eigen::Success) throw NumericError("top_k_eigen: dense symmetric eigensolver failed");
    const Eigen::Index M = S.rows();
    values.resize(need);
    vectors.resize(M, need);
    for (Eigen::Index i = 0; i < need; ++i) {
        values(i) = es.eigenvalues()(M - 1 - i);
        vectors.col(i) = es.eigenvectors().col(M - 1 - i);
    }
}

// Lanczos with full reorthogonalization. The Krylov basis grows until the
// leading `need` Ritz pairs meet the residual tolerance.
inline Eigen::Index lanczos_top(const Matrix& S, Eigen::Index need, const EigenOptions& opts, Vector& values,
                                Matrix& vectors) {
    const Eigen::Index M = S.rows();
    const Eigen::Index cap = opts.max_iterations > 0 ? std::min(opts.max_iterations, M) : M;
    if (cap < need) {
        throw NumericError("top_k_eigen: iteration cap " + std::to_string(cap) + " below requested pairs " +
                           std::to_string(need));
    }
    Rng rng(opts.seed);
    Matrix V(M, cap);
    Vector alpha(cap), beta(cap);
    const double scale = std::max(S.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

    auto random_start = [&](Eigen::Index j) {
        Vector v(M);
        for (Eigen::Index i = 0; i < M; ++i) v(i) = rng.uniform(-1.0, 1.0);
        for (int pass = 0; pass < 2 && j > 0; ++pass) v -= V.leftCols(j) * (V.leftCols(j).transpose() * v);
        return Vector(v / v.norm());
    };

    V.col(0) = random_start(0);
    Eigen::Index next_check = std::min(cap, std::max(need + 20, 2 * need));
    for (Eigen::Index j = 0; j < cap; ++j) {
        Vector w = S * V.col(j);
        alpha(j) = V.col(j).dot(w);
        for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
        beta(j) = w.norm();
        const bool breakdown = beta(j) <= 1e-12 * scale;

        const Eigen::Index m = j + 1;
        if (m == cap || m >= next_check) {
            Eigen::SelfAdjointEigenSolver<Matrix> tri;
            tri.computeFromTridiagonal(alpha.head(m), beta.head(m - 1), Eigen::ComputeEigenvectors);
            if (tri.info() != Eigen::Success) throw NumericError("top_k_eigen: tridiagonal eigensolve failed");
            const double top = std::abs(tri.eigenvalues()(m - 1));
            bool converged = m >= need;
            for (Eigen::Index i = 0; converged && i < need; ++i) {
                const double residual = std::abs(beta(j) * tri.eigenvectors()(m - 1, m - 1 - i));
                converged = residual <= opts.tolerance * std::max(top, scale * 1e-12);
            }
            if (converged || m == cap) {
                if (!converged && m < M) {
                    throw NumericError("top_k_eigen: Lanczos did not converge after " + std::to_string(m) +
                                       " iterations");
                }
                values.resize(need);
                vectors.resize(M, need);
                for (Eigen::Index i = 0; i < need; ++i) {
                    values(i) = tri.eigenvalues()(m - 1 - i);
                    vectors.col(i) = V.leftCols(m) * tri.eigenvectors().col(m - 1 - i);
                    vectors.col(i).normalize();
                }
                return m;
            }
            next_check = std::min(cap, m + std::max<Eigen::Index>(20, m / 4));
        }
        if (breakdown) {
            // Invariant subspace found; continue from a fresh orthogonal direction.
            beta(j) = 0.0;
            V.col(j + 1) = random_start(j + 1);
        } else {
            V.col(j + 1) = w / beta(j);
        }
    }
    throw NumericError("top_k_eigen: Lanczos exhausted " + std::to_string(cap) + " iterations");
}

}  // namespace detail

/// Top-k eigenpairs of a symmetric matrix plus the (k+1)-th eigenvalue.
inline TopEigen top_k_eigen(const Matrix& S, Eigen::Index k, const EigenOptions& opts = {}) {
    if (S.rows() != S.cols()) throw InputError("top_k_eigen: matrix is not square");
    const Eigen::Index M = S.rows();
    if (k < 1 || k >= M) {
        throw InputError("top_k_eigen: need 1 <= k < M, got k=" + std::to_string(k) + ", M=" + std::to_string(M));
    }
    if (!S.allFinite()) throw InputError("top_k_eigen: matrix has non-finite entries");
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) throw InputError("top_k_eigen: matrix not symmetric (max deviation " + std::to_string(asym) + ")");

    TopEigen out;
    Vector values;
    Matrix vectors;
    if (M <= opts.dense_threshold) {
        detail::dense_top(S, k + 1, values, vectors);
        out.iterations = M;
        out.dense = true;
    } else {
        out.iterations = detail::lanczos_top(S, k + 1, opts, values, vectors);
        out.dense = false;
    }
    detail::normalize_signs(vectors);
    out.values = values.head(k);
    out.vectors = vectors.leftCols(k);
    out.tail = values(k);
    if (!(out.values(k - 1) > 0.0)) {
        throw NumericError("top_k_eigen: k-th eigenvalue " + std::to_string(out.values(k - 1)) + " is not positive");
    }
    return out;
}

}  // namespace kernel_lab
