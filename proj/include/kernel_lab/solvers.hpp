#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "kernels.hpp"
#include "model.hpp"

namespace kernel_lab {

/// Diagonal jitter escalation: start, start*factor, ... up to max, each as a
/// multiple of trace(K)/n. Disabled means a failed factorization is an error.
struct JitterPolicy {
    bool enabled = false;
    double start = 1e-12;
    double factor = 10.0;
    double max = 1e-6;

    static JitterPolicy none() { return {}; }
    static JitterPolicy escalate(double start = 1e-12, double factor = 10.0, double max = 1e-6) {
        return {true, start, factor, max};
    }
};

struct SolveDiagnostics {
    double max_abs_residual = 0.0;  // max |K alpha - Y|
    double jitter_used = 0.0;       // absolute diagonal shift
    double condition_hint = 0.0;    // max/min Cholesky pivot
    Eigen::Index duplicates_merged = 0;
};

struct SolveOptions {
    JitterPolicy jitter = JitterPolicy::none();
    Eigen::Index dense_limit = 20000;
    int refinement_steps = 2;
    GramOptions gram;
};

namespace detail {

// Index of the first occurrence for every row; conflicting targets on identical
// rows are an input error.
inline std::vector<Eigen::Index> first_occurrences(const Matrix& X, const Matrix& Y) {
    std::map<std::vector<double>, Eigen::Index> seen;
    std::vector<Eigen::Index> first(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        std::vector<double> key(X.cols());
        for (Eigen::Index j = 0; j < X.cols(); ++j) key[j] = X(i, j);
        auto [it, inserted] = seen.emplace(std::move(key), i);
        if (!inserted && Y.row(i) != Y.row(it->second)) {
            throw InputError("solve_direct_interpolant: rows " + std::to_string(it->second) + " and " +
                             std::to_string(i) + " are identical with different targets");
        }
        first[i] = it->second;
    }
    return first;
}

}  // namespace detail

/// Minimum-norm interpolant alpha = K^{-1} Y by Cholesky factorization with
/// optional jitter escalation and iterative refinement. Duplicate training rows
/// with equal targets are merged onto their first occurrence.
inline std::pair<KernelModel, SolveDiagnostics> solve_direct_interpolant(const Matrix& X, const Matrix& Y,
                                                                         const KernelConfig& cfg,
                                                                         const SolveOptions& opts = {}) {
    cfg.validate();
    if (X.rows() != Y.rows()) {
        throw InputError("solve_direct_interpolant: " + std::to_string(X.rows()) + " points but " +
                         std::to_string(Y.rows()) + " target rows");
    }
    if (X.rows() == 0) throw InputError("solve_direct_interpolant: empty training set");
    if (X.rows() > opts.dense_limit) {
        throw ResourceError("solve_direct_interpolant: n=" + std::to_string(X.rows()) + " exceeds dense limit " +
                                std::to_string(opts.dense_limit),
                            static_cast<std::uint64_t>(X.rows()) * static_cast<std::uint64_t>(X.rows()) * 8);
    }
    detail::require_finite(Y, "solve_direct_interpolant: targets");

    const auto first = detail::first_occurrences(X, Y);
    std::vector<Eigen::Index> unique;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (first[i] == i) unique.push_back(i);
    const auto n = static_cast<Eigen::Index>(unique.size());
    const bool merged = n != X.rows();
    const Matrix Xu = merged ? Matrix(X(unique, Eigen::all)) : Matrix();
    const Matrix Yu = merged ? Matrix(Y(unique, Eigen::all)) : Matrix();
    const Matrix& Xs = merged ? Xu : X;
    const Matrix& Ys = merged ? Yu : Y;

    const Matrix K = gram(Xs, cfg, opts.gram);
    const double mean_diag = K.trace() / static_cast<double>(n);

    SolveDiagnostics diag;
    diag.duplicates_merged = X.rows() - n;
    std::optional<Eigen::LLT<Matrix>> llt;
    double relative = 0.0;
    while (true) {
        Matrix shifted = K;
        if (diag.jitter_used > 0.0) shifted.diagonal().array() += diag.jitter_used;
        llt.emplace(shifted);
        if (llt->info() == Eigen::Success) {
            const Vector pivots = llt->matrixLLT().diagonal().array().square();
            if (pivots.minCoeff() > 0.0) {
                diag.condition_hint = pivots.maxCoeff() / pivots.minCoeff();
                break;
            }
        }
        if (!opts.jitter.enabled) {
            throw NumericError("solve_direct_interpolant: Cholesky factorization failed without jitter (n=" +
                               std::to_string(n) + ")");
        }
        relative = relative == 0.0 ? opts.jitter.start : relative * opts.jitter.factor;
        if (relative > opts.jitter.max * (1.0 + 1e-9)) {
            throw NumericError("solve_direct_interpolant: factorization failed after jitter escalation to " +
                               std::to_string(opts.jitter.max) + "*trace/n; condition_hint=" +
                               std::to_string(diag.condition_hint));
        }
        diag.jitter_used = relative * mean_diag;
    }

    Matrix alpha = llt->solve(Ys);
    // Refinement against K itself; with jitter this pulls the residual toward
    // the unshifted system as far as the shifted factor allows.
    double best = (K * alpha - Ys).cwiseAbs().maxCoeff();
    for (int step = 0; step < opts.refinement_steps; ++step) {
        const Matrix correction = llt->solve(Ys - K * alpha);
        const Matrix candidate = alpha + correction;
        const double residual = (K * candidate - Ys).cwiseAbs().maxCoeff();
        if (!(residual < best)) break;
        alpha = candidate;
        best = residual;
    }
    diag.max_abs_residual = best;

    KernelModel model;
    model.kernel = cfg;
    model.provenance = Provenance::DirectInterpolant;
    model.centers = X;
    model.coefficients = Matrix::Zero(X.rows(), Y.cols());
    for (Eigen::Index u = 0; u < n; ++u) model.coefficients.row(unique[u]) = alpha.row(u);
    return {std::move(model), diag};
}

}  // namespace kernel_lab
