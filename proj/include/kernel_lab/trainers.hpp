#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "eigen.hpp"
#include "kernels.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "random.hpp"

namespace kernel_lab {

struct LearningRate {
    bool automatic = true;
    double value = 0.0;

    static LearningRate Auto() { return {}; }
    static LearningRate fixed(double eta) { return {false, eta}; }
};

struct TrainConfig {
    int batch_size = 256;
    int epochs = 1;
    LearningRate learning_rate = LearningRate::Auto();
    std::uint64_t rng_seed = 0;
    bool stop_when_train_ce_zero = false;
    int eval_every = 1;

    // Subsample size for the automatic step-size eigenvalue estimate.
    Eigen::Index auto_subsample = 5000;
    // The full training Gram matrix is cached when it fits in this many bytes.
    std::uint64_t cache_budget_bytes = std::uint64_t{2} << 30;
    // train_mse above this multiple of its initial value counts as divergence.
    double divergence_factor = 1e6;
    GramOptions gram;

    void validate() const {
        if (batch_size < 1) throw InputError("TrainConfig: batch_size must be >= 1");
        if (epochs < 1) throw InputError("TrainConfig: epochs must be >= 1");
        if (eval_every < 1) throw InputError("TrainConfig: eval_every must be >= 1");
        if (!learning_rate.automatic && !(learning_rate.value >= 0.0 && std::isfinite(learning_rate.value))) {
            throw InputError("TrainConfig: learning rate must be a non-negative finite number");
        }
    }
};

struct EpochReport {
    int epoch = 0;
    double train_mse = 0.0;
    double train_ce = 0.0;
    double test_mse = std::numeric_limits<double>::quiet_NaN();  // NaN without a test set
    double test_ce = std::numeric_limits<double>::quiet_NaN();
    double elapsed_s = 0.0;
};

inline constexpr const char* kEpochCsvHeader = "epoch,train_mse,train_ce,test_mse,test_ce,elapsed_s";

inline std::string to_csv_line(const EpochReport& r) {
    std::ostringstream out;
    out.precision(10);
    out << r.epoch << ',' << r.train_mse << ',' << r.train_ce << ',' << r.test_mse << ',' << r.test_ce << ','
        << r.elapsed_s;
    return out.str();
}

/// Top eigensystem of the normalized Gram (1/M) K(X_sub, X_sub) of a training
/// subsample. Directions j <= k are damped by (1 - damping * tail / lambda_j).
struct EigenProPreconditioner {
    std::vector<Eigen::Index> subsample_indices;
    Vector eigenvalues;   // k, descending
    Matrix eigenvectors;  // M x k
    double tail_eigenvalue = 0.0;
    double damping = 1.0;
    double top_eigenvalue = 0.0;  // lambda_1 of the normalized subsample Gram

    Eigen::Index k() const { return eigenvalues.size(); }
    Eigen::Index subsample_size() const { return static_cast<Eigen::Index>(subsample_indices.size()); }

    // (1 - damping * tail / lambda_j) / lambda_j for each retained direction.
    Vector correction_weights() const {
        Vector w(k());
        for (Eigen::Index j = 0; j < k(); ++j)
            w(j) = (1.0 - damping * tail_eigenvalue / eigenvalues(j)) / eigenvalues(j);
        return w;
    }

    // max over subsample points of the preconditioned kernel diagonal,
    // 1 - M sum_j (lambda_j - damping * tail) e_j[s]^2.
    double preconditioned_diagonal_max() const {
        if (k() == 0) return 1.0;
        const auto M = static_cast<double>(subsample_size());
        const Vector shrink = (eigenvalues.array() - damping * tail_eigenvalue).matrix();
        const Vector reduction = M * (eigenvectors.array().square().matrix() * shrink);
        const double beta = (1.0 - reduction.array()).maxCoeff();
        return std::clamp(beta, 1e-12, 1.0);
    }

    void validate(Eigen::Index n_train) const {
        if (!(damping > 0.0 && damping <= 1.0)) throw InputError("EigenPro: damping must be in (0, 1]");
        if (eigenvectors.rows() != subsample_size() || eigenvectors.cols() != k()) {
            throw InputError("EigenPro: eigenvector shape does not match subsample and k");
        }
        for (auto idx : subsample_indices)
            if (idx < 0 || idx >= n_train) throw InputError("EigenPro: subsample index outside training set");
        for (Eigen::Index j = 0; j < k(); ++j) {
            if (!(eigenvalues(j) > 0.0)) throw InputError("EigenPro: eigenvalues must be positive");
            if (j > 0 && eigenvalues(j) > eigenvalues(j - 1)) throw InputError("EigenPro: eigenvalues not descending");
        }
        if (k() > 0 && tail_eigenvalue > eigenvalues(k() - 1)) {
            throw InputError("EigenPro: tail eigenvalue exceeds the k-th eigenvalue");
        }
    }
};

struct TrainResult {
    KernelModel model;
    std::vector<EpochReport> reports;
};

using ReportCallback = std::function<void(const EpochReport&)>;

/// Eigendecomposition of (1/M) K on a uniform subsample of M training points
/// (M is clipped to n). k = 0 yields an empty preconditioner whose tail is the
/// top eigenvalue.
inline EigenProPreconditioner build_eigenpro(const Dataset& train, const KernelConfig& cfg, Eigen::Index k,
                                             Eigen::Index M, std::uint64_t rng_seed, const EigenOptions& eopts = {},
                                             double damping = 1.0) {
    cfg.validate();
    if (train.empty()) throw InputError("build_eigenpro: empty training set");
    if (M < 1) throw InputError("build_eigenpro: subsample size must be positive");
    M = std::min(M, train.size());
    if (k < 0 || k >= M) {
        throw InputError("build_eigenpro: need 0 <= k < M, got k=" + std::to_string(k) + ", M=" + std::to_string(M));
    }
    Rng rng(rng_seed);
    const auto picked = rng.sample_without_replacement(static_cast<std::size_t>(train.size()), static_cast<std::size_t>(M));

    EigenProPreconditioner pc;
    pc.damping = damping;
    pc.subsample_indices.assign(picked.begin(), picked.end());
    const Matrix Xs = train.features(pc.subsample_indices, Eigen::all);
    const Matrix S = gram(Xs, cfg) / static_cast<double>(M);
    if (M == 1) {
        pc.top_eigenvalue = pc.tail_eigenvalue = S(0, 0);
        pc.eigenvectors.resize(1, 0);
        return pc;
    }
    const TopEigen te = top_k_eigen(S, std::max<Eigen::Index>(k, 1), eopts);
    pc.top_eigenvalue = te.values(0);
    if (k == 0) {
        pc.tail_eigenvalue = te.values(0);
        pc.eigenvectors.resize(M, 0);
    } else {
        pc.eigenvalues = te.values;
        pc.eigenvectors = te.vectors;
        pc.tail_eigenvalue = std::max(te.tail, 0.0);
    }
    pc.validate(train.size());
    return pc;
}

namespace detail {

// Top eigenvalue of the normalized Gram of a seeded training subsample.
inline double normalized_top_eigenvalue(const Dataset& train, const KernelConfig& cfg, Eigen::Index M,
                                        std::uint64_t seed) {
    M = std::clamp<Eigen::Index>(M, 1, train.size());
    if (M == 1) return 1.0;
    Rng rng(seed);
    const auto picked = rng.sample_without_replacement(static_cast<std::size_t>(train.size()), static_cast<std::size_t>(M));
    const std::vector<Eigen::Index> idx(picked.begin(), picked.end());
    const Matrix S = gram(Matrix(train.features(idx, Eigen::all)), cfg) / static_cast<double>(M);
    return top_k_eigen(S, 1).values(0);
}

// Rows of the training Gram matrix, from a cache when it fits the budget.
class TrainGram {
public:
    TrainGram(const Matrix& X, const KernelConfig& cfg, const TrainConfig& tc) : X_(X), cfg_(cfg), opts_(tc.gram) {
        const auto bytes = static_cast<std::uint64_t>(X.rows()) * static_cast<std::uint64_t>(X.rows()) * sizeof(double);
        if (bytes <= tc.cache_budget_bytes) full_ = gram(X, cfg, opts_);
    }

    Matrix rows(const std::vector<Eigen::Index>& idx) const {
        if (full_) return (*full_)(idx, Eigen::all);
        return gram(Matrix(X_(idx, Eigen::all)), X_, cfg_, opts_);
    }

    Matrix apply(const Matrix& alpha) const {
        if (full_) return *full_ * alpha;
        KernelModel m{X_, alpha, cfg_, Provenance::SGD};
        return predict(m, X_, opts_);
    }

private:
    const Matrix& X_;
    KernelConfig cfg_;
    GramOptions opts_;
    std::optional<Matrix> full_;
};

inline TrainResult train_impl(const Dataset& train, const Dataset* test, const KernelConfig& cfg, const TrainConfig& tc,
                              const EigenProPreconditioner* pc, const ReportCallback& on_report) {
    cfg.validate();
    tc.validate();
    if (train.empty()) throw InputError("train: empty training set");
    if (test != nullptr && test->empty()) test = nullptr;
    if (test != nullptr && (test->dim() != train.dim() || test->targets.cols() != train.targets.cols())) {
        throw InputError("train: test set shape does not match training set");
    }
    if (pc != nullptr) pc->validate(train.size());

    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index n = train.size();
    const Matrix& X = train.features;
    const Matrix& Y = train.targets;

    // Step for a batch of size b: explicit eta gives 2 eta / b; the automatic
    // rule uses 1 / (beta + (b - 1) lambda), the largest step that keeps a
    // batch update from overshooting along the top (preconditioned) direction.
    double lambda = 0.0;
    double beta = 1.0;
    if (tc.learning_rate.automatic) {
        if (pc != nullptr) {
            lambda = std::max(pc->tail_eigenvalue, pc->top_eigenvalue / 500.0);
            beta = pc->preconditioned_diagonal_max();
        } else {
            lambda = normalized_top_eigenvalue(train, cfg, tc.auto_subsample, mix_seed(tc.rng_seed, 1));
        }
    }
    auto step_for = [&](Eigen::Index b) {
        if (!tc.learning_rate.automatic) return 2.0 * tc.learning_rate.value / static_cast<double>(b);
        return 1.0 / (beta + static_cast<double>(b - 1) * lambda);
    };

    const bool precondition = pc != nullptr && pc->k() > 0;
    Vector weights;
    if (precondition) weights = pc->correction_weights();
    const double inv_m = precondition ? 1.0 / static_cast<double>(pc->subsample_size()) : 0.0;

    TrainGram K(X, cfg, tc);
    std::optional<Matrix> test_gram;
    if (test != nullptr) {
        const auto bytes = static_cast<std::uint64_t>(test->size()) * static_cast<std::uint64_t>(n) * sizeof(double);
        if (bytes <= tc.cache_budget_bytes) test_gram = gram(test->features, X, cfg, tc.gram);
    }

    Matrix alpha = Matrix::Zero(n, Y.cols());
    const double initial_mse = Y.squaredNorm() / static_cast<double>(n);
    Rng rng(tc.rng_seed);
    TrainResult result;
    const Eigen::Index batch = std::min<Eigen::Index>(tc.batch_size, n);

    for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
        const auto perm = rng.permutation(static_cast<std::size_t>(n));
        for (Eigen::Index b0 = 0; b0 < n; b0 += batch) {
            const Eigen::Index b = std::min(batch, n - b0);
            std::vector<Eigen::Index> idx(perm.begin() + b0, perm.begin() + b0 + b);
            const Matrix KB = K.rows(idx);  // b x n
            const Matrix g = KB * alpha - Y(idx, Eigen::all);
            const double s = step_for(b);
            alpha(idx, Eigen::all) -= s * g;
            if (precondition) {
                const Matrix Ksb = KB(Eigen::all, pc->subsample_indices).transpose();  // M x b
                Matrix h = pc->eigenvectors.transpose() * (Ksb * g);                 // k x c
                h = weights.asDiagonal() * h;
                alpha(pc->subsample_indices, Eigen::all) += (s * inv_m) * (pc->eigenvectors * h);
            }
        }

        const bool last = epoch == tc.epochs;
        const bool scheduled = epoch % tc.eval_every == 0;
        if (!(scheduled || last || tc.stop_when_train_ce_zero)) continue;

        const EvalResult tr = evaluate_predictions(K.apply(alpha), train);
        if (!std::isfinite(tr.mse) || tr.mse > tc.divergence_factor * std::max(initial_mse, 1e-300)) {
            throw NumericError("train: diverged at epoch " + std::to_string(epoch) + " (train_mse=" +
                               std::to_string(tr.mse) + ")");
        }
        const bool stop = tc.stop_when_train_ce_zero && tr.ce == 0.0;
        if (!(scheduled || last || stop)) continue;

        EpochReport rep;
        rep.epoch = epoch;
        rep.train_mse = tr.mse;
        rep.train_ce = tr.ce;
        if (test != nullptr) {
            const Matrix pred = test_gram ? Matrix(*test_gram * alpha)
                                          : predict(KernelModel{X, alpha, cfg, Provenance::SGD}, test->features, tc.gram);
            const EvalResult te = evaluate_predictions(pred, *test);
            rep.test_mse = te.mse;
            rep.test_ce = te.ce;
        }
        rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.reports.push_back(rep);
        if (on_report) on_report(rep);
        if (stop) break;
    }

    result.model.centers = X;
    result.model.coefficients = std::move(alpha);
    result.model.kernel = cfg;
    result.model.provenance = pc != nullptr ? Provenance::EigenPro : Provenance::SGD;
    return result;
}

}  // namespace detail

/// Mini-batch kernel SGD for square loss from zero coefficients:
/// alpha_B += (2 eta / |B|) (Y_B - f(X_B)) per batch of a reshuffled epoch.
inline TrainResult sgd_train(const Dataset& train, const Dataset* test, const KernelConfig& cfg, const TrainConfig& tc,
                             const ReportCallback& on_report = {}) {
    return detail::train_impl(train, test, cfg, tc, nullptr, on_report);
}

/// SGD with the batch gradient's components along the subsample's top
/// eigendirections scaled down, applied as correction coefficients on the
/// subsample centers.
inline TrainResult eigenpro_train(const Dataset& train, const Dataset* test, const KernelConfig& cfg,
                                  const TrainConfig& tc, const EigenProPreconditioner& pc,
                                  const ReportCallback& on_report = {}) {
    return detail::train_impl(train, test, cfg, tc, &pc, on_report);
}

enum class TrainerKind { SGD, EigenPro };

struct EigenProParams {
    Eigen::Index k = 160;
    Eigen::Index subsample = 5000;
    double damping = 1.0;
    std::uint64_t seed = 0;
};

struct OverfitResult {
    std::optional<int> epochs;  // empty: did not overfit within max_epochs
    double last_train_ce = 1.0;

    bool overfit() const { return epochs.has_value(); }
};

/// First epoch at which training classification error reaches zero.
inline OverfitResult epochs_to_overfit(TrainerKind trainer, const Dataset& train, const KernelConfig& cfg,
                                       TrainConfig tc, int max_epochs, const EigenProParams& ep = {}) {
    if (max_epochs < 1) throw InputError("epochs_to_overfit: max_epochs must be >= 1");
    tc.epochs = max_epochs;
    tc.stop_when_train_ce_zero = true;
    tc.eval_every = max_epochs;
    TrainResult run;
    if (trainer == TrainerKind::EigenPro) {
        const Eigen::Index M = std::min(ep.subsample, train.size());
        const auto pc = build_eigenpro(train, cfg, std::min(ep.k, M - 1), M, ep.seed, {}, ep.damping);
        run = eigenpro_train(train, nullptr, cfg, tc, pc);
    } else {
        run = sgd_train(train, nullptr, cfg, tc);
    }
    OverfitResult out;
    if (!run.reports.empty()) {
        const auto& last = run.reports.back();
        out.last_train_ce = last.train_ce;
        if (last.train_ce == 0.0) out.epochs = last.epoch;
    }
    return out;
}

}  // namespace kernel_lab
