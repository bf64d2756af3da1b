#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "dataset.hpp"
#include "random.hpp"

namespace kernel_lab {

enum class SyntheticKind { Separable, NonSeparable };

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Class means of the first coordinate; y = +1 draws around the first, y = -1 around the second.
inline double synthetic_negative_mean(SyntheticKind kind) { return kind == SyntheticKind::Separable ? 10.0 : 2.0; }

/// Class midpoint on the first coordinate; the Bayes classifier predicts +1 below it.
inline double synthetic_bayes_threshold(SyntheticKind kind) { return synthetic_negative_mean(kind) / 2.0; }

/// Bayes risk of the clean distribution: Phi(-gap / 2) with unit variance.
inline double synthetic_bayes_risk(SyntheticKind kind) {
    return standard_normal_cdf(-synthetic_bayes_threshold(kind));
}

/// Rows of 50 features: x1 ~ N(0,1) for label +1 and N(mu,1) for label -1
/// (mu = 10 separable, 2 non-separable); x2..x50 ~ U(-1,1). Rows are drawn
/// sequentially from one stream, so a smaller n is a prefix of a larger one.
inline Dataset gen_synthetic(SyntheticKind kind, Eigen::Index n, std::uint64_t seed) {
    if (n < 1) throw InputError("synthetic generator needs n >= 1");
    constexpr Eigen::Index d = 50;
    Rng rng(seed);
    Matrix X(n, d);
    std::vector<int> labels(static_cast<std::size_t>(n));
    const double negative_mean = synthetic_negative_mean(kind);
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool positive = (rng.next_u64() >> 63) == 0;
        labels[static_cast<std::size_t>(i)] = positive ? 1 : 0;
        X(i, 0) = rng.normal(positive ? 0.0 : negative_mean, 1.0);
        for (Eigen::Index j = 1; j < d; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    }
    return make_dataset(std::move(X), std::move(labels), 2,
                        kind == SyntheticKind::Separable ? "synthetic1" : "synthetic2");
}

inline Dataset gen_synthetic_separable(Eigen::Index n, std::uint64_t seed) {
    return gen_synthetic(SyntheticKind::Separable, n, seed);
}

inline Dataset gen_synthetic_nonseparable(Eigen::Index n, std::uint64_t seed) {
    return gen_synthetic(SyntheticKind::NonSeparable, n, seed);
}

/// Bayes classifier for the synthetic distributions: label 1 iff x1 < threshold.
inline std::vector<int> synthetic_bayes_predict(SyntheticKind kind, const Matrix& X) {
    const double t = synthetic_bayes_threshold(kind);
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = X(i, 0) < t ? 1 : 0;
    return out;
}

struct NoiseSpec {
    double epsilon = 0.0;
    std::uint64_t rng_seed = 0;
};

/// Each example is selected with probability epsilon and its label replaced by
/// a uniform draw over all classes (it may land on its own class).
inline Dataset flip_labels(const Dataset& ds, const NoiseSpec& spec) {
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0)) {
        throw InputError("flip_labels: epsilon " + std::to_string(spec.epsilon) + " outside [0,1]");
    }
    if (ds.class_count < 2) throw InputError("flip_labels: need at least two classes");
    Rng rng(spec.rng_seed);
    std::vector<int> labels = ds.labels;
    for (auto& label : labels) {
        if (rng.uniform() < spec.epsilon) label = static_cast<int>(rng.below(static_cast<std::uint64_t>(ds.class_count)));
    }
    return with_labels(ds, std::move(labels));
}

/// Error rate of the Bayes classifier after label noise epsilon over k classes:
/// epsilon (k-1)/k + (1 - epsilon) base_risk.
inline double noisy_bayes_risk(double epsilon, int k, double base_risk) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("noisy_bayes_risk: epsilon outside [0,1]");
    if (k < 2) throw InputError("noisy_bayes_risk: k must be >= 2");
    if (!(base_risk >= 0.0 && base_risk <= 1.0)) throw InputError("noisy_bayes_risk: base_risk outside [0,1]");
    return epsilon * static_cast<double>(k - 1) / static_cast<double>(k) + (1.0 - epsilon) * base_risk;
}

}  // namespace kernel_lab
