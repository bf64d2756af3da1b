#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "dataset.hpp"
#include "model.hpp"

namespace kernel_lab {

struct EvalResult {
    double mse = 0.0;  // mean over rows of the summed squared error across outputs
    double ce = 0.0;   // fraction of misclassified rows
    Eigen::Index n = 0;
};

inline EvalResult evaluate_predictions(const Matrix& pred, const Dataset& ds) {
    if (ds.empty()) throw InputError("evaluate: empty dataset");
    if (pred.rows() != ds.size() || pred.cols() != ds.targets.cols()) {
        throw InputError("evaluate: prediction shape does not match targets");
    }
    EvalResult r;
    r.n = ds.size();
    r.mse = (pred - ds.targets).squaredNorm() / static_cast<double>(r.n);
    const auto decided = decode_predictions(pred);
    Eigen::Index wrong = 0;
    for (std::size_t i = 0; i < decided.size(); ++i) wrong += decided[i] != ds.labels[i];
    r.ce = static_cast<double>(wrong) / static_cast<double>(r.n);
    return r;
}

inline EvalResult evaluate(const KernelModel& model, const Dataset& ds, const GramOptions& opts = {}) {
    if (ds.empty()) throw InputError("evaluate: empty dataset");
    if (ds.dim() != model.dim()) throw InputError("evaluate: dataset dimension does not match model");
    return evaluate_predictions(predict(model, ds.features, opts), ds);
}

inline double classification_error(const std::vector<int>& predicted, const std::vector<int>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) throw InputError("classification_error: size mismatch");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) wrong += predicted[i] != truth[i];
    return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

/// Euclidean k-nearest-neighbour majority vote. Equal distances prefer the
/// lower training index; tied vote counts go to the tied class whose member
/// ranks nearest.
inline std::vector<int> knn_predict(const Dataset& train, const Matrix& queries, int k) {
    if (train.empty()) throw InputError("knn_predict: empty training set");
    if (k < 1 || k > train.size()) {
        throw InputError("knn_predict: k=" + std::to_string(k) + " outside [1," + std::to_string(train.size()) + "]");
    }
    if (queries.cols() != train.dim()) throw InputError("knn_predict: query dimension mismatch");

    const auto n = static_cast<std::size_t>(train.size());
    std::vector<int> out(static_cast<std::size_t>(queries.rows()));
    std::vector<std::pair<double, std::size_t>> dist(n);
    std::vector<int> votes(static_cast<std::size_t>(train.class_count));
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
        for (std::size_t i = 0; i < n; ++i) {
            dist[i] = {(train.features.row(static_cast<Eigen::Index>(i)) - queries.row(q)).squaredNorm(), i};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        std::fill(votes.begin(), votes.end(), 0);
        for (int r = 0; r < k; ++r) ++votes[static_cast<std::size_t>(train.labels[dist[r].second])];
        const int best_count = *std::max_element(votes.begin(), votes.end());
        int decision = -1;
        for (int r = 0; r < k && decision < 0; ++r) {
            const int label = train.labels[dist[r].second];
            if (votes[static_cast<std::size_t>(label)] == best_count) decision = label;
        }
        out[static_cast<std::size_t>(q)] = decision;
    }
    return out;
}

}  // namespace kernel_lab
