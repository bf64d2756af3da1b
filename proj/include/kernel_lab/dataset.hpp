#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "kernels.hpp"
#include "random.hpp"

namespace kernel_lab {

/// Feature rows with encoded targets. Two classes use a single +-1 target
/// column (label 1 <-> +1, label 0 <-> -1); more classes use one-hot {0,1}.
struct Dataset {
    Matrix features;  // n x d
    Matrix targets;   // n x c
    std::vector<int> labels;
    int class_count = 2;
    std::string name;

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
    bool empty() const { return features.rows() == 0; }
};

inline Matrix onehot_encode(const std::vector<int>& labels, int k) {
    if (k < 1) throw InputError("onehot_encode: class count must be positive");
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= k) {
            throw InputError("onehot_encode: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                             " outside [0," + std::to_string(k) + ")");
        }
        out(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }
    return out;
}

// Ties resolve to the lowest class index.
inline std::vector<int> decode_argmax(const Matrix& pred) {
    std::vector<int> out(static_cast<std::size_t>(pred.rows()));
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < pred.cols(); ++j)
            if (pred(i, j) > pred(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

/// Class decisions: sign for a single output column (positive -> 1), argmax otherwise.
inline std::vector<int> decode_predictions(const Matrix& pred) {
    if (pred.cols() != 1) return decode_argmax(pred);
    std::vector<int> out(static_cast<std::size_t>(pred.rows()));
    for (Eigen::Index i = 0; i < pred.rows(); ++i) out[static_cast<std::size_t>(i)] = pred(i, 0) > 0.0 ? 1 : 0;
    return out;
}

inline Matrix encode_targets(const std::vector<int>& labels, int class_count) {
    if (class_count < 2) throw InputError("dataset needs at least two classes");
    if (class_count > 2) return onehot_encode(labels, class_count);
    Matrix out(static_cast<Eigen::Index>(labels.size()), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw InputError("binary label " + std::to_string(labels[i]) + " at row " + std::to_string(i));
        }
        out(static_cast<Eigen::Index>(i), 0) = labels[i] == 1 ? 1.0 : -1.0;
    }
    return out;
}

inline Dataset make_dataset(Matrix features, std::vector<int> labels, int class_count, std::string name) {
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw InputError("make_dataset: " + std::to_string(features.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
    }
    Dataset ds;
    ds.targets = encode_targets(labels, class_count);
    ds.features = std::move(features);
    ds.labels = std::move(labels);
    ds.class_count = class_count;
    ds.name = std::move(name);
    return ds;
}

inline Dataset with_labels(const Dataset& ds, std::vector<int> labels) {
    return make_dataset(ds.features, std::move(labels), ds.class_count, ds.name);
}

inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows, std::string name) {
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    Dataset out;
    out.features = ds.features(idx, Eigen::all);
    out.targets = ds.targets(idx, Eigen::all);
    out.labels.reserve(rows.size());
    for (auto r : rows) out.labels.push_back(ds.labels.at(r));
    out.class_count = ds.class_count;
    out.name = std::move(name);
    return out;
}

inline Dataset head(const Dataset& ds, Eigen::Index n) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(std::min(n, ds.size())));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return select_rows(ds, rows, ds.name);
}

/// n rows drawn uniformly without replacement (in draw order).
inline Dataset subsample(const Dataset& ds, Eigen::Index n, std::uint64_t seed) {
    if (n < 0 || n > ds.size()) {
        throw InputError("subsample: requested " + std::to_string(n) + " of " + std::to_string(ds.size()) + " rows");
    }
    Rng rng(seed);
    const auto rows = rng.sample_without_replacement(static_cast<std::size_t>(ds.size()), static_cast<std::size_t>(n));
    return select_rows(ds, rows, ds.name);
}

/// Random disjoint (train, test) cover with round(n * test_fraction) test rows.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw InputError("split: test_fraction outside [0,1]");
    Rng rng(seed);
    const auto perm = rng.permutation(static_cast<std::size_t>(ds.size()));
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(ds.size())));
    std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    return {select_rows(ds, train, ds.name + ":train"), select_rows(ds, test, ds.name + ":test")};
}

}  // namespace kernel_lab
