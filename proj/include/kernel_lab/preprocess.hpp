#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "dataset.hpp"

namespace kernel_lab {

struct FeatureRange {
    Vector min;
    Vector max;
};

struct FeatureMoments {
    Vector mean;
    Vector stddev;  // population standard deviation
};

inline FeatureRange feature_range(const Dataset& ds) {
    if (ds.empty()) throw InputError("rescale_01: empty dataset");
    return {ds.features.colwise().minCoeff().transpose(), ds.features.colwise().maxCoeff().transpose()};
}

/// Maps each feature's [min, max] (from `range`, or the dataset itself) onto
/// [0, 1]; constant features become 0.
inline std::pair<Dataset, FeatureRange> rescale_01(const Dataset& ds, std::optional<FeatureRange> range = std::nullopt) {
    if (ds.empty()) throw InputError("rescale_01: empty dataset");
    FeatureRange r = range ? *range : feature_range(ds);
    if (r.min.size() != ds.dim()) throw InputError("rescale_01: range has wrong dimension");
    Dataset out = ds;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        const double width = r.max(j) - r.min(j);
        if (width > 0.0) {
            out.features.col(j) = (ds.features.col(j).array() - r.min(j)) / width;
        } else {
            out.features.col(j).setZero();
        }
    }
    return {std::move(out), std::move(r)};
}

/// Subtracts the mean and divides by the population standard deviation of the
/// reference statistics; zero-variance features become 0.
inline std::pair<Dataset, FeatureMoments> zscore(const Dataset& ds, std::optional<FeatureMoments> stats = std::nullopt) {
    if (ds.empty()) throw InputError("zscore: empty dataset");
    FeatureMoments m;
    if (stats) {
        m = *stats;
    } else {
        m.mean = ds.features.colwise().mean().transpose();
        m.stddev.resize(ds.dim());
        for (Eigen::Index j = 0; j < ds.dim(); ++j) {
            const double var = (ds.features.col(j).array() - m.mean(j)).square().mean();
            m.stddev(j) = std::sqrt(var);
        }
    }
    if (m.mean.size() != ds.dim()) throw InputError("zscore: statistics have wrong dimension");
    Dataset out = ds;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        if (m.stddev(j) > 0.0) {
            out.features.col(j) = (ds.features.col(j).array() - m.mean(j)) / m.stddev(j);
        } else {
            out.features.col(j).setZero();
        }
    }
    return {std::move(out), std::move(m)};
}

}  // namespace kernel_lab
