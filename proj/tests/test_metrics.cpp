#include <gtest/gtest.h>

#include "kernel_lab/experiments.hpp"
#include "kernel_lab/metrics.hpp"
#include "kernel_lab/solvers.hpp"
#include "kernel_lab/synthetic.hpp"
#include "oracles.hpp"

namespace kl = kernel_lab;
using kl::Matrix;

TEST(Evaluate, InterpolantOnItsTrainingSet) {
    const auto ds = kl::gen_synthetic_nonseparable(200, 1);
    const auto [m, diag] = kl::solve_direct_interpolant(ds.features, ds.targets, {kl::KernelFamily::Laplacian, 2.0});
    const auto r = kl::evaluate(m, ds);
    EXPECT_LE(r.mse, 1e-12);
    EXPECT_EQ(r.ce, 0.0);
    EXPECT_EQ(r.n, 200);
}

TEST(Evaluate, ZeroModelOnBinaryTargets) {
    const auto ds = kl::gen_synthetic_nonseparable(50, 2);
    const kl::KernelModel zero{ds.features, Matrix::Zero(50, 1), {}, kl::Provenance::SGD};
    EXPECT_DOUBLE_EQ(kl::evaluate(zero, ds).mse, 1.0);
}

TEST(Evaluate, HandComputedThreeRows) {
    // Labels 0,1,2 one-hot; predictions chosen so row 1 is misclassified.
    const auto ds = kl::make_dataset(Matrix::Zero(3, 1), {0, 1, 2}, 3, "h");
    Matrix pred(3, 3);
    pred << 0.5, 0.0, 0.0,  //
        1.0, 0.5, 0.0,      //
        0.0, 0.0, 1.0;
    const auto r = kl::evaluate_predictions(pred, ds);
    // Row errors: 0.25+0+0, 1+0.25+0, 0 -> total 1.5 over 3 rows.
    EXPECT_DOUBLE_EQ(r.mse, 0.5);
    EXPECT_DOUBLE_EQ(r.ce, 1.0 / 3.0);
}

TEST(Evaluate, EmptyDatasetIsInputError) {
    const kl::Dataset empty = kl::make_dataset(Matrix::Zero(0, 2), {}, 2, "e");
    EXPECT_THROW(kl::evaluate_predictions(Matrix::Zero(0, 1), empty), kl::InputError);
}

TEST(Knn, QueryAtTrainingPoint) {
    const auto ds = kl::gen_synthetic_nonseparable(30, 3);
    const auto pred = kl::knn_predict(ds, ds.features.row(7), 1);
    EXPECT_EQ(pred[0], ds.labels[7]);
}

TEST(Knn, HandVoteToy) {
    const auto ds = kl::make_dataset((Matrix(3, 2) << 1, 0, 2, 0, 3, 0).finished(), {0, 1, 1}, 2, "toy");
    EXPECT_EQ(kl::knn_predict(ds, Matrix::Zero(1, 2), 3), std::vector<int>{1});
    EXPECT_EQ(kl::knn_predict(ds, Matrix::Zero(1, 2), 1), std::vector<int>{0});
}

TEST(Knn, AllNeighboursGiveGlobalMajority) {
    const auto ds = kl::make_dataset((Matrix(5, 1) << 0, 1, 2, 3, 100).finished(), {2, 2, 1, 0, 1}, 3, "m");
    const auto pred = kl::knn_predict(ds, (Matrix(2, 1) << 0, 100).finished(), 5);
    // Classes 1 and 2 tie with two votes; the nearer neighbour decides.
    EXPECT_EQ(pred, (std::vector<int>{2, 1}));
}

TEST(Knn, DistanceTiesPreferLowerIndex) {
    const auto ds = kl::make_dataset((Matrix(2, 1) << -1, 1).finished(), {1, 0}, 2, "t");
    EXPECT_EQ(kl::knn_predict(ds, Matrix::Zero(1, 1), 1), std::vector<int>{1});
}

TEST(Knn, Errors) {
    const auto ds = kl::gen_synthetic_nonseparable(5, 4);
    EXPECT_THROW(kl::knn_predict(ds, ds.features, 0), kl::InputError);
    EXPECT_THROW(kl::knn_predict(ds, ds.features, 6), kl::InputError);
    EXPECT_THROW(kl::knn_predict(ds, Matrix::Zero(1, 3), 1), kl::InputError);
    const auto empty = kl::make_dataset(Matrix::Zero(0, 50), {}, 2, "e");
    EXPECT_THROW(kl::knn_predict(empty, Matrix::Zero(1, 50), 1), kl::InputError);
}

namespace {

kl::TrainGenerator synthetic1() {
    return [](Eigen::Index n, std::uint64_t seed) { return kl::gen_synthetic_separable(n, seed); };
}

}  // namespace

TEST(NormCurve, SingleCell) {
    const auto test = kl::gen_synthetic_separable(500, 99);
    const auto rows = kl::norm_curve({100}, {0.0}, synthetic1(), {kl::KernelFamily::Gaussian, 5.0}, {1}, test);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(std::isfinite(rows[0].norm));
    EXPECT_EQ(rows[0].status, "ok");
    EXPECT_EQ(rows[0].n, 100);
}

TEST(NormCurve, NoisyNormsGrowWithSampleSize) {
    const auto test = kl::gen_synthetic_separable(2000, 98);
    const auto rows =
        kl::norm_curve({500, 1000, 2000}, {0.1}, synthetic1(), {kl::KernelFamily::Gaussian, 5.0}, {7}, test);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LT(rows[0].norm, rows[1].norm);
    EXPECT_LT(rows[1].norm, rows[2].norm);
}

TEST(NormCurve, OrderedBySizeNoiseSeed) {
    const auto test = kl::gen_synthetic_separable(200, 97);
    const auto rows =
        kl::norm_curve({20, 40}, {0.0, 0.5}, synthetic1(), {kl::KernelFamily::Laplacian, 10.0}, {1, 2}, test);
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows[0].n, 20);
    EXPECT_EQ(rows[1].seed, 2u);
    EXPECT_EQ(rows[2].epsilon, 0.5);
    EXPECT_EQ(rows[4].n, 40);
}

TEST(NormCurve, FailingCellIsRecorded) {
    // Duplicate points with contradictory labels make every cell fail without stopping the sweep.
    const kl::TrainGenerator bad = [](Eigen::Index n, std::uint64_t) {
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
        return kl::make_dataset(Matrix::Zero(n, 50), labels, 2, "bad");
    };
    const auto test = kl::gen_synthetic_separable(10, 1);
    const auto rows = kl::norm_curve({2, 4}, {0.0}, bad, {kl::KernelFamily::Gaussian, 1.0}, {1}, test);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& r : rows) {
        EXPECT_NE(r.status.find("error"), std::string::npos);
        EXPECT_TRUE(std::isnan(r.norm));
    }
}

TEST(NormCurve, SizesMustAscend) {
    const auto test = kl::gen_synthetic_separable(10, 1);
    EXPECT_THROW(kl::norm_curve({20, 10}, {0.0}, synthetic1(), {}, {1}, test), kl::InputError);
}
