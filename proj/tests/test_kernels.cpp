#include <gtest/gtest.h>

#include <cmath>

#include "kernel_lab/kernels.hpp"
#include "kernel_lab/model.hpp"
#include "oracles.hpp"

namespace kl = kernel_lab;
using kl::KernelConfig;
using kl::KernelFamily;
using kl::Matrix;

TEST(EvalKernel, SelfSimilarityIsOne) {
    Eigen::VectorXd x(3);
    x << 1.5, -2.0, 7.25;
    EXPECT_EQ(kl::eval_kernel(x, x, KernelConfig{KernelFamily::Gaussian, 5.0}), 1.0);
    EXPECT_EQ(kl::eval_kernel(x, x, KernelConfig{KernelFamily::Laplacian, 0.1}), 1.0);
}

TEST(EvalKernel, UnitScaledDistance) {
    Eigen::VectorXd x(2), z(2);
    x << 0.0, 0.0;
    z << 3.0, 4.0;  // distance 5
    EXPECT_NEAR(kl::eval_kernel(x, z, KernelConfig{KernelFamily::Laplacian, 5.0}), 0.367879441171, 1e-12);
    EXPECT_NEAR(kl::eval_kernel(x, z, KernelConfig{KernelFamily::Gaussian, 5.0}), 0.606530659713, 1e-12);
}

TEST(EvalKernel, RejectsBadInput) {
    Eigen::VectorXd x(2), z(3);
    x.setZero();
    z.setZero();
    EXPECT_THROW(kl::eval_kernel(x, z, KernelConfig{}), kl::InputError);
    Eigen::VectorXd nan(2);
    nan << 0.0, std::nan("");
    EXPECT_THROW(kl::eval_kernel(x, nan, KernelConfig{}), kl::InputError);
    EXPECT_THROW(kl::eval_kernel(x, x, KernelConfig{KernelFamily::Gaussian, 0.0}), kl::InputError);
    EXPECT_THROW(kl::eval_kernel(x, x, KernelConfig{KernelFamily::Gaussian, -1.0}), kl::InputError);
}

TEST(KernelFamily, ParsesNames) {
    EXPECT_EQ(kl::parse_kernel_family("gaussian"), KernelFamily::Gaussian);
    EXPECT_EQ(kl::parse_kernel_family("Laplacian"), KernelFamily::Laplacian);
    EXPECT_THROW(kl::parse_kernel_family("poly"), kl::InputError);
}

TEST(Gram, SelfGramSymmetricUnitDiagonal) {
    kl::Rng rng(11);
    const Matrix X = oracle::uniform_matrix(rng, 30, 4, -3, 3);
    for (auto fam : {KernelFamily::Gaussian, KernelFamily::Laplacian}) {
        const Matrix K = kl::gram(X, X, KernelConfig{fam, 1.3});
        EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0);
        for (Eigen::Index i = 0; i < K.rows(); ++i) EXPECT_EQ(K(i, i), 1.0);
    }
}

TEST(Gram, SinglePairLaplacian) {
    Matrix x(1, 2), z(1, 2);
    x << 1.0, 1.0;
    z << 1.0, 3.0;
    const Matrix K = kl::gram(x, z, KernelConfig{KernelFamily::Laplacian, 2.0});
    ASSERT_EQ(K.rows(), 1);
    ASSERT_EQ(K.cols(), 1);
    EXPECT_NEAR(K(0, 0), std::exp(-1.0), 1e-15);
}

TEST(Gram, MatchesLoopOracle) {
    kl::Rng rng(12);
    const Matrix X = oracle::normal_matrix(rng, 8, 3);
    const KernelConfig cfg{KernelFamily::Gaussian, 1.0};
    const Matrix K = kl::gram(X, X, cfg);
    Matrix loop(8, 8);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) loop(i, j) = kl::eval_kernel(X.row(i), X.row(j), cfg);
    EXPECT_LE((K - loop).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((K - oracle::gram(X, X, cfg)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gram, BlockSizeDoesNotChangeResult) {
    kl::Rng rng(13);
    const Matrix X = oracle::normal_matrix(rng, 37, 5);
    const Matrix Z = oracle::normal_matrix(rng, 23, 5);
    const KernelConfig cfg{KernelFamily::Laplacian, 2.0};
    kl::GramOptions small;
    small.block_rows = 4;
    EXPECT_EQ(kl::gram(X, Z, cfg), kl::gram(X, Z, cfg, small));
}

TEST(Gram, LaplacianNearDuplicatesStayExact) {
    Matrix X(2, 3);
    X << 1e3, -2e3, 5e2, 1e3, -2e3, 5e2 + 1e-9;
    const Matrix K = kl::gram(X, X, KernelConfig{KernelFamily::Laplacian, 1.0});
    EXPECT_NEAR(K(0, 1), std::exp(-1e-9), 1e-12);
}

TEST(Gram, DimensionMismatchIsInputError) {
    EXPECT_THROW(kl::gram(Matrix::Zero(2, 3), Matrix::Zero(2, 4), KernelConfig{}), kl::InputError);
}

TEST(Gram, MemoryBudgetIsResourceError) {
    kl::GramOptions opts;
    opts.memory_budget_bytes = 1000;
    try {
        kl::gram(Matrix::Zero(100, 2), Matrix::Zero(100, 2), KernelConfig{}, opts);
        FAIL() << "expected ResourceError";
    } catch (const kl::ResourceError& e) {
        EXPECT_EQ(e.required_bytes(), 100u * 100u * 8u);
        EXPECT_NE(std::string(e.what()).find("80000"), std::string::npos);
    }
}

TEST(RkhsNorm, SingleCenter) {
    kl::KernelModel m{Matrix::Constant(1, 3, 0.5), Matrix::Constant(1, 1, 1.0), KernelConfig{}, kl::Provenance::SGD};
    EXPECT_DOUBLE_EQ(kl::rkhs_norm(m), 1.0);
    m.coefficients(0, 0) = -3.0;
    EXPECT_DOUBLE_EQ(kl::rkhs_norm(m), 3.0);
}

TEST(RkhsNorm, MatchesDoubleLoop) {
    kl::Rng rng(14);
    const KernelConfig cfg{KernelFamily::Gaussian, 1.0};
    kl::KernelModel m{oracle::normal_matrix(rng, 5, 3), oracle::normal_matrix(rng, 5, 1), cfg, kl::Provenance::SGD};
    const double ref = oracle::rkhs_norm(m.centers, m.coefficients, cfg);
    EXPECT_LE(std::abs(kl::rkhs_norm(m) - ref) / ref, 1e-12);
}

TEST(RkhsNorm, MultiOutputIsRootSumOfSquares) {
    kl::Rng rng(15);
    const KernelConfig cfg{KernelFamily::Laplacian, 2.0};
    kl::KernelModel m{oracle::normal_matrix(rng, 6, 2), oracle::normal_matrix(rng, 6, 3), cfg, kl::Provenance::SGD};
    double sum = 0;
    for (int c = 0; c < 3; ++c) {
        const double nc = oracle::rkhs_norm(m.centers, m.coefficients.col(c), cfg);
        sum += nc * nc;
    }
    EXPECT_NEAR(kl::rkhs_norm(m), std::sqrt(sum), 1e-12 * std::sqrt(sum));
}
