#include <gtest/gtest.h>

#include <filesystem>

#include "kernel_lab/model.hpp"
#include "oracles.hpp"

namespace kl = kernel_lab;
using kl::KernelConfig;
using kl::KernelFamily;
using kl::Matrix;

namespace {

kl::KernelModel random_model(std::uint64_t seed, Eigen::Index n, Eigen::Index d, Eigen::Index c) {
    kl::Rng rng(seed);
    return {oracle::normal_matrix(rng, n, d), oracle::normal_matrix(rng, n, c), KernelConfig{KernelFamily::Laplacian, 1.7},
            kl::Provenance::EigenPro};
}

}  // namespace

TEST(Predict, ZeroCoefficientsGiveZero) {
    auto m = random_model(1, 4, 2, 2);
    m.coefficients.setZero();
    kl::Rng rng(2);
    EXPECT_EQ(kl::predict(m, oracle::normal_matrix(rng, 5, 2)), Matrix::Zero(5, 2));
}

TEST(Predict, MatchesNaiveSummation) {
    const auto m = random_model(3, 3, 4, 2);
    kl::Rng rng(4);
    const Matrix Z = oracle::normal_matrix(rng, 7, 4);
    const Matrix ref = oracle::predict(m.centers, m.coefficients, m.kernel, Z);
    const Matrix got = kl::predict(m, Z);
    EXPECT_LE(((got - ref).array().abs() / ref.array().abs().max(1e-300)).maxCoeff(), 1e-12);
}

TEST(Predict, DimensionMismatchIsInputError) {
    const auto m = random_model(5, 3, 4, 1);
    EXPECT_THROW(kl::predict(m, Matrix::Zero(2, 3)), kl::InputError);
}

TEST(ModelValidate, RowMismatchRejected) {
    auto m = random_model(6, 3, 2, 1);
    m.coefficients = Matrix::Zero(2, 1);
    EXPECT_THROW(m.validate(), kl::InputError);
}

TEST(ModelFormat, HeaderLayout) {
    const auto m = random_model(7, 2, 3, 1);
    const auto bytes = kl::serialize_model(m);
    ASSERT_EQ(bytes.size(), 4u + 1 + 8 + 3 * 8 + (2 * 3 + 2 * 1) * 8);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "IKM1");
    EXPECT_EQ(bytes[4], 1);  // Laplacian
    EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 2u);  // n, little-endian
    // First center value follows the header, row-major.
    double first = 0;
    std::memcpy(&first, bytes.data() + 37, 8);
    EXPECT_EQ(first, m.centers(0, 0));
    double second = 0;
    std::memcpy(&second, bytes.data() + 45, 8);
    EXPECT_EQ(second, m.centers(0, 1));
}

TEST(ModelFormat, RoundTrip) {
    const auto m = random_model(8, 5, 3, 4);
    const auto back = kl::deserialize_model(kl::serialize_model(m));
    EXPECT_EQ(back.centers, m.centers);
    EXPECT_EQ(back.coefficients, m.coefficients);
    EXPECT_EQ(back.kernel, m.kernel);

    const auto path = std::filesystem::temp_directory_path() / "kernel_lab_model.ikm";
    kl::save_model(m, path.string());
    EXPECT_EQ(kl::load_model(path.string()).coefficients, m.coefficients);
    std::filesystem::remove(path);
}

TEST(ModelFormat, CorruptInputIsFormatError) {
    auto bytes = kl::serialize_model(random_model(9, 2, 2, 1));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    EXPECT_THROW(kl::deserialize_model(bad_magic), kl::FormatError);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    try {
        kl::deserialize_model(truncated);
        FAIL() << "expected FormatError";
    } catch (const kl::FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos);
    }
    auto bad_family = bytes;
    bad_family[4] = 7;
    EXPECT_THROW(kl::deserialize_model(bad_family), kl::FormatError);
}

TEST(ModelFormat, MissingFileIsIoError) {
    EXPECT_THROW(kl::load_model("/nonexistent/dir/model.ikm"), kl::IoError);
}
