#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "kernel_lab/experiments.hpp"
#include "properties.hpp"

namespace kl = kernel_lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "kernel_lab_experiment_tests" / name;
    fs::remove_all(dir);
    return dir;
}

kl::ExperimentSpec small_spec(kl::ExperimentName name, const std::string& dir) {
    kl::ExperimentSpec s;
    s.name = name;
    s.dataset.kind = kl::DatasetKind::Synthetic2;
    s.kernel = {kl::KernelFamily::Gaussian, 2.0};
    s.train.epochs = 5;
    s.noise_levels = {0.0};
    s.sizes = {200};
    s.test_size = 1000;
    s.output_dir = dir;
    s.seed = 17;
    return s;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(ExperimentConfig, ParsesFieldsByName) {
    const auto j = kl::json::parse(R"({
        "name": "norm_vs_n", "dataset": "synthetic1",
        "kernel": {"family": "laplacian", "bandwidth": 10},
        "train": {"batch_size": 128, "epochs": 3, "learning_rate": 0.5, "rng_seed": 4,
                  "stop_when_train_ce_zero": true, "eval_every": 2},
        "noise_levels": [0, 0.1], "sizes": [100, 200], "output_dir": "o", "seed": 9})");
    const auto s = kl::spec_from_json(j);
    EXPECT_EQ(s.name, kl::ExperimentName::NormVsN);
    EXPECT_EQ(s.dataset.kind, kl::DatasetKind::Synthetic1);
    EXPECT_EQ(s.kernel.family, kl::KernelFamily::Laplacian);
    EXPECT_EQ(*s.kernel.bandwidth, 10.0);
    EXPECT_EQ(s.train.batch_size, 128);
    EXPECT_FALSE(s.train.learning_rate.automatic);
    EXPECT_EQ(s.train.learning_rate.value, 0.5);
    EXPECT_TRUE(s.train.stop_when_train_ce_zero);
    EXPECT_EQ(s.sizes, (std::vector<Eigen::Index>{100, 200}));
    EXPECT_EQ(s.seed, 9u);
    // Normalized JSON parses back to the same hash.
    EXPECT_EQ(kl::spec_hash(kl::spec_from_json(kl::spec_to_json(s))), kl::spec_hash(s));
}

TEST(ExperimentConfig, AutoBandwidthAndRate) {
    const auto s = kl::spec_from_json(kl::json::parse(
        R"({"name":"noise_sweep","kernel":{"family":"gaussian","bandwidth":"auto"},"train":{"learning_rate":"auto"}})"));
    EXPECT_FALSE(s.kernel.bandwidth.has_value());
    EXPECT_TRUE(s.train.learning_rate.automatic);
}

TEST(ExperimentConfig, Rejections) {
    auto bad = [](const char* text) { return kl::spec_from_json(kl::json::parse(text)); };
    EXPECT_THROW(bad(R"({"name":"nope"})"), kl::ConfigError);
    EXPECT_THROW(bad(R"({"name":"noise_sweep","bogus":1})"), kl::ConfigError);
    EXPECT_THROW(bad(R"({"name":"noise_sweep","dataset":"mnist"})"), kl::ConfigError);
    EXPECT_THROW(bad(R"({"name":"noise_sweep","kernel":{"family":"gaussian","bandwidth":-2}})"), kl::ConfigError);
    EXPECT_THROW(bad(R"({"name":"noise_sweep","sizes":"x"})"), kl::ConfigError);

    auto s = small_spec(kl::ExperimentName::NoiseSweep, "o");
    s.noise_levels = {0.2, 1.5};
    EXPECT_THROW(kl::validate(s), kl::ConfigError);
    s = small_spec(kl::ExperimentName::NoiseSweep, "o");
    s.train.epochs = 0;
    EXPECT_THROW(kl::validate(s), kl::InputError);
    s = small_spec(kl::ExperimentName::NoiseSweep, "o");
    s.sizes = {200, 100};
    EXPECT_THROW(kl::validate(s), kl::ConfigError);
    s.sizes = {100};
    s.dataset.kind = kl::DatasetKind::File;
    s.dataset.path = "/nonexistent/data.csv";
    EXPECT_THROW(kl::validate(s), kl::ConfigError);
}

TEST(ExperimentConfig, LoadSpecErrors) {
    EXPECT_THROW(kl::load_spec("/nonexistent/spec.json"), kl::IoError);
    const auto dir = scratch_dir("load");
    fs::create_directories(dir);
    std::ofstream(dir / "broken.json") << "{ not json";
    EXPECT_THROW(kl::load_spec((dir / "broken.json").string()), kl::ConfigError);
}

TEST(ExperimentConfig, HashIgnoresOutputDirOnly) {
    auto a = small_spec(kl::ExperimentName::NoiseSweep, "x");
    auto b = a;
    b.output_dir = "y";
    EXPECT_EQ(kl::spec_hash(a), kl::spec_hash(b));
    b.seed = 18;
    EXPECT_NE(kl::spec_hash(a), kl::spec_hash(b));
    EXPECT_EQ(kl::spec_hash(a).size(), 16u);
}

TEST(CsvTable, QuotingAndTrailer) {
    kl::CsvTable t({"a", "b"});
    t.add({"1", "x,y"});
    t.add({"nan", "say \"hi\""});
    EXPECT_EQ(t.render("00ff"), "a,b\n1,\"x,y\"\nnan,\"say \"\"hi\"\"\"\n# spec_hash=00ff\n");
    EXPECT_THROW(t.add({"1"}), kl::InputError);
    const auto dir = scratch_dir("csv");
    const auto p = t.write(dir / "sub" / "t.csv", "00ff");
    EXPECT_TRUE(fs::exists(p));
    EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

// ---------------------------------------------------------------- experiments

TEST(InterpVsSgd, LaplacianInterpolatesAndFitsFaster) {
    const auto dir = scratch_dir("interp");
    auto s = small_spec(kl::ExperimentName::InterpVsSgd, dir.string());
    s.sizes = {2000};
    s.train.epochs = 10;
    s.kernels = {{kl::KernelFamily::Gaussian, 5.0}, {kl::KernelFamily::Laplacian, 10.0}};
    const auto r = kl::run_interp_vs_sgd(s);
    ASSERT_EQ(r.files.size(), 2u);
    EXPECT_EQ(r.files[0].filename(), "epochs.csv");
    EXPECT_EQ(r.files[1].filename(), "interpolant.csv");
    ASSERT_EQ(r.kernels.size(), 2u);
    const auto& gauss = r.kernels[0];
    const auto& lap = r.kernels[1];
    EXPECT_LE(lap.train.mse, 1e-8);
    EXPECT_TRUE(std::isfinite(lap.test.ce));
    ASSERT_TRUE(lap.first_zero_train_ce_epoch.has_value());
    const int gauss_epoch = gauss.first_zero_train_ce_epoch.value_or(s.train.epochs + 1);
    EXPECT_LT(*lap.first_zero_train_ce_epoch, gauss_epoch);
    EXPECT_EQ(lines(r.files[0]).size(), 1u + 2 * 10 + 1);
    EXPECT_EQ(lines(r.files[0]).front(), "kernel,bandwidth,epoch,train_mse,train_ce,test_mse,test_ce");
}

TEST(NoiseSweep, BaselineOnly) {
    const auto dir = scratch_dir("noise0");
    const auto r = kl::run_noise_sweep(small_spec(kl::ExperimentName::NoiseSweep, dir.string()));
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].epsilon, 0.0);
    EXPECT_NEAR(r.rows[0].bayes_risk, 0.158655, 1e-6);
    const auto text = lines(r.files[0]);
    ASSERT_EQ(text.size(), 3u);
    EXPECT_EQ(text.back().rfind("# spec_hash=", 0), 0u);
}

TEST(NoiseSweep, HighNoiseStaysAboveChance) {
    const auto dir = scratch_dir("noise8");
    auto s = small_spec(kl::ExperimentName::NoiseSweep, dir.string());
    s.sizes = {2000};
    s.train.epochs = 30;
    s.noise_levels = {0.0, 0.4, 0.8};
    const auto r = kl::run_noise_sweep(s);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_LT(r.rows[2].interp_test_ce, 0.5);
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.status, "ok");
        EXPECT_LE(std::abs(row.overfit_test_ce - row.interp_test_ce), 0.02) << row.epsilon;
    }
}

TEST(FitRandomLabels, TableAndStandaloneAgreement) {
    const auto dir = scratch_dir("random");
    auto s = small_spec(kl::ExperimentName::FitRandomLabels, dir.string());
    s.train.epochs = 200;
    s.kernels = {{kl::KernelFamily::Gaussian, 5.0}, {kl::KernelFamily::Laplacian, 10.0}};
    const auto r = kl::run_fit_random_labels(s);
    ASSERT_EQ(r.rows.size(), 2u);
    const auto text = lines(r.files[0]);
    ASSERT_EQ(text.size(), 4u);
    EXPECT_EQ(text[0], "kernel,bandwidth,original_epochs,random_epochs,original_last_train_ce,random_last_train_ce");

    auto ep = s.eigenpro;
    ep.seed = kl::mix_seed(s.seed, 55);
    const auto standalone =
        kl::epochs_to_overfit(kl::TrainerKind::EigenPro, r.original_train, r.rows[1].kernel, s.train, s.train.epochs, ep);
    EXPECT_EQ(standalone.epochs, r.rows[1].original.epochs);
}

TEST(NormVsN, SingleCell) {
    const auto dir = scratch_dir("norm1");
    auto s = small_spec(kl::ExperimentName::NormVsN, dir.string());
    s.sizes = {500};
    const auto r = kl::run_norm_vs_n(s);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_TRUE(std::isfinite(r.rows[0].norm));
    ASSERT_EQ(r.files.size(), 2u);
    EXPECT_EQ(r.files[0].filename(), "norm_curve.csv");
    EXPECT_EQ(lines(r.files[0]).front(), "n,epsilon,seed,norm,test_ce,test_mse,status");
}

TEST(NormVsN, NormsGrowAndPanelsPerNoiseLevel) {
    const auto dir = scratch_dir("norm3");
    auto s = small_spec(kl::ExperimentName::NormVsN, dir.string());
    s.dataset.kind = kl::DatasetKind::Synthetic1;
    s.kernel = {kl::KernelFamily::Gaussian, 5.0};
    s.sizes = {250, 500, 1000};
    s.noise_levels = {0.0, 0.1};
    const auto r = kl::run_norm_vs_n(s);
    EXPECT_EQ(r.files.size(), 3u);
    ASSERT_EQ(r.rows.size(), 6u);
    for (int e = 0; e < 2; ++e) {
        EXPECT_LT(r.rows[static_cast<std::size_t>(e)].norm, r.rows[static_cast<std::size_t>(2 + e)].norm);
        EXPECT_LT(r.rows[static_cast<std::size_t>(2 + e)].norm, r.rows[static_cast<std::size_t>(4 + e)].norm);
    }
}

TEST(KnnLearningCurve, InterpolantBeatsOneNearestNeighbour) {
    const auto dir = scratch_dir("knn");
    auto s = small_spec(kl::ExperimentName::KnnLearningCurve, dir.string());
    s.kernels = {{kl::KernelFamily::Gaussian, 2.0}, {kl::KernelFamily::Laplacian, 2.0}};
    s.sizes = {250, 1000, 4000};
    s.noise_levels = {0.0};
    s.test_size = 10000;
    const auto r = kl::run_knn_learning_curve(s);
    ASSERT_EQ(r.rows.size(), 3u * 5u);
    std::map<std::string, std::vector<double>> curves;
    for (const auto& row : r.rows) curves[row.method].push_back(row.test_ce);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LE(curves["interp_gaussian"][i], curves["knn_1"][i]) << i;
        EXPECT_LE(curves["interp_laplacian"][i], curves["knn_1"][i]);
    }
    for (const auto& [method, ce] : curves)
        for (std::size_t i = 1; i < ce.size(); ++i) EXPECT_LE(ce[i], ce[i - 1] + 0.01) << method;
}

TEST(KnnLearningCurve, FullSizeMatchesDirectEvaluation) {
    const auto dir = scratch_dir("knnfull");
    auto s = small_spec(kl::ExperimentName::KnnLearningCurve, dir.string());
    s.kernels = {{kl::KernelFamily::Laplacian, 2.0}};
    s.sizes = {150};
    s.noise_levels = {0.0};
    s.knn_k = {1};
    const auto r = kl::run_knn_learning_curve(s);
    ASSERT_EQ(r.rows.size(), 2u);
    const kl::ExperimentData data(s);
    const auto train = data.train(150, kl::detail::data_seed(s, 0));
    const auto test = data.test(kl::detail::test_seed(s));
    const auto [model, diag] = kl::solve_direct_interpolant(train.features, train.targets, {kl::KernelFamily::Laplacian, 2.0});
    EXPECT_EQ(r.rows[0].test_ce, kl::evaluate(model, test).ce);
    EXPECT_EQ(r.rows[1].test_ce, kl::classification_error(kl::knn_predict(train, test.features, 1), test.labels));
}

TEST(FileDataset, CsvWithSplitAndRescale) {
    const auto dir = scratch_dir("file");
    fs::create_directories(dir);
    const auto ds = kl::gen_synthetic_nonseparable(300, 5);
    kl::save_csv(ds, (dir / "data.csv").string());
    auto s = small_spec(kl::ExperimentName::NoiseSweep, (dir / "out").string());
    s.dataset.kind = kl::DatasetKind::File;
    s.dataset.path = (dir / "data.csv").string();
    s.dataset.preprocess = "rescale01";
    s.dataset.test_fraction = 0.25;
    s.kernel = {kl::KernelFamily::Laplacian, std::nullopt};
    s.sizes = {200};
    const auto r = kl::run_noise_sweep(s);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].kernel.bandwidth, 10.0);
    EXPECT_EQ(r.rows[0].bayes_risk, 0.0);
    EXPECT_LT(r.rows[0].interp_test_ce, 0.5);
}

TEST(Bandwidth, CrossValidationPicksFromGrid) {
    const auto pool = kl::gen_synthetic_nonseparable(300, 6);
    kl::BandwidthSearch search;
    search.grid = {0.5, 2.0, 20.0};
    const double sigma = kl::cross_validate_bandwidth(pool, kl::KernelFamily::Gaussian, search, 1);
    EXPECT_EQ(sigma, 2.0);
}

TEST(Experiments, RerunIsByteIdentical) {
    const auto dir = scratch_dir("rerun");
    auto s = small_spec(kl::ExperimentName::NoiseSweep, (dir / "a").string());
    s.noise_levels = {0.0, 0.3};
    const auto first = kl::run_experiment(s);
    s.output_dir = (dir / "b").string();
    const auto second = kl::run_experiment(s);
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(props::slurp(first[i]), props::slurp(second[i]));
}
