#include <iostream>
#include <new>
#include <string>

#include <CLI11.hpp>

#include "kernel_lab/kernel_lab.hpp"

namespace kl = kernel_lab;

namespace {

bool has_extension(const std::string& path, const std::string& ext) {
    return kl::fs::path(path).extension() == ext;
}

kl::Dataset load_any(const std::string& path, const std::string& label_column) {
    if (has_extension(path, ".ikd")) return kl::load_dataset(path);
    return kl::load_csv(path, label_column);
}

void save_any(const kl::Dataset& ds, const std::string& path) {
    if (has_extension(path, ".ikd")) {
        kl::save_dataset(ds, path);
    } else {
        kl::save_csv(ds, path);
    }
}

kl::LearningRate parse_rate(const std::string& s) {
    if (s == "auto") return kl::LearningRate::Auto();
    double v = 0.0;
    if (!kl::detail::parse_double(s, v)) throw kl::ConfigError("--lr must be 'auto' or a number, got '" + s + "'");
    return kl::LearningRate::fixed(v);
}

kl::json eval_json(const kl::EvalResult& r) { return {{"mse", r.mse}, {"ce", r.ce}, {"n", r.n}}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel interpolation and EigenPro experiments"};
    app.require_subcommand(1);

    // Experiments.
    std::string config_path, out_dir;
    std::uint64_t seed_override = 0;
    std::vector<CLI::App*> experiment_cmds;
    for (auto name : {kl::ExperimentName::InterpVsSgd, kl::ExperimentName::NormVsN, kl::ExperimentName::NoiseSweep,
                      kl::ExperimentName::FitRandomLabels, kl::ExperimentName::KnnLearningCurve}) {
        auto* cmd = app.add_subcommand(kl::to_string(name), "Run the " + kl::to_string(name) + " experiment");
        cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
        cmd->add_option("--out", out_dir, "Output directory (overrides output_dir)");
        cmd->add_option("--seed", seed_override, "Master seed (overrides seed)");
        experiment_cmds.push_back(cmd);
    }

    // gen-data
    std::string gen_kind, gen_out;
    Eigen::Index gen_n = 0;
    std::uint64_t gen_seed = 0;
    double gen_noise = 0.0;
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset (.csv or .ikd)");
    gen->add_option("kind", gen_kind, "synthetic1 or synthetic2")->required()->check(CLI::IsMember({"synthetic1", "synthetic2"}));
    gen->add_option("--n", gen_n, "Number of points")->required()->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--noise", gen_noise, "Label flip rate")->check(CLI::Range(0.0, 1.0));
    gen->add_option("--out", gen_out, "Output file")->required();

    // Shared model options.
    std::string train_path, test_path, kernel_name = "gaussian", label_column = "label", model_out;
    double sigma = 1.0;
    auto add_model_opts = [&](CLI::App* cmd) {
        cmd->add_option("--train", train_path, "Training data (.csv or .ikd)")->required();
        cmd->add_option("--test", test_path, "Test data (.csv or .ikd)");
        cmd->add_option("--kernel", kernel_name, "gaussian or laplacian");
        cmd->add_option("--sigma", sigma, "Kernel bandwidth")->required();
        cmd->add_option("--label-column", label_column, "CSV label column");
        cmd->add_option("--model-out", model_out, "Write the fitted model (IKM1)");
    };

    auto* interp = app.add_subcommand("interpolate", "Solve the kernel interpolation system directly");
    add_model_opts(interp);
    bool jitter = false;
    interp->add_flag("--jitter", jitter, "Escalate diagonal jitter if the factorization fails");

    auto* train_cmd = app.add_subcommand("train", "Train with SGD or EigenPro, streaming per-epoch CSV");
    add_model_opts(train_cmd);
    std::string method = "eigenpro", lr = "auto";
    kl::TrainConfig tc;
    kl::EigenProParams ep;
    train_cmd->add_option("--method", method, "sgd or eigenpro")->check(CLI::IsMember({"sgd", "eigenpro"}));
    train_cmd->add_option("--epochs", tc.epochs, "Epochs");
    train_cmd->add_option("--batch-size", tc.batch_size, "Mini-batch size");
    train_cmd->add_option("--lr", lr, "Learning rate eta, or auto");
    train_cmd->add_option("--seed", tc.rng_seed, "RNG seed");
    train_cmd->add_option("--eval-every", tc.eval_every, "Report every N epochs");
    train_cmd->add_flag("--stop-at-zero", tc.stop_when_train_ce_zero, "Stop once train ce reaches zero");
    train_cmd->add_option("--k", ep.k, "EigenPro eigendirections");
    train_cmd->add_option("--subsample", ep.subsample, "EigenPro subsample size");
    train_cmd->add_option("--damping", ep.damping, "EigenPro damping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < experiment_cmds.size(); ++i) {
            auto* cmd = experiment_cmds[i];
            if (!cmd->parsed()) continue;
            auto spec = kl::load_spec(config_path);
            const auto name = *kl::parse_experiment_name(cmd->get_name());
            std::ifstream in(config_path);
            const auto raw = kl::json::parse(in);
            if (raw.contains("name") && spec.name != name)
                throw kl::ConfigError("config name '" + kl::to_string(spec.name) + "' does not match command '" +
                                      cmd->get_name() + "'");
            spec.name = name;
            if (!out_dir.empty()) spec.output_dir = out_dir;
            if (cmd->count("--seed")) spec.seed = seed_override;
            for (const auto& f : kl::run_experiment(spec)) std::cout << f.string() << '\n';
            return 0;
        }

        if (gen->parsed()) {
            const auto kind = gen_kind == "synthetic1" ? kl::SyntheticKind::Separable : kl::SyntheticKind::NonSeparable;
            auto ds = kl::gen_synthetic(kind, gen_n, gen_seed);
            if (gen_noise > 0.0) ds = kl::flip_labels(ds, {gen_noise, kl::mix_seed(gen_seed, 1)});
            save_any(ds, gen_out);
            return 0;
        }

        const kl::KernelConfig cfg{kl::parse_kernel_family(kernel_name), sigma};
        cfg.validate();
        const auto train = load_any(train_path, label_column);
        std::optional<kl::Dataset> test;
        if (!test_path.empty()) test = load_any(test_path, label_column);

        if (interp->parsed()) {
            kl::SolveOptions so;
            if (jitter) so.jitter = kl::JitterPolicy::escalate();
            const auto [model, diag] = kl::solve_direct_interpolant(train.features, train.targets, cfg, so);
            kl::json out{{"kernel", std::string(kl::to_string(cfg.family))},
                         {"bandwidth", cfg.bandwidth},
                         {"train", eval_json(kl::evaluate(model, train))},
                         {"norm", kl::rkhs_norm(model)},
                         {"max_abs_residual", diag.max_abs_residual},
                         {"jitter_used", diag.jitter_used},
                         {"duplicates_merged", diag.duplicates_merged}};
            if (test) out["test"] = eval_json(kl::evaluate(model, *test));
            if (!model_out.empty()) kl::save_model(model, model_out);
            std::cout << out.dump(2) << '\n';
            return 0;
        }

        if (train_cmd->parsed()) {
            tc.learning_rate = parse_rate(lr);
            tc.validate();
            std::cout << kl::kEpochCsvHeader << '\n' << std::flush;
            auto stream = [](const kl::EpochReport& r) { std::cout << kl::to_csv_line(r) << '\n' << std::flush; };
            const kl::Dataset* test_ptr = test ? &*test : nullptr;
            kl::TrainResult run;
            if (method == "sgd") {
                run = kl::sgd_train(train, test_ptr, cfg, tc, stream);
            } else {
                const Eigen::Index M = std::min(ep.subsample, train.size());
                const auto pc = kl::build_eigenpro(train, cfg, std::min(ep.k, M - 1), M, kl::mix_seed(tc.rng_seed, 2), {},
                                                   ep.damping);
                run = kl::eigenpro_train(train, test_ptr, cfg, tc, pc, stream);
            }
            if (!model_out.empty()) kl::save_model(run.model, model_out);
            return 0;
        }
    } catch (const kl::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kl::exit_code(e.kind());
    } catch (const kl::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::bad_alloc&) {
        std::cerr << "error: out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
