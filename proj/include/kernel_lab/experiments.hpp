#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "preprocess.hpp"
#include "solvers.hpp"
#include "synthetic.hpp"
#include "trainers.hpp"

namespace kernel_lab {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum class ExperimentName { InterpVsSgd, NormVsN, NoiseSweep, FitRandomLabels, KnnLearningCurve };

inline std::string to_string(ExperimentName name) {
    switch (name) {
        case ExperimentName::InterpVsSgd: return "interp_vs_sgd";
        case ExperimentName::NormVsN: return "norm_vs_n";
        case ExperimentName::NoiseSweep: return "noise_sweep";
        case ExperimentName::FitRandomLabels: return "fit_random_labels";
        case ExperimentName::KnnLearningCurve: return "knn_learning_curve";
    }
    return "?";
}

inline std::optional<ExperimentName> parse_experiment_name(std::string_view s) {
    for (auto n : {ExperimentName::InterpVsSgd, ExperimentName::NormVsN, ExperimentName::NoiseSweep,
                   ExperimentName::FitRandomLabels, ExperimentName::KnnLearningCurve})
        if (to_string(n) == s) return n;
    return std::nullopt;
}

enum class DatasetKind { Synthetic1, Synthetic2, File };

struct DatasetSource {
    DatasetKind kind = DatasetKind::Synthetic2;
    // File datasets.
    std::string format = "csv";  // csv | idx | ikd
    std::string path;
    std::string labels_path;  // idx labels
    std::string test_path;
    std::string test_labels_path;
    std::string label_column = "label";
    double test_fraction = 0.2;
    std::string preprocess = "none";  // none | rescale01 | zscore
};

/// Kernel family with an optional bandwidth; no bandwidth means cross-validated.
struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    std::optional<double> bandwidth;
};

struct ExperimentSpec {
    ExperimentName name = ExperimentName::NoiseSweep;
    DatasetSource dataset;
    KernelSpec kernel;
    TrainConfig train;
    std::vector<double> noise_levels;
    std::vector<Eigen::Index> sizes;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    // Optional extensions.
    std::vector<KernelSpec> kernels;  // experiments comparing kernels; defaults per experiment
    Eigen::Index test_size = 10000;
    int repeats = 1;
    EigenProParams eigenpro;
    std::vector<int> knn_k = {1, 3, 5};
};

// ---------------------------------------------------------------- JSON config

namespace detail {

inline KernelSpec kernel_spec_from_json(const json& j) {
    KernelSpec k;
    if (j.is_string()) {
        k.family = parse_kernel_family(j.get<std::string>());
        return k;
    }
    if (!j.is_object()) throw ConfigError("kernel must be an object or a family name");
    k.family = parse_kernel_family(j.value("family", std::string("gaussian")));
    if (j.contains("bandwidth")) {
        const auto& b = j.at("bandwidth");
        if (b.is_number()) {
            k.bandwidth = b.get<double>();
            if (!(*k.bandwidth > 0.0)) throw ConfigError("kernel bandwidth must be positive");
        } else if (!(b.is_string() && b.get<std::string>() == "auto") && !b.is_null()) {
            throw ConfigError("kernel bandwidth must be a number or \"auto\"");
        }
    }
    return k;
}

inline json kernel_spec_to_json(const KernelSpec& k) {
    json j{{"family", std::string(to_string(k.family))}};
    j["bandwidth"] = k.bandwidth ? json(*k.bandwidth) : json("auto");
    return j;
}

}  // namespace detail

inline ExperimentSpec spec_from_json(const json& j) {
    try {
        if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
        static const std::vector<std::string> known = {"name",    "dataset", "kernel",    "train",   "noise_levels",
                                                       "sizes",   "output_dir", "seed",   "kernels", "test_size",
                                                       "repeats", "eigenpro", "knn_k"};
        for (const auto& [key, _] : j.items())
            if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config field '" + key + "'");

        ExperimentSpec s;
        if (j.contains("name")) {
            const auto name = parse_experiment_name(j.at("name").get<std::string>());
            if (!name) throw ConfigError("unknown experiment name '" + j.at("name").get<std::string>() + "'");
            s.name = *name;
        }

        const json& d = j.value("dataset", json("synthetic2"));
        const std::string kind = d.is_string() ? d.get<std::string>() : d.value("kind", std::string("file"));
        if (kind == "synthetic1") {
            s.dataset.kind = DatasetKind::Synthetic1;
        } else if (kind == "synthetic2") {
            s.dataset.kind = DatasetKind::Synthetic2;
        } else if (kind == "file") {
            if (!d.is_object()) throw ConfigError("file dataset needs an object with a path");
            s.dataset.kind = DatasetKind::File;
            s.dataset.format = d.value("format", std::string("csv"));
            s.dataset.path = d.at("path").get<std::string>();
            s.dataset.labels_path = d.value("labels_path", std::string());
            s.dataset.test_path = d.value("test_path", std::string());
            s.dataset.test_labels_path = d.value("test_labels_path", std::string());
            s.dataset.label_column = d.value("label_column", std::string("label"));
            s.dataset.test_fraction = d.value("test_fraction", 0.2);
            s.dataset.preprocess = d.value("preprocess", std::string("none"));
        } else {
            throw ConfigError("unknown dataset kind '" + kind + "'");
        }

        if (j.contains("kernel")) s.kernel = detail::kernel_spec_from_json(j.at("kernel"));
        if (j.contains("kernels"))
            for (const auto& k : j.at("kernels")) s.kernels.push_back(detail::kernel_spec_from_json(k));

        if (j.contains("train")) {
            const json& t = j.at("train");
            s.train.batch_size = t.value("batch_size", s.train.batch_size);
            s.train.epochs = t.value("epochs", s.train.epochs);
            s.train.rng_seed = t.value("rng_seed", s.train.rng_seed);
            s.train.stop_when_train_ce_zero = t.value("stop_when_train_ce_zero", s.train.stop_when_train_ce_zero);
            s.train.eval_every = t.value("eval_every", s.train.eval_every);
            if (t.contains("learning_rate")) {
                const auto& lr = t.at("learning_rate");
                if (lr.is_number()) {
                    s.train.learning_rate = LearningRate::fixed(lr.get<double>());
                } else if (!(lr.is_string() && lr.get<std::string>() == "auto")) {
                    throw ConfigError("learning_rate must be a number or \"auto\"");
                }
            }
        }
        s.noise_levels = j.value("noise_levels", std::vector<double>{});
        s.sizes = j.value("sizes", std::vector<Eigen::Index>{});
        s.output_dir = j.value("output_dir", s.output_dir);
        s.seed = j.value("seed", s.seed);
        s.test_size = j.value("test_size", s.test_size);
        s.repeats = j.value("repeats", s.repeats);
        if (j.contains("eigenpro")) {
            const json& e = j.at("eigenpro");
            s.eigenpro.k = e.value("k", s.eigenpro.k);
            s.eigenpro.subsample = e.value("M", s.eigenpro.subsample);
            s.eigenpro.damping = e.value("damping", s.eigenpro.damping);
        }
        s.knn_k = j.value("knn_k", s.knn_k);
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid experiment config: ") + e.what());
    }
}

inline json spec_to_json(const ExperimentSpec& s) {
    json j;
    j["name"] = to_string(s.name);
    switch (s.dataset.kind) {
        case DatasetKind::Synthetic1: j["dataset"] = "synthetic1"; break;
        case DatasetKind::Synthetic2: j["dataset"] = "synthetic2"; break;
        case DatasetKind::File:
            j["dataset"] = {{"kind", "file"},
                            {"format", s.dataset.format},
                            {"path", s.dataset.path},
                            {"labels_path", s.dataset.labels_path},
                            {"test_path", s.dataset.test_path},
                            {"test_labels_path", s.dataset.test_labels_path},
                            {"label_column", s.dataset.label_column},
                            {"test_fraction", s.dataset.test_fraction},
                            {"preprocess", s.dataset.preprocess}};
            break;
    }
    j["kernel"] = detail::kernel_spec_to_json(s.kernel);
    j["kernels"] = json::array();
    for (const auto& k : s.kernels) j["kernels"].push_back(detail::kernel_spec_to_json(k));
    j["train"] = {{"batch_size", s.train.batch_size},
                  {"epochs", s.train.epochs},
                  {"rng_seed", s.train.rng_seed},
                  {"stop_when_train_ce_zero", s.train.stop_when_train_ce_zero},
                  {"eval_every", s.train.eval_every}};
    j["train"]["learning_rate"] = s.train.learning_rate.automatic ? json("auto") : json(s.train.learning_rate.value);
    j["noise_levels"] = s.noise_levels;
    j["sizes"] = s.sizes;
    j["output_dir"] = s.output_dir;
    j["seed"] = s.seed;
    j["test_size"] = s.test_size;
    j["repeats"] = s.repeats;
    j["eigenpro"] = {{"k", s.eigenpro.k}, {"M", s.eigenpro.subsample}, {"damping", s.eigenpro.damping}};
    j["knn_k"] = s.knn_k;
    return j;
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return spec_from_json(j);
}

inline void validate(const ExperimentSpec& s) {
    s.train.validate();
    for (double e : s.noise_levels)
        if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("noise level " + std::to_string(e) + " outside [0,1]");
    for (std::size_t i = 0; i < s.sizes.size(); ++i) {
        if (s.sizes[i] < 1) throw ConfigError("sizes must be positive");
        if (i > 0 && s.sizes[i] <= s.sizes[i - 1]) throw ConfigError("sizes must be strictly ascending");
    }
    if (s.test_size < 1) throw ConfigError("test_size must be positive");
    if (s.repeats < 1) throw ConfigError("repeats must be positive");
    for (int k : s.knn_k)
        if (k < 1) throw ConfigError("knn_k entries must be positive");
    if (s.dataset.kind == DatasetKind::File) {
        auto must_exist = [](const std::string& p, const char* what) {
            if (!p.empty() && !fs::exists(p)) throw ConfigError(std::string(what) + " '" + p + "' does not exist");
        };
        if (s.dataset.path.empty()) throw ConfigError("file dataset needs a path");
        must_exist(s.dataset.path, "dataset path");
        must_exist(s.dataset.labels_path, "labels path");
        must_exist(s.dataset.test_path, "test path");
        must_exist(s.dataset.test_labels_path, "test labels path");
        if (s.dataset.format != "csv" && s.dataset.format != "idx" && s.dataset.format != "ikd")
            throw ConfigError("dataset format must be csv, idx or ikd");
        if (s.dataset.format == "idx" && s.dataset.labels_path.empty())
            throw ConfigError("idx dataset needs labels_path");
        if (s.dataset.preprocess != "none" && s.dataset.preprocess != "rescale01" && s.dataset.preprocess != "zscore")
            throw ConfigError("preprocess must be none, rescale01 or zscore");
    }
}

/// FNV-1a 64 of the normalized config JSON without output_dir, as 16 hex digits.
inline std::string spec_hash(const ExperimentSpec& s) {
    json j = spec_to_json(s);
    j.erase("output_dir");
    const std::string text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------- CSV output

/// CSV table written atomically with a trailing `# spec_hash=` comment line.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    static std::string num(double v) {
        if (std::isnan(v)) return "nan";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        return buf;
    }
    static std::string num(long long v) { return std::to_string(v); }

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw InputError("CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::string render(const std::string& hash) const {
        std::ostringstream out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out << ',';
                const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
                if (!quote) {
                    out << cells[i];
                    continue;
                }
                out << '"';
                for (char ch : cells[i]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
                out << '"';
            }
            out << '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        out << "# spec_hash=" << hash << '\n';
        return out.str();
    }

    fs::path write(const fs::path& path, const std::string& hash) const {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        const fs::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot write '" + tmp.string() + "'");
            out << render(hash);
            if (!out) throw IoError("error writing '" + tmp.string() + "'");
        }
        fs::rename(tmp, path, ec);
        if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
        return path;
    }

    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// ---------------------------------------------------------------- data access

/// Training pool and test set for an experiment. Synthetic pools are generated
/// on demand; `train(n, seed)` of a smaller n is a prefix of a larger one.
class ExperimentData {
public:
    explicit ExperimentData(const ExperimentSpec& spec) : spec_(spec) {
        if (spec.dataset.kind == DatasetKind::File) load_files();
    }

    Dataset train(Eigen::Index n, std::uint64_t seed) const {
        if (synthetic()) return gen_synthetic(synthetic_kind(), n, seed);
        if (n > file_train_->size()) {
            throw InputError("requested " + std::to_string(n) + " training rows, file has " +
                             std::to_string(file_train_->size()));
        }
        return subsample(*file_train_, n, seed);
    }

    Dataset test(std::uint64_t seed) const {
        if (synthetic()) return gen_synthetic(synthetic_kind(), spec_.test_size, seed);
        return *file_test_;
    }

    Eigen::Index available() const {
        return synthetic() ? std::numeric_limits<Eigen::Index>::max() : file_train_->size();
    }

    // Clean-distribution Bayes risk; zero (a lower bound) for file datasets.
    double base_risk() const { return synthetic() ? synthetic_bayes_risk(synthetic_kind()) : 0.0; }

    int class_count() const { return synthetic() ? 2 : file_train_->class_count; }

    bool synthetic() const { return spec_.dataset.kind != DatasetKind::File; }

    SyntheticKind synthetic_kind() const {
        return spec_.dataset.kind == DatasetKind::Synthetic1 ? SyntheticKind::Separable : SyntheticKind::NonSeparable;
    }

    std::string cache_key() const {
        switch (spec_.dataset.kind) {
            case DatasetKind::Synthetic1: return "synthetic1";
            case DatasetKind::Synthetic2: return "synthetic2";
            case DatasetKind::File: return "file:" + spec_.dataset.path + ":" + spec_.dataset.preprocess;
        }
        return "";
    }

    // Sample used for bandwidth cross-validation.
    Dataset cv_pool(Eigen::Index n) const {
        if (synthetic()) return gen_synthetic(synthetic_kind(), n, mix_seed(0xC0FFEEULL, static_cast<std::uint64_t>(spec_.dataset.kind)));
        return subsample(*file_train_, std::min(n, file_train_->size()), 0xC0FFEEULL);
    }

private:
    void load_files() {
        const auto& d = spec_.dataset;
        auto load = [&](const std::string& path, const std::string& labels) {
            if (d.format == "idx") return load_idx(path, labels);
            if (d.format == "ikd") return load_dataset(path);
            return load_csv(path, d.label_column);
        };
        Dataset all = load(d.path, d.labels_path);
        Dataset train, test;
        if (!d.test_path.empty()) {
            train = std::move(all);
            test = load(d.test_path, d.test_labels_path);
            const int k = std::max(train.class_count, test.class_count);
            if (train.class_count != k) train = make_dataset(train.features, train.labels, k, train.name);
            if (test.class_count != k) test = make_dataset(test.features, test.labels, k, test.name);
        } else {
            std::tie(train, test) = split(all, d.test_fraction, mix_seed(spec_.seed, 99));
        }
        if (d.preprocess == "rescale01") {
            auto [tr, range] = rescale_01(train);
            test = rescale_01(test, range).first;
            train = std::move(tr);
        } else if (d.preprocess == "zscore") {
            auto [tr, stats] = zscore(train);
            test = zscore(test, stats).first;
            train = std::move(tr);
        }
        file_train_ = std::move(train);
        file_test_ = std::move(test);
    }

    const ExperimentSpec& spec_;
    std::optional<Dataset> file_train_;
    std::optional<Dataset> file_test_;
};

// ---------------------------------------------------------------- bandwidth selection

struct BandwidthSearch {
    std::vector<double> grid = {0.5, 1.0, 2.0, 5.0, 10.0, 20.0};
    int folds = 5;
    Eigen::Index subsample = 2000;
};

/// Grid bandwidth with the lowest mean held-out square loss of the fold
/// interpolants (first grid value wins ties).
inline double cross_validate_bandwidth(const Dataset& pool, KernelFamily family, const BandwidthSearch& search = {},
                                       std::uint64_t seed = 0) {
    if (search.folds < 2 || pool.size() < search.folds) throw InputError("cross_validate_bandwidth: too few rows for folds");
    Rng rng(seed);
    const auto perm = rng.permutation(static_cast<std::size_t>(pool.size()));
    double best_sigma = search.grid.front();
    double best_loss = std::numeric_limits<double>::infinity();
    for (double sigma : search.grid) {
        const KernelConfig cfg{family, sigma};
        double loss = 0.0;
        bool ok = true;
        for (int f = 0; f < search.folds && ok; ++f) {
            std::vector<std::size_t> tr, va;
            for (std::size_t i = 0; i < perm.size(); ++i)
                (static_cast<int>(i % static_cast<std::size_t>(search.folds)) == f ? va : tr).push_back(perm[i]);
            const Dataset dtr = select_rows(pool, tr, pool.name);
            const Dataset dva = select_rows(pool, va, pool.name);
            try {
                SolveOptions so;
                so.jitter = JitterPolicy::escalate();
                const auto [model, diag] = solve_direct_interpolant(dtr.features, dtr.targets, cfg, so);
                loss += evaluate(model, dva).mse / search.folds;
            } catch (const NumericError&) {
                ok = false;
            }
        }
        if (ok && loss < best_loss) {
            best_loss = loss;
            best_sigma = sigma;
        }
    }
    return best_sigma;
}

namespace detail {

inline std::map<std::string, double>& bandwidth_cache() {
    static std::map<std::string, double> cache;
    return cache;
}

inline std::mutex& bandwidth_cache_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Bandwidth used for file datasets when the config gives none.
inline double default_file_bandwidth(KernelFamily family) { return family == KernelFamily::Gaussian ? 5.0 : 10.0; }

/// Bandwidth for a kernel spec: the explicit value; for synthetic data the
/// cross-validated choice cached per (dataset, family) for the process lifetime.
inline KernelConfig resolve_kernel(const KernelSpec& k, const ExperimentData& data) {
    if (k.bandwidth) return {k.family, *k.bandwidth};
    if (!data.synthetic()) return {k.family, default_file_bandwidth(k.family)};
    const std::string key = data.cache_key() + "/" + std::string(to_string(k.family));
    {
        std::lock_guard lock(detail::bandwidth_cache_mutex());
        auto it = detail::bandwidth_cache().find(key);
        if (it != detail::bandwidth_cache().end()) return {k.family, it->second};
    }
    BandwidthSearch search;
    const double sigma = cross_validate_bandwidth(data.cv_pool(search.subsample), k.family, search, 0xC5EEDULL);
    std::lock_guard lock(detail::bandwidth_cache_mutex());
    detail::bandwidth_cache()[key] = sigma;
    return {k.family, sigma};
}

// ---------------------------------------------------------------- experiments

namespace detail {

inline std::vector<KernelSpec> kernels_or(const ExperimentSpec& s, bool both_families) {
    if (!s.kernels.empty()) return s.kernels;
    if (!both_families) return {s.kernel};
    KernelSpec other{s.kernel.family == KernelFamily::Gaussian ? KernelFamily::Laplacian : KernelFamily::Gaussian, {}};
    std::vector<KernelSpec> out{s.kernel, other};
    if (out[0].family != KernelFamily::Gaussian) std::swap(out[0], out[1]);
    return out;
}

inline Eigen::Index first_size(const ExperimentSpec& s, Eigen::Index fallback) {
    return s.sizes.empty() ? fallback : s.sizes.front();
}

inline std::string error_status(const std::exception& e) { return std::string("error: ") + e.what(); }

inline std::uint64_t data_seed(const ExperimentSpec& s, int rep) { return mix_seed(s.seed, 100 + static_cast<std::uint64_t>(rep)); }
inline std::uint64_t test_seed(const ExperimentSpec& s) { return mix_seed(s.seed, 7); }
inline std::uint64_t noise_seed(const ExperimentSpec& s, std::size_t eps_index, int rep) {
    return mix_seed(s.seed, 1000 + 31 * eps_index + static_cast<std::uint64_t>(rep));
}

inline EigenProParams eigenpro_params(const ExperimentSpec& s) {
    EigenProParams p = s.eigenpro;
    p.seed = mix_seed(s.seed, 55);
    return p;
}

// EigenPro run with k clipped to the subsample; the preconditioner is built on the training set.
inline TrainResult run_eigenpro(const Dataset& train, const Dataset* test, const KernelConfig& cfg,
                                const TrainConfig& tc, const EigenProParams& ep) {
    const Eigen::Index M = std::min(ep.subsample, train.size());
    const auto pc = build_eigenpro(train, cfg, std::min(ep.k, M - 1), M, ep.seed, {}, ep.damping);
    return eigenpro_train(train, test, cfg, tc, pc);
}

}  // namespace detail

struct ExperimentFiles {
    std::vector<fs::path> files;
};

// interp_vs_sgd ---------------------------------------------------------------

struct InterpolantSummary {
    KernelConfig kernel;
    EvalResult train;
    EvalResult test;
    double norm = 0.0;
    double max_abs_residual = 0.0;
    double jitter_used = 0.0;
    std::optional<int> first_zero_train_ce_epoch;  // from the EigenPro run
    std::vector<EpochReport> epochs;
};

struct InterpVsSgdResult : ExperimentFiles {
    std::vector<InterpolantSummary> kernels;
};

/// EigenPro-SGD epochs next to the direct interpolant, per kernel.
inline InterpVsSgdResult run_interp_vs_sgd(const ExperimentSpec& spec) {
    validate(spec);
    const ExperimentData data(spec);
    const Eigen::Index n = std::min(detail::first_size(spec, 2000), data.available());
    const double eps = spec.noise_levels.empty() ? 0.0 : spec.noise_levels.front();
    const Dataset train = flip_labels(data.train(n, detail::data_seed(spec, 0)), {eps, detail::noise_seed(spec, 0, 0)});
    const Dataset test = data.test(detail::test_seed(spec));
    const std::string hash = spec_hash(spec);

    InterpVsSgdResult out;
    CsvTable epochs({"kernel", "bandwidth", "epoch", "train_mse", "train_ce", "test_mse", "test_ce"});
    CsvTable interp({"kernel", "bandwidth", "train_mse", "train_ce", "test_mse", "test_ce", "norm",
                     "max_abs_residual", "jitter_used", "first_zero_train_ce_epoch"});
    for (const auto& ks : detail::kernels_or(spec, false)) {
        InterpolantSummary s;
        s.kernel = resolve_kernel(ks, data);
        const std::string fam(to_string(s.kernel.family));
        const auto run = detail::run_eigenpro(train, &test, s.kernel, spec.train, detail::eigenpro_params(spec));
        s.epochs = run.reports;
        for (const auto& r : run.reports) {
            if (!s.first_zero_train_ce_epoch && r.train_ce == 0.0) s.first_zero_train_ce_epoch = r.epoch;
            epochs.add({fam, CsvTable::num(s.kernel.bandwidth), CsvTable::num(static_cast<long long>(r.epoch)),
                        CsvTable::num(r.train_mse), CsvTable::num(r.train_ce), CsvTable::num(r.test_mse),
                        CsvTable::num(r.test_ce)});
        }
        SolveOptions so;
        so.jitter = JitterPolicy::escalate();
        const auto [model, diag] = solve_direct_interpolant(train.features, train.targets, s.kernel, so);
        s.train = evaluate(model, train);
        s.test = evaluate(model, test);
        s.norm = rkhs_norm(model);
        s.max_abs_residual = diag.max_abs_residual;
        s.jitter_used = diag.jitter_used;
        interp.add({fam, CsvTable::num(s.kernel.bandwidth), CsvTable::num(s.train.mse), CsvTable::num(s.train.ce),
                    CsvTable::num(s.test.mse), CsvTable::num(s.test.ce), CsvTable::num(s.norm),
                    CsvTable::num(s.max_abs_residual), CsvTable::num(s.jitter_used),
                    s.first_zero_train_ce_epoch ? CsvTable::num(static_cast<long long>(*s.first_zero_train_ce_epoch))
                                                : std::string("none")});
        out.kernels.push_back(std::move(s));
    }
    out.files.push_back(epochs.write(fs::path(spec.output_dir) / "epochs.csv", hash));
    out.files.push_back(interp.write(fs::path(spec.output_dir) / "interpolant.csv", hash));
    return out;
}

// norm_vs_n -------------------------------------------------------------------

struct NormCurveRow {
    Eigen::Index n = 0;
    double epsilon = 0.0;
    std::uint64_t seed = 0;
    double norm = std::numeric_limits<double>::quiet_NaN();
    double test_ce = std::numeric_limits<double>::quiet_NaN();
    double test_mse = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

using TrainGenerator = std::function<Dataset(Eigen::Index n, std::uint64_t seed)>;

/// Interpolant norm and clean test error for every (n, epsilon, seed) cell.
/// For a fixed (epsilon, seed) the training sets are nested in n; per-cell
/// failures are recorded in `status` without aborting the sweep.
inline std::vector<NormCurveRow> norm_curve(const std::vector<Eigen::Index>& sizes, const std::vector<double>& noise,
                                            const TrainGenerator& base_gen, const KernelConfig& cfg,
                                            const std::vector<std::uint64_t>& seeds, const Dataset& test) {
    for (std::size_t i = 1; i < sizes.size(); ++i)
        if (sizes[i] <= sizes[i - 1]) throw InputError("norm_curve: sizes must be ascending");
    if (sizes.empty()) return {};
    std::vector<NormCurveRow> rows;
    for (std::size_t si = 0; si < sizes.size(); ++si) {
        for (std::size_t ei = 0; ei < noise.size(); ++ei) {
            for (auto seed : seeds) {
                NormCurveRow row;
                row.n = sizes[si];
                row.epsilon = noise[ei];
                row.seed = seed;
                try {
                    const Dataset full = base_gen(sizes.back(), seed);
                    const Dataset noisy = flip_labels(full, {noise[ei], mix_seed(seed, 1000 + 31 * ei)});
                    const Dataset train = head(noisy, sizes[si]);
                    SolveOptions so;
                    so.jitter = JitterPolicy::escalate();
                    const auto [model, diag] = solve_direct_interpolant(train.features, train.targets, cfg, so);
                    row.norm = rkhs_norm(model);
                    const auto ev = evaluate(model, test);
                    row.test_ce = ev.ce;
                    row.test_mse = ev.mse;
                    if (diag.jitter_used > 0.0) row.status = "ok-jitter";
                } catch (const Error& e) {
                    row.status = detail::error_status(e);
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

struct NormVsNResult : ExperimentFiles {
    KernelConfig kernel;
    std::vector<NormCurveRow> rows;
};

inline NormVsNResult run_norm_vs_n(const ExperimentSpec& spec) {
    validate(spec);
    if (spec.sizes.empty()) throw ConfigError("norm_vs_n needs sizes");
    const ExperimentData data(spec);
    NormVsNResult out;
    out.kernel = resolve_kernel(spec.kernel, data);
    const auto noise = spec.noise_levels.empty() ? std::vector<double>{0.0} : spec.noise_levels;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < spec.repeats; ++r) seeds.push_back(detail::data_seed(spec, r));
    const Dataset test = data.test(detail::test_seed(spec));
    out.rows = norm_curve(
        spec.sizes, noise, [&](Eigen::Index n, std::uint64_t seed) { return data.train(n, seed); }, out.kernel, seeds,
        test);

    const std::string hash = spec_hash(spec);
    CsvTable table({"n", "epsilon", "seed", "norm", "test_ce", "test_mse", "status"});
    for (const auto& r : out.rows)
        table.add({CsvTable::num(static_cast<long long>(r.n)), CsvTable::num(r.epsilon), std::to_string(r.seed),
                   CsvTable::num(r.norm), CsvTable::num(r.test_ce), CsvTable::num(r.test_mse), r.status});
    out.files.push_back(table.write(fs::path(spec.output_dir) / "norm_curve.csv", hash));
    for (double eps : noise) {
        CsvTable panel({"n", "seed", "test_ce"});
        for (const auto& r : out.rows)
            if (r.epsilon == eps)
                panel.add({CsvTable::num(static_cast<long long>(r.n)), std::to_string(r.seed), CsvTable::num(r.test_ce)});
        out.files.push_back(panel.write(fs::path(spec.output_dir) / ("test_ce_eps_" + CsvTable::num(eps) + ".csv"), hash));
    }
    return out;
}

// noise_sweep -----------------------------------------------------------------

struct NoiseSweepRow {
    KernelConfig kernel;
    double epsilon = 0.0;
    double bayes_risk = 0.0;
    double interp_test_ce = std::numeric_limits<double>::quiet_NaN();
    double overfit_test_ce = std::numeric_limits<double>::quiet_NaN();
    double interp_noisy_test_ce = std::numeric_limits<double>::quiet_NaN();  // against equally noised test labels
    std::optional<int> overfit_epochs;
    double interp_norm = std::numeric_limits<double>::quiet_NaN();
    double overfit_norm = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

struct NoiseSweepResult : ExperimentFiles {
    std::vector<NoiseSweepRow> rows;
};

/// Interpolated (direct solve) and overfitted (EigenPro stopped at zero train
/// error) classifiers per noise level, next to the noisy Bayes risk.
inline NoiseSweepResult run_noise_sweep(const ExperimentSpec& spec) {
    validate(spec);
    const ExperimentData data(spec);
    const Eigen::Index n = std::min(detail::first_size(spec, 2000), data.available());
    const auto noise = spec.noise_levels.empty() ? std::vector<double>{0.0} : spec.noise_levels;
    const Dataset clean_train = data.train(n, detail::data_seed(spec, 0));
    const Dataset test = data.test(detail::test_seed(spec));
    TrainConfig tc = spec.train;
    tc.stop_when_train_ce_zero = true;
    tc.eval_every = tc.epochs;

    NoiseSweepResult out;
    for (const auto& ks : detail::kernels_or(spec, false)) {
        const KernelConfig cfg = resolve_kernel(ks, data);
        for (std::size_t ei = 0; ei < noise.size(); ++ei) {
            NoiseSweepRow row;
            row.kernel = cfg;
            row.epsilon = noise[ei];
            row.bayes_risk = noisy_bayes_risk(noise[ei], data.class_count(), data.base_risk());
            try {
                const Dataset train = flip_labels(clean_train, {noise[ei], detail::noise_seed(spec, ei, 0)});
                const Dataset noisy_test = flip_labels(test, {noise[ei], mix_seed(detail::noise_seed(spec, ei, 0), 3)});
                SolveOptions so;
                so.jitter = JitterPolicy::escalate();
                const auto [interp, diag] = solve_direct_interpolant(train.features, train.targets, cfg, so);
                row.interp_test_ce = evaluate(interp, test).ce;
                row.interp_noisy_test_ce = evaluate(interp, noisy_test).ce;
                row.interp_norm = rkhs_norm(interp);

                const auto run = detail::run_eigenpro(train, nullptr, cfg, tc, detail::eigenpro_params(spec));
                if (!run.reports.empty() && run.reports.back().train_ce == 0.0) row.overfit_epochs = run.reports.back().epoch;
                row.overfit_test_ce = evaluate(run.model, test).ce;
                row.overfit_norm = rkhs_norm(run.model);
                if (!row.overfit_epochs) row.status = "not-overfit";
            } catch (const Error& e) {
                row.status = detail::error_status(e);
            }
            out.rows.push_back(row);
        }
    }

    CsvTable table({"kernel", "bandwidth", "epsilon", "bayes_risk", "interp_test_ce", "overfit_test_ce",
                    "interp_noisy_test_ce", "overfit_epochs", "interp_norm", "overfit_norm", "status"});
    for (const auto& r : out.rows)
        table.add({std::string(to_string(r.kernel.family)), CsvTable::num(r.kernel.bandwidth), CsvTable::num(r.epsilon),
                   CsvTable::num(r.bayes_risk), CsvTable::num(r.interp_test_ce), CsvTable::num(r.overfit_test_ce),
                   CsvTable::num(r.interp_noisy_test_ce),
                   r.overfit_epochs ? CsvTable::num(static_cast<long long>(*r.overfit_epochs)) : std::string("none"),
                   CsvTable::num(r.interp_norm), CsvTable::num(r.overfit_norm), r.status});
    out.files.push_back(table.write(fs::path(spec.output_dir) / "noise_sweep.csv", spec_hash(spec)));
    return out;
}

// fit_random_labels -------------------------------------------------------------

struct FitRandomLabelsRow {
    KernelConfig kernel;
    OverfitResult original;
    OverfitResult random;
};

struct FitRandomLabelsResult : ExperimentFiles {
    std::vector<FitRandomLabelsRow> rows;
    Dataset original_train;  // the exact training set used for the original labels
};

/// EigenPro epochs to zero training error for the original labels and for
/// labels redrawn uniformly at random, per kernel (train.epochs is the cap).
inline FitRandomLabelsResult run_fit_random_labels(const ExperimentSpec& spec) {
    validate(spec);
    const ExperimentData data(spec);
    const Eigen::Index n = std::min(detail::first_size(spec, 2000), data.available());
    FitRandomLabelsResult out;
    out.original_train = data.train(n, detail::data_seed(spec, 0));
    const Dataset randomized = flip_labels(out.original_train, {1.0, detail::noise_seed(spec, 0, 0)});
    const auto ep = detail::eigenpro_params(spec);
    for (const auto& ks : detail::kernels_or(spec, true)) {
        FitRandomLabelsRow row;
        row.kernel = resolve_kernel(ks, data);
        row.original = epochs_to_overfit(TrainerKind::EigenPro, out.original_train, row.kernel, spec.train,
                                         spec.train.epochs, ep);
        row.random = epochs_to_overfit(TrainerKind::EigenPro, randomized, row.kernel, spec.train, spec.train.epochs, ep);
        out.rows.push_back(row);
    }
    auto cell = [](const OverfitResult& r) {
        return r.epochs ? CsvTable::num(static_cast<long long>(*r.epochs)) : std::string("did_not_overfit");
    };
    CsvTable table({"kernel", "bandwidth", "original_epochs", "random_epochs", "original_last_train_ce",
                    "random_last_train_ce"});
    for (const auto& r : out.rows)
        table.add({std::string(to_string(r.kernel.family)), CsvTable::num(r.kernel.bandwidth), cell(r.original),
                   cell(r.random), CsvTable::num(r.original.last_train_ce), CsvTable::num(r.random.last_train_ce)});
    out.files.push_back(table.write(fs::path(spec.output_dir) / "fit_random_labels.csv", spec_hash(spec)));
    return out;
}

// knn_learning_curve ------------------------------------------------------------

struct LearningCurveRow {
    Eigen::Index n = 0;
    double epsilon = 0.0;
    std::string method;
    double test_ce = std::numeric_limits<double>::quiet_NaN();
    std::string status = "ok";
};

struct KnnLearningCurveResult : ExperimentFiles {
    std::vector<LearningCurveRow> rows;
};

/// Interpolants (per kernel) against k-NN baselines over nested training sizes.
inline KnnLearningCurveResult run_knn_learning_curve(const ExperimentSpec& spec) {
    validate(spec);
    if (spec.sizes.empty()) throw ConfigError("knn_learning_curve needs sizes");
    const ExperimentData data(spec);
    const auto noise = spec.noise_levels.empty() ? std::vector<double>{0.0, 0.1} : spec.noise_levels;
    const Eigen::Index largest = std::min(spec.sizes.back(), data.available());
    const Dataset pool = data.train(largest, detail::data_seed(spec, 0));
    const Dataset test = data.test(detail::test_seed(spec));
    std::vector<KernelConfig> kernels;
    for (const auto& ks : detail::kernels_or(spec, true)) kernels.push_back(resolve_kernel(ks, data));

    KnnLearningCurveResult out;
    for (Eigen::Index n : spec.sizes) {
        if (n > largest) continue;
        for (std::size_t ei = 0; ei < noise.size(); ++ei) {
            const Dataset train = head(flip_labels(pool, {noise[ei], detail::noise_seed(spec, ei, 0)}), n);
            for (const auto& cfg : kernels) {
                LearningCurveRow row{n, noise[ei], "interp_" + std::string(to_string(cfg.family))};
                try {
                    SolveOptions so;
                    so.jitter = JitterPolicy::escalate();
                    const auto [model, diag] = solve_direct_interpolant(train.features, train.targets, cfg, so);
                    row.test_ce = evaluate(model, test).ce;
                } catch (const Error& e) {
                    row.status = detail::error_status(e);
                }
                out.rows.push_back(row);
            }
            for (int k : spec.knn_k) {
                LearningCurveRow row{n, noise[ei], "knn_" + std::to_string(k)};
                try {
                    row.test_ce = classification_error(knn_predict(train, test.features, k), test.labels);
                } catch (const Error& e) {
                    row.status = detail::error_status(e);
                }
                out.rows.push_back(row);
            }
        }
    }
    CsvTable table({"n", "epsilon", "method", "test_ce", "status"});
    for (const auto& r : out.rows)
        table.add({CsvTable::num(static_cast<long long>(r.n)), CsvTable::num(r.epsilon), r.method,
                   CsvTable::num(r.test_ce), r.status});
    out.files.push_back(table.write(fs::path(spec.output_dir) / "knn_learning_curve.csv", spec_hash(spec)));
    return out;
}

/// Runs the experiment named in the spec; returns the written files.
inline std::vector<fs::path> run_experiment(const ExperimentSpec& spec) {
    switch (spec.name) {
        case ExperimentName::InterpVsSgd: return run_interp_vs_sgd(spec).files;
        case ExperimentName::NormVsN: return run_norm_vs_n(spec).files;
        case ExperimentName::NoiseSweep: return run_noise_sweep(spec).files;
        case ExperimentName::FitRandomLabels: return run_fit_random_labels(spec).files;
        case ExperimentName::KnnLearningCurve: return run_knn_learning_curve(spec).files;
    }
    return {};
}

}  // namespace kernel_lab
