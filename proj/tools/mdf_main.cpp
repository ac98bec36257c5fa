// Command-line front end: airfoil curve fitting, feature extraction, and the
// training / evaluation / cross-validation experiment pipeline.
#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mdf/errors.hpp"
#include "mdf/geometry.hpp"
#include "mdf/harness.hpp"
#include "mdf/io.hpp"
#include "mdf/mtl.hpp"
#include "mdf/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace mdf;

// ---------------------------------------------------------------------------
// Shared plumbing

/// Directories expand to their *.dat files (sorted); plain paths pass through.
std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const std::string& input : inputs) {
        if (fs::is_directory(input)) {
            std::vector<std::string> dir_files;
            for (const auto& entry : fs::directory_iterator(input)) {
                if (entry.is_regular_file() && entry.path().extension() == ".dat") {
                    dir_files.push_back(entry.path().string());
                }
            }
            std::sort(dir_files.begin(), dir_files.end());
            files.insert(files.end(), dir_files.begin(), dir_files.end());
        } else {
            files.push_back(input);
        }
    }
    return files;
}

/// Identifier used in every CSV/report: the file name without extension.
std::string stem_name(const std::string& path) {
    return fs::path(path).stem().string();
}

void run_parallel(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& task) {
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto pump = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            task(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(pump);
    for (auto& th : pool) th.join();
}

struct AnalysisOutcome {
    std::vector<std::pair<std::string, pipeline::AirfoilAnalysis>> ok;
    std::size_t failures = 0;
};

/// Runs the full analysis chain on every file; per-file errors go to stderr
/// and count as failures instead of aborting the batch.
AnalysisOutcome analyze_files(const std::vector<std::string>& files,
                              const pipeline::PipelineConfig& config, int jobs) {
    const std::size_t n = files.size();
    std::vector<std::optional<pipeline::AirfoilAnalysis>> slots(n);
    std::vector<std::string> errors(n);
    run_parallel(n, jobs, [&](std::size_t i) {
        try {
            const geometry::AirfoilCoordinates raw =
                geometry::load_airfoil_file(files[i]);
            slots[i] = pipeline::analyze(raw, config);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    AnalysisOutcome out;
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i].has_value()) {
            out.ok.emplace_back(stem_name(files[i]), std::move(*slots[i]));
        } else {
            std::cerr << files[i] << ": error: " << errors[i] << '\n';
            ++out.failures;
        }
    }
    return out;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
    } else {
        io::write_file_atomic(out_path, content);
    }
}

bezier::Continuity continuity_from_string(const std::string& s) {
    return s == "g1" ? bezier::Continuity::g1 : bezier::Continuity::c0;
}

// ---------------------------------------------------------------------------
// Option bags

struct CommonOpts {
    std::vector<std::string> inputs;
    int jobs = 1;
    pipeline::PipelineConfig pipe;
    std::string continuity = "c0";

    pipeline::PipelineConfig pipeline_config() const {
        pipeline::PipelineConfig cfg = pipe;
        cfg.continuity = continuity_from_string(continuity);
        return cfg;
    }
};

void add_input_option(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("files", opts.inputs,
                    "coordinate files, or directories of *.dat files")
        ->required();
}

void add_jobs_option(CLI::App* cmd, int& jobs) {
    cmd->add_option("--jobs,-j", jobs, "parallel workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_pipeline_options(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--segments", opts.pipe.num_segments,
                    "cubic segments in the final fit")
        ->capture_default_str();
    cmd->add_option("--feature-len", opts.pipe.feature_len,
                    "metric samples per airfoil")
        ->capture_default_str();
    cmd->add_option("--resample", opts.pipe.resample_m,
                    "outline points after resampling")
        ->capture_default_str();
    cmd->add_option("--continuity", opts.continuity,
                    "joint continuity of fitted curves (c0 or g1)")
        ->check(CLI::IsMember({"c0", "g1"}))
        ->capture_default_str();
}

void add_train_options(CLI::App* cmd, nn::TrainConfig& cfg) {
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate")
        ->capture_default_str();
    cmd->add_option("--beta1", cfg.beta1, "Adam first-moment decay")
        ->capture_default_str();
    cmd->add_option("--beta2", cfg.beta2, "Adam second-moment decay")
        ->capture_default_str();
    cmd->add_option("--adam-epsilon", cfg.epsilon, "Adam denominator epsilon")
        ->capture_default_str();
    cmd->add_option("--batch", cfg.batch_size, "minibatch size")
        ->capture_default_str();
    cmd->add_option("--epochs", cfg.epochs, "training epochs")
        ->capture_default_str();
}

mtl::FeatureKind default_features(mtl::ModelKind kind) {
    switch (kind) {
        case mtl::ModelKind::mdf: return mtl::FeatureKind::manifold;
        case mtl::ModelKind::mtl_g: return mtl::FeatureKind::geoparams;
        case mtl::ModelKind::mlp: return mtl::FeatureKind::coordinates;
        case mtl::ModelKind::ae2: return mtl::FeatureKind::manifold;
    }
    return mtl::FeatureKind::manifold;
}

struct SupervisedMatrices {
    Eigen::MatrixXd inputs;   ///< [features | conditions]
    Eigen::MatrixXd targets;  ///< cl, cd
    int feature_width = 0;
    int condition_width = 0;
};

SupervisedMatrices to_matrices(const harness::ExperimentDataset& dataset) {
    SupervisedMatrices m;
    const auto n = static_cast<Eigen::Index>(dataset.rows.size());
    const auto fw =
        static_cast<Eigen::Index>(dataset.rows.front().features.size());
    const std::vector<double> cv0 =
        mtl::condition_vector(dataset.rows.front().condition);
    const auto cw = static_cast<Eigen::Index>(cv0.size());
    m.inputs.resize(n, fw + cw);
    m.targets.resize(n, 2);
    m.feature_width = static_cast<int>(fw);
    m.condition_width = static_cast<int>(cw);
    for (Eigen::Index r = 0; r < n; ++r) {
        const harness::DatasetRow& row = dataset.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < fw; ++c) {
            m.inputs(r, c) = row.features[static_cast<std::size_t>(c)];
        }
        const std::vector<double> cv = mtl::condition_vector(row.condition);
        for (Eigen::Index c = 0; c < cw; ++c) {
            m.inputs(r, fw + c) = cv[static_cast<std::size_t>(c)];
        }
        m.targets(r, 0) = row.label.cl;
        m.targets(r, 1) = row.label.cd;
    }
    return m;
}

nn::Normalizer identity_normalizer(Eigen::Index width) {
    nn::Normalizer norm;
    norm.min = Eigen::VectorXd::Zero(width);
    norm.max = Eigen::VectorXd::Ones(width);
    return norm;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts : CommonOpts {
    std::string out_dir = ".";
};

int run_fit(const FitOpts& opts) {
    const std::vector<std::string> files = expand_inputs(opts.inputs);
    if (files.empty()) {
        std::cerr << "fit: no input files\n";
        return 2;
    }
    const pipeline::PipelineConfig cfg = opts.pipeline_config();

    const std::size_t n = files.size();
    std::vector<std::optional<double>> residuals(n);
    std::vector<std::string> errors(n);
    run_parallel(n, opts.jobs, [&](std::size_t i) {
        try {
            const geometry::AirfoilCoordinates raw =
                geometry::load_airfoil_file(files[i]);
            const pipeline::AirfoilAnalysis analysis = pipeline::analyze(raw, cfg);
            io::write_file_atomic(
                fs::path(opts.out_dir) / (stem_name(files[i]) + ".curve.json"),
                bezier::to_json(analysis.curve));
            residuals[i] = analysis.fit_rms;
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });

    std::size_t failures = 0;
    double max_residual = 0.0;
    std::size_t successes = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (residuals[i].has_value()) {
            std::cout << stem_name(files[i]) << " residual "
                      << io::format_double(*residuals[i]) << '\n';
            max_residual = std::max(max_residual, *residuals[i]);
            ++successes;
        } else {
            std::cerr << files[i] << ": error: " << errors[i] << '\n';
            ++failures;
        }
    }
    if (successes > 1) {
        std::cout << "max residual " << io::format_double(max_residual) << '\n';
    }
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// features / params / preprocess

struct TableOpts : CommonOpts {
    std::string out;  ///< empty = stdout
};

int run_features(const TableOpts& opts) {
    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    std::vector<std::pair<std::string, manifold::MetricVector>> rows;
    for (const auto& [name, analysis] : outcome.ok) {
        rows.emplace_back(name, analysis.features);
    }
    if (!rows.empty()) emit(opts.out, manifold::features_csv(rows));
    return outcome.failures == 0 && !rows.empty() ? 0 : 1;
}

int run_params(const TableOpts& opts) {
    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    std::vector<std::pair<std::string, geoparams::GeometricParameters>> rows;
    for (const auto& [name, analysis] : outcome.ok) {
        rows.emplace_back(name, analysis.params);
    }
    if (!rows.empty()) emit(opts.out, geoparams::params_csv(rows));
    return outcome.failures == 0 && !rows.empty() ? 0 : 1;
}

struct PreprocessOpts {
    std::vector<std::string> inputs;
    std::string out_dir = ".";
};

int run_preprocess(const PreprocessOpts& opts) {
    const std::vector<std::string> files = expand_inputs(opts.inputs);
    std::size_t failures = 0;
    for (const std::string& file : files) {
        try {
            const geometry::AirfoilCoordinates canon =
                geometry::preprocess(geometry::load_airfoil_file(file));
            io::write_file_atomic(
                fs::path(opts.out_dir) / (stem_name(file) + ".canonical.csv"),
                geometry::to_canonical_csv(canon));
        } catch (const std::exception& e) {
            std::cerr << file << ": error: " << e.what() << '\n';
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// gen-synthetic

struct GenOpts : CommonOpts {
    std::size_t n = 500;
    std::uint64_t seed = 0;
    std::string out;
};

int run_gen_synthetic(const GenOpts& opts) {
    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    if (outcome.ok.empty()) {
        std::cerr << "gen-synthetic: no airfoils analyzed successfully\n";
        return 1;
    }
    std::vector<std::pair<std::string, geoparams::GeometricParameters>> airfoils;
    for (const auto& [name, analysis] : outcome.ok) {
        airfoils.emplace_back(name, analysis.params);
    }
    const std::vector<harness::LabeledCondition> labels =
        harness::generate_synthetic_labels(airfoils, opts.n, opts.seed);
    emit(opts.out, harness::labels_csv(labels));
    return outcome.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// train

struct TrainOpts : CommonOpts {
    std::string kind = "mdf";
    std::string labels_path;
    std::string features;  ///< empty = per-model default
    std::string out = "model.json";
    std::uint64_t seed = 0;
    nn::TrainConfig train;
};

int run_train(const TrainOpts& opts) {
    const mtl::ModelKind kind = mtl::model_kind_from_string(opts.kind);
    const mtl::FeatureKind features =
        opts.features.empty() ? default_features(kind)
                              : mtl::feature_kind_from_string(opts.features);
    if (kind != mtl::ModelKind::ae2 && opts.labels_path.empty()) {
        std::cerr << "train: --labels is required for supervised models\n";
        return 2;
    }

    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    if (outcome.ok.empty()) {
        std::cerr << "train: no airfoils analyzed successfully\n";
        return 1;
    }

    nn::TrainConfig train_cfg = opts.train;
    train_cfg.seed = derive_seed(opts.seed, 0, 0, 2);
    Rng init_rng(derive_seed(opts.seed, 0, 0, 1));

    mtl::ModelFile model;
    model.kind = kind;
    model.feature_kind = features;

    if (kind == mtl::ModelKind::ae2) {
        const harness::AeDataset ds = harness::build_ae_dataset(outcome.ok);
        const auto n = static_cast<Eigen::Index>(ds.rows.size());
        const auto fw = static_cast<Eigen::Index>(ds.rows.front().features.size());
        const auto tw =
            static_cast<Eigen::Index>(ds.rows.front().coordinates.size());
        Eigen::MatrixXd x(n, fw), y(n, tw);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = ds.rows[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < fw; ++c) {
                x(r, c) = row.features[static_cast<std::size_t>(c)];
            }
            for (Eigen::Index c = 0; c < tw; ++c) {
                y(r, c) = row.coordinates[static_cast<std::size_t>(c)];
            }
        }
        model.feature_width = static_cast<int>(fw);
        model.condition_width = 0;
        model.input_norm = nn::fit_normalizer(x);
        model.target_norm = identity_normalizer(tw);
        const Eigen::MatrixXd xn = nn::apply(model.input_norm, x);
        mtl::AutoencoderArchitecture arch;
        arch.feature_width = static_cast<int>(fw);
        arch.coord_points = static_cast<int>(tw / 2);
        model.net = mtl::make_autoencoder(arch, init_rng);
        const nn::TrainResult tr =
            nn::train_network(model.net, xn, y, nullptr, nullptr, train_cfg);
        if (!tr.train_loss.empty()) {
            std::cout << "final train loss "
                      << io::format_double(tr.train_loss.back()) << '\n';
        }
    } else {
        const std::vector<harness::LabeledCondition> labels =
            harness::parse_labels_csv(io::read_file(opts.labels_path));
        const harness::ExperimentDataset ds =
            harness::build_dataset(outcome.ok, labels, features);
        const SupervisedMatrices m = to_matrices(ds);
        model.feature_width = m.feature_width;
        model.condition_width = m.condition_width;
        model.input_norm = nn::fit_normalizer(m.inputs);
        model.target_norm = nn::fit_normalizer(m.targets);
        const Eigen::MatrixXd xn = nn::apply(model.input_norm, m.inputs);
        const Eigen::MatrixXd yn = nn::apply(model.target_norm, m.targets);

        std::vector<double> train_loss;
        if (kind == mtl::ModelKind::mlp) {
            model.net = mtl::make_mlp(m.feature_width + m.condition_width,
                                      static_cast<int>(m.targets.cols()), init_rng);
            train_loss =
                nn::train_network(model.net, xn, yn, nullptr, nullptr, train_cfg)
                    .train_loss;
        } else {
            mtl::MdfArchitecture arch = kind == mtl::ModelKind::mdf
                                            ? mtl::mdf_architecture(m.feature_width)
                                            : mtl::mtl_g_architecture();
            arch.feature_width = m.feature_width;
            arch.condition_width = m.condition_width;
            model.fused = mtl::make_mdf_model(arch, init_rng);
            train_loss = mtl::train_fused(model.fused, xn.leftCols(m.feature_width),
                                          xn.rightCols(m.condition_width), yn,
                                          nullptr, nullptr, nullptr, train_cfg)
                             .train_loss;
        }
        if (!train_loss.empty()) {
            std::cout << "final train loss "
                      << io::format_double(train_loss.back()) << '\n';
        }
    }

    io::write_file_atomic(opts.out, mtl::to_json(model));
    std::cout << "wrote " << opts.out << '\n';
    return outcome.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts : CommonOpts {
    std::string model_path;
    std::string labels_path;
    std::string out;
    std::string predictions;
};

int run_eval(const EvalOpts& opts) {
    mtl::ModelFile model = mtl::model_from_json(io::read_file(opts.model_path));
    if (model.kind != mtl::ModelKind::ae2 && opts.labels_path.empty()) {
        std::cerr << "eval: --labels is required for supervised models\n";
        return 2;
    }

    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    if (outcome.ok.empty()) {
        std::cerr << "eval: no airfoils analyzed successfully\n";
        return 1;
    }

    harness::Metrics metrics;
    std::vector<std::string> output_names;
    std::string predictions_csv;

    if (model.kind == mtl::ModelKind::ae2) {
        const harness::AeDataset ds = harness::build_ae_dataset(outcome.ok);
        const auto n = static_cast<Eigen::Index>(ds.rows.size());
        const auto fw = static_cast<Eigen::Index>(ds.rows.front().features.size());
        const auto tw =
            static_cast<Eigen::Index>(ds.rows.front().coordinates.size());
        Eigen::MatrixXd x(n, fw), y(n, tw);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = ds.rows[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < fw; ++c) {
                x(r, c) = row.features[static_cast<std::size_t>(c)];
            }
            for (Eigen::Index c = 0; c < tw; ++c) {
                y(r, c) = row.coordinates[static_cast<std::size_t>(c)];
            }
        }
        const Eigen::MatrixXd xn = nn::apply(model.input_norm, x);
        const Eigen::MatrixXd pred =
            nn::unapply(model.target_norm,
                        nn::forward(model.net, xn, nn::Mode::eval));
        metrics = harness::compute_metrics(pred, y);
    } else {
        const std::vector<harness::LabeledCondition> labels =
            harness::parse_labels_csv(io::read_file(opts.labels_path));
        const harness::ExperimentDataset ds =
            harness::build_dataset(outcome.ok, labels, model.feature_kind);
        const SupervisedMatrices m = to_matrices(ds);
        const Eigen::MatrixXd xn = nn::apply(model.input_norm, m.inputs);
        Eigen::MatrixXd pred_n;
        if (model.kind == mtl::ModelKind::mlp) {
            pred_n = nn::forward(model.net, xn, nn::Mode::eval);
        } else {
            pred_n = mtl::fused_forward(model.fused, xn.leftCols(m.feature_width),
                                        xn.rightCols(m.condition_width),
                                        nn::Mode::eval);
        }
        const Eigen::MatrixXd pred = nn::unapply(model.target_norm, pred_n);
        metrics = harness::compute_metrics(pred, m.targets);
        output_names = {"cl", "cd"};

        predictions_csv = "name,mach,alpha,true_cl,true_cd,pred_cl,pred_cd\n";
        for (std::size_t r = 0; r < ds.rows.size(); ++r) {
            const harness::DatasetRow& row = ds.rows[r];
            const auto i = static_cast<Eigen::Index>(r);
            predictions_csv += row.name + ',' +
                               io::format_double(row.condition.mach) + ',' +
                               io::format_double(row.condition.alpha) + ',' +
                               io::format_double(row.label.cl) + ',' +
                               io::format_double(row.label.cd) + ',' +
                               io::format_double(pred(i, 0)) + ',' +
                               io::format_double(pred(i, 1)) + '\n';
        }
    }

    nlohmann::json report;
    report["model"] = mtl::to_string(model.kind);
    report["feature_kind"] = mtl::to_string(model.feature_kind);
    report["rows"] = outcome.ok.size();
    report["mse"] = metrics.mse;
    report["mae"] = metrics.mae;
    if (output_names.size() == metrics.mse_per_output.size()) {
        nlohmann::json per;
        for (std::size_t i = 0; i < output_names.size(); ++i) {
            per[output_names[i]] = {{"mse", metrics.mse_per_output[i]},
                                    {"mae", metrics.mae_per_output[i]}};
        }
        report["per_output"] = std::move(per);
    }
    emit(opts.out, report.dump(1) + "\n");
    if (!opts.predictions.empty() && !predictions_csv.empty()) {
        io::write_file_atomic(opts.predictions, predictions_csv);
    }
    return outcome.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentOpts : CommonOpts {
    std::string kind = "mdf";
    std::string labels_path;
    std::string features;
    std::string out_dir = ".";
    int rounds = 1;
    std::uint64_t seed = 0;
    nn::TrainConfig train;
};

int run_experiment_cmd(const ExperimentOpts& opts) {
    const mtl::ModelKind kind = mtl::model_kind_from_string(opts.kind);
    const mtl::FeatureKind features =
        opts.features.empty() ? default_features(kind)
                              : mtl::feature_kind_from_string(opts.features);
    if (kind != mtl::ModelKind::ae2 && opts.labels_path.empty()) {
        std::cerr << "experiment: --labels is required for supervised models\n";
        return 2;
    }

    const std::vector<std::string> files = expand_inputs(opts.inputs);
    const AnalysisOutcome outcome =
        analyze_files(files, opts.pipeline_config(), opts.jobs);
    if (outcome.ok.empty()) {
        std::cerr << "experiment: no airfoils analyzed successfully\n";
        return 1;
    }

    harness::ExperimentConfig config;
    config.model = kind;
    config.rounds = opts.rounds;
    config.train = opts.train;
    config.seed = opts.seed;
    config.jobs = opts.jobs;

    harness::ExperimentReport report;
    if (kind == mtl::ModelKind::ae2) {
        report = harness::run_ae_experiment(harness::build_ae_dataset(outcome.ok),
                                            config);
    } else {
        const std::vector<harness::LabeledCondition> labels =
            harness::parse_labels_csv(io::read_file(opts.labels_path));
        report = harness::run_experiment(
            harness::build_dataset(outcome.ok, labels, features), config);
    }

    const fs::path dir(opts.out_dir);
    io::write_file_atomic(dir / "report.json", harness::report_to_json(report));
    io::write_file_atomic(dir / "metrics.csv", harness::report_metrics_csv(report));
    io::write_file_atomic(dir / "loss.csv", harness::report_loss_csv(report));
    io::write_file_atomic(dir / "predictions.csv",
                          harness::report_predictions_csv(report));

    double baseline = 0.0;
    for (const harness::FoldResult& fr : report.fold_results) {
        baseline += fr.baseline_test_mse;
    }
    baseline /= static_cast<double>(report.fold_results.size());
    std::cout << "mean test MSE " << io::format_double(harness::mean_test_mse(report))
              << " (train-mean baseline " << io::format_double(baseline) << ")\n"
              << "wrote " << (dir / "report.json").string() << '\n';
    return outcome.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Airfoil geometry, manifold features, and multi-task aerodynamic "
        "surrogates.\n"
        "Training defaults: Adam (beta1=0.9, beta2=0.999), max-min data\n"
        "normalization, ReLU activations, batch normalization on, batch size\n"
        "128, learning rate 0.001, 2000 epochs; experiments use 10-fold\n"
        "cross validation (train:validation:test = 8:1:1).\n"
        "Exit codes: 0 success, 1 partial failure, 2 invalid invocation."};
    app.require_subcommand(1);
    app.set_config("--config", "",
                   "read options from a TOML-style key=value file (flags win)");

    int rc = 0;

    FitOpts fit_opts;
    CLI::App* fit = app.add_subcommand(
        "fit", "fit segmented cubic curves, write one JSON per airfoil");
    add_input_option(fit, fit_opts);
    add_pipeline_options(fit, fit_opts);
    add_jobs_option(fit, fit_opts.jobs);
    fit->add_option("--out-dir", fit_opts.out_dir, "output directory")
        ->capture_default_str();
    fit->callback([&] { rc = run_fit(fit_opts); });

    TableOpts features_opts;
    CLI::App* features = app.add_subcommand(
        "features", "extract manifold-metric feature rows to CSV");
    add_input_option(features, features_opts);
    add_pipeline_options(features, features_opts);
    add_jobs_option(features, features_opts.jobs);
    features->add_option("--out", features_opts.out, "output CSV (default stdout)");
    features->callback([&] { rc = run_features(features_opts); });

    TableOpts params_opts;
    CLI::App* params = app.add_subcommand(
        "params", "extract the 7 geometric parameters to CSV");
    add_input_option(params, params_opts);
    add_pipeline_options(params, params_opts);
    add_jobs_option(params, params_opts.jobs);
    params->add_option("--out", params_opts.out, "output CSV (default stdout)");
    params->callback([&] { rc = run_params(params_opts); });

    PreprocessOpts preprocess_opts;
    CLI::App* preprocess = app.add_subcommand(
        "preprocess", "canonicalize coordinate files to CSV outlines");
    preprocess->add_option("files", preprocess_opts.inputs,
                           "coordinate files, or directories of *.dat files")
        ->required();
    preprocess->add_option("--out-dir", preprocess_opts.out_dir, "output directory")
        ->capture_default_str();
    preprocess->callback([&] { rc = run_preprocess(preprocess_opts); });

    GenOpts gen_opts;
    CLI::App* gen = app.add_subcommand(
        "gen-synthetic",
        "sample flight conditions and surrogate cl/cd labels over airfoils");
    add_input_option(gen, gen_opts);
    add_pipeline_options(gen, gen_opts);
    add_jobs_option(gen, gen_opts.jobs);
    gen->add_option("--n", gen_opts.n, "number of labeled rows")
        ->capture_default_str();
    gen->add_option("--seed", gen_opts.seed, "sampling seed")
        ->capture_default_str();
    gen->add_option("--out", gen_opts.out, "output CSV (default stdout)");
    gen->callback([&] { rc = run_gen_synthetic(gen_opts); });

    TrainOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "train one model on all rows");
    train->add_option("kind", train_opts.kind, "model kind")
        ->required()
        ->check(CLI::IsMember({"mdf", "mlp", "mtl_g", "ae2"}));
    add_input_option(train, train_opts);
    add_pipeline_options(train, train_opts);
    add_jobs_option(train, train_opts.jobs);
    add_train_options(train, train_opts.train);
    train->add_option("--labels", train_opts.labels_path, "label CSV");
    train->add_option("--features", train_opts.features,
                      "feature kind override (manifold, coordinates, geoparams)")
        ->check(CLI::IsMember({"manifold", "coordinates", "geoparams"}));
    train->add_option("--out", train_opts.out, "model file")
        ->capture_default_str();
    train->add_option("--seed", train_opts.seed, "master seed")
        ->capture_default_str();
    train->callback([&] { rc = run_train(train_opts); });

    EvalOpts eval_opts;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a trained model file");
    eval->add_option("--model", eval_opts.model_path, "model JSON file")
        ->required();
    add_input_option(eval, eval_opts);
    add_pipeline_options(eval, eval_opts);
    add_jobs_option(eval, eval_opts.jobs);
    eval->add_option("--labels", eval_opts.labels_path, "label CSV");
    eval->add_option("--out", eval_opts.out, "report JSON (default stdout)");
    eval->add_option("--predictions", eval_opts.predictions,
                     "optional per-row prediction CSV");
    eval->callback([&] { rc = run_eval(eval_opts); });

    ExperimentOpts exp_opts;
    CLI::App* experiment = app.add_subcommand(
        "experiment", "repeated 10-fold cross-validation benchmark");
    experiment->add_option("kind", exp_opts.kind, "model kind")
        ->required()
        ->check(CLI::IsMember({"mdf", "mlp", "mtl_g", "ae2"}));
    add_input_option(experiment, exp_opts);
    add_pipeline_options(experiment, exp_opts);
    add_jobs_option(experiment, exp_opts.jobs);
    add_train_options(experiment, exp_opts.train);
    experiment->add_option("--labels", exp_opts.labels_path, "label CSV");
    experiment->add_option("--features", exp_opts.features,
                           "feature kind override (manifold, coordinates, geoparams)")
        ->check(CLI::IsMember({"manifold", "coordinates", "geoparams"}));
    experiment->add_option("--rounds", exp_opts.rounds, "cross-validation rounds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    experiment->add_option("--out-dir", exp_opts.out_dir, "report directory")
        ->capture_default_str();
    experiment->add_option("--seed", exp_opts.seed, "master seed")
        ->capture_default_str();
    experiment->callback([&] { rc = run_experiment_cmd(exp_opts); });

    // Let global options (--config) appear after the subcommand name too.
    for (CLI::App* sub : app.get_subcommands(nullptr)) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const mdf::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
