#include "mdf/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <set>
#include <thread>
#include <tuple>

#include <nlohmann/json.hpp>

#include "mdf/errors.hpp"
#include "mdf/io.hpp"

namespace mdf::harness {

namespace {

double parse_field(const std::string& tok, std::size_t line_no) {
    double v = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) +
                             ": expected a real number, got \"" + tok + "\"",
                         line_no);
    }
    return v;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m,
                          const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.row(static_cast<Eigen::Index>(r)) =
            m.row(static_cast<Eigen::Index>(idx[r]));
    }
    return out;
}

std::vector<double> flatten_coordinates(const std::vector<Vec2>& pts) {
    std::vector<double> flat;
    flat.reserve(pts.size() * 2);
    for (const Vec2 p : pts) {
        flat.push_back(p.x);
        flat.push_back(p.y);
    }
    return flat;
}

// Everything a fold worker needs, shared read-only across threads.
struct MatrixDataset {
    Eigen::MatrixXd inputs;      ///< [features | conditions], n x (F + C)
    Eigen::MatrixXd targets;     ///< n x K, physical units
    Eigen::MatrixXd conditions;  ///< n x C, raw copy for reporting
    std::vector<std::string> names;
    int feature_width = 0;
    int condition_width = 0;
};

FoldResult run_one_fold(const MatrixDataset& data, const FoldPlan& plan,
                        int round, int fold, const ExperimentConfig& config) {
    const SplitIndices split = fold_split(plan, fold);
    const Eigen::MatrixXd train_in = take_rows(data.inputs, split.train);
    const Eigen::MatrixXd val_in = take_rows(data.inputs, split.validation);
    const Eigen::MatrixXd test_in = take_rows(data.inputs, split.test);
    const Eigen::MatrixXd train_y = take_rows(data.targets, split.train);
    const Eigen::MatrixXd val_y = take_rows(data.targets, split.validation);
    const Eigen::MatrixXd test_y = take_rows(data.targets, split.test);

    // Normalization statistics come from the training rows only.
    const nn::Normalizer in_norm = nn::fit_normalizer(train_in);
    const nn::Normalizer out_norm = nn::fit_normalizer(train_y);
    const Eigen::MatrixXd train_in_n = nn::apply(in_norm, train_in);
    const Eigen::MatrixXd val_in_n = nn::apply(in_norm, val_in);
    const Eigen::MatrixXd test_in_n = nn::apply(in_norm, test_in);
    const Eigen::MatrixXd train_y_n = nn::apply(out_norm, train_y);
    const Eigen::MatrixXd val_y_n = nn::apply(out_norm, val_y);

    Rng init_rng(derive_seed(config.seed, static_cast<std::uint64_t>(round),
                             static_cast<std::uint64_t>(fold), 1));
    nn::TrainConfig train_cfg = config.train;
    train_cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(round),
                                 static_cast<std::uint64_t>(fold), 2);

    FoldResult result;
    result.round = round;
    result.fold = fold;

    const int fw = data.feature_width;
    const int cw = data.condition_width;
    Eigen::MatrixXd pred_test_n, pred_val_n;

    if (config.model == mtl::ModelKind::mdf ||
        config.model == mtl::ModelKind::mtl_g) {
        mtl::MdfArchitecture arch = config.model == mtl::ModelKind::mdf
                                        ? mtl::mdf_architecture(fw)
                                        : mtl::mtl_g_architecture();
        arch.feature_width = fw;
        arch.condition_width = cw;
        mtl::MdfModel model = mtl::make_mdf_model(arch, init_rng);

        const Eigen::MatrixXd tr1 = train_in_n.leftCols(fw);
        const Eigen::MatrixXd tr2 = train_in_n.rightCols(cw);
        const Eigen::MatrixXd va1 = val_in_n.leftCols(fw);
        const Eigen::MatrixXd va2 = val_in_n.rightCols(cw);
        const mtl::FusedTrainResult tr = mtl::train_fused(
            model, tr1, tr2, train_y_n, &va1, &va2, &val_y_n, train_cfg);
        result.train_loss = tr.train_loss;
        result.val_loss = tr.val_loss;

        pred_test_n = mtl::fused_forward(model, test_in_n.leftCols(fw),
                                         test_in_n.rightCols(cw), nn::Mode::eval);
        pred_val_n = mtl::fused_forward(model, va1, va2, nn::Mode::eval);
    } else if (config.model == mtl::ModelKind::mlp) {
        nn::DenseNetwork net =
            mtl::make_mlp(fw + cw, static_cast<int>(data.targets.cols()), init_rng);
        const nn::TrainResult tr = nn::train_network(net, train_in_n, train_y_n,
                                                     &val_in_n, &val_y_n, train_cfg);
        result.train_loss = tr.train_loss;
        result.val_loss = tr.val_loss;
        pred_test_n = nn::forward(net, test_in_n, nn::Mode::eval);
        pred_val_n = nn::forward(net, val_in_n, nn::Mode::eval);
    } else {
        throw DomainError("run_experiment does not handle model kind \"" +
                          mtl::to_string(config.model) +
                          "\"; use run_ae_experiment for the autoencoder");
    }

    const Eigen::MatrixXd pred_test = nn::unapply(out_norm, pred_test_n);
    const Eigen::MatrixXd pred_val = nn::unapply(out_norm, pred_val_n);
    result.test = compute_metrics(pred_test, test_y);
    result.validation = compute_metrics(pred_val, val_y);

    // Reference predictor: the training-target mean, in physical units.
    const Eigen::RowVectorXd train_mean = train_y.colwise().mean();
    const Eigen::MatrixXd baseline =
        train_mean.replicate(test_y.rows(), 1);
    result.baseline_test_mse = compute_metrics(baseline, test_y).mse;

    for (const std::size_t i : split.test) result.test_names.push_back(data.names[i]);
    result.test_conditions = take_rows(data.conditions, split.test);
    result.test_predictions = pred_test;
    result.test_truths = test_y;
    return result;
}

// Dispatches rounds x folds tasks over `jobs` workers; results land in
// fixed slots so the report is identical no matter the worker count.
std::vector<FoldResult> run_all_folds(const MatrixDataset& data,
                                      const ExperimentConfig& config) {
    if (config.rounds < 1) throw DomainError("experiment needs rounds >= 1");
    nn::validate(config.train);

    const auto n = static_cast<std::size_t>(data.inputs.rows());
    std::vector<FoldPlan> plans;
    plans.reserve(static_cast<std::size_t>(config.rounds));
    for (int r = 0; r < config.rounds; ++r) {
        plans.push_back(kfold_plan(
            n, derive_seed(config.seed, static_cast<std::uint64_t>(r), 0, 0)));
    }

    const std::size_t total =
        static_cast<std::size_t>(config.rounds) * kNumFolds;
    std::vector<FoldResult> results(total);
    std::vector<std::exception_ptr> failures(total);

    const int jobs = std::max(1, config.jobs);
    auto worker_body = [&](std::size_t task) {
        const int round = static_cast<int>(task) / kNumFolds;
        const int fold = static_cast<int>(task) % kNumFolds;
        try {
            results[task] = run_one_fold(data, plans[static_cast<std::size_t>(round)],
                                         round, fold, config);
        } catch (...) {
            failures[task] = std::current_exception();
        }
    };

    if (jobs == 1) {
        for (std::size_t task = 0; task < total; ++task) worker_body(task);
    } else {
        std::atomic<std::size_t> next{0};
        auto pump = [&] {
            for (std::size_t task = next.fetch_add(1); task < total;
                 task = next.fetch_add(1)) {
                worker_body(task);
            }
        };
        std::vector<std::thread> pool;
        const std::size_t workers =
            std::min<std::size_t>(static_cast<std::size_t>(jobs), total);
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(pump);
        for (auto& th : pool) th.join();
    }

    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }
    return results;
}

}  // namespace

void validate(const ExperimentDataset& dataset) {
    if (dataset.rows.empty()) throw DataError("dataset has no rows");
    const std::size_t f = dataset.rows.front().features.size();
    if (f == 0) throw DataError("dataset rows have empty feature vectors");
    const std::size_t c =
        mtl::condition_vector(dataset.rows.front().condition).size();
    std::set<std::tuple<std::string, double, double, double>> seen;
    for (const DatasetRow& row : dataset.rows) {
        if (row.features.size() != f) {
            throw ShapeError("dataset feature lengths disagree: " +
                             std::to_string(row.features.size()) + " vs " +
                             std::to_string(f));
        }
        const std::vector<double> cv = mtl::condition_vector(row.condition);
        if (cv.size() != c) {
            throw ShapeError("dataset condition widths disagree");
        }
        for (const double v : row.features) {
            if (!std::isfinite(v)) {
                throw DataError("row \"" + row.name + "\" has non-finite features");
            }
        }
        if (!std::isfinite(row.label.cl) || !std::isfinite(row.label.cd)) {
            throw DataError("row \"" + row.name + "\" has non-finite labels");
        }
        const auto key = std::make_tuple(row.name, row.condition.mach,
                                         row.condition.alpha,
                                         row.condition.roll.value_or(0.0));
        if (!seen.insert(key).second) {
            throw DataError("duplicate (name, condition) pair for \"" + row.name +
                            "\"");
        }
    }
}

FoldPlan kfold_plan(std::size_t n, std::uint64_t seed) {
    if (n < kNumFolds) {
        throw DataError("k-fold plan needs at least " +
                        std::to_string(kNumFolds) + " rows, got " +
                        std::to_string(n));
    }
    Rng rng(seed);
    const std::vector<std::size_t> order = rng.permutation(n);

    FoldPlan plan;
    plan.seed = seed;
    plan.subsets.resize(kNumFolds);
    const std::size_t base = n / kNumFolds;
    const std::size_t rem = n % kNumFolds;
    std::size_t cursor = 0;
    for (std::size_t s = 0; s < kNumFolds; ++s) {
        const std::size_t size = base + (s < rem ? 1 : 0);
        plan.subsets[s].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                               order.begin() +
                                   static_cast<std::ptrdiff_t>(cursor + size));
        cursor += size;
    }
    return plan;
}

SplitIndices fold_split(const FoldPlan& plan, int fold) {
    if (fold < 0 || fold >= static_cast<int>(plan.subsets.size())) {
        throw DomainError("fold index out of range: " + std::to_string(fold));
    }
    const auto k = plan.subsets.size();
    const auto f = static_cast<std::size_t>(fold);
    SplitIndices split;
    split.test = plan.subsets[f];
    split.validation = plan.subsets[(f + 1) % k];
    for (std::size_t s = 0; s < k; ++s) {
        if (s == f || s == (f + 1) % k) continue;
        split.train.insert(split.train.end(), plan.subsets[s].begin(),
                           plan.subsets[s].end());
    }
    return split;
}

Metrics compute_metrics(const Eigen::MatrixXd& pred,
                        const Eigen::MatrixXd& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw ShapeError("metrics shapes disagree");
    }
    if (pred.size() == 0) throw DataError("metrics on empty matrices");

    Metrics m;
    const Eigen::MatrixXd diff = pred - truth;
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
        m.mse_per_output.push_back(diff.col(c).array().square().mean());
        m.mae_per_output.push_back(diff.col(c).array().abs().mean());
    }
    m.mse = diff.array().square().mean();
    m.mae = diff.array().abs().mean();
    return m;
}

double error_reduction_eta(double sigma_ref, double sigma_new) {
    if (sigma_ref == 0.0) {
        throw DomainError("error reduction is undefined for a zero reference");
    }
    return std::abs(sigma_ref - sigma_new) / std::abs(sigma_ref) * 100.0;
}

mtl::AeroLabel synthetic_labels(const geoparams::GeometricParameters& params,
                                const mtl::FlightCondition& cond) {
    if (!(cond.mach >= 0.0) || cond.mach >= 1.0) {
        throw DomainError("surrogate labels need 0 <= mach < 1, got " +
                          std::to_string(cond.mach));
    }
    const double alpha_rad = cond.alpha * std::numbers::pi / 180.0;
    const double pg = 1.0 / std::sqrt(1.0 - cond.mach * cond.mach);
    mtl::AeroLabel label;
    label.cl = 2.0 * std::numbers::pi * (alpha_rad + 2.0 * params.max_camber) * pg;
    label.cd = 0.006 + 0.02 * params.max_thickness + 0.05 * label.cl * label.cl;
    return label;
}

std::vector<LabeledCondition> parse_labels_csv(const std::string& text) {
    const auto rows = io::parse_csv(text);
    if (rows.empty()) throw ParseError("label CSV is empty", 1);
    const std::vector<std::string> header{"name", "mach", "alpha", "cl", "cd"};
    if (rows[0] != header) {
        throw ParseError("label CSV must start with header name,mach,alpha,cl,cd",
                         1);
    }
    std::vector<LabeledCondition> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::size_t line_no = i + 1;
        if (row.size() != 5) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                                 std::to_string(row.size()),
                             line_no);
        }
        LabeledCondition lc;
        lc.name = row[0];
        lc.condition.mach = parse_field(row[1], line_no);
        lc.condition.alpha = parse_field(row[2], line_no);
        lc.label.cl = parse_field(row[3], line_no);
        lc.label.cd = parse_field(row[4], line_no);
        out.push_back(std::move(lc));
    }
    return out;
}

std::string labels_csv(const std::vector<LabeledCondition>& rows) {
    std::string csv = "name,mach,alpha,cl,cd\n";
    for (const LabeledCondition& lc : rows) {
        csv += lc.name;
        csv += ',';
        csv += io::format_double(lc.condition.mach);
        csv += ',';
        csv += io::format_double(lc.condition.alpha);
        csv += ',';
        csv += io::format_double(lc.label.cl);
        csv += ',';
        csv += io::format_double(lc.label.cd);
        csv += '\n';
    }
    return csv;
}

std::vector<LabeledCondition> generate_synthetic_labels(
    const std::vector<std::pair<std::string, geoparams::GeometricParameters>>&
        airfoils,
    std::size_t rows, std::uint64_t seed) {
    if (airfoils.empty()) {
        throw DataError("synthetic labels need at least one airfoil");
    }
    Rng rng(seed);
    std::vector<LabeledCondition> out;
    out.reserve(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto& [name, params] = airfoils[i % airfoils.size()];
        LabeledCondition lc;
        lc.name = name;
        lc.condition.mach = rng.uniform(0.1, 0.6);
        lc.condition.alpha = rng.uniform(-4.0, 8.0);
        lc.label = synthetic_labels(params, lc.condition);
        out.push_back(std::move(lc));
    }
    return out;
}

ExperimentDataset build_dataset(
    const std::vector<std::pair<std::string, pipeline::AirfoilAnalysis>>& analyses,
    const std::vector<LabeledCondition>& labels, mtl::FeatureKind kind) {
    std::map<std::string, const pipeline::AirfoilAnalysis*> by_name;
    for (const auto& [name, analysis] : analyses) by_name[name] = &analysis;

    ExperimentDataset dataset;
    dataset.feature_kind = kind;
    dataset.rows.reserve(labels.size());
    for (const LabeledCondition& lc : labels) {
        const auto it = by_name.find(lc.name);
        if (it == by_name.end()) {
            throw DataError("label row names unknown airfoil \"" + lc.name + "\"");
        }
        DatasetRow row;
        row.name = lc.name;
        row.condition = lc.condition;
        row.label = lc.label;
        switch (kind) {
            case mtl::FeatureKind::manifold:
                row.features = it->second->features.values;
                break;
            case mtl::FeatureKind::coordinates:
                row.features = flatten_coordinates(it->second->canonical.points);
                break;
            case mtl::FeatureKind::geoparams:
                row.features = geoparams::to_feature_vector(it->second->params);
                break;
        }
        dataset.rows.push_back(std::move(row));
    }
    validate(dataset);
    return dataset;
}

AeDataset build_ae_dataset(
    const std::vector<std::pair<std::string, pipeline::AirfoilAnalysis>>& analyses) {
    if (analyses.empty()) throw DataError("autoencoder dataset has no airfoils");
    AeDataset dataset;
    const std::size_t coords =
        analyses.front().second.canonical.points.size() * 2;
    for (const auto& [name, analysis] : analyses) {
        AeDataset::Row row;
        row.name = name;
        row.features = analysis.features.values;
        row.coordinates = flatten_coordinates(analysis.canonical.points);
        if (row.coordinates.size() != coords) {
            throw ShapeError("airfoil \"" + name +
                             "\" resampled to a different outline length");
        }
        dataset.rows.push_back(std::move(row));
    }
    return dataset;
}

ExperimentReport run_experiment(const ExperimentDataset& dataset,
                                const ExperimentConfig& config) {
    validate(dataset);
    if (config.model == mtl::ModelKind::ae2) {
        throw DomainError("run_experiment does not handle the autoencoder; "
                          "use run_ae_experiment");
    }

    MatrixDataset data;
    const auto n = static_cast<Eigen::Index>(dataset.rows.size());
    const auto fw = static_cast<Eigen::Index>(dataset.rows.front().features.size());
    const std::vector<double> cv0 =
        mtl::condition_vector(dataset.rows.front().condition);
    const auto cw = static_cast<Eigen::Index>(cv0.size());
    data.inputs.resize(n, fw + cw);
    data.targets.resize(n, 2);
    data.conditions.resize(n, cw);
    data.feature_width = static_cast<int>(fw);
    data.condition_width = static_cast<int>(cw);
    for (Eigen::Index r = 0; r < n; ++r) {
        const DatasetRow& row = dataset.rows[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < fw; ++c) {
            data.inputs(r, c) = row.features[static_cast<std::size_t>(c)];
        }
        const std::vector<double> cv = mtl::condition_vector(row.condition);
        for (Eigen::Index c = 0; c < cw; ++c) {
            data.inputs(r, fw + c) = cv[static_cast<std::size_t>(c)];
            data.conditions(r, c) = cv[static_cast<std::size_t>(c)];
        }
        data.targets(r, 0) = row.label.cl;
        data.targets(r, 1) = row.label.cd;
        data.names.push_back(row.name);
    }

    ExperimentReport report;
    report.model = mtl::to_string(config.model);
    report.feature_kind = mtl::to_string(dataset.feature_kind);
    report.rounds = config.rounds;
    report.folds = kNumFolds;
    report.seed = config.seed;
    report.train = config.train;
    report.output_names = {"cl", "cd"};
    report.fold_results = run_all_folds(data, config);
    return report;
}

ExperimentReport run_ae_experiment(const AeDataset& dataset,
                                   const ExperimentConfig& config) {
    if (config.model != mtl::ModelKind::ae2) {
        throw DomainError("run_ae_experiment only handles model kind \"ae2\", got \"" +
                          mtl::to_string(config.model) + "\"");
    }
    if (dataset.rows.empty()) throw DataError("autoencoder dataset has no rows");
    if (config.rounds < 1) throw DomainError("experiment needs rounds >= 1");
    nn::validate(config.train);

    const auto n = static_cast<Eigen::Index>(dataset.rows.size());
    const auto fw = static_cast<Eigen::Index>(dataset.rows.front().features.size());
    const auto tw =
        static_cast<Eigen::Index>(dataset.rows.front().coordinates.size());
    if (tw % 2 != 0) {
        throw ShapeError("flattened coordinates must pair x and y (even width)");
    }
    Eigen::MatrixXd features(n, fw);
    Eigen::MatrixXd coords(n, tw);
    std::vector<std::string> names;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = dataset.rows[static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.features.size()) != fw ||
            static_cast<Eigen::Index>(row.coordinates.size()) != tw) {
            throw ShapeError("autoencoder dataset rows disagree on widths");
        }
        for (Eigen::Index c = 0; c < fw; ++c) {
            features(r, c) = row.features[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index c = 0; c < tw; ++c) {
            coords(r, c) = row.coordinates[static_cast<std::size_t>(c)];
        }
        names.push_back(row.name);
    }

    std::vector<FoldPlan> plans;
    for (int r = 0; r < config.rounds; ++r) {
        plans.push_back(kfold_plan(static_cast<std::size_t>(n),
                                   derive_seed(config.seed,
                                               static_cast<std::uint64_t>(r), 0, 0)));
    }

    ExperimentReport report;
    report.model = mtl::to_string(mtl::ModelKind::ae2);
    report.feature_kind = mtl::to_string(mtl::FeatureKind::manifold);
    report.rounds = config.rounds;
    report.folds = kNumFolds;
    report.seed = config.seed;
    report.train = config.train;

    for (int round = 0; round < config.rounds; ++round) {
        for (int fold = 0; fold < kNumFolds; ++fold) {
            const SplitIndices split =
                fold_split(plans[static_cast<std::size_t>(round)], fold);
            const Eigen::MatrixXd train_x = take_rows(features, split.train);
            const Eigen::MatrixXd val_x = take_rows(features, split.validation);
            const Eigen::MatrixXd test_x = take_rows(features, split.test);
            const Eigen::MatrixXd train_y = take_rows(coords, split.train);
            const Eigen::MatrixXd val_y = take_rows(coords, split.validation);
            const Eigen::MatrixXd test_y = take_rows(coords, split.test);

            // Features are normalized; the coordinate targets stay raw so the
            // reconstruction error is in chord units.
            const nn::Normalizer in_norm = nn::fit_normalizer(train_x);
            const Eigen::MatrixXd train_xn = nn::apply(in_norm, train_x);
            const Eigen::MatrixXd val_xn = nn::apply(in_norm, val_x);
            const Eigen::MatrixXd test_xn = nn::apply(in_norm, test_x);

            Rng init_rng(derive_seed(config.seed, static_cast<std::uint64_t>(round),
                                     static_cast<std::uint64_t>(fold), 1));
            nn::TrainConfig cfg = config.train;
            cfg.seed = derive_seed(config.seed, static_cast<std::uint64_t>(round),
                                   static_cast<std::uint64_t>(fold), 2);

            mtl::AutoencoderArchitecture arch;
            arch.feature_width = static_cast<int>(fw);
            arch.coord_points = static_cast<int>(tw / 2);
            nn::DenseNetwork net = mtl::make_autoencoder(arch, init_rng);
            const nn::TrainResult tr =
                nn::train_network(net, train_xn, train_y, &val_xn, &val_y, cfg);

            FoldResult fr;
            fr.round = round;
            fr.fold = fold;
            fr.train_loss = tr.train_loss;
            fr.val_loss = tr.val_loss;
            const Eigen::MatrixXd pred_test = nn::forward(net, test_xn, nn::Mode::eval);
            const Eigen::MatrixXd pred_val = nn::forward(net, val_xn, nn::Mode::eval);
            fr.test = compute_metrics(pred_test, test_y);
            fr.validation = compute_metrics(pred_val, val_y);
            const Eigen::RowVectorXd train_mean = train_y.colwise().mean();
            fr.baseline_test_mse =
                compute_metrics(train_mean.replicate(test_y.rows(), 1), test_y).mse;
            for (const std::size_t i : split.test) fr.test_names.push_back(names[i]);
            fr.test_conditions.resize(static_cast<Eigen::Index>(split.test.size()), 0);
            fr.test_predictions = pred_test;
            fr.test_truths = test_y;
            report.fold_results.push_back(std::move(fr));
        }
    }
    return report;
}

double mean_test_mse(const ExperimentReport& report) {
    if (report.fold_results.empty()) {
        throw DataError("report has no fold results");
    }
    double sum = 0.0;
    for (const FoldResult& fr : report.fold_results) sum += fr.test.mse;
    return sum / static_cast<double>(report.fold_results.size());
}

double compare_reports_eta(const ExperimentReport& reference,
                           const ExperimentReport& candidate) {
    return error_reduction_eta(mean_test_mse(reference), mean_test_mse(candidate));
}

namespace {

struct Stat {
    double mean = 0.0, min = 0.0, max = 0.0;
};

Stat stat_of(const std::vector<double>& values) {
    Stat s;
    s.min = values.front();
    s.max = values.front();
    for (const double v : values) {
        s.mean += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean /= static_cast<double>(values.size());
    return s;
}

nlohmann::json metrics_to_json(const Metrics& m,
                               const std::vector<std::string>& names) {
    nlohmann::json j{{"mse", m.mse}, {"mae", m.mae}};
    if (names.size() == m.mse_per_output.size()) {
        nlohmann::json per;
        for (std::size_t i = 0; i < names.size(); ++i) {
            per[names[i]] = {{"mse", m.mse_per_output[i]},
                             {"mae", m.mae_per_output[i]}};
        }
        j["per_output"] = std::move(per);
    }
    return j;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    j["model"] = report.model;
    j["feature_kind"] = report.feature_kind;
    j["rounds"] = report.rounds;
    j["folds"] = report.folds;
    j["seed"] = report.seed;
    j["train_config"] = {{"learning_rate", report.train.learning_rate},
                         {"beta1", report.train.beta1},
                         {"beta2", report.train.beta2},
                         {"epsilon", report.train.epsilon},
                         {"batch_size", report.train.batch_size},
                         {"epochs", report.train.epochs}};
    j["output_names"] = report.output_names;

    j["fold_results"] = nlohmann::json::array();
    for (const FoldResult& fr : report.fold_results) {
        nlohmann::json jf;
        jf["round"] = fr.round;
        jf["fold"] = fr.fold;
        jf["test"] = metrics_to_json(fr.test, report.output_names);
        jf["validation"] = metrics_to_json(fr.validation, report.output_names);
        jf["baseline_test_mse"] = fr.baseline_test_mse;
        if (!fr.train_loss.empty()) {
            jf["final_train_loss"] = fr.train_loss.back();
        }
        j["fold_results"].push_back(std::move(jf));
    }

    // Per-round means and the cross-round summary (Table V's average row and
    // the min/mean/max band).
    std::vector<double> round_mse, round_mae, round_val_mse, round_baseline;
    j["round_means"] = nlohmann::json::array();
    for (int r = 0; r < report.rounds; ++r) {
        double mse = 0.0, mae = 0.0, vmse = 0.0, base = 0.0;
        int count = 0;
        for (const FoldResult& fr : report.fold_results) {
            if (fr.round != r) continue;
            mse += fr.test.mse;
            mae += fr.test.mae;
            vmse += fr.validation.mse;
            base += fr.baseline_test_mse;
            ++count;
        }
        if (count == 0) continue;
        mse /= count;
        mae /= count;
        vmse /= count;
        base /= count;
        round_mse.push_back(mse);
        round_mae.push_back(mae);
        round_val_mse.push_back(vmse);
        round_baseline.push_back(base);
        j["round_means"].push_back({{"round", r},
                                    {"test_mse", mse},
                                    {"test_mae", mae},
                                    {"validation_mse", vmse},
                                    {"baseline_test_mse", base}});
    }
    if (!round_mse.empty()) {
        const auto pack = [](const Stat& s) {
            return nlohmann::json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}};
        };
        j["summary"] = {{"test_mse", pack(stat_of(round_mse))},
                        {"test_mae", pack(stat_of(round_mae))},
                        {"validation_mse", pack(stat_of(round_val_mse))},
                        {"baseline_test_mse", pack(stat_of(round_baseline))}};
    }
    return j.dump(1);
}

std::string report_metrics_csv(const ExperimentReport& report) {
    const bool named = report.output_names.size() ==
                       (report.fold_results.empty()
                            ? 0
                            : report.fold_results.front().test.mse_per_output.size());
    std::string csv =
        "scope,round,fold,test_mse,test_mse_min,test_mse_max,test_mae,"
        "validation_mse,validation_mae,baseline_test_mse";
    if (named) {
        for (const std::string& name : report.output_names) {
            csv += ",test_mse_" + name + ",test_mae_" + name;
        }
    }
    csv += '\n';

    auto add_row = [&](const std::string& scope, const std::string& round,
                       const std::string& fold, double mse, double mse_min,
                       double mse_max, double mae, double vmse, double vmae,
                       double base, const std::vector<double>& mse_po,
                       const std::vector<double>& mae_po) {
        csv += scope + ',' + round + ',' + fold + ',' + io::format_double(mse) +
               ',' + io::format_double(mse_min) + ',' + io::format_double(mse_max) +
               ',' + io::format_double(mae) + ',' + io::format_double(vmse) + ',' +
               io::format_double(vmae) + ',' + io::format_double(base);
        if (named) {
            for (std::size_t i = 0; i < report.output_names.size(); ++i) {
                csv += ',' + io::format_double(mse_po[i]) + ',' +
                       io::format_double(mae_po[i]);
            }
        }
        csv += '\n';
    };

    std::vector<double> round_mse, round_mae, round_vmse, round_vmae, round_base;
    std::vector<std::vector<double>> round_mse_po, round_mae_po;
    for (int r = 0; r < report.rounds; ++r) {
        std::vector<double> fold_mse;
        double mae = 0.0, vmse = 0.0, vmae = 0.0, base = 0.0;
        std::vector<double> mse_po, mae_po;
        int count = 0;
        for (const FoldResult& fr : report.fold_results) {
            if (fr.round != r) continue;
            add_row("fold", std::to_string(fr.round), std::to_string(fr.fold),
                    fr.test.mse, fr.test.mse, fr.test.mse, fr.test.mae,
                    fr.validation.mse, fr.validation.mae, fr.baseline_test_mse,
                    fr.test.mse_per_output, fr.test.mae_per_output);
            fold_mse.push_back(fr.test.mse);
            mae += fr.test.mae;
            vmse += fr.validation.mse;
            vmae += fr.validation.mae;
            base += fr.baseline_test_mse;
            if (mse_po.empty()) {
                mse_po.assign(fr.test.mse_per_output.size(), 0.0);
                mae_po.assign(fr.test.mae_per_output.size(), 0.0);
            }
            for (std::size_t i = 0; i < mse_po.size(); ++i) {
                mse_po[i] += fr.test.mse_per_output[i];
                mae_po[i] += fr.test.mae_per_output[i];
            }
            ++count;
        }
        if (count == 0) continue;
        const Stat s = stat_of(fold_mse);
        mae /= count;
        vmse /= count;
        vmae /= count;
        base /= count;
        for (double& v : mse_po) v /= count;
        for (double& v : mae_po) v /= count;
        add_row("round_mean", std::to_string(r), "", s.mean, s.min, s.max, mae,
                vmse, vmae, base, mse_po, mae_po);
        round_mse.push_back(s.mean);
        round_mae.push_back(mae);
        round_vmse.push_back(vmse);
        round_vmae.push_back(vmae);
        round_base.push_back(base);
        round_mse_po.push_back(mse_po);
        round_mae_po.push_back(mae_po);
    }

    if (!round_mse.empty()) {
        const Stat s = stat_of(round_mse);
        auto mean_of = [](const std::vector<double>& v) {
            double sum = 0.0;
            for (const double x : v) sum += x;
            return sum / static_cast<double>(v.size());
        };
        std::vector<double> mse_po, mae_po;
        if (!round_mse_po.empty()) {
            mse_po.assign(round_mse_po.front().size(), 0.0);
            mae_po.assign(round_mae_po.front().size(), 0.0);
            for (std::size_t r = 0; r < round_mse_po.size(); ++r) {
                for (std::size_t i = 0; i < mse_po.size(); ++i) {
                    mse_po[i] += round_mse_po[r][i];
                    mae_po[i] += round_mae_po[r][i];
                }
            }
            for (double& v : mse_po) v /= static_cast<double>(round_mse_po.size());
            for (double& v : mae_po) v /= static_cast<double>(round_mae_po.size());
        }
        add_row("average", "", "", s.mean, s.min, s.max, mean_of(round_mae),
                mean_of(round_vmse), mean_of(round_vmae), mean_of(round_base),
                mse_po, mae_po);
    }
    return csv;
}

std::string report_loss_csv(const ExperimentReport& report) {
    std::string csv = "round,fold,epoch,train_loss,validation_loss\n";
    for (const FoldResult& fr : report.fold_results) {
        for (std::size_t e = 0; e < fr.train_loss.size(); ++e) {
            csv += std::to_string(fr.round) + ',' + std::to_string(fr.fold) + ',' +
                   std::to_string(e + 1) + ',' + io::format_double(fr.train_loss[e]);
            csv += ',';
            if (e < fr.val_loss.size()) csv += io::format_double(fr.val_loss[e]);
            csv += '\n';
        }
    }
    return csv;
}

std::string report_predictions_csv(const ExperimentReport& report) {
    const std::size_t k =
        report.fold_results.empty()
            ? 0
            : static_cast<std::size_t>(report.fold_results.front().test_truths.cols());
    const bool named = report.output_names.size() == k;

    std::string csv = "round,fold,name";
    const Eigen::Index cw = report.fold_results.empty()
                                ? 0
                                : report.fold_results.front().test_conditions.cols();
    if (cw >= 1) csv += ",mach";
    if (cw >= 2) csv += ",alpha";
    if (cw >= 3) csv += ",roll";
    for (std::size_t i = 0; i < k; ++i) {
        csv += ",true_" + (named ? report.output_names[i] : "y" + std::to_string(i));
    }
    for (std::size_t i = 0; i < k; ++i) {
        csv += ",pred_" + (named ? report.output_names[i] : "y" + std::to_string(i));
    }
    csv += '\n';

    for (const FoldResult& fr : report.fold_results) {
        for (Eigen::Index r = 0; r < fr.test_truths.rows(); ++r) {
            csv += std::to_string(fr.round) + ',' + std::to_string(fr.fold) + ',' +
                   fr.test_names[static_cast<std::size_t>(r)];
            for (Eigen::Index c = 0; c < fr.test_conditions.cols(); ++c) {
                csv += ',' + io::format_double(fr.test_conditions(r, c));
            }
            for (Eigen::Index c = 0; c < fr.test_truths.cols(); ++c) {
                csv += ',' + io::format_double(fr.test_truths(r, c));
            }
            for (Eigen::Index c = 0; c < fr.test_predictions.cols(); ++c) {
                csv += ',' + io::format_double(fr.test_predictions(r, c));
            }
            csv += '\n';
        }
    }
    return csv;
}

}  // namespace mdf::harness
