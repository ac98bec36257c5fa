#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mdf/geoparams.hpp"
#include "mdf/mtl.hpp"
#include "mdf/nn.hpp"
#include "mdf/pipeline.hpp"

namespace mdf::harness {

struct DatasetRow {
    std::string name;
    std::vector<double> features;
    mtl::FlightCondition condition;
    mtl::AeroLabel label;
};

struct ExperimentDataset {
    std::vector<DatasetRow> rows;
    mtl::FeatureKind feature_kind = mtl::FeatureKind::manifold;
};

/// Feature lengths agree, condition widths agree, no duplicate
/// (name, condition) pairs. Throws mdf::DataError / mdf::ShapeError.
void validate(const ExperimentDataset& dataset);

/// Ten disjoint covering subsets with sizes differing by at most one.
/// Fold f tests on subsets[f] and validates on the cyclically next subset;
/// the remaining eight train.
struct FoldPlan {
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> subsets;
};

inline constexpr int kNumFolds = 10;

FoldPlan kfold_plan(std::size_t n, std::uint64_t seed);

struct SplitIndices {
    std::vector<std::size_t> train, validation, test;
};

SplitIndices fold_split(const FoldPlan& plan, int fold);

/// MSE/MAE as the mean over rows of the mean over outputs, plus per-output
/// breakdowns.
struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> mse_per_output;
    std::vector<double> mae_per_output;
};

Metrics compute_metrics(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// |sigma_ref - sigma_new| / |sigma_ref| * 100. Throws mdf::DomainError when
/// sigma_ref is 0.
double error_reduction_eta(double sigma_ref, double sigma_new);

/// Deterministic smooth surrogate standing in for measured coefficients —
/// thin-airfoil lift with a Prandtl-Glauert factor and a drag polar:
///   cl = 2*pi*(alpha_rad + 2*max_camber) / sqrt(1 - mach^2)
///   cd = 0.006 + 0.02*max_thickness + 0.05*cl^2
/// Synthetic: for end-to-end training tests only. Throws mdf::DomainError
/// for mach >= 1.
mtl::AeroLabel synthetic_labels(const geoparams::GeometricParameters& params,
                                const mtl::FlightCondition& cond);

struct LabeledCondition {
    std::string name;
    mtl::FlightCondition condition;
    mtl::AeroLabel label;
};

/// Label files: CSV `name,mach,alpha,cl,cd` with a header row.
std::vector<LabeledCondition> parse_labels_csv(const std::string& text);
std::string labels_csv(const std::vector<LabeledCondition>& rows);

/// `rows` labeled conditions spread round-robin over the analyzed airfoils,
/// with mach ~ U[0.1, 0.6) and alpha ~ U[-4, 8) degrees and surrogate labels.
std::vector<LabeledCondition> generate_synthetic_labels(
    const std::vector<std::pair<std::string, geoparams::GeometricParameters>>&
        airfoils,
    std::size_t rows, std::uint64_t seed);

/// Joins label rows with analyzed airfoils by name and extracts the feature
/// vector for `kind` (manifold metric, flattened outline coordinates, or the
/// 7 geometric parameters). Throws mdf::DataError for labels naming unknown
/// airfoils.
ExperimentDataset build_dataset(
    const std::vector<std::pair<std::string, pipeline::AirfoilAnalysis>>& analyses,
    const std::vector<LabeledCondition>& labels, mtl::FeatureKind kind);

/// Airfoil-level reconstruction dataset: metric features in, flattened
/// canonical outline coordinates (x0,y0,x1,y1,...) as targets.
struct AeDataset {
    struct Row {
        std::string name;
        std::vector<double> features;
        std::vector<double> coordinates;
    };
    std::vector<Row> rows;
};

AeDataset build_ae_dataset(
    const std::vector<std::pair<std::string, pipeline::AirfoilAnalysis>>& analyses);

struct ExperimentConfig {
    mtl::ModelKind model = mtl::ModelKind::mdf;
    int rounds = 1;
    nn::TrainConfig train;    ///< epochs/batch/learning rate (seed field unused)
    std::uint64_t seed = 0;   ///< master seed; per-fold seeds derive from it
    int jobs = 1;             ///< parallel fold workers
};

struct FoldResult {
    int round = 0;
    int fold = 0;
    Metrics test;
    Metrics validation;
    double baseline_test_mse = 0.0;  ///< predict-the-training-mean reference
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<std::string> test_names;
    Eigen::MatrixXd test_conditions;   ///< raw condition rows
    Eigen::MatrixXd test_predictions;  ///< de-normalized (physical units)
    Eigen::MatrixXd test_truths;
};

struct ExperimentReport {
    std::string model;
    std::string feature_kind;
    int rounds = 0;
    int folds = 0;
    std::uint64_t seed = 0;
    nn::TrainConfig train;
    std::vector<std::string> output_names;  ///< e.g. {"cl", "cd"}
    std::vector<FoldResult> fold_results;   ///< rounds x folds, row-major
};

/// Trains rounds x 10 models and collects physical-unit metrics. Targets and
/// inputs are min-max normalized with statistics from each fold's training
/// rows only; predictions are de-normalized before any metric. Deterministic
/// under `seed` regardless of `jobs`.
ExperimentReport run_experiment(const ExperimentDataset& dataset,
                                const ExperimentConfig& config);

/// Same protocol for the autoencoder (model kind ae2): reconstruction MSE of
/// the raw outline coordinates.
ExperimentReport run_ae_experiment(const AeDataset& dataset,
                                   const ExperimentConfig& config);

/// Mean of the per-fold test MSEs across the whole report.
double mean_test_mse(const ExperimentReport& report);

/// error_reduction_eta of the two reports' mean test MSEs (reference first).
double compare_reports_eta(const ExperimentReport& reference,
                           const ExperimentReport& candidate);

/// Machine-readable report: config echo, per-fold metrics, per-round means,
/// and min/mean/max summaries. No timestamps — byte-identical under a seed.
std::string report_to_json(const ExperimentReport& report);

/// Plot-ready tables.
std::string report_metrics_csv(const ExperimentReport& report);
std::string report_loss_csv(const ExperimentReport& report);
std::string report_predictions_csv(const ExperimentReport& report);

}  // namespace mdf::harness
