#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdf/nn.hpp"
#include "mdf/rng.hpp"

namespace mdf::mtl {

struct FlightCondition {
    double mach = 0.0;
    double alpha = 0.0;           ///< angle of attack, degrees
    std::optional<double> roll;   ///< degrees; absent in this dataset
};

/// The condition vector fed to the networks: [mach, alpha] or
/// [mach, alpha, roll] when roll is present.
std::vector<double> condition_vector(const FlightCondition& cond);

struct AeroLabel {
    double cl = 0.0;
    double cd = 0.0;
};

/// Two function networks gated by a shared context network. With K outputs,
/// f1 maps the shape features to K values, f2 maps the flight conditions to
/// K values, and the context network maps the concatenated input to 2K raw
/// gates: y_i = f1_i * c_i + f2_i * c_{K+i}.
struct MdfModel {
    nn::DenseNetwork f1;       ///< features -> K
    nn::DenseNetwork f2;       ///< conditions -> K
    nn::DenseNetwork context;  ///< [features, conditions] -> 2K
    int outputs = 2;           ///< K
};

/// Throws mdf::ShapeError when the three networks disagree on widths.
void validate(const MdfModel& model);

struct FusedCache {
    nn::ForwardCache f1, f2, context;
    Eigen::MatrixXd f1_out, f2_out, context_out;
};

/// Batch fusion: rows of x1 are feature vectors, rows of x2 condition
/// vectors. Train mode caches intermediates for fused_backward.
Eigen::MatrixXd fused_forward(MdfModel& model, const Eigen::MatrixXd& x1,
                              const Eigen::MatrixXd& x2, nn::Mode mode,
                              FusedCache* cache = nullptr);

/// Single-sample eval convenience wrapper.
Eigen::VectorXd mdf_forward(MdfModel& model, const std::vector<double>& features,
                            const FlightCondition& cond, nn::Mode mode);

/// Which sub-network gradients to compute (the skipped ones stay empty).
struct BackwardSelect {
    bool function = true;
    bool context = true;
};

struct FusedGradients {
    nn::Gradients f1, f2, context;
};

/// Backpropagates the fusion product rule into the selected sub-networks:
/// dF1 = dY . C_left, dF2 = dY . C_right, dC = [dY . F1out, dY . F2out].
FusedGradients fused_backward(const MdfModel& model, const FusedCache& cache,
                              const Eigen::MatrixXd& loss_grad,
                              const BackwardSelect& select = {});

/// Freeze switches for the alternating trainer. Disabling a side leaves that
/// side's learnable parameters bit-identical (batch-norm running statistics
/// still track the forward passes).
struct TrainOptions {
    bool update_function = true;
    bool update_context = true;
};

struct FusedTrainResult {
    std::vector<double> train_loss;  ///< per epoch, from the pre-update forward
    std::vector<double> val_loss;    ///< per epoch, eval mode (empty without val set)
};

/// Alternating minibatch training: per batch, (1) forward + loss, (2) update
/// both function networks with the context frozen, (3) fresh forward, update
/// the context with the function networks frozen. Separate Adam states per
/// sub-network. Errors as nn::train_network.
FusedTrainResult train_fused(MdfModel& model, const Eigen::MatrixXd& x1,
                             const Eigen::MatrixXd& x2, const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd* val_x1,
                             const Eigen::MatrixXd* val_x2,
                             const Eigen::MatrixXd* val_y,
                             const nn::TrainConfig& config,
                             const TrainOptions& options = {});

/// Widths of the three sub-network stacks; depth counts hidden layers, each
/// followed by an identity-activation output head without batch norm.
struct MdfArchitecture {
    int feature_width = 271;
    int condition_width = 2;
    int outputs = 2;
    int f1_width = 1024;
    int f1_depth = 3;
    int f2_width = 16;
    int f2_depth = 3;
    int context_width = 512;
    int context_depth = 3;
    bool batchnorm = true;
};

/// Full-size fusion architecture (function nets 1024*3 and 16*3, context 512*3).
MdfArchitecture mdf_architecture(int feature_width);
/// Small fusion architecture on the 7 geometric parameters (32*3 / 8*3 / 32*3).
MdfArchitecture mtl_g_architecture();

MdfModel make_mdf_model(const MdfArchitecture& arch, Rng& rng);

/// Plain dense regression baseline on the concatenated input (1024*3 hidden).
nn::DenseNetwork make_mlp(int input_width, int outputs, Rng& rng,
                          int hidden_width = 1024, int hidden_depth = 3,
                          bool batchnorm = true);

/// Dense autoencoder from the metric features back to the outline
/// coordinates, flattened x0,y0,x1,y1,...: F -> 128 -> 32 -> 128 -> 2*M.
struct AutoencoderArchitecture {
    int feature_width = 271;
    int coord_points = 281;
    int encoder_width = 128;
    int bottleneck = 32;
    int decoder_width = 128;
    bool batchnorm = true;
};

nn::DenseNetwork make_autoencoder(const AutoencoderArchitecture& arch, Rng& rng);

enum class ModelKind { mdf, mlp, mtl_g, ae2 };
enum class FeatureKind { manifold, coordinates, geoparams };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);
std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);

/// A trained model plus everything needed to run it on raw rows: the input
/// normalizer spans the concatenated [features, conditions] width (fusion
/// models slice it), the target normalizer spans the outputs.
struct ModelFile {
    ModelKind kind = ModelKind::mlp;
    FeatureKind feature_kind = FeatureKind::manifold;
    int feature_width = 0;
    int condition_width = 0;
    MdfModel fused;           ///< mdf / mtl_g
    nn::DenseNetwork net;     ///< mlp / ae2
    nn::Normalizer input_norm;
    nn::Normalizer target_norm;
};

std::string to_json(const ModelFile& file);
ModelFile model_from_json(const std::string& json_text);

}  // namespace mdf::mtl
