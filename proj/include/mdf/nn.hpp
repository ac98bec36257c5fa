#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mdf/rng.hpp"

namespace mdf::nn {

enum class Activation { relu, identity };
enum class Mode { train, eval };

/// Batch statistics use an epsilon inside the square root.
inline constexpr double kBatchNormEpsilon = 1e-5;

/// Per-feature affine normalization learned from batch statistics.
/// `momentum` is the weight of the NEW batch statistics when the running
/// estimates are updated: running <- (1 - momentum) * running + momentum * batch.
struct BatchNormParams {
    Eigen::VectorXd gamma;
    Eigen::VectorXd beta;
    Eigen::VectorXd running_mean;
    Eigen::VectorXd running_var;
    double momentum = 0.9;
};

struct Layer {
    Eigen::MatrixXd weights;  ///< out x in
    Eigen::VectorXd biases;   ///< out
    std::optional<BatchNormParams> batchnorm;
    Activation activation = Activation::relu;
};

/// A plain dense stack. `revision` counts parameter updates so that
/// gradients are never computed against intermediates from stale parameters.
struct DenseNetwork {
    std::vector<Layer> layers;
    std::uint64_t revision = 0;
};

int input_size(const DenseNetwork& net);
int output_size(const DenseNetwork& net);
std::size_t parameter_count(const DenseNetwork& net);

/// Throws mdf::ShapeError / mdf::DataError when dimensions disagree or
/// parameters are non-finite / running variances negative.
void validate(const DenseNetwork& net);

/// Intermediates captured by a train-mode forward pass, consumed by backward.
struct ForwardCache {
    std::uint64_t revision = 0;
    Mode mode = Mode::eval;
    Eigen::MatrixXd input;
    struct LayerCache {
        Eigen::MatrixXd affine;      ///< x W^T + b
        Eigen::MatrixXd normalized;  ///< BN x-hat (empty without BN)
        Eigen::VectorXd batch_mean;  ///< biased batch statistics
        Eigen::VectorXd batch_var;
        Eigen::MatrixXd pre_activation;
        Eigen::MatrixXd output;
    };
    std::vector<LayerCache> layers;
};

/// Runs the stack on a batch (rows = samples). In train mode batch-norm
/// layers use batch statistics and update their running estimates; in eval
/// mode they use the running estimates and the network is untouched.
///
/// Throws mdf::ShapeError on width mismatch, mdf::DegenerateBatchError for a
/// train-mode batch-norm batch with fewer than 2 rows, mdf::DataError on
/// empty input.
Eigen::MatrixXd forward(DenseNetwork& net, const Eigen::MatrixXd& batch,
                        Mode mode, ForwardCache* cache = nullptr);

/// Mean over rows of the mean over outputs of the squared error.
double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
/// d mse_loss / d pred.
Eigen::MatrixXd mse_loss_grad(const Eigen::MatrixXd& pred,
                              const Eigen::MatrixXd& target);

struct LayerGradients {
    Eigen::MatrixXd weights;
    Eigen::VectorXd biases;
    Eigen::VectorXd gamma;  ///< empty without BN
    Eigen::VectorXd beta;
};

struct Gradients {
    std::vector<LayerGradients> layers;
    Eigen::MatrixXd input;  ///< dL/d(batch), for chaining through fusions
};

/// Exact gradients of the loss w.r.t. every parameter, from a train-mode
/// cache. Throws mdf::StateError when the cache is missing, eval-mode, or
/// from an older parameter revision; mdf::ShapeError when loss_grad does not
/// match the output shape.
Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& loss_grad);

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 128;
    int epochs = 2000;
    std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

/// First/second moment estimates, one pair per parameter tensor.
struct AdamState {
    struct LayerState {
        Eigen::MatrixXd weights_m, weights_v;
        Eigen::VectorXd biases_m, biases_v;
        Eigen::VectorXd gamma_m, gamma_v;
        Eigen::VectorXd beta_m, beta_v;
    };
    std::vector<LayerState> layers;
};

AdamState make_adam_state(const DenseNetwork& net);

/// One bias-corrected Adam update; parameters move opposite the gradient.
/// `t` is the 1-based step index. Bumps net.revision.
void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state,
               const TrainConfig& config, int t);

/// Per-feature min-max scaling fit on training rows only.
struct Normalizer {
    Eigen::VectorXd min;
    Eigen::VectorXd max;
};

Normalizer fit_normalizer(const Eigen::MatrixXd& data);
/// (x - min) / (max - min); constant features map to 0. No clamping.
Eigen::MatrixXd apply(const Normalizer& norm, const Eigen::MatrixXd& data);
/// Inverse of apply (constant features map back to their min).
Eigen::MatrixXd unapply(const Normalizer& norm, const Eigen::MatrixXd& data);

struct LayerSpec {
    int width = 0;
    bool batchnorm = false;
    Activation activation = Activation::relu;
};

/// Glorot-uniform weights, zero biases, unit-gamma/zero-beta batch norm.
DenseNetwork make_network(int input_width, const std::vector<LayerSpec>& layers,
                          Rng& rng);

/// `hidden_count` hidden layers of `hidden_width` (affine -> BN -> ReLU when
/// with_batchnorm), then an identity-activation, BN-free output layer.
DenseNetwork make_regression_net(int input_width, int hidden_width,
                                 int hidden_count, int output_width,
                                 bool with_batchnorm, Rng& rng);

struct TrainResult {
    std::vector<double> train_loss;  ///< per epoch, averaged over batches
    std::vector<double> val_loss;    ///< per epoch, eval-mode (empty without val set)
};

/// Minibatch Adam training of a single network against MSE. Rows are
/// reshuffled every epoch with the config seed. Batches of one row are
/// skipped when the network has batch norm. Throws mdf::DataError on empty
/// or mismatched data and mdf::DivergenceError when the loss goes non-finite.
TrainResult train_network(DenseNetwork& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets,
                          const Eigen::MatrixXd* val_inputs,
                          const Eigen::MatrixXd* val_targets,
                          const TrainConfig& config);

/// Learnable parameters as one flat vector (per layer: weights row-major,
/// biases, gamma, beta). Running statistics are buffers, not parameters, and
/// are excluded. set_parameters bumps the revision.
std::vector<double> flatten_parameters(const DenseNetwork& net);
void set_parameters(DenseNetwork& net, const std::vector<double>& flat);
/// Gradients in the same flat order.
std::vector<double> flatten_gradients(const DenseNetwork& net,
                                      const Gradients& grads);

/// Lossless JSON round-trip (shortest round-trip decimal serialization).
/// The value-level overloads let networks and normalizers embed in larger
/// documents; the string forms are self-contained files.
void to_json(nlohmann::json& j, const DenseNetwork& net);
void from_json(const nlohmann::json& j, DenseNetwork& net);
void to_json(nlohmann::json& j, const Normalizer& norm);
void from_json(const nlohmann::json& j, Normalizer& norm);
std::string to_json(const DenseNetwork& net);
DenseNetwork network_from_json(const std::string& json_text);

}  // namespace mdf::nn
