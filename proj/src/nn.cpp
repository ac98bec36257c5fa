#include "mdf/nn.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "mdf/errors.hpp"

namespace mdf::nn {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw DataError(std::string(what) + " contains non-finite values");
    }
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ParseError(std::string("model JSON: ") + what +
                             " is not a 2D array",
                         0);
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ParseError(std::string("model JSON: ragged rows in ") + what, 0);
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) {
                throw ParseError(std::string("model JSON: non-numeric entry in ") +
                                     what,
                                 0);
            }
            m(r, c) = cell.get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) {
        throw ParseError(std::string("model JSON: ") + what + " is not an array",
                         0);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto& cell = j[static_cast<std::size_t>(i)];
        if (!cell.is_number()) {
            throw ParseError(std::string("model JSON: non-numeric entry in ") +
                                 what,
                             0);
        }
        v(i) = cell.get<double>();
    }
    return v;
}

}  // namespace

int input_size(const DenseNetwork& net) {
    if (net.layers.empty()) throw StateError("network has no layers");
    return static_cast<int>(net.layers.front().weights.cols());
}

int output_size(const DenseNetwork& net) {
    if (net.layers.empty()) throw StateError("network has no layers");
    return static_cast<int>(net.layers.back().weights.rows());
}

std::size_t parameter_count(const DenseNetwork& net) {
    std::size_t n = 0;
    for (const Layer& layer : net.layers) {
        n += static_cast<std::size_t>(layer.weights.size());
        n += static_cast<std::size_t>(layer.biases.size());
        if (layer.batchnorm) {
            n += 2 * static_cast<std::size_t>(layer.batchnorm->gamma.size());
        }
    }
    return n;
}

void validate(const DenseNetwork& net) {
    if (net.layers.empty()) {
        throw ShapeError("network has no layers");
    }
    Eigen::Index prev_out = net.layers.front().weights.cols();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        const Eigen::Index out = layer.weights.rows();
        if (layer.weights.cols() != prev_out) {
            throw ShapeError("layer " + std::to_string(i) + " expects width " +
                             std::to_string(layer.weights.cols()) +
                             " but receives " + std::to_string(prev_out));
        }
        if (layer.biases.size() != out) {
            throw ShapeError("layer " + std::to_string(i) +
                             " bias size disagrees with weight rows");
        }
        check_finite(layer.weights, "layer weights");
        check_finite(layer.biases, "layer biases");
        if (layer.batchnorm) {
            const auto& bn = *layer.batchnorm;
            if (bn.gamma.size() != out || bn.beta.size() != out ||
                bn.running_mean.size() != out || bn.running_var.size() != out) {
                throw ShapeError("layer " + std::to_string(i) +
                                 " batch-norm size disagrees with weight rows");
            }
            check_finite(bn.gamma, "batch-norm gamma");
            check_finite(bn.beta, "batch-norm beta");
            check_finite(bn.running_mean, "batch-norm running mean");
            check_finite(bn.running_var, "batch-norm running variance");
            if ((bn.running_var.array() < 0.0).any()) {
                throw DataError("batch-norm running variance has negative entries");
            }
        }
        prev_out = out;
    }
}

Eigen::MatrixXd forward(DenseNetwork& net, const Eigen::MatrixXd& batch,
                        Mode mode, ForwardCache* cache) {
    if (net.layers.empty()) throw ShapeError("network has no layers");
    if (batch.rows() < 1) throw DataError("forward pass on an empty batch");
    if (batch.cols() != net.layers.front().weights.cols()) {
        throw ShapeError("input width " + std::to_string(batch.cols()) +
                         " does not match first layer width " +
                         std::to_string(net.layers.front().weights.cols()));
    }

    if (cache) {
        cache->revision = net.revision;
        cache->mode = mode;
        cache->input = batch;
        cache->layers.assign(net.layers.size(), {});
    }

    Eigen::MatrixXd x = batch;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& layer = net.layers[i];
        Eigen::MatrixXd affine =
            (x * layer.weights.transpose()).rowwise() + layer.biases.transpose();

        Eigen::MatrixXd pre = affine;
        Eigen::MatrixXd normalized;
        Eigen::VectorXd batch_mean, batch_var;
        if (layer.batchnorm) {
            BatchNormParams& bn = *layer.batchnorm;
            if (mode == Mode::train) {
                if (affine.rows() < 2) {
                    throw DegenerateBatchError(
                        "train-mode batch norm needs at least 2 rows, got " +
                        std::to_string(affine.rows()));
                }
                batch_mean = affine.colwise().mean();
                const Eigen::MatrixXd centered =
                    affine.rowwise() - batch_mean.transpose();
                batch_var = centered.array().square().colwise().mean();
                const Eigen::ArrayXd inv_std =
                    (batch_var.array() + kBatchNormEpsilon).sqrt().inverse();
                normalized = centered.array().rowwise() * inv_std.transpose();
                bn.running_mean = (1.0 - bn.momentum) * bn.running_mean +
                                  bn.momentum * batch_mean;
                bn.running_var =
                    (1.0 - bn.momentum) * bn.running_var + bn.momentum * batch_var;
            } else {
                const Eigen::ArrayXd inv_std =
                    (bn.running_var.array() + kBatchNormEpsilon).sqrt().inverse();
                normalized = (affine.rowwise() - bn.running_mean.transpose())
                                 .array()
                                 .rowwise() *
                             inv_std.transpose();
            }
            pre = (normalized.array().rowwise() * bn.gamma.transpose().array())
                      .rowwise() +
                  bn.beta.transpose().array();
        }

        Eigen::MatrixXd out =
            layer.activation == Activation::relu ? relu(pre) : pre;

        if (cache) {
            auto& lc = cache->layers[i];
            lc.affine = std::move(affine);
            lc.normalized = std::move(normalized);
            lc.batch_mean = std::move(batch_mean);
            lc.batch_var = std::move(batch_var);
            lc.pre_activation = std::move(pre);
            lc.output = out;
        }
        x = std::move(out);
    }
    return x;
}

double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ShapeError("mse_loss shapes disagree: " + std::to_string(pred.rows()) +
                         "x" + std::to_string(pred.cols()) + " vs " +
                         std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()));
    }
    if (pred.size() == 0) throw DataError("mse_loss on empty matrices");
    return (pred - target).array().square().sum() /
           static_cast<double>(pred.size());
}

Eigen::MatrixXd mse_loss_grad(const Eigen::MatrixXd& pred,
                              const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ShapeError("mse_loss_grad shapes disagree");
    }
    if (pred.size() == 0) throw DataError("mse_loss_grad on empty matrices");
    return 2.0 / static_cast<double>(pred.size()) * (pred - target);
}

Gradients backward(const DenseNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& loss_grad) {
    if (cache.layers.size() != net.layers.size() || cache.input.size() == 0) {
        throw StateError("backward pass without a matching forward cache");
    }
    if (cache.mode != Mode::train) {
        throw StateError("backward pass needs a train-mode forward cache");
    }
    if (cache.revision != net.revision) {
        throw StateError("forward cache is stale: parameters changed since");
    }
    const Eigen::MatrixXd& final_out = cache.layers.back().output;
    if (loss_grad.rows() != final_out.rows() ||
        loss_grad.cols() != final_out.cols()) {
        throw ShapeError("loss gradient shape does not match network output");
    }

    Gradients grads;
    grads.layers.resize(net.layers.size());

    Eigen::MatrixXd d_out = loss_grad;
    for (std::size_t idx = net.layers.size(); idx-- > 0;) {
        const Layer& layer = net.layers[idx];
        const auto& lc = cache.layers[idx];
        LayerGradients& lg = grads.layers[idx];

        // Activation.
        Eigen::MatrixXd d_pre =
            layer.activation == Activation::relu
                ? (lc.pre_activation.array() > 0.0).cast<double>() * d_out.array()
                : d_out;

        // Batch normalization (train-mode batch statistics).
        Eigen::MatrixXd d_affine;
        if (layer.batchnorm) {
            const BatchNormParams& bn = *layer.batchnorm;
            const double b = static_cast<double>(lc.affine.rows());
            lg.gamma = (d_pre.array() * lc.normalized.array()).colwise().sum();
            lg.beta = d_pre.colwise().sum();

            const Eigen::MatrixXd d_xhat =
                d_pre.array().rowwise() * bn.gamma.transpose().array();
            const Eigen::ArrayXd inv_std =
                (lc.batch_var.array() + kBatchNormEpsilon).sqrt().inverse();
            const Eigen::MatrixXd centered =
                lc.affine.rowwise() - lc.batch_mean.transpose();

            // d var and d mean of the biased batch statistics.
            const Eigen::ArrayXd d_var =
                (d_xhat.array() * centered.array()).colwise().sum().transpose() *
                (-0.5) * inv_std.pow(3);
            const Eigen::ArrayXd d_mean =
                (d_xhat.array().colwise().sum().transpose() * -inv_std);

            d_affine =
                (d_xhat.array().rowwise() * inv_std.transpose()) +
                (centered.array().rowwise() * (2.0 / b * d_var).transpose()) +
                (1.0 / b * d_mean).transpose().replicate(lc.affine.rows(), 1);
        } else {
            d_affine = std::move(d_pre);
        }

        // Affine: y = x W^T + b.
        const Eigen::MatrixXd& layer_in =
            idx == 0 ? cache.input : cache.layers[idx - 1].output;
        lg.weights = d_affine.transpose() * layer_in;
        lg.biases = d_affine.colwise().sum();
        d_out = d_affine * layer.weights;
    }
    grads.input = std::move(d_out);
    return grads;
}

void validate(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw DomainError("learning rate must be > 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
        !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw DomainError("Adam betas must lie in [0, 1)");
    }
    if (!(config.epsilon > 0.0)) throw DomainError("Adam epsilon must be > 0");
    if (config.batch_size < 1) throw DomainError("batch size must be >= 1");
    if (config.epochs < 0) throw DomainError("epoch count must be >= 0");
}

AdamState make_adam_state(const DenseNetwork& net) {
    AdamState state;
    state.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        auto& s = state.layers[i];
        s.weights_m = Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols());
        s.weights_v = s.weights_m;
        s.biases_m = Eigen::VectorXd::Zero(layer.biases.size());
        s.biases_v = s.biases_m;
        if (layer.batchnorm) {
            s.gamma_m = Eigen::VectorXd::Zero(layer.batchnorm->gamma.size());
            s.gamma_v = s.gamma_m;
            s.beta_m = s.gamma_m;
            s.beta_v = s.gamma_m;
        }
    }
    return state;
}

namespace {

// One Adam update for a single tensor (matrix or vector).
template <typename T>
void adam_update(T& param, const T& grad, T& m, T& v, const TrainConfig& cfg,
                 double bias1, double bias2) {
    if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
        throw ShapeError("adam_step gradient shape does not match parameter");
    }
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = (cfg.beta2 * v).array() + (1.0 - cfg.beta2) * grad.array().square();
    const auto m_hat = m.array() / bias1;
    const auto v_hat = v.array() / bias2;
    param.array() -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
}

}  // namespace

void adam_step(DenseNetwork& net, const Gradients& grads, AdamState& state,
               const TrainConfig& config, int t) {
    if (t < 1) throw DomainError("Adam step index must be >= 1");
    if (grads.layers.size() != net.layers.size() ||
        state.layers.size() != net.layers.size()) {
        throw ShapeError("adam_step layer counts disagree");
    }
    const double bias1 = 1.0 - std::pow(config.beta1, t);
    const double bias2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& layer = net.layers[i];
        const LayerGradients& lg = grads.layers[i];
        auto& s = state.layers[i];
        adam_update(layer.weights, lg.weights, s.weights_m, s.weights_v, config,
                    bias1, bias2);
        adam_update(layer.biases, lg.biases, s.biases_m, s.biases_v, config,
                    bias1, bias2);
        if (layer.batchnorm) {
            if (lg.gamma.size() != layer.batchnorm->gamma.size()) {
                throw ShapeError("adam_step batch-norm gradient shape mismatch");
            }
            adam_update(layer.batchnorm->gamma, lg.gamma, s.gamma_m, s.gamma_v,
                        config, bias1, bias2);
            adam_update(layer.batchnorm->beta, lg.beta, s.beta_m, s.beta_v,
                        config, bias1, bias2);
        }
    }
    ++net.revision;
}

Normalizer fit_normalizer(const Eigen::MatrixXd& data) {
    if (data.rows() < 1 || data.cols() < 1) {
        throw DataError("fit_normalizer needs a non-empty matrix");
    }
    check_finite(data, "normalizer input");
    Normalizer n;
    n.min = data.colwise().minCoeff();
    n.max = data.colwise().maxCoeff();
    return n;
}

Eigen::MatrixXd apply(const Normalizer& norm, const Eigen::MatrixXd& data) {
    if (data.cols() != norm.min.size()) {
        throw ShapeError("normalizer width " + std::to_string(norm.min.size()) +
                         " does not match data width " +
                         std::to_string(data.cols()));
    }
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double span = norm.max(c) - norm.min(c);
        if (span > 0.0) {
            out.col(c) = (data.col(c).array() - norm.min(c)) / span;
        } else {
            out.col(c).setZero();
        }
    }
    return out;
}

Eigen::MatrixXd unapply(const Normalizer& norm, const Eigen::MatrixXd& data) {
    if (data.cols() != norm.min.size()) {
        throw ShapeError("normalizer width does not match data width");
    }
    Eigen::MatrixXd out(data.rows(), data.cols());
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
        const double span = norm.max(c) - norm.min(c);
        out.col(c) = data.col(c).array() * span + norm.min(c);
    }
    return out;
}

DenseNetwork make_network(int input_width, const std::vector<LayerSpec>& layers,
                          Rng& rng) {
    if (input_width < 1) throw DomainError("network input width must be >= 1");
    if (layers.empty()) throw DomainError("network needs at least one layer");
    DenseNetwork net;
    int fan_in = input_width;
    for (const LayerSpec& spec : layers) {
        if (spec.width < 1) throw DomainError("layer width must be >= 1");
        Layer layer;
        const double bound = std::sqrt(6.0 / (fan_in + spec.width));
        layer.weights.resize(spec.width, fan_in);
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                layer.weights(r, c) = rng.uniform(-bound, bound);
            }
        }
        layer.biases = Eigen::VectorXd::Zero(spec.width);
        if (spec.batchnorm) {
            BatchNormParams bn;
            bn.gamma = Eigen::VectorXd::Ones(spec.width);
            bn.beta = Eigen::VectorXd::Zero(spec.width);
            bn.running_mean = Eigen::VectorXd::Zero(spec.width);
            bn.running_var = Eigen::VectorXd::Ones(spec.width);
            layer.batchnorm = std::move(bn);
        }
        layer.activation = spec.activation;
        net.layers.push_back(std::move(layer));
        fan_in = spec.width;
    }
    return net;
}

DenseNetwork make_regression_net(int input_width, int hidden_width,
                                 int hidden_count, int output_width,
                                 bool with_batchnorm, Rng& rng) {
    std::vector<LayerSpec> specs;
    for (int i = 0; i < hidden_count; ++i) {
        specs.push_back({hidden_width, with_batchnorm, Activation::relu});
    }
    specs.push_back({output_width, false, Activation::identity});
    return make_network(input_width, specs, rng);
}

TrainResult train_network(DenseNetwork& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets,
                          const Eigen::MatrixXd* val_inputs,
                          const Eigen::MatrixXd* val_targets,
                          const TrainConfig& config) {
    validate(config);
    if (inputs.rows() < 1) throw DataError("training set is empty");
    if (inputs.rows() != targets.rows()) {
        throw DataError("training inputs and targets disagree on row count");
    }
    if ((val_inputs == nullptr) != (val_targets == nullptr)) {
        throw DataError("validation inputs and targets must come together");
    }

    bool has_bn = false;
    for (const Layer& layer : net.layers) has_bn |= layer.batchnorm.has_value();

    const auto n = static_cast<std::size_t>(inputs.rows());
    Rng rng(config.seed);
    AdamState state = make_adam_state(net);
    TrainResult result;
    result.train_loss.reserve(static_cast<std::size_t>(config.epochs));
    int step = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<std::size_t> order = rng.permutation(n);
        double loss_sum = 0.0;
        std::size_t rows_used = 0;

        for (std::size_t start = 0; start < n;
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(n - start, static_cast<std::size_t>(config.batch_size));
            if (count < 2 && has_bn) continue;  // degenerate for batch norm

            Eigen::MatrixXd bx(count, inputs.cols());
            Eigen::MatrixXd by(count, targets.cols());
            for (std::size_t r = 0; r < count; ++r) {
                bx.row(static_cast<Eigen::Index>(r)) =
                    inputs.row(static_cast<Eigen::Index>(order[start + r]));
                by.row(static_cast<Eigen::Index>(r)) =
                    targets.row(static_cast<Eigen::Index>(order[start + r]));
            }

            ForwardCache cache;
            const Eigen::MatrixXd pred = forward(net, bx, Mode::train, &cache);
            const double loss = mse_loss(pred, by);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training loss became non-finite at epoch " +
                                          std::to_string(epoch + 1),
                                      epoch + 1);
            }
            loss_sum += loss * static_cast<double>(count);
            rows_used += count;

            const Gradients grads = backward(net, cache, mse_loss_grad(pred, by));
            adam_step(net, grads, state, config, ++step);
        }

        if (rows_used == 0) {
            throw DataError("no trainable batches: dataset too small for batch norm");
        }
        result.train_loss.push_back(loss_sum / static_cast<double>(rows_used));

        if (val_inputs != nullptr) {
            const Eigen::MatrixXd vp = forward(net, *val_inputs, Mode::eval);
            const double vloss = mse_loss(vp, *val_targets);
            if (!std::isfinite(vloss)) {
                throw DivergenceError(
                    "validation loss became non-finite at epoch " +
                        std::to_string(epoch + 1),
                    epoch + 1);
            }
            result.val_loss.push_back(vloss);
        }
    }
    return result;
}

std::vector<double> flatten_parameters(const DenseNetwork& net) {
    std::vector<double> flat;
    flat.reserve(parameter_count(net));
    for (const Layer& layer : net.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                flat.push_back(layer.weights(r, c));
            }
        }
        for (Eigen::Index i = 0; i < layer.biases.size(); ++i) {
            flat.push_back(layer.biases(i));
        }
        if (layer.batchnorm) {
            for (Eigen::Index i = 0; i < layer.batchnorm->gamma.size(); ++i) {
                flat.push_back(layer.batchnorm->gamma(i));
            }
            for (Eigen::Index i = 0; i < layer.batchnorm->beta.size(); ++i) {
                flat.push_back(layer.batchnorm->beta(i));
            }
        }
    }
    return flat;
}

void set_parameters(DenseNetwork& net, const std::vector<double>& flat) {
    if (flat.size() != parameter_count(net)) {
        throw ShapeError("flat parameter vector has size " +
                         std::to_string(flat.size()) + ", network has " +
                         std::to_string(parameter_count(net)));
    }
    std::size_t k = 0;
    for (Layer& layer : net.layers) {
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
                layer.weights(r, c) = flat[k++];
            }
        }
        for (Eigen::Index i = 0; i < layer.biases.size(); ++i) {
            layer.biases(i) = flat[k++];
        }
        if (layer.batchnorm) {
            for (Eigen::Index i = 0; i < layer.batchnorm->gamma.size(); ++i) {
                layer.batchnorm->gamma(i) = flat[k++];
            }
            for (Eigen::Index i = 0; i < layer.batchnorm->beta.size(); ++i) {
                layer.batchnorm->beta(i) = flat[k++];
            }
        }
    }
    ++net.revision;
}

std::vector<double> flatten_gradients(const DenseNetwork& net,
                                      const Gradients& grads) {
    if (grads.layers.size() != net.layers.size()) {
        throw ShapeError("gradient layer count does not match network");
    }
    std::vector<double> flat;
    flat.reserve(parameter_count(net));
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const LayerGradients& lg = grads.layers[li];
        for (Eigen::Index r = 0; r < lg.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < lg.weights.cols(); ++c) {
                flat.push_back(lg.weights(r, c));
            }
        }
        for (Eigen::Index i = 0; i < lg.biases.size(); ++i) {
            flat.push_back(lg.biases(i));
        }
        if (net.layers[li].batchnorm) {
            for (Eigen::Index i = 0; i < lg.gamma.size(); ++i) {
                flat.push_back(lg.gamma(i));
            }
            for (Eigen::Index i = 0; i < lg.beta.size(); ++i) {
                flat.push_back(lg.beta(i));
            }
        }
    }
    return flat;
}

void to_json(nlohmann::json& j, const DenseNetwork& net) {
    validate(net);
    j = nlohmann::json::object();
    j["layers"] = nlohmann::json::array();
    for (const Layer& layer : net.layers) {
        nlohmann::json jl;
        jl["weights"] = matrix_to_json(layer.weights);
        jl["biases"] = vector_to_json(layer.biases);
        jl["activation"] =
            layer.activation == Activation::relu ? "relu" : "identity";
        if (layer.batchnorm) {
            const auto& bn = *layer.batchnorm;
            jl["batchnorm"] = {{"gamma", vector_to_json(bn.gamma)},
                               {"beta", vector_to_json(bn.beta)},
                               {"running_mean", vector_to_json(bn.running_mean)},
                               {"running_var", vector_to_json(bn.running_var)},
                               {"momentum", bn.momentum}};
        }
        j["layers"].push_back(std::move(jl));
    }
}

void from_json(const nlohmann::json& j, DenseNetwork& net) {
    if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
        throw ParseError("model JSON lacks a \"layers\" array", 0);
    }
    net = DenseNetwork{};
    for (const auto& jl : j["layers"]) {
        Layer layer;
        if (!jl.contains("weights") || !jl.contains("biases") ||
            !jl.contains("activation")) {
            throw ParseError("model JSON layer lacks weights/biases/activation", 0);
        }
        layer.weights = matrix_from_json(jl["weights"], "weights");
        layer.biases = vector_from_json(jl["biases"], "biases");
        const std::string act = jl["activation"].get<std::string>();
        if (act == "relu") {
            layer.activation = Activation::relu;
        } else if (act == "identity") {
            layer.activation = Activation::identity;
        } else {
            throw ParseError("model JSON has unknown activation \"" + act + "\"", 0);
        }
        if (jl.contains("batchnorm")) {
            const auto& jb = jl["batchnorm"];
            BatchNormParams bn;
            bn.gamma = vector_from_json(jb.at("gamma"), "gamma");
            bn.beta = vector_from_json(jb.at("beta"), "beta");
            bn.running_mean = vector_from_json(jb.at("running_mean"), "running_mean");
            bn.running_var = vector_from_json(jb.at("running_var"), "running_var");
            bn.momentum = jb.at("momentum").get<double>();
            layer.batchnorm = std::move(bn);
        }
        net.layers.push_back(std::move(layer));
    }
    validate(net);
}

void to_json(nlohmann::json& j, const Normalizer& norm) {
    j = {{"min", vector_to_json(norm.min)}, {"max", vector_to_json(norm.max)}};
}

void from_json(const nlohmann::json& j, Normalizer& norm) {
    if (!j.is_object() || !j.contains("min") || !j.contains("max")) {
        throw ParseError("normalizer JSON lacks min/max arrays", 0);
    }
    norm.min = vector_from_json(j["min"], "normalizer min");
    norm.max = vector_from_json(j["max"], "normalizer max");
    if (norm.min.size() != norm.max.size()) {
        throw ShapeError("normalizer min/max lengths disagree");
    }
}

std::string to_json(const DenseNetwork& net) {
    nlohmann::json j = net;
    return j.dump(1);
}

DenseNetwork network_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid model JSON: ") + e.what(), 0);
    }
    return j.get<DenseNetwork>();
}

}  // namespace mdf::nn
