#include "mdf/mtl.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "mdf/errors.hpp"

namespace mdf::mtl {

std::vector<double> condition_vector(const FlightCondition& cond) {
    if (!std::isfinite(cond.mach) || !std::isfinite(cond.alpha)) {
        throw DomainError("flight condition has non-finite entries");
    }
    std::vector<double> v{cond.mach, cond.alpha};
    if (cond.roll) v.push_back(*cond.roll);
    return v;
}

void validate(const MdfModel& model) {
    nn::validate(model.f1);
    nn::validate(model.f2);
    nn::validate(model.context);
    const int k = model.outputs;
    if (k < 1) throw ShapeError("fusion model output count must be >= 1");
    if (nn::output_size(model.f1) != k || nn::output_size(model.f2) != k) {
        throw ShapeError("function networks must output " + std::to_string(k) +
                         " values");
    }
    if (nn::output_size(model.context) != 2 * k) {
        throw ShapeError("context network must output " + std::to_string(2 * k) +
                         " gates");
    }
    if (nn::input_size(model.context) !=
        nn::input_size(model.f1) + nn::input_size(model.f2)) {
        throw ShapeError(
            "context network input must be the concatenated function inputs");
    }
}

Eigen::MatrixXd fused_forward(MdfModel& model, const Eigen::MatrixXd& x1,
                              const Eigen::MatrixXd& x2, nn::Mode mode,
                              FusedCache* cache) {
    if (x1.rows() != x2.rows()) {
        throw ShapeError("feature and condition batches disagree on row count");
    }
    if (x1.cols() != nn::input_size(model.f1) ||
        x2.cols() != nn::input_size(model.f2)) {
        throw ShapeError("fusion input widths do not match the model");
    }
    Eigen::MatrixXd ctx_in(x1.rows(), x1.cols() + x2.cols());
    ctx_in << x1, x2;

    const int k = model.outputs;
    Eigen::MatrixXd f1_out =
        nn::forward(model.f1, x1, mode, cache ? &cache->f1 : nullptr);
    Eigen::MatrixXd f2_out =
        nn::forward(model.f2, x2, mode, cache ? &cache->f2 : nullptr);
    Eigen::MatrixXd ctx_out =
        nn::forward(model.context, ctx_in, mode, cache ? &cache->context : nullptr);

    Eigen::MatrixXd y = f1_out.array() * ctx_out.leftCols(k).array() +
                        f2_out.array() * ctx_out.rightCols(k).array();
    if (cache) {
        cache->f1_out = std::move(f1_out);
        cache->f2_out = std::move(f2_out);
        cache->context_out = std::move(ctx_out);
    }
    return y;
}

Eigen::VectorXd mdf_forward(MdfModel& model, const std::vector<double>& features,
                            const FlightCondition& cond, nn::Mode mode) {
    Eigen::MatrixXd x1(1, static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) {
        x1(0, static_cast<Eigen::Index>(i)) = features[i];
    }
    const std::vector<double> cv = condition_vector(cond);
    Eigen::MatrixXd x2(1, static_cast<Eigen::Index>(cv.size()));
    for (std::size_t i = 0; i < cv.size(); ++i) {
        x2(0, static_cast<Eigen::Index>(i)) = cv[i];
    }
    return fused_forward(model, x1, x2, mode).row(0);
}

FusedGradients fused_backward(const MdfModel& model, const FusedCache& cache,
                              const Eigen::MatrixXd& loss_grad,
                              const BackwardSelect& select) {
    const int k = model.outputs;
    if (loss_grad.cols() != k || loss_grad.rows() != cache.f1_out.rows()) {
        throw ShapeError("fusion loss gradient shape does not match the output");
    }
    FusedGradients grads;
    if (select.function) {
        const Eigen::MatrixXd d_f1 =
            loss_grad.array() * cache.context_out.leftCols(k).array();
        const Eigen::MatrixXd d_f2 =
            loss_grad.array() * cache.context_out.rightCols(k).array();
        grads.f1 = nn::backward(model.f1, cache.f1, d_f1);
        grads.f2 = nn::backward(model.f2, cache.f2, d_f2);
    }
    if (select.context) {
        Eigen::MatrixXd d_ctx(loss_grad.rows(), 2 * k);
        d_ctx.leftCols(k) = loss_grad.array() * cache.f1_out.array();
        d_ctx.rightCols(k) = loss_grad.array() * cache.f2_out.array();
        grads.context = nn::backward(model.context, cache.context, d_ctx);
    }
    return grads;
}

FusedTrainResult train_fused(MdfModel& model, const Eigen::MatrixXd& x1,
                             const Eigen::MatrixXd& x2, const Eigen::MatrixXd& y,
                             const Eigen::MatrixXd* val_x1,
                             const Eigen::MatrixXd* val_x2,
                             const Eigen::MatrixXd* val_y,
                             const nn::TrainConfig& config,
                             const TrainOptions& options) {
    nn::validate(config);
    validate(model);
    if (x1.rows() < 1) throw DataError("training set is empty");
    if (x1.rows() != y.rows() || x2.rows() != y.rows()) {
        throw DataError("training inputs and targets disagree on row count");
    }
    const bool has_val = val_x1 != nullptr;
    if ((val_x1 == nullptr) != (val_y == nullptr) ||
        (val_x1 == nullptr) != (val_x2 == nullptr)) {
        throw DataError("validation inputs and targets must come together");
    }

    bool has_bn = false;
    for (const nn::DenseNetwork* net : {&model.f1, &model.f2, &model.context}) {
        for (const auto& layer : net->layers) has_bn |= layer.batchnorm.has_value();
    }

    const auto n = static_cast<std::size_t>(x1.rows());
    Rng rng(config.seed);
    nn::AdamState state_f1 = nn::make_adam_state(model.f1);
    nn::AdamState state_f2 = nn::make_adam_state(model.f2);
    nn::AdamState state_ctx = nn::make_adam_state(model.context);
    int step_f = 0;
    int step_c = 0;

    FusedTrainResult result;
    result.train_loss.reserve(static_cast<std::size_t>(config.epochs));

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<std::size_t> order = rng.permutation(n);
        double loss_sum = 0.0;
        std::size_t rows_used = 0;

        for (std::size_t start = 0; start < n;
             start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t count =
                std::min(n - start, static_cast<std::size_t>(config.batch_size));
            if (count < 2 && has_bn) continue;

            Eigen::MatrixXd b1(count, x1.cols());
            Eigen::MatrixXd b2(count, x2.cols());
            Eigen::MatrixXd by(count, y.cols());
            for (std::size_t r = 0; r < count; ++r) {
                const auto src = static_cast<Eigen::Index>(order[start + r]);
                b1.row(static_cast<Eigen::Index>(r)) = x1.row(src);
                b2.row(static_cast<Eigen::Index>(r)) = x2.row(src);
                by.row(static_cast<Eigen::Index>(r)) = y.row(src);
            }

            // Step 1: forward and loss.
            FusedCache cache;
            Eigen::MatrixXd pred = fused_forward(model, b1, b2, nn::Mode::train, &cache);
            const double loss = nn::mse_loss(pred, by);
            if (!std::isfinite(loss)) {
                throw DivergenceError("training loss became non-finite at epoch " +
                                          std::to_string(epoch + 1),
                                      epoch + 1);
            }
            loss_sum += loss * static_cast<double>(count);
            rows_used += count;

            // Step 2: update the function networks, context frozen.
            if (options.update_function) {
                const FusedGradients g = fused_backward(
                    model, cache, nn::mse_loss_grad(pred, by), {true, false});
                ++step_f;
                nn::adam_step(model.f1, g.f1, state_f1, config, step_f);
                nn::adam_step(model.f2, g.f2, state_f2, config, step_f);
            }

            // Step 3: fresh forward against the updated function networks,
            // then update the context with the function networks frozen.
            if (options.update_context) {
                FusedCache cache2;
                pred = fused_forward(model, b1, b2, nn::Mode::train, &cache2);
                const FusedGradients g = fused_backward(
                    model, cache2, nn::mse_loss_grad(pred, by), {false, true});
                nn::adam_step(model.context, g.context, state_ctx, config, ++step_c);
            }
        }

        if (rows_used == 0) {
            throw DataError("no trainable batches: dataset too small for batch norm");
        }
        result.train_loss.push_back(loss_sum / static_cast<double>(rows_used));

        if (has_val) {
            const Eigen::MatrixXd vp =
                fused_forward(model, *val_x1, *val_x2, nn::Mode::eval);
            const double vloss = nn::mse_loss(vp, *val_y);
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

MdfArchitecture mdf_architecture(int feature_width) {
    MdfArchitecture arch;
    arch.feature_width = feature_width;
    return arch;
}

MdfArchitecture mtl_g_architecture() {
    MdfArchitecture arch;
    arch.feature_width = 7;
    arch.f1_width = 32;
    arch.f2_width = 8;
    arch.context_width = 32;
    return arch;
}

MdfModel make_mdf_model(const MdfArchitecture& arch, Rng& rng) {
    MdfModel model;
    model.outputs = arch.outputs;
    model.f1 = nn::make_regression_net(arch.feature_width, arch.f1_width,
                                       arch.f1_depth, arch.outputs,
                                       arch.batchnorm, rng);
    model.f2 = nn::make_regression_net(arch.condition_width, arch.f2_width,
                                       arch.f2_depth, arch.outputs,
                                       arch.batchnorm, rng);
    model.context = nn::make_regression_net(
        arch.feature_width + arch.condition_width, arch.context_width,
        arch.context_depth, 2 * arch.outputs, arch.batchnorm, rng);
    return model;
}

nn::DenseNetwork make_mlp(int input_width, int outputs, Rng& rng,
                          int hidden_width, int hidden_depth, bool batchnorm) {
    return nn::make_regression_net(input_width, hidden_width, hidden_depth,
                                   outputs, batchnorm, rng);
}

nn::DenseNetwork make_autoencoder(const AutoencoderArchitecture& arch, Rng& rng) {
    std::vector<nn::LayerSpec> specs{
        {arch.encoder_width, arch.batchnorm, nn::Activation::relu},
        {arch.bottleneck, arch.batchnorm, nn::Activation::relu},
        {arch.decoder_width, arch.batchnorm, nn::Activation::relu},
        {2 * arch.coord_points, false, nn::Activation::identity}};
    return nn::make_network(arch.feature_width, specs, rng);
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::mdf: return "mdf";
        case ModelKind::mlp: return "mlp";
        case ModelKind::mtl_g: return "mtl_g";
        case ModelKind::ae2: return "ae2";
    }
    throw DomainError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "mdf") return ModelKind::mdf;
    if (s == "mlp") return ModelKind::mlp;
    if (s == "mtl_g") return ModelKind::mtl_g;
    if (s == "ae2") return ModelKind::ae2;
    throw DomainError("unknown model kind \"" + s + "\"");
}

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::manifold: return "manifold";
        case FeatureKind::coordinates: return "coordinates";
        case FeatureKind::geoparams: return "geoparams";
    }
    throw DomainError("unknown feature kind");
}

FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "manifold") return FeatureKind::manifold;
    if (s == "coordinates") return FeatureKind::coordinates;
    if (s == "geoparams") return FeatureKind::geoparams;
    throw DomainError("unknown feature kind \"" + s + "\"");
}

std::string to_json(const ModelFile& file) {
    nlohmann::json j;
    j["kind"] = to_string(file.kind);
    j["feature_kind"] = to_string(file.feature_kind);
    j["feature_width"] = file.feature_width;
    j["condition_width"] = file.condition_width;
    j["input_norm"] = file.input_norm;
    j["target_norm"] = file.target_norm;
    if (file.kind == ModelKind::mdf || file.kind == ModelKind::mtl_g) {
        j["outputs"] = file.fused.outputs;
        j["f1"] = file.fused.f1;
        j["f2"] = file.fused.f2;
        j["context"] = file.fused.context;
    } else {
        j["net"] = file.net;
    }
    return j.dump(1);
}

ModelFile model_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid model file JSON: ") + e.what(), 0);
    }
    ModelFile file;
    try {
        file.kind = model_kind_from_string(j.at("kind").get<std::string>());
        file.feature_kind =
            feature_kind_from_string(j.at("feature_kind").get<std::string>());
        file.feature_width = j.at("feature_width").get<int>();
        file.condition_width = j.at("condition_width").get<int>();
        file.input_norm = j.at("input_norm").get<nn::Normalizer>();
        file.target_norm = j.at("target_norm").get<nn::Normalizer>();
        if (file.kind == ModelKind::mdf || file.kind == ModelKind::mtl_g) {
            file.fused.outputs = j.at("outputs").get<int>();
            file.fused.f1 = j.at("f1").get<nn::DenseNetwork>();
            file.fused.f2 = j.at("f2").get<nn::DenseNetwork>();
            file.fused.context = j.at("context").get<nn::DenseNetwork>();
            validate(file.fused);
        } else {
            file.net = j.at("net").get<nn::DenseNetwork>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model file JSON is incomplete: ") + e.what(),
                         0);
    }
    return file;
}

}  // namespace mdf::mtl
