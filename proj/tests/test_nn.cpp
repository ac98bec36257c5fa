#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdf/errors.hpp"
#include "mdf/nn.hpp"
#include "mdf/rng.hpp"

using namespace mdf;

namespace {

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double span = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-span, span);
    }
    return m;
}

/// Central-difference loss gradient for every learnable parameter.
std::vector<double> fd_gradients(nn::DenseNetwork& net,
                                 const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& y, double h) {
    const std::vector<double> theta = nn::flatten_parameters(net);
    std::vector<double> fd(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        std::vector<double> probe = theta;
        probe[i] = theta[i] + h;
        nn::set_parameters(net, probe);
        const double up = nn::mse_loss(nn::forward(net, x, nn::Mode::train), y);
        probe[i] = theta[i] - h;
        nn::set_parameters(net, probe);
        const double dn = nn::mse_loss(nn::forward(net, x, nn::Mode::train), y);
        fd[i] = (up - dn) / (2.0 * h);
    }
    nn::set_parameters(net, theta);
    return fd;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-6});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

void check_gradients(nn::DenseNetwork& net, Rng& rng) {
    const int b = 5;
    const Eigen::MatrixXd x = random_matrix(rng, b, nn::input_size(net));
    const Eigen::MatrixXd y = random_matrix(rng, b, nn::output_size(net));

    nn::ForwardCache cache;
    const Eigen::MatrixXd pred = nn::forward(net, x, nn::Mode::train, &cache);
    const nn::Gradients grads =
        nn::backward(net, cache, nn::mse_loss_grad(pred, y));
    const std::vector<double> analytic = nn::flatten_gradients(net, grads);
    const std::vector<double> fd = fd_gradients(net, x, y, 1e-5);
    CHECK(max_rel_err(analytic, fd) <= 1e-4);
}

}  // namespace

TEST_CASE("identity layer passes input through") {
    nn::DenseNetwork net;
    nn::Layer layer;
    layer.weights = Eigen::MatrixXd::Identity(3, 3);
    layer.biases = Eigen::VectorXd::Zero(3);
    layer.activation = nn::Activation::identity;
    net.layers.push_back(layer);

    Rng rng(1);
    const Eigen::MatrixXd x = random_matrix(rng, 4, 3, 2.0);
    const Eigen::MatrixXd out = nn::forward(net, x, nn::Mode::eval);
    CHECK(out == x);
}

TEST_CASE("relu layer zeroes an all-negative affine output") {
    nn::DenseNetwork net;
    nn::Layer layer;
    layer.weights = Eigen::MatrixXd::Identity(2, 2);
    layer.biases = Eigen::VectorXd::Constant(2, -100.0);
    layer.activation = nn::Activation::relu;
    net.layers.push_back(layer);

    Rng rng(2);
    const Eigen::MatrixXd x = random_matrix(rng, 3, 2, 1.0);
    const Eigen::MatrixXd out = nn::forward(net, x, nn::Mode::eval);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two-layer forward matches a hand-computed chain") {
    nn::DenseNetwork net;
    nn::Layer l1;
    l1.weights.resize(2, 2);
    l1.weights << 0.5, -0.25, 0.75, 1.0;
    l1.biases.resize(2);
    l1.biases << 0.1, -0.2;
    l1.activation = nn::Activation::relu;
    nn::Layer l2;
    l2.weights.resize(1, 2);
    l2.weights << 0.3, -0.6;
    l2.biases.resize(1);
    l2.biases << 0.05;
    l2.activation = nn::Activation::identity;
    net.layers = {l1, l2};

    Eigen::MatrixXd x(2, 2);
    x << 1.0, 2.0, -1.0, 0.5;
    const Eigen::MatrixXd out = nn::forward(net, x, nn::Mode::eval);
    REQUIRE(out.rows() == 2);
    REQUIRE(out.cols() == 1);
    // Row 1: affine (0.1, 2.55), relu unchanged, head 0.3*0.1 - 0.6*2.55 + 0.05.
    CHECK(out(0, 0) == doctest::Approx(-1.45).epsilon(1e-12));
    // Row 2: affine (-0.525, -0.45), relu clips to zero, head 0.05.
    CHECK(out(1, 0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("mse loss pinned values and shape checks") {
    Eigen::MatrixXd a(1, 2), b(1, 2);
    a << 1.0, 1.0;
    b << 0.0, 0.0;
    CHECK(nn::mse_loss(a, a) == 0.0);
    CHECK(nn::mse_loss(a, b) == doctest::Approx(1.0).epsilon(1e-15));

    Eigen::MatrixXd c(2, 1), d(2, 1);
    c << 1.0, 3.0;
    d << 0.0, 0.0;
    CHECK(nn::mse_loss(c, d) == doctest::Approx(5.0).epsilon(1e-15));

    CHECK_THROWS_AS(nn::mse_loss(a, c), ShapeError);
    CHECK_THROWS_AS(nn::mse_loss_grad(a, c), ShapeError);

    // Gradient of the per-element mean: 2 (pred - target) / (B * K).
    const Eigen::MatrixXd g = nn::mse_loss_grad(c, d);
    CHECK(g(0, 0) == doctest::Approx(2.0 * 1.0 / 2.0).epsilon(1e-15));
    CHECK(g(1, 0) == doctest::Approx(2.0 * 3.0 / 2.0).epsilon(1e-15));
}

TEST_CASE("zero loss gradient produces zero parameter gradients") {
    Rng rng(3);
    auto net = nn::make_regression_net(4, 8, 2, 2, true, rng);
    const Eigen::MatrixXd x = random_matrix(rng, 4, 4);
    nn::ForwardCache cache;
    const Eigen::MatrixXd pred = nn::forward(net, x, nn::Mode::train, &cache);
    const nn::Gradients grads = nn::backward(
        net, cache, Eigen::MatrixXd::Zero(pred.rows(), pred.cols()));
    for (const double g : nn::flatten_gradients(net, grads)) {
        CHECK(g == 0.0);
    }
    CHECK(grads.input.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar linear net gradient matches the hand derivative") {
    // One linear neuron, loss = (w x - y)^2 for B = K = 1, so
    // dL/dw = 2 (w x - y) x and dL/db = 2 (w x - y).
    nn::DenseNetwork net;
    nn::Layer layer;
    layer.weights.resize(1, 1);
    layer.weights << 1.7;
    layer.biases = Eigen::VectorXd::Zero(1);
    layer.activation = nn::Activation::identity;
    net.layers.push_back(layer);

    Eigen::MatrixXd x(1, 1), y(1, 1);
    x << 0.8;
    y << -0.4;
    nn::ForwardCache cache;
    const Eigen::MatrixXd pred = nn::forward(net, x, nn::Mode::train, &cache);
    const nn::Gradients grads =
        nn::backward(net, cache, nn::mse_loss_grad(pred, y));
    const double resid = 1.7 * 0.8 - (-0.4);
    CHECK(grads.layers[0].weights(0, 0) ==
          doctest::Approx(2.0 * resid * 0.8).epsilon(1e-14));
    CHECK(grads.layers[0].biases(0) ==
          doctest::Approx(2.0 * resid).epsilon(1e-14));
    CHECK(grads.input(0, 0) ==
          doctest::Approx(2.0 * resid * 1.7).epsilon(1e-14));
}

TEST_CASE("analytic gradients match finite differences on probe nets") {
    // Shrunken versions of every architecture family in the artifact:
    // function net, context net, and autoencoder, three seeds each.
    for (const std::uint64_t seed : {11u, 22u, 33u}) {
        CAPTURE(seed);
        {
            Rng rng(seed);
            auto fn = nn::make_regression_net(8, 16, 3, 3, true, rng);
            check_gradients(fn, rng);
        }
        {
            Rng rng(seed + 100);
            auto ctx = nn::make_regression_net(2, 8, 3, 6, true, rng);
            check_gradients(ctx, rng);
        }
        {
            Rng rng(seed + 200);
            auto ae = nn::make_network(
                10,
                {{12, true, nn::Activation::relu},
                 {4, true, nn::Activation::relu},
                 {12, true, nn::Activation::relu},
                 {10, false, nn::Activation::identity}},
                rng);
            check_gradients(ae, rng);
        }
    }
}

TEST_CASE("input gradient matches finite differences") {
    Rng rng(5);
    auto net = nn::make_regression_net(4, 8, 2, 2, true, rng);
    const Eigen::MatrixXd x0 = random_matrix(rng, 3, 4);
    const Eigen::MatrixXd y = random_matrix(rng, 3, 2);

    nn::ForwardCache cache;
    const Eigen::MatrixXd pred = nn::forward(net, x0, nn::Mode::train, &cache);
    const nn::Gradients grads =
        nn::backward(net, cache, nn::mse_loss_grad(pred, y));

    const double h = 1e-5;
    for (int r = 0; r < x0.rows(); ++r) {
        for (int c = 0; c < x0.cols(); ++c) {
            Eigen::MatrixXd xp = x0, xm = x0;
            xp(r, c) += h;
            xm(r, c) -= h;
            const double up = nn::mse_loss(nn::forward(net, xp, nn::Mode::train), y);
            const double dn = nn::mse_loss(nn::forward(net, xm, nn::Mode::train), y);
            const double fd = (up - dn) / (2.0 * h);
            const double scale =
                std::max({std::abs(fd), std::abs(grads.input(r, c)), 1e-6});
            CHECK(std::abs(grads.input(r, c) - fd) / scale <= 1e-4);
        }
    }
}

TEST_CASE("adam matches an independent oracle on a fixed quadratic") {
    // Scalar net trained on (x, y) = (1, 0): loss = (w + b)^2, gradient
    // dL/dw = dL/db = 2 (w + b). The oracle re-implements Adam from its
    // published update equations.
    nn::DenseNetwork net;
    nn::Layer layer;
    layer.weights.resize(1, 1);
    layer.weights << 0.9;
    layer.biases.resize(1);
    layer.biases << -0.3;
    layer.activation = nn::Activation::identity;
    net.layers.push_back(layer);

    nn::TrainConfig config;
    config.learning_rate = 0.05;
    nn::AdamState state = nn::make_adam_state(net);

    double w = 0.9, b = -0.3;
    double mw = 0, vw = 0, mb = 0, vb = 0;
    Eigen::MatrixXd x(1, 1), y(1, 1);
    x << 1.0;
    y << 0.0;

    for (int t = 1; t <= 5; ++t) {
        nn::ForwardCache cache;
        const Eigen::MatrixXd pred = nn::forward(net, x, nn::Mode::train, &cache);
        const nn::Gradients grads =
            nn::backward(net, cache, nn::mse_loss_grad(pred, y));
        nn::adam_step(net, grads, state, config, t);

        const double g = 2.0 * (w + b);
        auto update = [&](double& m, double& v, double& theta) {
            m = config.beta1 * m + (1.0 - config.beta1) * g;
            v = config.beta2 * v + (1.0 - config.beta2) * g * g;
            const double mhat = m / (1.0 - std::pow(config.beta1, t));
            const double vhat = v / (1.0 - std::pow(config.beta2, t));
            theta -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
        };
        update(mw, vw, w);
        update(mb, vb, b);

        CHECK(net.layers[0].weights(0, 0) == doctest::Approx(w).epsilon(1e-12));
        CHECK(net.layers[0].biases(0) == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("adam first step and zero-gradient behaviour") {
    Rng rng(7);
    auto net = nn::make_regression_net(3, 4, 1, 2, false, rng);
    const std::vector<double> before = nn::flatten_parameters(net);
    nn::AdamState state = nn::make_adam_state(net);
    nn::TrainConfig config;

    // Zero gradients leave every parameter untouched.
    nn::Gradients zero;
    zero.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        zero.layers[i].weights =
            Eigen::MatrixXd::Zero(net.layers[i].weights.rows(),
                                  net.layers[i].weights.cols());
        zero.layers[i].biases = Eigen::VectorXd::Zero(net.layers[i].biases.size());
    }
    nn::adam_step(net, zero, state, config, 1);
    CHECK(nn::flatten_parameters(net) == before);

    // On the very first step, bias correction makes the update magnitude
    // ~lr with sign opposite the gradient, regardless of the gradient size.
    nn::Gradients one = zero;
    one.layers[0].weights(0, 0) = 3.0;
    const double theta0 = net.layers[0].weights(0, 0);
    nn::AdamState fresh = nn::make_adam_state(net);
    nn::adam_step(net, one, fresh, config, 1);
    const double delta = net.layers[0].weights(0, 0) - theta0;
    CHECK(delta < 0.0);
    CHECK(std::abs(delta + config.learning_rate) <= config.learning_rate * 1e-5);
}

TEST_CASE("min-max normalizer pinned behaviour") {
    Eigen::MatrixXd data(3, 2);
    data << 0.0, 7.0, 5.0, 7.0, 10.0, 7.0;
    const nn::Normalizer norm = nn::fit_normalizer(data);
    const Eigen::MatrixXd scaled = nn::apply(norm, data);
    CHECK(scaled(0, 0) == 0.0);
    CHECK(scaled(1, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scaled(2, 0) == 1.0);
    // Constant feature maps to 0 everywhere.
    CHECK(scaled.col(1).cwiseAbs().maxCoeff() == 0.0);

    // No clamping outside the fitted range.
    Eigen::MatrixXd probe(1, 2);
    probe << 20.0, 9.0;
    const Eigen::MatrixXd out = nn::apply(norm, probe);
    CHECK(out(0, 0) == doctest::Approx(2.0).epsilon(1e-15));

    // unapply inverts apply; constant features return to their min.
    const Eigen::MatrixXd back = nn::unapply(norm, scaled);
    CHECK((back.col(0) - data.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.col(1).array() - 7.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("batch norm: momentum one makes eval match train on the same batch") {
    Rng rng(9);
    auto net = nn::make_regression_net(4, 8, 2, 2, true, rng);
    for (auto& layer : net.layers) {
        if (layer.batchnorm) layer.batchnorm->momentum = 1.0;
    }
    const Eigen::MatrixXd x = random_matrix(rng, 6, 4);
    const Eigen::MatrixXd train_out = nn::forward(net, x, nn::Mode::train);
    const Eigen::MatrixXd eval_out = nn::forward(net, x, nn::Mode::eval);
    CHECK((train_out - eval_out).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("batch norm uses batch stats in train mode and running in eval") {
    Rng rng(10);
    auto net = nn::make_regression_net(3, 6, 1, 1, true, rng);
    const Eigen::MatrixXd x1 = random_matrix(rng, 5, 3);
    const Eigen::MatrixXd x2 = random_matrix(rng, 5, 3, 3.0);

    // Eval before any training batch uses the initial running stats.
    const Eigen::MatrixXd eval_fresh = nn::forward(net, x1, nn::Mode::eval);
    // Train-mode forward on a different batch shifts the running stats...
    (void)nn::forward(net, x2, nn::Mode::train);
    const Eigen::MatrixXd eval_after = nn::forward(net, x1, nn::Mode::eval);
    // ...so eval output on the same input changes.
    CHECK((eval_fresh - eval_after).cwiseAbs().maxCoeff() > 1e-12);

    // Eval mode itself never mutates the network.
    const Eigen::MatrixXd again = nn::forward(net, x1, nn::Mode::eval);
    CHECK(again == eval_after);
}

TEST_CASE("degenerate train batch for batch norm is rejected") {
    Rng rng(11);
    auto net = nn::make_regression_net(3, 4, 1, 1, true, rng);
    const Eigen::MatrixXd one = random_matrix(rng, 1, 3);
    CHECK_THROWS_AS(nn::forward(net, one, nn::Mode::train), DegenerateBatchError);
    CHECK_NOTHROW(nn::forward(net, one, nn::Mode::eval));

    // Without batch norm a single-row train batch is fine.
    auto plain = nn::make_regression_net(3, 4, 1, 1, false, rng);
    CHECK_NOTHROW(nn::forward(plain, one, nn::Mode::train));
}

TEST_CASE("backward rejects stale, eval, or missing caches") {
    Rng rng(12);
    auto net = nn::make_regression_net(3, 4, 1, 2, true, rng);
    const Eigen::MatrixXd x = random_matrix(rng, 4, 3);
    const Eigen::MatrixXd y = random_matrix(rng, 4, 2);

    nn::ForwardCache cache;
    Eigen::MatrixXd pred = nn::forward(net, x, nn::Mode::train, &cache);
    const Eigen::MatrixXd g = nn::mse_loss_grad(pred, y);
    CHECK_NOTHROW(nn::backward(net, cache, g));

    // Parameter update invalidates the cache.
    nn::AdamState state = nn::make_adam_state(net);
    const nn::Gradients grads = nn::backward(net, cache, g);
    nn::adam_step(net, grads, state, nn::TrainConfig{}, 1);
    CHECK_THROWS_AS(nn::backward(net, cache, g), StateError);

    // Eval-mode caches cannot back-propagate.
    nn::ForwardCache eval_cache;
    pred = nn::forward(net, x, nn::Mode::eval, &eval_cache);
    CHECK_THROWS_AS(nn::backward(net, eval_cache, g), StateError);

    // A default-constructed cache is rejected as well.
    nn::ForwardCache empty;
    CHECK_THROWS_AS(nn::backward(net, empty, g), StateError);
}

TEST_CASE("shape errors on mismatched widths") {
    Rng rng(13);
    auto net = nn::make_regression_net(3, 4, 1, 2, true, rng);
    const Eigen::MatrixXd wrong = random_matrix(rng, 4, 5);
    CHECK_THROWS_AS(nn::forward(net, wrong, nn::Mode::eval), ShapeError);

    const Eigen::MatrixXd x = random_matrix(rng, 4, 3);
    nn::ForwardCache cache;
    (void)nn::forward(net, x, nn::Mode::train, &cache);
    const Eigen::MatrixXd bad_grad = Eigen::MatrixXd::Zero(4, 3);
    CHECK_THROWS_AS(nn::backward(net, cache, bad_grad), ShapeError);
}

TEST_CASE("training is deterministic under a fixed seed") {
    const auto run = [] {
        Rng rng(77);
        auto net = nn::make_regression_net(3, 8, 2, 2, true, rng);
        Rng data_rng(78);
        const Eigen::MatrixXd x = random_matrix(data_rng, 32, 3);
        const Eigen::MatrixXd y = random_matrix(data_rng, 32, 2);
        nn::TrainConfig config;
        config.epochs = 20;
        config.batch_size = 8;
        config.seed = 99;
        const nn::TrainResult res =
            nn::train_network(net, x, y, nullptr, nullptr, config);
        return std::make_pair(nn::flatten_parameters(net), res.train_loss);
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("loss collapses on a linear regression task") {
    Rng rng(21);
    const Eigen::MatrixXd x = random_matrix(rng, 64, 3);
    Eigen::MatrixXd w_true(2, 3);
    w_true << 1.0, -2.0, 0.5, 0.3, 0.8, -1.1;
    Eigen::MatrixXd y = x * w_true.transpose();
    y.col(0).array() += 0.2;

    auto net = nn::make_regression_net(3, 32, 2, 2, true, rng);
    nn::TrainConfig config;
    config.learning_rate = 0.01;
    config.epochs = 200;
    // Full batch keeps the recorded train-mode loss free of batch-statistic
    // noise, which otherwise leaves a small plateau with batch norm on.
    config.batch_size = 64;
    config.seed = 5;
    const nn::TrainResult res = nn::train_network(net, x, y, &x, &y, config);
    REQUIRE(res.train_loss.size() == 200);
    REQUIRE(res.val_loss.size() == 200);
    CHECK(res.train_loss.back() < 0.01 * res.train_loss.front());
    for (const double v : res.train_loss) CHECK(std::isfinite(v));
}

TEST_CASE("zero-epoch training is a validated no-op") {
    Rng rng(14);
    auto net = nn::make_regression_net(3, 4, 1, 1, true, rng);
    const std::vector<double> before = nn::flatten_parameters(net);
    const Eigen::MatrixXd x = random_matrix(rng, 8, 3);
    const Eigen::MatrixXd y = random_matrix(rng, 8, 1);
    nn::TrainConfig config;
    config.epochs = 0;
    const nn::TrainResult res = nn::train_network(net, x, y, nullptr, nullptr, config);
    CHECK(res.train_loss.empty());
    CHECK(res.val_loss.empty());
    CHECK(nn::flatten_parameters(net) == before);
}

TEST_CASE("training input validation") {
    Rng rng(15);
    auto net = nn::make_regression_net(3, 4, 1, 1, false, rng);
    const Eigen::MatrixXd x = random_matrix(rng, 8, 3);
    const Eigen::MatrixXd y_short = random_matrix(rng, 7, 1);
    nn::TrainConfig config;
    config.epochs = 1;
    CHECK_THROWS_AS(nn::train_network(net, x, y_short, nullptr, nullptr, config),
                    DataError);
    const Eigen::MatrixXd empty;
    CHECK_THROWS_AS(nn::train_network(net, empty, empty, nullptr, nullptr, config),
                    DataError);

    nn::TrainConfig bad = config;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(nn::validate(bad), DomainError);
    bad = config;
    bad.beta1 = 1.0;
    CHECK_THROWS_AS(nn::validate(bad), DomainError);
    bad = config;
    bad.batch_size = 0;
    CHECK_THROWS_AS(nn::validate(bad), DomainError);
    bad = config;
    bad.epochs = -1;
    CHECK_THROWS_AS(nn::validate(bad), DomainError);
}

TEST_CASE("divergent training is reported") {
    Rng rng(16);
    auto net = nn::make_regression_net(2, 8, 1, 1, false, rng);
    const Eigen::MatrixXd x = random_matrix(rng, 16, 2, 10.0);
    const Eigen::MatrixXd y = random_matrix(rng, 16, 1, 10.0);
    nn::TrainConfig config;
    config.learning_rate = 1e200;
    config.epochs = 50;
    CHECK_THROWS_AS(nn::train_network(net, x, y, nullptr, nullptr, config),
                    DivergenceError);
}

TEST_CASE("a one-row dataset is memorized") {
    Rng rng(23);
    auto net = nn::make_regression_net(2, 16, 2, 1, false, rng);
    Eigen::MatrixXd x(1, 2), y(1, 1);
    x << 0.4, -0.9;
    y << 0.7;
    nn::TrainConfig config;
    config.learning_rate = 0.01;
    config.epochs = 200;
    config.batch_size = 1;
    const nn::TrainResult res = nn::train_network(net, x, y, nullptr, nullptr, config);
    CHECK(res.train_loss.back() < 1e-6);
}

TEST_CASE("regression net structure follows the recipe") {
    Rng rng(17);
    const auto net = nn::make_regression_net(7, 32, 3, 2, true, rng);
    REQUIRE(net.layers.size() == 4);
    CHECK(nn::input_size(net) == 7);
    CHECK(nn::output_size(net) == 2);
    for (int i = 0; i < 3; ++i) {
        CHECK(net.layers[i].weights.rows() == 32);
        CHECK(net.layers[i].batchnorm.has_value());
        CHECK(net.layers[i].activation == nn::Activation::relu);
        CHECK(net.layers[i].biases.cwiseAbs().maxCoeff() == 0.0);
        if (net.layers[i].batchnorm) {
            CHECK((net.layers[i].batchnorm->gamma.array() == 1.0).all());
            CHECK(net.layers[i].batchnorm->beta.cwiseAbs().maxCoeff() == 0.0);
            CHECK(net.layers[i].batchnorm->running_mean.cwiseAbs().maxCoeff() == 0.0);
            CHECK((net.layers[i].batchnorm->running_var.array() == 1.0).all());
        }
    }
    CHECK_FALSE(net.layers[3].batchnorm.has_value());
    CHECK(net.layers[3].activation == nn::Activation::identity);

    // Glorot bound for the first layer.
    const double bound = std::sqrt(6.0 / (7 + 32));
    CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() <= bound);
    CHECK(net.layers[0].weights.cwiseAbs().maxCoeff() > 0.0);

    CHECK(nn::parameter_count(net) ==
          (32 * 7 + 32 + 2 * 32) + 2 * (32 * 32 + 32 + 2 * 32) + (2 * 32 + 2));
    CHECK_NOTHROW(nn::validate(net));
}

TEST_CASE("network validation catches structural corruption") {
    Rng rng(18);
    auto net = nn::make_regression_net(3, 4, 1, 2, true, rng);
    CHECK_NOTHROW(nn::validate(net));

    auto bad_dim = net;
    bad_dim.layers[1].weights.resize(2, 5);  // disagrees with layer 0's width
    CHECK_THROWS_AS(nn::validate(bad_dim), ShapeError);

    auto bad_var = net;
    bad_var.layers[0].batchnorm->running_var(0) = -0.5;
    CHECK_THROWS_AS(nn::validate(bad_var), DataError);

    auto bad_nan = net;
    bad_nan.layers[0].weights(0, 0) = std::nan("");
    CHECK_THROWS_AS(nn::validate(bad_nan), DataError);

    CHECK_THROWS_AS(nn::validate(nn::DenseNetwork{}), ShapeError);
}

TEST_CASE("JSON round-trip is bit-exact") {
    Rng rng(19);
    auto net = nn::make_regression_net(3, 8, 2, 2, true, rng);
    // Train briefly so running statistics are non-trivial.
    const Eigen::MatrixXd x = random_matrix(rng, 16, 3);
    const Eigen::MatrixXd y = random_matrix(rng, 16, 2);
    nn::TrainConfig config;
    config.epochs = 3;
    config.batch_size = 8;
    (void)nn::train_network(net, x, y, nullptr, nullptr, config);

    const std::string text = nn::to_json(net);
    nn::DenseNetwork copy = nn::network_from_json(text);
    CHECK(nn::flatten_parameters(copy) == nn::flatten_parameters(net));
    REQUIRE(copy.layers.size() == net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        REQUIRE(copy.layers[i].batchnorm.has_value() ==
                net.layers[i].batchnorm.has_value());
        if (net.layers[i].batchnorm) {
            CHECK(copy.layers[i].batchnorm->running_mean ==
                  net.layers[i].batchnorm->running_mean);
            CHECK(copy.layers[i].batchnorm->running_var ==
                  net.layers[i].batchnorm->running_var);
            CHECK(copy.layers[i].batchnorm->momentum ==
                  net.layers[i].batchnorm->momentum);
        }
        CHECK(copy.layers[i].activation == net.layers[i].activation);
    }
    // Same eval behaviour bit for bit.
    const Eigen::MatrixXd probe = random_matrix(rng, 4, 3);
    CHECK(nn::forward(copy, probe, nn::Mode::eval) ==
          nn::forward(net, probe, nn::Mode::eval));
    // And the re-serialization is textually identical.
    CHECK(nn::to_json(copy) == text);

    // Normalizer embedding round-trip.
    Eigen::MatrixXd data(3, 2);
    data << 0.1, -3.0, 2.7, 9.5, -1.0, 0.0;
    const nn::Normalizer norm = nn::fit_normalizer(data);
    nlohmann::json j;
    nn::to_json(j, norm);
    nn::Normalizer norm2;
    nn::from_json(j, norm2);
    CHECK(norm2.min == norm.min);
    CHECK(norm2.max == norm.max);
}

TEST_CASE("set_parameters round-trips and bumps the revision") {
    Rng rng(20);
    auto net = nn::make_regression_net(3, 4, 1, 2, true, rng);
    const auto flat = nn::flatten_parameters(net);
    const auto rev = net.revision;
    auto copy = net;
    std::vector<double> tweaked = flat;
    tweaked[0] += 1.0;
    nn::set_parameters(copy, tweaked);
    CHECK(copy.revision > rev);
    CHECK(copy.layers[0].weights(0, 0) ==
          doctest::Approx(net.layers[0].weights(0, 0) + 1.0).epsilon(1e-15));
    nn::set_parameters(copy, flat);
    CHECK(nn::flatten_parameters(copy) == flat);

    std::vector<double> wrong_size(flat.size() - 1);
    CHECK_THROWS_AS(nn::set_parameters(copy, wrong_size), ShapeError);
}
