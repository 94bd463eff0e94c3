#include <doctest.h>

#include <cmath>

#include "core/neuralnet.hpp"
#include "core/rng.hpp"

using namespace xma;

namespace {

// Straight-line re-evaluation of the layer recursion, kept deliberately
// naive and independent of the library path.
Eigen::VectorXd naive_forward(const DenseNetwork& net,
                              const Eigen::VectorXd& input) {
  std::vector<double> a(input.data(), input.data() + input.size());
  for (int l = 0; l < net.n_layers(); ++l) {
    const int n_out = net.layer_sizes[l + 1];
    std::vector<double> next(n_out, 0.0);
    for (int i = 0; i < n_out; ++i) {
      double z = net.biases[l](i);
      for (std::size_t k = 0; k < a.size(); ++k)
        z += net.weights[l](i, k) * a[k];
      next[i] = l + 1 < net.n_layers() ? std::log1p(std::exp(z)) : z;
    }
    a = std::move(next);
  }
  return Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
}

double loss_value(const DenseNetwork& net, const Eigen::MatrixXd& x,
                  const Eigen::MatrixXd& y, double wd) {
  double loss = mse_loss(net, x, y);
  for (const auto& w : net.weights) loss += wd * w.squaredNorm();
  return loss;
}

}  // namespace

TEST_CASE("zero network gives softplus(0) hidden units and zero output") {
  DenseNetwork net = make_network({2, 3, 1}, 0);
  net.weights[0].setZero();
  net.weights[1].setZero();
  Eigen::VectorXd x(2);
  x << 1.0, -4.0;
  const ForwardCache cache = forward_cached(net, x);
  CHECK(cache.activations[1](0, 0) == doctest::Approx(std::log(2.0)));
  CHECK(forward(net, x)(0) == 0.0);
}

TEST_CASE("identity affine layer passes input through") {
  DenseNetwork net = make_network({3, 3}, 0);
  net.weights[0] = Eigen::MatrixXd::Identity(3, 3);
  net.biases[0].setZero();
  Eigen::VectorXd x(3);
  x << -1.0, 0.5, 2.0;
  CHECK((forward(net, x) - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward matches a straight-line reimplementation") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseNetwork net = make_network({4, 7, 5, 2}, 100 + trial);
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x(i) = rng.uniform(-2, 2);
    const Eigen::VectorXd a = forward(net, x);
    const Eigen::VectorXd b = naive_forward(net, x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("forward rejects mismatched input length") {
  const DenseNetwork net = make_network({3, 2}, 0);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(4)),
                  std::invalid_argument);
}

TEST_CASE("zero-residual data has exactly zero gradient") {
  const DenseNetwork net = make_network({2, 4, 2}, 5);
  Eigen::MatrixXd x(2, 6);
  x.setRandom();
  const Eigen::MatrixXd y = forward_batch(net, x);
  const Gradients g = gradient(net, x, y, 0.0);
  for (const auto& w : g.weights) CHECK(w.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& b : g.biases) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scalar affine net matches the hand-derived gradient") {
  DenseNetwork net = make_network({1, 1}, 0);
  const double w = 1.7, b = -0.4, xv = 2.0, yv = 5.0;
  net.weights[0](0, 0) = w;
  net.biases[0](0) = b;
  Eigen::MatrixXd x(1, 1), y(1, 1);
  x << xv;
  y << yv;
  const Gradients g = gradient(net, x, y, 0.0);
  const double residual = w * xv + b - yv;
  CHECK(g.weights[0](0, 0) == doctest::Approx(2.0 * residual * xv));
  CHECK(g.biases[0](0) == doctest::Approx(2.0 * residual));
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(11);
  const std::vector<std::vector<int>> shapes = {
      {2, 5, 1}, {3, 4, 4, 2}, {2, 6, 5, 3, 1}};
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    DenseNetwork net = make_network(shapes[s], 31 + s);
    const int n = 4;
    Eigen::MatrixXd x(shapes[s].front(), n), y(shapes[s].back(), n);
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x.data()[i] = rng.uniform(-1.5, 1.5);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y.data()[i] = rng.uniform(-1.5, 1.5);
    const double wd = s == 1 ? 0.01 : 0.0;  // exercise the decay term too
    const Gradients g = gradient(net, x, y, wd);

    const double h = 1e-6;
    double worst = 0.0;
    for (int l = 0; l < net.n_layers(); ++l) {
      for (Eigen::Index i = 0; i < net.weights[l].size(); ++i) {
        double& p = net.weights[l].data()[i];
        const double saved = p;
        p = saved + h;
        const double up = loss_value(net, x, y, wd);
        p = saved - h;
        const double down = loss_value(net, x, y, wd);
        p = saved;
        const double fd = (up - down) / (2.0 * h);
        const double analytic = g.weights[l].data()[i];
        worst = std::max(worst, std::abs(analytic - fd) /
                                    std::max({std::abs(analytic),
                                              std::abs(fd), 1e-4}));
      }
      for (Eigen::Index i = 0; i < net.biases[l].size(); ++i) {
        double& p = net.biases[l].data()[i];
        const double saved = p;
        p = saved + h;
        const double up = loss_value(net, x, y, wd);
        p = saved - h;
        const double down = loss_value(net, x, y, wd);
        p = saved;
        const double fd = (up - down) / (2.0 * h);
        const double analytic = g.biases[l].data()[i];
        worst = std::max(worst, std::abs(analytic - fd) /
                                    std::max({std::abs(analytic),
                                              std::abs(fd), 1e-4}));
      }
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("learns y = 2x to the table threshold") {
  DenseNetwork net = make_network({1, 20, 1}, 17);
  Eigen::MatrixXd x(1, 50), y(1, 50);
  for (int i = 0; i < 50; ++i) {
    x(0, i) = i / 49.0;
    y(0, i) = 2.0 * x(0, i);
  }
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 100000;
  cfg.target_loss = 1e-4;
  const TrainResult result = train(net, x, y, cfg);
  CHECK(result.final_loss() < 1e-4);
  CHECK_FALSE(result.diverged);
}

TEST_CASE("zero epochs returns the network unchanged") {
  DenseNetwork net = make_network({2, 3, 2}, 9);
  const DenseNetwork before = net;
  Eigen::MatrixXd x(2, 4), y(2, 4);
  x.setRandom();
  y.setRandom();
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const TrainResult result = train(net, x, y, cfg);
  CHECK(result.epochs_run == 0);
  for (int l = 0; l < net.n_layers(); ++l)
    CHECK(net.weights[l] == before.weights[l]);
}

TEST_CASE("same seed gives a bit-identical loss history") {
  Eigen::MatrixXd x(1, 20), y(1, 20);
  for (int i = 0; i < 20; ++i) {
    x(0, i) = i / 19.0;
    y(0, i) = std::sin(x(0, i));
  }
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 200;
  cfg.seed = 23;
  DenseNetwork a = make_network({1, 8, 1}, cfg.seed);
  DenseNetwork b = make_network({1, 8, 1}, cfg.seed);
  const TrainResult ra = train(a, x, y, cfg);
  const TrainResult rb = train(b, x, y, cfg);
  CHECK(ra.loss_history == rb.loss_history);
}

TEST_CASE("training loss never ends above its start on a convex problem") {
  // affine-only net => plain least squares
  DenseNetwork net = make_network({1, 1}, 3);
  Eigen::MatrixXd x(1, 30), y(1, 30);
  Rng rng(5);
  for (int i = 0; i < 30; ++i) {
    x(0, i) = rng.uniform(-1, 1);
    y(0, i) = 3.0 * x(0, i) + 0.5;
  }
  TrainConfig cfg;
  cfg.learning_rate = 5e-2;
  cfg.max_epochs = 500;
  const TrainResult result = train(net, x, y, cfg);
  CHECK(result.loss_history.back() <= result.loss_history.front());
}

TEST_CASE("divergence detector keeps the last finite state") {
  // Finite initial loss, but the first weight gradient overflows, so the
  // first Adam update produces NaN parameters.
  DenseNetwork net = make_network({1, 1, 1}, 2);
  net.weights[0](0, 0) = 1.0;
  net.biases[0](0) = 0.0;
  net.weights[1](0, 0) = 1e-8;
  net.biases[1](0) = 0.0;
  Eigen::MatrixXd x(1, 1), y(1, 1);
  x << 1e160;
  y << 0.0;
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 50;
  const TrainResult result = train(net, x, y, cfg);
  CHECK(result.diverged);
  CHECK(net.weights[1](0, 0) == 1e-8);  // restored initial state
  for (const auto& w : net.weights) CHECK(w.allFinite());
  for (double l : result.loss_history) CHECK(std::isfinite(l));
}

TEST_CASE("softplus stays positive and finite over a wide range") {
  // exp underflows below ~-745, so strict positivity holds wherever the
  // value is representable at all
  for (double z : {-700.0, -50.0, -1.0, 0.0, 1.0, 50.0, 1e6}) {
    const double v = softplus(z);
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
  }
  CHECK(softplus(-1e6) >= 0.0);
  CHECK(std::isfinite(softplus(-1e6)));
  const DenseNetwork net = make_network({1, 4, 1}, 1);
  const Eigen::VectorXd out =
      forward(net, Eigen::VectorXd::Constant(1, 1e8));
  CHECK(out.allFinite());
}

TEST_CASE("network json round trip preserves parameters") {
  const DenseNetwork net = make_network({2, 5, 3}, 77);
  const DenseNetwork back = network_from_json(network_to_json(net));
  CHECK(back.layer_sizes == net.layer_sizes);
  for (int l = 0; l < net.n_layers(); ++l) {
    CHECK(back.weights[l] == net.weights[l]);
    CHECK(back.biases[l] == net.biases[l]);
  }
}
