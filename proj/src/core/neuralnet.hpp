#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace xma {

// Dense feed-forward network: softplus on hidden layers, linear output.
struct DenseNetwork {
  std::vector<int> layer_sizes;              // [n0, n1, ..., nL]
  std::vector<Eigen::MatrixXd> weights;      // W[l]: n_{l+1} x n_l
  std::vector<Eigen::VectorXd> biases;       // b[l]: n_{l+1}

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int n_layers() const { return static_cast<int>(weights.size()); }
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
DenseNetwork make_network(const std::vector<int>& layer_sizes,
                          std::uint64_t seed);

double softplus(double z);

Eigen::VectorXd forward(const DenseNetwork& net, const Eigen::VectorXd& x);
// Columns are samples.
Eigen::MatrixXd forward_batch(const DenseNetwork& net,
                              const Eigen::MatrixXd& x);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;      // a[0]=input .. a[L]=output
  std::vector<Eigen::MatrixXd> preactivations;   // z[1..L]
};

ForwardCache forward_cached(const DenseNetwork& net, const Eigen::MatrixXd& x);

// Backpropagates an arbitrary dLoss/dOutput; optionally yields dLoss/dInput
// so composed networks (the autoencoder) can chain.
Gradients backprop(const DenseNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_delta,
                   Eigen::MatrixXd* input_delta = nullptr);

// Mean over samples of the squared l2 residual norm.
double mse_loss(const DenseNetwork& net, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& targets);

// Gradient of (1/N) sum_i ||net(x_i) - y_i||^2 + weight_decay * sum_l ||W_l||_F^2.
// The decay term covers weights only (biases are not penalized).
Gradients gradient(const DenseNetwork& net, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& targets, double weight_decay = 0.0);

struct TrainConfig {
  double learning_rate = 1e-3;
  int max_epochs = 1000;
  double target_loss = 0.0;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // full-batch only
};

struct TrainResult {
  std::vector<double> loss_history;  // loss_history[0] is the initial loss
  bool diverged = false;
  int epochs_run = 0;
  double final_loss() const { return loss_history.back(); }
};

// Full-batch Adam with decoupled weight decay. Stops at max_epochs or when
// the train MSE reaches target_loss; a non-finite loss aborts and restores
// the last finite parameter state.
TrainResult train(DenseNetwork& net, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const TrainConfig& cfg);

// Joint training of decoder(encoder(x)) against x (or a separate target).
TrainResult train_autoencoder(DenseNetwork& encoder, DenseNetwork& decoder,
                              const Eigen::MatrixXd& inputs,
                              const TrainConfig& cfg);

nlohmann::json network_to_json(const DenseNetwork& net);
DenseNetwork network_from_json(const nlohmann::json& j);

}  // namespace xma
