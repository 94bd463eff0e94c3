#include "core/neuralnet.hpp"

#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

namespace {

void check_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2)
    throw std::invalid_argument("network needs at least input and output");
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("network layer width must be >= 1");
}

Eigen::MatrixXd softplus_mat(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return softplus(v); });
}

Eigen::MatrixXd sigmoid_mat(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) {
    return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                    : std::exp(v) / (1.0 + std::exp(v));
  });
}

// One Adam tensor update with decoupled decay (decay applied by the caller).
struct AdamState {
  std::vector<Eigen::MatrixXd> m_w, v_w;
  std::vector<Eigen::VectorXd> m_b, v_b;
  long t = 0;

  explicit AdamState(const DenseNetwork& net) {
    for (const auto& w : net.weights) {
      m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
      v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : net.biases) {
      m_b.push_back(Eigen::VectorXd::Zero(b.size()));
      v_b.push_back(Eigen::VectorXd::Zero(b.size()));
    }
  }

  template <typename P, typename G, typename M>
  static void update(P& param, const G& grad, M& m, M& v, double lr,
                     double bc1, double bc2) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    param.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }

  void step(DenseNetwork& net, const Gradients& g, double lr,
            double weight_decay) {
    ++t;
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    for (int l = 0; l < net.n_layers(); ++l) {
      update(net.weights[l], g.weights[l], m_w[l], v_w[l], lr, bc1, bc2);
      update(net.biases[l], g.biases[l], m_b[l], v_b[l], lr, bc1, bc2);
      if (weight_decay > 0.0) net.weights[l] *= 1.0 - lr * weight_decay;
    }
  }
};

}  // namespace

double softplus(double z) {
  if (z > 34.0) return z;        // log1p(exp(z)) == z at double precision
  if (z < -34.0) return std::exp(z);
  return std::log1p(std::exp(z));
}

DenseNetwork make_network(const std::vector<int>& layer_sizes,
                          std::uint64_t seed) {
  check_sizes(layer_sizes);
  DenseNetwork net;
  net.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int i = 0; i < fan_out; ++i)
      for (int j = 0; j < fan_in; ++j) w(i, j) = rng.uniform(-bound, bound);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

ForwardCache forward_cached(const DenseNetwork& net,
                            const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_size())
    throw std::invalid_argument("forward: input length " +
                                std::to_string(x.rows()) + " != expected " +
                                std::to_string(net.input_size()));
  ForwardCache cache;
  cache.activations.push_back(x);
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::MatrixXd z =
        (net.weights[l] * cache.activations.back()).colwise() + net.biases[l];
    cache.activations.push_back(l + 1 < net.n_layers() ? softplus_mat(z) : z);
    cache.preactivations.push_back(std::move(z));
  }
  return cache;
}

Eigen::MatrixXd forward_batch(const DenseNetwork& net,
                              const Eigen::MatrixXd& x) {
  if (x.rows() != net.input_size())
    throw std::invalid_argument("forward: input length " +
                                std::to_string(x.rows()) + " != expected " +
                                std::to_string(net.input_size()));
  Eigen::MatrixXd a = x;
  for (int l = 0; l < net.n_layers(); ++l) {
    Eigen::MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    a = l + 1 < net.n_layers() ? softplus_mat(z) : std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const DenseNetwork& net, const Eigen::VectorXd& x) {
  return forward_batch(net, x);
}

Gradients backprop(const DenseNetwork& net, const ForwardCache& cache,
                   const Eigen::MatrixXd& output_delta,
                   Eigen::MatrixXd* input_delta) {
  Gradients g;
  g.weights.resize(net.n_layers());
  g.biases.resize(net.n_layers());
  Eigen::MatrixXd delta = output_delta;  // dLoss/dz at the output (linear)
  for (int l = net.n_layers() - 1; l >= 0; --l) {
    g.weights[l] = delta * cache.activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (net.weights[l].transpose() * delta).cwiseProduct(
          sigmoid_mat(cache.preactivations[l - 1]));
    } else if (input_delta) {
      *input_delta = net.weights[0].transpose() * delta;
    }
  }
  return g;
}

double mse_loss(const DenseNetwork& net, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd out = forward_batch(net, inputs);
  return (out - targets).squaredNorm() / static_cast<double>(inputs.cols());
}

Gradients gradient(const DenseNetwork& net, const Eigen::MatrixXd& inputs,
                   const Eigen::MatrixXd& targets, double weight_decay) {
  if (inputs.cols() != targets.cols() ||
      targets.rows() != net.output_size())
    throw std::invalid_argument("gradient: inconsistent input/target shapes");
  const ForwardCache cache = forward_cached(net, inputs);
  const Eigen::MatrixXd delta =
      2.0 / static_cast<double>(inputs.cols()) *
      (cache.activations.back() - targets);
  Gradients g = backprop(net, cache, delta);
  if (weight_decay != 0.0)
    for (int l = 0; l < net.n_layers(); ++l)
      g.weights[l] += 2.0 * weight_decay * net.weights[l];
  return g;
}

namespace {

void validate_config(const TrainConfig& cfg) {
  if (cfg.learning_rate <= 0.0)
    throw std::invalid_argument("train: learning_rate must be > 0");
  if (cfg.max_epochs < 0)
    throw std::invalid_argument("train: max_epochs must be >= 0");
  if (cfg.target_loss < 0.0)
    throw std::invalid_argument("train: target_loss must be >= 0");
}

}  // namespace

TrainResult train(DenseNetwork& net, const Eigen::MatrixXd& inputs,
                  const Eigen::MatrixXd& targets, const TrainConfig& cfg) {
  validate_config(cfg);
  TrainResult result;
  result.loss_history.push_back(mse_loss(net, inputs, targets));
  if (!std::isfinite(result.loss_history.back())) {
    result.diverged = true;
    return result;
  }
  AdamState adam(net);
  DenseNetwork last_finite = net;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (result.loss_history.back() <= cfg.target_loss) break;
    const Gradients g = gradient(net, inputs, targets, 0.0);
    adam.step(net, g, cfg.learning_rate, cfg.weight_decay);
    const double loss = mse_loss(net, inputs, targets);
    if (!std::isfinite(loss)) {
      net = last_finite;
      result.diverged = true;
      break;
    }
    result.loss_history.push_back(loss);
    last_finite = net;
    ++result.epochs_run;
  }
  return result;
}

TrainResult train_autoencoder(DenseNetwork& encoder, DenseNetwork& decoder,
                              const Eigen::MatrixXd& inputs,
                              const TrainConfig& cfg) {
  validate_config(cfg);
  if (encoder.output_size() != decoder.input_size())
    throw std::invalid_argument("autoencoder: latent widths do not match");

  const double n = static_cast<double>(inputs.cols());
  const auto loss_of = [&](void) {
    const Eigen::MatrixXd rec =
        forward_batch(decoder, forward_batch(encoder, inputs));
    return (rec - inputs).squaredNorm() / n;
  };

  TrainResult result;
  result.loss_history.push_back(loss_of());
  if (!std::isfinite(result.loss_history.back())) {
    result.diverged = true;
    return result;
  }
  AdamState adam_enc(encoder), adam_dec(decoder);
  DenseNetwork enc_finite = encoder, dec_finite = decoder;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    if (result.loss_history.back() <= cfg.target_loss) break;
    const ForwardCache enc_cache = forward_cached(encoder, inputs);
    const ForwardCache dec_cache =
        forward_cached(decoder, enc_cache.activations.back());
    const Eigen::MatrixXd delta =
        2.0 / n * (dec_cache.activations.back() - inputs);
    Eigen::MatrixXd latent_delta;
    const Gradients g_dec = backprop(decoder, dec_cache, delta, &latent_delta);
    const Gradients g_enc = backprop(encoder, enc_cache, latent_delta);
    adam_dec.step(decoder, g_dec, cfg.learning_rate, cfg.weight_decay);
    adam_enc.step(encoder, g_enc, cfg.learning_rate, cfg.weight_decay);
    const double loss = loss_of();
    if (!std::isfinite(loss)) {
      encoder = enc_finite;
      decoder = dec_finite;
      result.diverged = true;
      break;
    }
    result.loss_history.push_back(loss);
    enc_finite = encoder;
    dec_finite = decoder;
    ++result.epochs_run;
  }
  return result;
}

nlohmann::json network_to_json(const DenseNetwork& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = "softplus";
  auto& ws = j["weights"] = nlohmann::json::array();
  for (const auto& w : net.weights) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < w.cols(); ++k) row.push_back(w(i, k));
      rows.push_back(std::move(row));
    }
    ws.push_back(std::move(rows));
  }
  auto& bs = j["biases"] = nlohmann::json::array();
  for (const auto& b : net.biases) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) row.push_back(b(i));
    bs.push_back(std::move(row));
  }
  return j;
}

DenseNetwork network_from_json(const nlohmann::json& j) {
  DenseNetwork net;
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  check_sizes(net.layer_sizes);
  for (const auto& wj : j.at("weights")) {
    Eigen::MatrixXd w(wj.size(), wj[0].size());
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index k = 0; k < w.cols(); ++k)
        w(i, k) = wj[i][k].get<double>();
    net.weights.push_back(std::move(w));
  }
  for (const auto& bj : j.at("biases")) {
    Eigen::VectorXd b(bj.size());
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = bj[i].get<double>();
    net.biases.push_back(std::move(b));
  }
  if (net.weights.size() + 1 != net.layer_sizes.size() ||
      net.biases.size() != net.weights.size())
    throw std::runtime_error("network json: inconsistent layer counts");
  return net;
}

}  // namespace xma
