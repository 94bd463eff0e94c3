#include "core/latentmap.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

namespace {

constexpr double kPi = 3.14159265358979323846;

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      m(i, k) = j[i][k].get<double>();
  return m;
}

}  // namespace

double thin_plate_spline(double r) {
  return r > 0.0 ? r * r * std::log(r) : 0.0;
}

RbfModel rbf_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes) {
  const Eigen::Index n = params.rows();
  if (n < 1 || codes.rows() != n)
    throw std::invalid_argument("rbf_fit: params/codes size mismatch");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k)
      if ((params.row(i) - params.row(k)).norm() == 0.0)
        throw std::invalid_argument(
            "rbf_fit: duplicate centers at rows " + std::to_string(i) +
            " and " + std::to_string(k));

  // [ Phi 1 ] [W]   [codes]
  // [ 1^T 0 ] [c] = [  0  ]   per latent component
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      system(i, k) = thin_plate_spline((params.row(i) - params.row(k)).norm());
  system.col(n).head(n).setOnes();
  system.row(n).head(n).setOnes();

  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, codes.cols());
  rhs.topRows(n) = codes;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible())
    throw std::runtime_error("rbf_fit: singular interpolation system");
  const Eigen::MatrixXd solution = lu.solve(rhs);

  RbfModel model;
  model.centers = params;
  model.coefficients = solution.topRows(n);
  model.poly_const = solution.row(n);
  return model;
}

Eigen::VectorXd rbf_predict(const RbfModel& model, const Eigen::VectorXd& mu) {
  if (mu.size() != model.centers.cols())
    throw std::invalid_argument("rbf_predict: parameter length mismatch");
  Eigen::RowVectorXd phi(model.centers.rows());
  for (Eigen::Index i = 0; i < model.centers.rows(); ++i)
    phi(i) =
        thin_plate_spline((mu.transpose() - model.centers.row(i)).norm());
  return (phi * model.coefficients + model.poly_const).transpose();
}

namespace {

Eigen::MatrixXd se_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          double variance, double length) {
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = variance * std::exp(-(a.row(i) - b.row(j)).squaredNorm() /
                                    (2.0 * length));
  return k;
}

// Cholesky with the doubling-jitter escalation; throws past the cap.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& kernel,
                                       double& jitter) {
  const double cap = 1e-6 * kernel.trace();
  const Eigen::MatrixXd id =
      Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols());
  double j = jitter;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(kernel + j * id);
    if (llt.info() == Eigen::Success) {
      jitter = j;
      return llt;
    }
    if (j > cap)
      throw std::runtime_error(
          "gpr: kernel not positive definite after jitter escalation");
    j *= 2.0;
  }
}

double nlml_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt,
                     const Eigen::MatrixXd& targets) {
  const Eigen::Index n = targets.rows();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    log_det += std::log(llt.matrixLLT()(i, i));
  const Eigen::MatrixXd alpha = llt.solve(targets);
  double total = 0.0;
  for (Eigen::Index c = 0; c < targets.cols(); ++c)
    total += 0.5 * targets.col(c).dot(alpha.col(c)) + log_det +
             0.5 * n * std::log(2.0 * kPi);
  return total;
}

std::vector<double> log_space(double lo, double hi, int count) {
  std::vector<double> out(count);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  return out;
}

}  // namespace

double gpr_negative_log_marginal(const Eigen::MatrixXd& params,
                                 const Eigen::MatrixXd& codes,
                                 double kernel_variance, double length_scale,
                                 double jitter) {
  const Eigen::MatrixXd k =
      se_kernel(params, params, kernel_variance, length_scale);
  double j = jitter;
  return nlml_from_llt(robust_llt(k, j), codes);
}

GprModel gpr_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes,
                 double initial_jitter, const GprSearchSpace& space) {
  const Eigen::Index n = params.rows();
  if (n < 2 || codes.rows() != n)
    throw std::invalid_argument("gpr_fit: need >= 2 inputs matching codes");

  const auto evaluate = [&](double variance, double length) {
    try {
      return gpr_negative_log_marginal(params, codes, variance, length,
                                       initial_jitter);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  double best_v = space.variance_lo, best_l = space.length_lo;
  double best_nlml = std::numeric_limits<double>::infinity();
  for (double v : log_space(space.variance_lo, space.variance_hi, space.grid))
    for (double l : log_space(space.length_lo, space.length_hi, space.grid)) {
      const double nlml = evaluate(v, l);
      if (nlml < best_nlml) {
        best_nlml = nlml;
        best_v = v;
        best_l = l;
      }
    }

  // Local refinement: shrink a one-grid-step window around the incumbent.
  double step_v = std::pow(space.variance_hi / space.variance_lo,
                           1.0 / (space.grid - 1));
  double step_l =
      std::pow(space.length_hi / space.length_lo, 1.0 / (space.grid - 1));
  for (int round = 0; round < space.refine_rounds; ++round) {
    step_v = std::pow(step_v, 1.0 / 3.0);
    step_l = std::pow(step_l, 1.0 / 3.0);
    for (int iv = -2; iv <= 2; ++iv)
      for (int il = -2; il <= 2; ++il) {
        if (iv == 0 && il == 0) continue;
        const double v = best_v * std::pow(step_v, iv);
        const double l = best_l * std::pow(step_l, il);
        const double nlml = evaluate(v, l);
        if (nlml < best_nlml) {
          best_nlml = nlml;
          best_v = v;
          best_l = l;
        }
      }
  }
  if (!std::isfinite(best_nlml))
    throw std::runtime_error("gpr_fit: no admissible hyperparameters");

  GprModel model;
  model.train_inputs = params;
  model.train_targets = codes;
  model.kernel_variance = best_v;
  model.length_scale = best_l;
  model.jitter = initial_jitter;
  const Eigen::MatrixXd k = se_kernel(params, params, best_v, best_l);
  const auto llt = robust_llt(k, model.jitter);
  model.chol_lower = llt.matrixL();
  model.alpha = llt.solve(codes);
  return model;
}

Eigen::VectorXd gpr_predict(const GprModel& model, const Eigen::VectorXd& mu) {
  if (mu.size() != model.train_inputs.cols())
    throw std::invalid_argument("gpr_predict: parameter length mismatch");
  const Eigen::MatrixXd k_star =
      se_kernel(mu.transpose(), model.train_inputs, model.kernel_variance,
                model.length_scale);
  return (k_star * model.alpha).transpose();
}

AnnMap ann_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes,
               const TrainConfig& cfg, const std::vector<int>& hidden) {
  const Eigen::Index n = params.rows();
  if (n < 1 || codes.rows() != n)
    throw std::invalid_argument("ann_fit: params/codes size mismatch");

  AnnMap map;
  map.target_shift = codes.colwise().mean();
  Eigen::RowVectorXd var =
      (codes.rowwise() - map.target_shift).array().square().colwise().mean();
  map.target_scale = var.array().sqrt();
  for (Eigen::Index c = 0; c < map.target_scale.size(); ++c)
    if (map.target_scale(c) <= 0.0) map.target_scale(c) = 1.0;

  Eigen::MatrixXd targets =
      (codes.rowwise() - map.target_shift).array().rowwise() /
      map.target_scale.array();

  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(params.cols()));
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(static_cast<int>(codes.cols()));
  map.net = make_network(sizes, cfg.seed);

  const TrainResult result =
      train(map.net, params.transpose(), targets.transpose(), cfg);
  map.final_loss = result.final_loss();
  if (result.diverged)
    throw std::runtime_error("ann_fit: training diverged (last finite loss " +
                             std::to_string(map.final_loss) + ")");
  return map;
}

Eigen::VectorXd ann_predict(const AnnMap& map, const Eigen::VectorXd& mu) {
  const Eigen::VectorXd raw = forward(map.net, mu);
  return (raw.transpose().array() * map.target_scale.array() +
          map.target_shift.array())
      .transpose();
}

nlohmann::json rbf_to_json(const RbfModel& model) {
  nlohmann::json j;
  j["kind"] = "rbf";
  j["centers"] = matrix_to_json(model.centers);
  j["coefficients"] = matrix_to_json(model.coefficients);
  j["poly_const"] = matrix_to_json(model.poly_const);
  return j;
}

RbfModel rbf_from_json(const nlohmann::json& j) {
  RbfModel model;
  model.centers = matrix_from_json(j.at("centers"));
  model.coefficients = matrix_from_json(j.at("coefficients"));
  model.poly_const = matrix_from_json(j.at("poly_const"));
  return model;
}

nlohmann::json gpr_to_json(const GprModel& model) {
  nlohmann::json j;
  j["kind"] = "gpr";
  j["train_inputs"] = matrix_to_json(model.train_inputs);
  j["train_targets"] = matrix_to_json(model.train_targets);
  j["kernel_variance"] = model.kernel_variance;
  j["length_scale"] = model.length_scale;
  j["jitter"] = model.jitter;
  return j;
}

GprModel gpr_from_json(const nlohmann::json& j) {
  GprModel model;
  model.train_inputs = matrix_from_json(j.at("train_inputs"));
  model.train_targets = matrix_from_json(j.at("train_targets"));
  model.kernel_variance = j.at("kernel_variance").get<double>();
  model.length_scale = j.at("length_scale").get<double>();
  model.jitter = j.at("jitter").get<double>();
  const Eigen::MatrixXd k =
      se_kernel(model.train_inputs, model.train_inputs,
                model.kernel_variance, model.length_scale);
  const auto llt = robust_llt(k, model.jitter);
  model.chol_lower = llt.matrixL();
  model.alpha = llt.solve(model.train_targets);
  return model;
}

nlohmann::json ann_to_json(const AnnMap& map) {
  nlohmann::json j;
  j["kind"] = "ann";
  j["net"] = network_to_json(map.net);
  j["target_shift"] = matrix_to_json(map.target_shift);
  j["target_scale"] = matrix_to_json(map.target_scale);
  j["final_loss"] = map.final_loss;
  return j;
}

AnnMap ann_from_json(const nlohmann::json& j) {
  AnnMap map;
  map.net = network_from_json(j.at("net"));
  map.target_shift = matrix_from_json(j.at("target_shift"));
  map.target_scale = matrix_from_json(j.at("target_scale"));
  map.final_loss = j.at("final_loss").get<double>();
  return map;
}

}  // namespace xma
