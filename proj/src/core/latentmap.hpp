#pragma once

#include <Eigen/Dense>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/neuralnet.hpp"

namespace xma {

// Thin-plate-spline interpolant with a degree-0 polynomial tail. Inputs are
// expected pre-scaled to [0,1]^p; one shared kernel matrix serves all r
// latent components.
struct RbfModel {
  Eigen::MatrixXd centers;        // N x p
  Eigen::MatrixXd coefficients;   // N x r
  Eigen::RowVectorXd poly_const;  // 1 x r

  int latent_dim() const { return static_cast<int>(coefficients.cols()); }
};

double thin_plate_spline(double r);

RbfModel rbf_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes);
Eigen::VectorXd rbf_predict(const RbfModel& model, const Eigen::VectorXd& mu);

// Independent zero-mean Gaussian-process posteriors per latent component,
// sharing inputs and one squared-exponential kernel
//   k(u, v) = kernel_variance * exp(-|u - v|^2 / (2 * length_scale)).
// Hyperparameters maximize the summed log marginal likelihood over a log
// grid followed by local refinement.
struct GprModel {
  Eigen::MatrixXd train_inputs;   // N x p
  Eigen::MatrixXd train_targets;  // N x r
  double kernel_variance = 1.0;
  double length_scale = 1.0;
  double jitter = 1e-10;
  Eigen::MatrixXd chol_lower;     // L with L L^T = K + jitter I
  Eigen::MatrixXd alpha;          // (K + jitter I)^{-1} targets

  int latent_dim() const { return static_cast<int>(train_targets.cols()); }
};

struct GprSearchSpace {
  double variance_lo = 1e-4, variance_hi = 1e2;
  double length_lo = 1e-3, length_hi = 1e1;
  int grid = 20;
  int refine_rounds = 3;
};

GprModel gpr_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes,
                 double initial_jitter = 1e-10,
                 const GprSearchSpace& space = {});
Eigen::VectorXd gpr_predict(const GprModel& model, const Eigen::VectorXd& mu);

// Negative log marginal likelihood summed over components, at fixed
// hyperparameters; exposed so searches and tests share one definition.
double gpr_negative_log_marginal(const Eigen::MatrixXd& params,
                                 const Eigen::MatrixXd& codes,
                                 double kernel_variance, double length_scale,
                                 double jitter);

// Feed-forward regression net p -> 20 -> 20 -> 20 -> r. Targets are
// standardized internally so the table's loss threshold is scale-free.
struct AnnMap {
  DenseNetwork net;
  Eigen::RowVectorXd target_shift;
  Eigen::RowVectorXd target_scale;
  double final_loss = 0.0;

  int latent_dim() const { return net.output_size(); }
};

AnnMap ann_fit(const Eigen::MatrixXd& params, const Eigen::MatrixXd& codes,
               const TrainConfig& cfg,
               const std::vector<int>& hidden = {20, 20, 20});
Eigen::VectorXd ann_predict(const AnnMap& map, const Eigen::VectorXd& mu);

nlohmann::json rbf_to_json(const RbfModel& model);
RbfModel rbf_from_json(const nlohmann::json& j);
nlohmann::json gpr_to_json(const GprModel& model);
GprModel gpr_from_json(const nlohmann::json& j);
nlohmann::json ann_to_json(const AnnMap& map);
AnnMap ann_from_json(const nlohmann::json& j);

}  // namespace xma
