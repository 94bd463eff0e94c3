#pragma once

#include <Eigen/Dense>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/neuralnet.hpp"

namespace xma {

// Truncated left singular basis of a snapshot matrix. The full spectrum is
// kept for decay diagnostics; `modes` holds the first r columns of U.
struct PodBasis {
  Eigen::MatrixXd modes;             // n_dof x r, orthonormal columns
  Eigen::VectorXd singular_values;   // all min(n_dof, N) values, nonincreasing
  int r = 0;
};

PodBasis pod_fit(const Eigen::MatrixXd& snapshots, int r);
Eigen::VectorXd pod_encode(const PodBasis& basis, const Eigen::VectorXd& s);
Eigen::VectorXd pod_decode(const PodBasis& basis, const Eigen::VectorXd& a);
Eigen::VectorXd singular_spectrum(const Eigen::MatrixXd& snapshots);

// Encoder hidden widths; the decoder mirrors them around the latent layer.
struct AeArchitecture {
  std::vector<int> hidden = {50, 20};
};

struct AeModel {
  DenseNetwork encoder;  // n_dof -> hidden... -> r, linear latent
  DenseNetwork decoder;  // r -> reversed hidden... -> n_dof
  int r = 0;
  double final_loss = 0.0;
  bool diverged = false;
};

AeModel ae_fit(const Eigen::MatrixXd& snapshots, int r,
               const AeArchitecture& arch, const TrainConfig& cfg);
Eigen::VectorXd ae_encode(const AeModel& model, const Eigen::VectorXd& s);
Eigen::VectorXd ae_decode(const AeModel& model, const Eigen::VectorXd& a);

// Two-step reduction: full POD projection (r_med = N_train, capped by
// n_dof), then an autoencoder on the POD coefficients. Coefficients are
// divided by the RMS singular value so the inner net sees O(1) data.
struct PodAeModel {
  PodBasis outer;
  AeModel inner;
  double coeff_scale = 1.0;
};

PodAeModel podae_fit(const Eigen::MatrixXd& snapshots, int r,
                     const AeArchitecture& arch, const TrainConfig& cfg);
Eigen::VectorXd podae_encode(const PodAeModel& model, const Eigen::VectorXd& s);
Eigen::VectorXd podae_decode(const PodAeModel& model, const Eigen::VectorXd& a);

nlohmann::json pod_to_json(const PodBasis& basis);
PodBasis pod_from_json(const nlohmann::json& j);
nlohmann::json ae_to_json(const AeModel& model);
AeModel ae_from_json(const nlohmann::json& j);
nlohmann::json podae_to_json(const PodAeModel& model);
PodAeModel podae_from_json(const nlohmann::json& j);

}  // namespace xma
