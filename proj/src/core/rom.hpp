#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/dataset.hpp"
#include "core/latentmap.hpp"
#include "core/reduction.hpp"

namespace xma {

enum class ReductionKind { pod, ae, podae };
enum class ApproxKind { rbf, gpr, ann };

std::string to_string(ReductionKind k);
std::string to_string(ApproxKind k);
ReductionKind reduction_from_string(const std::string& s);
ApproxKind approx_from_string(const std::string& s);

// Hyperparameter defaults follow the reference network table: AE trained at
// lr 5e-4 to loss 5e-6 within 20000 epochs, the latent ANN at lr 5e-3 to
// loss 1e-4 within 100000 epochs with weight decay 1e-7.
struct RomSpec {
  ReductionKind reduction = ReductionKind::pod;
  ApproxKind approx = ApproxKind::rbf;
  int r = 3;
  AeArchitecture ae_arch;
  TrainConfig ae_train{5e-4, 20000, 5e-6, 0.0, 0};
  TrainConfig ann_train{5e-3, 100000, 1e-4, 1e-7, 0};

  std::string name() const {
    return to_string(reduction) + "-" + to_string(approx);
  }
};

using Reducer = std::variant<PodBasis, AeModel, PodAeModel>;
using LatentMap = std::variant<RbfModel, GprModel, AnnMap>;

Eigen::VectorXd reducer_encode(const Reducer& reducer,
                               const Eigen::VectorXd& field);
Eigen::VectorXd reducer_decode(const Reducer& reducer,
                               const Eigen::VectorXd& code);
Eigen::VectorXd map_predict(const LatentMap& map, const Eigen::VectorXd& mu);

// One trained (reduction, approximation) pair plus the dataset transforms
// needed to go from a raw parameter vector to a physical field.
struct Rom {
  RomSpec spec;
  Reducer reducer;
  LatentMap map;
  AxisScaler param_scaler;  // raw mu -> [0,1]^p, fitted on train parameters
  NormSpec norm;

  std::string name() const { return spec.name(); }
  Eigen::VectorXd predict_normalized(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd predict(const Eigen::VectorXd& mu) const;
};

// Fits the reducer on the train columns of a normalized set, then the map
// on (scaled parameter, latent code) pairs.
Rom rom_train(const SnapshotSet& set, const std::vector<int>& train_indices,
              const RomSpec& spec, std::uint64_t seed);

// ||pred - truth||_2 / ||truth||_2; absolute norm with flag when the truth
// vanishes.
double relative_error(const Eigen::VectorXd& pred,
                      const Eigen::VectorXd& truth,
                      bool* zero_norm_flag = nullptr);

nlohmann::json rom_spec_to_json(const RomSpec& spec);
RomSpec rom_spec_from_json(const nlohmann::json& j);

void rom_save(const Rom& rom, const std::string& dir);
Rom rom_load(const std::string& dir);

}  // namespace xma
