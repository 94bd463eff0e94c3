#pragma once

#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/dataset.hpp"
#include "core/forest.hpp"
#include "core/rom.hpp"

namespace xma {

// Pointwise Gaussian agreement scores, entries in (0, 1].
struct ScoreField {
  Eigen::MatrixXd g;  // points x n_M
};

// Convex weights: rows sum to 1, entries in [0, 1].
struct WeightField {
  Eigen::MatrixXd w;  // points x n_M
  int degenerate_rows = 0;  // rows that fell back to uniform weights
};

// 13 quarter-decade points spanning [1e-3, 1].
std::vector<double> sigma_grid();

ScoreField gaussian_scores(const std::vector<Eigen::VectorXd>& preds,
                           const Eigen::VectorXd& truth, double sigma);
WeightField weights_from_scores(const ScoreField& scores);

// Component predictions against the evaluation snapshots, all on the
// normalized scale so one sigma range covers any field family.
struct EvalPredictions {
  Eigen::MatrixXd truth;               // n_dof x N_eval
  std::vector<Eigen::MatrixXd> preds;  // per model: n_dof x N_eval
};

EvalPredictions collect_eval_predictions(
    const std::vector<std::shared_ptr<const Rom>>& roms,
    const SnapshotSet& set, const std::vector<int>& eval_indices);

// Sum of squared mixture residuals over every evaluation point, with exact
// score-based weights at the given bandwidth.
double mixture_objective(const EvalPredictions& data, double sigma);

// Grid minimization of the objective; ties resolve to the smaller sigma.
double optimize_sigma(const EvalPredictions& data);

// Exact-weight mixture on the evaluation set, for dominance diagnostics.
struct ExactWeightSummary {
  double sigma = 0.0;
  double mixture_total_sq = 0.0;
  std::vector<double> component_total_sq;
  std::vector<Eigen::VectorXd> mixture_fields;  // normalized, per eval param
};

ExactWeightSummary exact_weight_mixture(const EvalPredictions& data,
                                        double sigma);

// Component ROMs, the optimized bandwidth, and one score regressor per
// model over features eta = [scaled x, scaled mu].
struct MixtureModel {
  std::vector<std::shared_ptr<const Rom>> roms;
  double sigma_opt = 0.0;
  std::vector<Forest> regressors;
  AxisScaler grid_scaler;
  AxisScaler param_scaler;
  Eigen::MatrixXd grid;  // n_dof x d, raw coordinates
  NormSpec norm;

  int n_models() const { return static_cast<int>(roms.size()); }
};

// Trains one forest per model on (eta, g_j) over all eval parameters and
// grid points at the given bandwidth. Eval parameters must be disjoint
// from every component's training parameters.
MixtureModel fit_weight_regressors(
    std::vector<std::shared_ptr<const Rom>> roms, const SnapshotSet& set,
    const SplitIndices& split, double sigma_opt, const ForestConfig& cfg);

struct MixturePrediction {
  Eigen::VectorXd field;             // physical scale
  Eigen::VectorXd field_normalized;
  Eigen::MatrixXd weights;           // n_dof x n_M
  int degenerate_points = 0;
};

MixturePrediction mixture_predict(const MixtureModel& mix,
                                  const Eigen::VectorXd& mu);

// Pointwise (min, max) envelope over component predictions.
std::pair<Eigen::VectorXd, Eigen::VectorXd> accessible_region(
    const std::vector<Eigen::VectorXd>& preds);

void mixture_save(const MixtureModel& mix, const std::string& dir);
MixtureModel mixture_load(const std::string& dir);

}  // namespace xma
