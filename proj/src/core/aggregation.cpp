#include "core/aggregation.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

std::vector<double> sigma_grid() {
  std::vector<double> grid(13);
  for (int k = 0; k < 13; ++k) grid[k] = 1e-3 * std::pow(10.0, k / 4.0);
  return grid;
}

ScoreField gaussian_scores(const std::vector<Eigen::VectorXd>& preds,
                           const Eigen::VectorXd& truth, double sigma) {
  if (preds.empty()) throw std::invalid_argument("gaussian_scores: no models");
  if (sigma <= 0.0)
    throw std::invalid_argument("gaussian_scores: sigma must be > 0");
  ScoreField scores;
  scores.g.resize(truth.size(), static_cast<Eigen::Index>(preds.size()));
  const double inv = 0.5 / (sigma * sigma);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    if (preds[j].size() != truth.size())
      throw std::invalid_argument("gaussian_scores: field length mismatch");
    scores.g.col(j) =
        (-(preds[j] - truth).array().square() * inv).exp().matrix();
  }
  return scores;
}

WeightField weights_from_scores(const ScoreField& scores) {
  if (!scores.g.allFinite())
    throw std::invalid_argument("weights_from_scores: non-finite score");
  WeightField weights;
  weights.w.resizeLike(scores.g);
  const Eigen::Index n_models = scores.g.cols();
  for (Eigen::Index i = 0; i < scores.g.rows(); ++i) {
    const double row_sum = scores.g.row(i).sum();
    if (row_sum < 1e-300) {
      weights.w.row(i).setConstant(1.0 / static_cast<double>(n_models));
      ++weights.degenerate_rows;
    } else {
      weights.w.row(i) = scores.g.row(i) / row_sum;
    }
  }
  return weights;
}

EvalPredictions collect_eval_predictions(
    const std::vector<std::shared_ptr<const Rom>>& roms,
    const SnapshotSet& set, const std::vector<int>& eval_indices) {
  if (roms.empty())
    throw std::invalid_argument("collect_eval_predictions: no models");
  if (!set.norm.applied)
    throw std::invalid_argument(
        "collect_eval_predictions: set must be normalized");
  EvalPredictions data;
  const int n_eval = static_cast<int>(eval_indices.size());
  data.truth.resize(set.n_dof(), n_eval);
  for (int k = 0; k < n_eval; ++k)
    data.truth.col(k) = set.fields.col(eval_indices[k]);
  for (const auto& rom : roms) {
    Eigen::MatrixXd pred(set.n_dof(), n_eval);
    for (int k = 0; k < n_eval; ++k)
      pred.col(k) =
          rom->predict_normalized(set.params.row(eval_indices[k]).transpose());
    data.preds.push_back(std::move(pred));
  }
  return data;
}

double mixture_objective(const EvalPredictions& data, double sigma) {
  const std::size_t n_models = data.preds.size();
  double total = 0.0;
  std::vector<Eigen::VectorXd> point_preds(n_models);
  for (Eigen::Index k = 0; k < data.truth.cols(); ++k) {
    for (std::size_t j = 0; j < n_models; ++j)
      point_preds[j] = data.preds[j].col(k);
    const WeightField weights =
        weights_from_scores(gaussian_scores(point_preds, data.truth.col(k),
                                            sigma));
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(data.truth.rows());
    for (std::size_t j = 0; j < n_models; ++j)
      mix += weights.w.col(j).cwiseProduct(point_preds[j]);
    total += (data.truth.col(k) - mix).squaredNorm();
  }
  return total;
}

double optimize_sigma(const EvalPredictions& data) {
  if (data.truth.cols() == 0)
    throw std::invalid_argument("optimize_sigma: empty evaluation set");
  double best_sigma = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (double sigma : sigma_grid()) {
    const double objective = mixture_objective(data, sigma);
    if (objective < best) {
      best = objective;
      best_sigma = sigma;
    }
  }
  return best_sigma;
}

ExactWeightSummary exact_weight_mixture(const EvalPredictions& data,
                                        double sigma) {
  const std::size_t n_models = data.preds.size();
  ExactWeightSummary summary;
  summary.sigma = sigma;
  summary.component_total_sq.assign(n_models, 0.0);
  std::vector<Eigen::VectorXd> point_preds(n_models);
  for (Eigen::Index k = 0; k < data.truth.cols(); ++k) {
    for (std::size_t j = 0; j < n_models; ++j) {
      point_preds[j] = data.preds[j].col(k);
      summary.component_total_sq[j] +=
          (data.truth.col(k) - point_preds[j]).squaredNorm();
    }
    const WeightField weights = weights_from_scores(
        gaussian_scores(point_preds, data.truth.col(k), sigma));
    Eigen::VectorXd mix = Eigen::VectorXd::Zero(data.truth.rows());
    for (std::size_t j = 0; j < n_models; ++j)
      mix += weights.w.col(j).cwiseProduct(point_preds[j]);
    summary.mixture_total_sq += (data.truth.col(k) - mix).squaredNorm();
    summary.mixture_fields.push_back(std::move(mix));
  }
  return summary;
}

namespace {

Eigen::MatrixXd feature_rows(const MixtureModel& mix,
                             const Eigen::VectorXd& mu_raw) {
  const Eigen::MatrixXd grid_scaled = mix.grid_scaler.apply_rows(mix.grid);
  const Eigen::VectorXd mu_scaled = mix.param_scaler.apply(mu_raw);
  Eigen::MatrixXd features(mix.grid.rows(),
                           grid_scaled.cols() + mu_scaled.size());
  features.leftCols(grid_scaled.cols()) = grid_scaled;
  features.rightCols(mu_scaled.size()).rowwise() = mu_scaled.transpose();
  return features;
}

}  // namespace

MixtureModel fit_weight_regressors(
    std::vector<std::shared_ptr<const Rom>> roms, const SnapshotSet& set,
    const SplitIndices& split, double sigma_opt, const ForestConfig& cfg) {
  if (roms.size() < 2)
    throw std::invalid_argument("fit_weight_regressors: need >= 2 models");
  for (int e : split.eval)
    for (int t : split.train)
      if ((set.params.row(e) - set.params.row(t)).norm() == 0.0)
        throw std::invalid_argument(
            "fit_weight_regressors: eval parameter duplicates a train "
            "parameter (index " + std::to_string(e) + ")");

  MixtureModel mix;
  mix.roms = std::move(roms);
  mix.sigma_opt = sigma_opt;
  mix.grid = set.grid;
  mix.grid_scaler = fit_scaler(set.grid);
  mix.param_scaler = mix.roms.front()->param_scaler;
  mix.norm = set.norm;

  const EvalPredictions data =
      collect_eval_predictions(mix.roms, set, split.eval);
  const int n_eval = static_cast<int>(split.eval.size());
  const Eigen::Index n_dof = set.n_dof();

  Eigen::MatrixXd features(n_eval * n_dof, set.dim() + set.n_params());
  std::vector<Eigen::VectorXd> targets(
      mix.roms.size(), Eigen::VectorXd(n_eval * n_dof));
  for (int k = 0; k < n_eval; ++k) {
    const Eigen::VectorXd mu = set.params.row(split.eval[k]).transpose();
    features.middleRows(k * n_dof, n_dof) = feature_rows(mix, mu);
    std::vector<Eigen::VectorXd> point_preds(mix.roms.size());
    for (std::size_t j = 0; j < mix.roms.size(); ++j)
      point_preds[j] = data.preds[j].col(k);
    const ScoreField scores =
        gaussian_scores(point_preds, data.truth.col(k), sigma_opt);
    for (std::size_t j = 0; j < mix.roms.size(); ++j)
      targets[j].segment(k * n_dof, n_dof) = scores.g.col(j);
  }

  for (std::size_t j = 0; j < mix.roms.size(); ++j) {
    ForestConfig tree_cfg = cfg;
    tree_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(j));
    mix.regressors.push_back(forest_fit(features, targets[j], tree_cfg));
  }
  return mix;
}

MixturePrediction mixture_predict(const MixtureModel& mix,
                                  const Eigen::VectorXd& mu) {
  const Eigen::Index n_dof = mix.grid.rows();
  const int n_models = mix.n_models();

  std::vector<Eigen::VectorXd> preds(n_models);
  for (int j = 0; j < n_models; ++j)
    preds[j] = mix.roms[j]->predict_normalized(mu);

  const Eigen::MatrixXd features = feature_rows(mix, mu);
  ScoreField scores;
  scores.g.resize(n_dof, n_models);
  for (int j = 0; j < n_models; ++j)
    scores.g.col(j) = forest_predict_many(mix.regressors[j], features);

  const WeightField weights = weights_from_scores(scores);

  MixturePrediction out;
  out.weights = weights.w;
  out.degenerate_points = weights.degenerate_rows;
  out.field_normalized = Eigen::VectorXd::Zero(n_dof);
  for (int j = 0; j < n_models; ++j)
    out.field_normalized += weights.w.col(j).cwiseProduct(preds[j]);
  out.field = denormalize_field(mix.norm, out.field_normalized);
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> accessible_region(
    const std::vector<Eigen::VectorXd>& preds) {
  if (preds.size() < 2)
    throw std::invalid_argument("accessible_region: need >= 2 models");
  Eigen::VectorXd lower = preds[0], upper = preds[0];
  for (std::size_t j = 1; j < preds.size(); ++j) {
    lower = lower.cwiseMin(preds[j]);
    upper = upper.cwiseMax(preds[j]);
  }
  return {lower, upper};
}

void mixture_save(const MixtureModel& mix, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["sigma_opt"] = mix.sigma_opt;
  meta["n_models"] = mix.n_models();
  meta["norm"] = {{"shift", mix.norm.shift},
                  {"scale", mix.norm.scale},
                  {"zero_variance", mix.norm.zero_variance},
                  {"applied", mix.norm.applied}};
  const auto vec_json = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  meta["grid_scaler"] = {{"lo", vec_json(mix.grid_scaler.lo)},
                         {"span", vec_json(mix.grid_scaler.span)}};
  meta["param_scaler"] = {{"lo", vec_json(mix.param_scaler.lo)},
                          {"span", vec_json(mix.param_scaler.span)}};
  nlohmann::json grid = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mix.grid.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < mix.grid.cols(); ++c)
      row.push_back(mix.grid(i, c));
    grid.push_back(std::move(row));
  }
  meta["grid"] = std::move(grid);
  nlohmann::json components = nlohmann::json::array();
  for (int j = 0; j < mix.n_models(); ++j) {
    const std::string sub =
        "component_" + std::to_string(j) + "_" + mix.roms[j]->name();
    components.push_back(sub);
    rom_save(*mix.roms[j], dir + "/" + sub);
  }
  meta["components"] = std::move(components);
  std::ofstream out(dir + "/mixture.json");
  if (!out) throw std::runtime_error("cannot write " + dir + "/mixture.json");
  out << meta.dump(1) << "\n";
  for (int j = 0; j < mix.n_models(); ++j) {
    std::ofstream fout(dir + "/forest_" + std::to_string(j) + ".json");
    fout << forest_to_json(mix.regressors[j]).dump() << "\n";
  }
}

MixtureModel mixture_load(const std::string& dir) {
  std::ifstream in(dir + "/mixture.json");
  if (!in) throw std::runtime_error("cannot open " + dir + "/mixture.json");
  nlohmann::json meta;
  in >> meta;

  MixtureModel mix;
  mix.sigma_opt = meta.at("sigma_opt").get<double>();
  mix.norm.shift = meta.at("norm").at("shift").get<double>();
  mix.norm.scale = meta.at("norm").at("scale").get<double>();
  mix.norm.zero_variance = meta.at("norm").at("zero_variance").get<bool>();
  mix.norm.applied = meta.at("norm").at("applied").get<bool>();
  const auto read_scaler = [&](const nlohmann::json& j) {
    AxisScaler s;
    const auto lo = j.at("lo").get<std::vector<double>>();
    const auto span = j.at("span").get<std::vector<double>>();
    s.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
    s.span = Eigen::Map<const Eigen::VectorXd>(span.data(), span.size());
    return s;
  };
  mix.grid_scaler = read_scaler(meta.at("grid_scaler"));
  mix.param_scaler = read_scaler(meta.at("param_scaler"));
  const auto& gj = meta.at("grid");
  mix.grid.resize(gj.size(), gj[0].size());
  for (Eigen::Index i = 0; i < mix.grid.rows(); ++i)
    for (Eigen::Index c = 0; c < mix.grid.cols(); ++c)
      mix.grid(i, c) = gj[i][c].get<double>();

  int j_idx = 0;
  for (const auto& sub : meta.at("components")) {
    mix.roms.push_back(std::make_shared<Rom>(
        rom_load(dir + "/" + sub.get<std::string>())));
    std::ifstream fin(dir + "/forest_" + std::to_string(j_idx++) + ".json");
    if (!fin) throw std::runtime_error("missing forest file in " + dir);
    nlohmann::json fj;
    fin >> fj;
    mix.regressors.push_back(forest_from_json(fj));
  }
  return mix;
}

}  // namespace xma
