#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "core/aggregation.hpp"
#include "core/dataset.hpp"
#include "core/rom.hpp"

namespace xma {

// Analytic stand-ins for the two studied flow regimes: a family of similar
// smooth profiles with fast singular-value decay, and a steep front whose
// position travels across the domain, defeating low-rank linear bases.
enum class CaseKind { smooth_family, moving_front };

std::string to_string(CaseKind k);
CaseKind case_from_string(const std::string& s);

struct CaseSpec {
  CaseKind kind = CaseKind::smooth_family;
  int n_dof = 500;
  int dim = 1;
  double param_min = 1.0;
  double param_max = 10.0;
  int n_snapshots = 100;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

// Canonical parameter ranges: smooth_family on [1, 10], moving_front on
// [0, 10] (front center 0.3 + 0.04*mu sweeps [0.3, 0.7]).
CaseSpec default_case(CaseKind kind);

Eigen::MatrixXd make_grid(const CaseSpec& spec);
Eigen::VectorXd ground_truth(const CaseSpec& spec, double mu);
SnapshotSet generate_case(const CaseSpec& spec);

// Front half-width band used by weight-localization diagnostics.
double front_center(double mu);
constexpr double kFrontRegionHalfWidth = 0.06;

struct ExperimentConfig {
  CaseSpec case_spec;
  std::vector<RomSpec> roms;
  int n_train = 70;
  int n_eval = 20;
  int n_test = 10;
  ForestConfig forest;
  std::uint64_t master_seed = 0;
  std::vector<std::string> mixtures = {"rbf-pair", "two-best"};
};

struct ModelReport {
  std::string name;
  std::vector<double> eval_errors;
  std::vector<double> test_errors;
  double eval_mean = 0.0;
  double test_mean = 0.0;
  bool failed = false;
  std::string error;
};

struct MixtureReport {
  std::string variant;
  std::vector<std::string> components;
  std::vector<int> component_indices;  // into ExperimentReport::models
  double sigma_opt = 0.0;

  // Exact Eq.-weights diagnostics on the evaluation set, normalized scale.
  double exact_mixture_total_sq = 0.0;
  std::vector<double> exact_component_total_sq;

  std::vector<double> eval_errors;  // exact weights, physical scale
  std::vector<double> test_errors;  // regressed weights, physical scale
  double eval_mean = 0.0;
  double test_mean = 0.0;
  int degenerate_points = 0;
  bool failed = false;
  std::string error;

  // Per-test-parameter fields (physical scale) for plots and diagnostics.
  std::vector<Eigen::MatrixXd> test_weights;                 // n_dof x n_M
  std::vector<Eigen::VectorXd> test_mixture;
  std::vector<Eigen::VectorXd> test_lower, test_upper;
  std::vector<std::vector<Eigen::VectorXd>> test_component_preds;
};

struct ExperimentReport {
  nlohmann::json resolved_config;  // config + every derived seed
  CaseSpec case_spec;
  SplitIndices split;
  Eigen::MatrixXd grid;
  std::vector<double> eval_params;
  std::vector<double> test_params;
  std::vector<Eigen::VectorXd> test_truth;  // analytic, physical scale
  std::vector<ModelReport> models;
  std::vector<MixtureReport> mixtures;
  std::map<std::string, double> timings_seconds;  // kept out of report.json
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// Writes errors.csv, per-mixture weight/envelope CSVs, report.json and
// timings.json under out_dir. Everything except timings.json is
// byte-reproducible under fixed seeds.
void emit_report(const ExperimentReport& report, const std::string& out_dir);

nlohmann::json report_to_json(const ExperimentReport& report);
nlohmann::json case_to_json(const CaseSpec& spec);
CaseSpec case_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

}  // namespace xma
