#include "core/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kPi = 3.14159265358979323846;

double smooth_profile(double x, double mu) {
  return (1.0 - std::exp(-mu * x)) * (1.0 + 0.1 * std::sin(kTwoPi * x));
}

double front_profile(double x, double mu) {
  return std::tanh((x - front_center(mu)) / 0.02);
}

double axis_value(int index, int count) {
  return count > 1 ? static_cast<double>(index) / (count - 1) : 0.0;
}

std::pair<int, int> grid_shape(int n_dof) {
  for (int ny = static_cast<int>(std::sqrt(static_cast<double>(n_dof)));
       ny >= 1; --ny)
    if (n_dof % ny == 0) return {n_dof / ny, ny};
  return {n_dof, 1};
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_mu(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string to_string(CaseKind k) {
  return k == CaseKind::smooth_family ? "smooth_family" : "moving_front";
}

CaseKind case_from_string(const std::string& s) {
  if (s == "smooth_family") return CaseKind::smooth_family;
  if (s == "moving_front") return CaseKind::moving_front;
  throw std::invalid_argument("unknown case kind: " + s);
}

CaseSpec default_case(CaseKind kind) {
  CaseSpec spec;
  spec.kind = kind;
  if (kind == CaseKind::moving_front) {
    spec.param_min = 0.0;
    spec.param_max = 10.0;
  }
  return spec;
}

double front_center(double mu) { return 0.3 + 0.04 * mu; }

Eigen::MatrixXd make_grid(const CaseSpec& spec) {
  if (spec.dim == 1) {
    Eigen::MatrixXd grid(spec.n_dof, 1);
    for (int i = 0; i < spec.n_dof; ++i) grid(i, 0) = axis_value(i, spec.n_dof);
    return grid;
  }
  if (spec.dim != 2)
    throw std::invalid_argument("generate_case: dim must be 1 or 2");
  const auto [nx, ny] = grid_shape(spec.n_dof);
  Eigen::MatrixXd grid(spec.n_dof, 2);
  int row = 0;
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix, ++row) {
      grid(row, 0) = axis_value(ix, nx);
      grid(row, 1) = axis_value(iy, ny);
    }
  return grid;
}

Eigen::VectorXd ground_truth(const CaseSpec& spec, double mu) {
  const Eigen::MatrixXd grid = make_grid(spec);
  Eigen::VectorXd field(spec.n_dof);
  for (int i = 0; i < spec.n_dof; ++i) {
    const double x = grid(i, 0);
    double value = spec.kind == CaseKind::smooth_family
                       ? smooth_profile(x, mu)
                       : front_profile(x, mu);
    if (spec.dim == 2) value *= 1.0 + 0.2 * std::cos(kPi * grid(i, 1));
    field(i) = value;
  }
  return field;
}

SnapshotSet generate_case(const CaseSpec& spec) {
  if (spec.n_snapshots < 1)
    throw std::invalid_argument("generate_case: n_snapshots must be >= 1");
  if (!(spec.param_max > spec.param_min))
    throw std::invalid_argument("generate_case: degenerate parameter range");
  if (spec.n_dof < 2)
    throw std::invalid_argument("generate_case: n_dof must be >= 2");

  SnapshotSet set;
  set.grid = make_grid(spec);
  set.params.resize(spec.n_snapshots, 1);
  set.fields.resize(spec.n_dof, spec.n_snapshots);

  Rng param_rng(derive_seed(spec.seed, 11));
  for (int i = 0; i < spec.n_snapshots; ++i)
    set.params(i, 0) = param_rng.uniform(spec.param_min, spec.param_max);

  for (int i = 0; i < spec.n_snapshots; ++i)
    set.fields.col(i) = ground_truth(spec, set.params(i, 0));

  if (spec.noise > 0.0) {
    Rng noise_rng(derive_seed(spec.seed, 13));
    for (int i = 0; i < spec.n_snapshots; ++i)
      for (int k = 0; k < spec.n_dof; ++k)
        set.fields(k, i) += spec.noise * noise_rng.normal();
  }
  return set;
}

nlohmann::json case_to_json(const CaseSpec& spec) {
  return {{"kind", to_string(spec.kind)},   {"n_dof", spec.n_dof},
          {"dim", spec.dim},                {"param_min", spec.param_min},
          {"param_max", spec.param_max},    {"n_snapshots", spec.n_snapshots},
          {"noise", spec.noise},            {"seed", spec.seed}};
}

CaseSpec case_from_json(const nlohmann::json& j) {
  CaseSpec spec = default_case(case_from_string(j.at("kind").get<std::string>()));
  if (j.contains("n_dof")) spec.n_dof = j.at("n_dof").get<int>();
  if (j.contains("dim")) spec.dim = j.at("dim").get<int>();
  if (j.contains("param_min")) spec.param_min = j.at("param_min").get<double>();
  if (j.contains("param_max")) spec.param_max = j.at("param_max").get<double>();
  if (j.contains("n_snapshots"))
    spec.n_snapshots = j.at("n_snapshots").get<int>();
  if (j.contains("noise")) spec.noise = j.at("noise").get<double>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  nlohmann::json j;
  j["case"] = case_to_json(config.case_spec);
  auto& roms = j["roms"] = nlohmann::json::array();
  for (const auto& spec : config.roms) roms.push_back(rom_spec_to_json(spec));
  j["n_train"] = config.n_train;
  j["n_eval"] = config.n_eval;
  j["n_test"] = config.n_test;
  j["forest"] = {{"n_trees", config.forest.n_trees},
                 {"min_samples_leaf", config.forest.min_samples_leaf},
                 {"bootstrap", config.forest.bootstrap}};
  j["master_seed"] = config.master_seed;
  j["mixtures"] = config.mixtures;
  return j;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  config.case_spec = case_from_json(j.at("case"));
  for (const auto& rj : j.at("roms"))
    config.roms.push_back(rom_spec_from_json(rj));
  if (j.contains("n_train")) config.n_train = j.at("n_train").get<int>();
  if (j.contains("n_eval")) config.n_eval = j.at("n_eval").get<int>();
  if (j.contains("n_test")) config.n_test = j.at("n_test").get<int>();
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    if (f.contains("n_trees"))
      config.forest.n_trees = f.at("n_trees").get<int>();
    if (f.contains("min_samples_leaf"))
      config.forest.min_samples_leaf = f.at("min_samples_leaf").get<int>();
    if (f.contains("bootstrap"))
      config.forest.bootstrap = f.at("bootstrap").get<bool>();
  }
  if (j.contains("master_seed"))
    config.master_seed = j.at("master_seed").get<std::uint64_t>();
  if (j.contains("mixtures"))
    config.mixtures = j.at("mixtures").get<std::vector<std::string>>();
  return config;
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename F>
  auto run(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      sink_[name] += std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    } else {
      auto result = f();
      sink_[name] += std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
      return result;
    }
  }

 private:
  std::map<std::string, double>& sink_;
};

std::vector<int> pick_rbf_pair(const std::vector<ModelReport>& models) {
  int pod_rbf = -1, nonlinear_rbf = -1;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (models[i].failed) continue;
    if (models[i].name == "pod-rbf") pod_rbf = static_cast<int>(i);
    if (models[i].name == "ae-rbf" || models[i].name == "podae-rbf")
      nonlinear_rbf = static_cast<int>(i);
  }
  if (pod_rbf < 0 || nonlinear_rbf < 0) return {};
  return {pod_rbf, nonlinear_rbf};
}

// "Best" ranked by mean error over the evaluation set; train-set errors of
// interpolatory maps are zero and carry no signal.
std::vector<int> pick_two_best(const std::vector<ModelReport>& models) {
  std::vector<int> ok;
  for (std::size_t i = 0; i < models.size(); ++i)
    if (!models[i].failed) ok.push_back(static_cast<int>(i));
  if (ok.size() < 2) return {};
  std::sort(ok.begin(), ok.end(), [&](int a, int b) {
    if (models[a].eval_mean != models[b].eval_mean)
      return models[a].eval_mean < models[b].eval_mean;
    return a < b;
  });
  return {ok[0], ok[1]};
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.case_spec = config.case_spec;

  const std::uint64_t split_seed = derive_seed(config.master_seed, 102);
  const std::uint64_t forest_seed = derive_seed(config.master_seed, 300);

  nlohmann::json resolved = experiment_config_to_json(config);
  resolved["seeds"] = {{"case", config.case_spec.seed},
                       {"split", split_seed},
                       {"forest", forest_seed}};
  StageTimer timer(report.timings_seconds);

  const SnapshotSet raw = timer.run(
      "generate", [&] { return generate_case(config.case_spec); });
  report.grid = raw.grid;
  report.split =
      split(raw, config.n_train, config.n_eval, config.n_test, split_seed);
  const SnapshotSet set = normalize(raw, report.split.train);

  for (int idx : report.split.eval)
    report.eval_params.push_back(set.params(idx, 0));
  for (int idx : report.split.test) {
    report.test_params.push_back(set.params(idx, 0));
    report.test_truth.push_back(
        ground_truth(config.case_spec, set.params(idx, 0)));
  }

  // Individual ROMs; a failure is recorded and the rest continue.
  std::vector<std::shared_ptr<const Rom>> roms(config.roms.size());
  auto& model_seeds = resolved["seeds"]["models"] = nlohmann::json::object();
  for (std::size_t m = 0; m < config.roms.size(); ++m) {
    ModelReport mr;
    mr.name = config.roms[m].name();
    const std::uint64_t seed =
        derive_seed(config.master_seed, 200 + static_cast<std::uint64_t>(m));
    model_seeds[mr.name] = seed;
    try {
      const auto rom = timer.run("train_" + mr.name, [&] {
        return std::make_shared<const Rom>(
            rom_train(set, report.split.train, config.roms[m], seed));
      });
      roms[m] = rom;
      for (int idx : report.split.eval) {
        const Eigen::VectorXd truth =
            ground_truth(config.case_spec, set.params(idx, 0));
        mr.eval_errors.push_back(relative_error(
            rom->predict(set.params.row(idx).transpose()), truth));
      }
      for (int idx : report.split.test) {
        const Eigen::VectorXd truth =
            ground_truth(config.case_spec, set.params(idx, 0));
        mr.test_errors.push_back(relative_error(
            rom->predict(set.params.row(idx).transpose()), truth));
      }
      const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
      };
      mr.eval_mean = mean(mr.eval_errors);
      mr.test_mean = mean(mr.test_errors);
    } catch (const std::exception& e) {
      mr.failed = true;
      mr.error = e.what();
    }
    report.models.push_back(std::move(mr));
  }

  // Mixtures.
  std::uint64_t mix_index = 0;
  for (const std::string& variant : config.mixtures) {
    MixtureReport mx;
    mx.variant = variant;
    std::vector<int> picks;
    if (variant == "rbf-pair")
      picks = pick_rbf_pair(report.models);
    else if (variant == "two-best")
      picks = pick_two_best(report.models);
    else {
      mx.failed = true;
      mx.error = "unknown mixture variant: " + variant;
      report.mixtures.push_back(std::move(mx));
      continue;
    }
    if (picks.empty()) {
      mx.failed = true;
      mx.error = "not enough trained components for variant " + variant;
      report.mixtures.push_back(std::move(mx));
      continue;
    }
    mx.component_indices = picks;
    std::vector<std::shared_ptr<const Rom>> components;
    for (int idx : picks) {
      components.push_back(roms[idx]);
      mx.components.push_back(report.models[idx].name);
    }

    try {
      const EvalPredictions eval_data =
          collect_eval_predictions(components, set, report.split.eval);
      mx.sigma_opt =
          timer.run("sigma_" + variant, [&] { return optimize_sigma(eval_data); });
      const ExactWeightSummary exact =
          exact_weight_mixture(eval_data, mx.sigma_opt);
      mx.exact_mixture_total_sq = exact.mixture_total_sq;
      mx.exact_component_total_sq = exact.component_total_sq;
      for (std::size_t k = 0; k < report.split.eval.size(); ++k) {
        const int idx = report.split.eval[k];
        const Eigen::VectorXd truth =
            ground_truth(config.case_spec, set.params(idx, 0));
        mx.eval_errors.push_back(relative_error(
            denormalize_field(set.norm, exact.mixture_fields[k]), truth));
      }

      ForestConfig forest_cfg = config.forest;
      forest_cfg.seed = derive_seed(forest_seed, mix_index);
      const MixtureModel mix = timer.run("forests_" + variant, [&] {
        return fit_weight_regressors(components, set, report.split,
                                     mx.sigma_opt, forest_cfg);
      });

      for (std::size_t k = 0; k < report.split.test.size(); ++k) {
        const int idx = report.split.test[k];
        const Eigen::VectorXd mu = set.params.row(idx).transpose();
        const MixturePrediction pred = mixture_predict(mix, mu);
        mx.test_errors.push_back(
            relative_error(pred.field, report.test_truth[k]));
        mx.degenerate_points += pred.degenerate_points;
        mx.test_weights.push_back(pred.weights);
        mx.test_mixture.push_back(pred.field);
        std::vector<Eigen::VectorXd> comp_fields;
        for (const auto& rom : components)
          comp_fields.push_back(rom->predict(mu));
        const auto [lower, upper] = accessible_region(comp_fields);
        mx.test_lower.push_back(lower);
        mx.test_upper.push_back(upper);
        mx.test_component_preds.push_back(std::move(comp_fields));
      }
      const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
      };
      mx.eval_mean = mean(mx.eval_errors);
      mx.test_mean = mean(mx.test_errors);
    } catch (const std::exception& e) {
      mx.failed = true;
      mx.error = e.what();
    }
    report.mixtures.push_back(std::move(mx));
    ++mix_index;
  }

  report.resolved_config = std::move(resolved);
  return report;
}

namespace {

nlohmann::json errors_block(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(x);
  return out;
}

}  // namespace

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = report.resolved_config;
  j["split"] = {{"train", report.split.train},
                {"eval", report.split.eval},
                {"test", report.split.test}};
  j["eval_params"] = errors_block(report.eval_params);
  j["test_params"] = errors_block(report.test_params);
  auto& models = j["models"] = nlohmann::json::array();
  for (const auto& m : report.models) {
    nlohmann::json mj;
    mj["name"] = m.name;
    mj["failed"] = m.failed;
    if (m.failed) {
      mj["error"] = m.error;
    } else {
      mj["eval_errors"] = errors_block(m.eval_errors);
      mj["test_errors"] = errors_block(m.test_errors);
      mj["eval_mean"] = m.eval_mean;
      mj["test_mean"] = m.test_mean;
    }
    models.push_back(std::move(mj));
  }
  auto& mixtures = j["mixtures"] = nlohmann::json::array();
  for (const auto& m : report.mixtures) {
    nlohmann::json mj;
    mj["variant"] = m.variant;
    mj["failed"] = m.failed;
    if (m.failed) {
      mj["error"] = m.error;
    } else {
      mj["components"] = m.components;
      mj["sigma_opt"] = m.sigma_opt;
      mj["exact_mixture_total_sq"] = m.exact_mixture_total_sq;
      mj["exact_component_total_sq"] = errors_block(m.exact_component_total_sq);
      mj["eval_errors"] = errors_block(m.eval_errors);
      mj["test_errors"] = errors_block(m.test_errors);
      mj["eval_mean"] = m.eval_mean;
      mj["test_mean"] = m.test_mean;
      mj["degenerate_points"] = m.degenerate_points;
    }
    mixtures.push_back(std::move(mj));
  }
  return j;
}

void emit_report(const ExperimentReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir + "/errors.csv");
    if (!out) throw std::runtime_error("cannot write " + out_dir + "/errors.csv");
    out << "model,split,param_index,mu,relative_error\n";
    const auto emit_rows = [&](const std::string& name,
                               const std::string& split_name,
                               const std::vector<double>& params,
                               const std::vector<double>& errors) {
      for (std::size_t k = 0; k < errors.size(); ++k)
        out << name << "," << split_name << "," << k << ","
            << format_real(params[k]) << "," << format_real(errors[k]) << "\n";
    };
    for (const auto& m : report.models) {
      if (m.failed) continue;
      emit_rows(m.name, "eval", report.eval_params, m.eval_errors);
      emit_rows(m.name, "test", report.test_params, m.test_errors);
    }
    for (const auto& m : report.mixtures) {
      if (m.failed) continue;
      const std::string name = "mix-" + m.variant;
      emit_rows(name, "eval", report.eval_params, m.eval_errors);
      emit_rows(name, "test", report.test_params, m.test_errors);
    }
  }

  for (const auto& m : report.mixtures) {
    if (m.failed) continue;
    const std::string mix_dir = out_dir + "/mix-" + m.variant;
    fs::create_directories(mix_dir);
    for (std::size_t k = 0; k < report.test_params.size(); ++k) {
      const std::string tag = format_mu(report.test_params[k]);
      {
        std::ofstream out(mix_dir + "/weights_" + tag + ".csv");
        for (int c = 0; c < report.grid.cols(); ++c)
          out << (c ? ",x" + std::to_string(c) : "x0");
        for (const auto& comp : m.components) out << ",w_" << comp;
        out << "\n";
        for (Eigen::Index i = 0; i < report.grid.rows(); ++i) {
          for (int c = 0; c < report.grid.cols(); ++c)
            out << (c ? "," : "") << format_real(report.grid(i, c));
          for (Eigen::Index j2 = 0; j2 < m.test_weights[k].cols(); ++j2)
            out << "," << format_real(m.test_weights[k](i, j2));
          out << "\n";
        }
      }
      {
        std::ofstream out(mix_dir + "/envelope_" + tag + ".csv");
        for (int c = 0; c < report.grid.cols(); ++c)
          out << (c ? ",x" + std::to_string(c) : "x0");
        for (const auto& comp : m.components) out << "," << comp;
        out << ",lower,upper,mixture,truth\n";
        for (Eigen::Index i = 0; i < report.grid.rows(); ++i) {
          for (int c = 0; c < report.grid.cols(); ++c)
            out << (c ? "," : "") << format_real(report.grid(i, c));
          for (const auto& comp : m.test_component_preds[k])
            out << "," << format_real(comp(i));
          out << "," << format_real(m.test_lower[k](i)) << ","
              << format_real(m.test_upper[k](i)) << ","
              << format_real(m.test_mixture[k](i)) << ","
              << format_real(report.test_truth[k](i)) << "\n";
        }
      }
    }
  }

  {
    std::ofstream out(out_dir + "/report.json");
    out << report_to_json(report).dump(1) << "\n";
  }
  {
    nlohmann::json t;
    for (const auto& [k, v] : report.timings_seconds) t[k] = v;
    std::ofstream out(out_dir + "/timings.json");
    out << t.dump(1) << "\n";
  }
}

}  // namespace xma
