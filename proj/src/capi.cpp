#include "xmarom/xmarom.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/aggregation.hpp"
#include "core/bench.hpp"
#include "core/dataset.hpp"
#include "core/rom.hpp"

namespace {

thread_local std::string g_last_error;

xma_status fail(xma_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename F>
xma_status guarded(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    return fail(XMA_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::runtime_error& e) {
    return fail(XMA_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(XMA_ERR_INTERNAL, e.what());
  }
}

xma::SnapshotFormat parse_format(const char* format) {
  if (format && std::strcmp(format, "csv") == 0)
    return xma::SnapshotFormat::csv;
  if (format && std::strcmp(format, "json") == 0)
    return xma::SnapshotFormat::json;
  throw std::invalid_argument("format must be \"csv\" or \"json\"");
}

}  // namespace

struct xma_dataset {
  xma::SnapshotSet set;        // normalized once prepared
  xma::SplitIndices split;
  bool prepared = false;
};

struct xma_rom {
  xma::Rom rom;
};

struct xma_mixture {
  xma::MixtureModel mix;
};

extern "C" {

const char* xma_version(void) { return "1.0.0"; }

const char* xma_last_error(void) { return g_last_error.c_str(); }

xma_status xma_dataset_generate(const char* case_json, xma_dataset** out) {
  if (!case_json || !out)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const xma::CaseSpec spec =
        xma::case_from_json(nlohmann::json::parse(case_json));
    auto ds = std::make_unique<xma_dataset>();
    ds->set = xma::generate_case(spec);
    *out = ds.release();
    return XMA_OK;
  });
}

xma_status xma_dataset_load(const char* path, const char* format,
                            xma_dataset** out) {
  if (!path || !out) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> xma_status {
    try {
      auto ds = std::make_unique<xma_dataset>();
      ds->set = xma::load_snapshots(path, parse_format(format));
      *out = ds.release();
      return XMA_OK;
    } catch (const std::runtime_error& e) {
      return fail(XMA_ERR_IO, e.what());
    }
  });
}

xma_status xma_dataset_save(const xma_dataset* ds, const char* path,
                            const char* format) {
  if (!ds || !path) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> xma_status {
    try {
      xma::write_snapshots(ds->set, path, parse_format(format));
      return XMA_OK;
    } catch (const std::runtime_error& e) {
      return fail(XMA_ERR_IO, e.what());
    }
  });
}

xma_status xma_dataset_info(const xma_dataset* ds, int* n_snapshots,
                            int* n_dof, int* n_params, int* dim) {
  if (!ds) return fail(XMA_ERR_INVALID_ARGUMENT, "null dataset");
  if (n_snapshots) *n_snapshots = ds->set.n_snapshots();
  if (n_dof) *n_dof = ds->set.n_dof();
  if (n_params) *n_params = ds->set.n_params();
  if (dim) *dim = ds->set.dim();
  return XMA_OK;
}

xma_status xma_dataset_prepare(xma_dataset* ds, int n_train, int n_eval,
                               int n_test, uint64_t seed) {
  if (!ds) return fail(XMA_ERR_INVALID_ARGUMENT, "null dataset");
  return guarded([&] {
    if (ds->prepared)
      throw std::invalid_argument("dataset is already prepared");
    ds->split = xma::split(ds->set, n_train, n_eval, n_test, seed);
    ds->set = xma::normalize(ds->set, ds->split.train);
    ds->prepared = true;
    return XMA_OK;
  });
}

void xma_dataset_free(xma_dataset* ds) { delete ds; }

xma_status xma_rom_train(const xma_dataset* ds, const char* spec_json,
                         uint64_t seed, xma_rom** out) {
  if (!ds || !spec_json || !out)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  if (!ds->prepared)
    return fail(XMA_ERR_INVALID_ARGUMENT,
                "dataset must be prepared before training");
  return guarded([&] {
    const xma::RomSpec spec =
        xma::rom_spec_from_json(nlohmann::json::parse(spec_json));
    auto rom = std::make_unique<xma_rom>();
    rom->rom = xma::rom_train(ds->set, ds->split.train, spec, seed);
    *out = rom.release();
    return XMA_OK;
  });
}

xma_status xma_rom_save(const xma_rom* rom, const char* dir) {
  if (!rom || !dir) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> xma_status {
    try {
      xma::rom_save(rom->rom, dir);
      return XMA_OK;
    } catch (const std::runtime_error& e) {
      return fail(XMA_ERR_IO, e.what());
    }
  });
}

xma_status xma_rom_load(const char* dir, xma_rom** out) {
  if (!dir || !out) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto rom = std::make_unique<xma_rom>();
    rom->rom = xma::rom_load(dir);
    *out = rom.release();
    return XMA_OK;
  });
}

xma_status xma_rom_info(const xma_rom* rom, int* n_params, int* latent_dim,
                        int* n_dof) {
  if (!rom) return fail(XMA_ERR_INVALID_ARGUMENT, "null rom");
  if (n_params) *n_params = static_cast<int>(rom->rom.param_scaler.lo.size());
  if (latent_dim) *latent_dim = rom->rom.spec.r;
  if (n_dof) {
    const Eigen::VectorXd probe = Eigen::VectorXd::Zero(rom->rom.spec.r);
    *n_dof = static_cast<int>(
        xma::reducer_decode(rom->rom.reducer, probe).size());
  }
  return XMA_OK;
}

xma_status xma_rom_predict(const xma_rom* rom, const double* mu, int p,
                           double* field_out) {
  if (!rom || !mu || !field_out)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (p != rom->rom.param_scaler.lo.size())
      throw std::invalid_argument("parameter length mismatch");
    const Eigen::VectorXd field =
        rom->rom.predict(Eigen::Map<const Eigen::VectorXd>(mu, p));
    std::memcpy(field_out, field.data(), sizeof(double) * field.size());
    return XMA_OK;
  });
}

void xma_rom_free(xma_rom* rom) { delete rom; }

xma_status xma_mixture_fit(const xma_dataset* ds, const xma_rom* const* roms,
                           int n_roms, const char* cfg_json,
                           xma_mixture** out) {
  if (!ds || !roms || !out)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  if (!ds->prepared)
    return fail(XMA_ERR_INVALID_ARGUMENT,
                "dataset must be prepared before aggregation");
  return guarded([&] {
    xma::ForestConfig cfg;
    if (cfg_json) {
      const nlohmann::json j = nlohmann::json::parse(cfg_json);
      if (j.contains("n_trees")) cfg.n_trees = j.at("n_trees").get<int>();
      if (j.contains("min_samples_leaf"))
        cfg.min_samples_leaf = j.at("min_samples_leaf").get<int>();
      if (j.contains("bootstrap"))
        cfg.bootstrap = j.at("bootstrap").get<bool>();
      if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    std::vector<std::shared_ptr<const xma::Rom>> components;
    for (int i = 0; i < n_roms; ++i) {
      if (!roms[i]) throw std::invalid_argument("null rom handle");
      components.push_back(
          std::make_shared<const xma::Rom>(roms[i]->rom));
    }
    const xma::EvalPredictions data =
        xma::collect_eval_predictions(components, ds->set, ds->split.eval);
    const double sigma = xma::optimize_sigma(data);
    auto mix = std::make_unique<xma_mixture>();
    mix->mix = xma::fit_weight_regressors(components, ds->set, ds->split,
                                          sigma, cfg);
    *out = mix.release();
    return XMA_OK;
  });
}

xma_status xma_mixture_save(const xma_mixture* mix, const char* dir) {
  if (!mix || !dir) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&]() -> xma_status {
    try {
      xma::mixture_save(mix->mix, dir);
      return XMA_OK;
    } catch (const std::runtime_error& e) {
      return fail(XMA_ERR_IO, e.what());
    }
  });
}

xma_status xma_mixture_load(const char* dir, xma_mixture** out) {
  if (!dir || !out) return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto mix = std::make_unique<xma_mixture>();
    mix->mix = xma::mixture_load(dir);
    *out = mix.release();
    return XMA_OK;
  });
}

xma_status xma_mixture_info(const xma_mixture* mix, int* n_models, int* n_dof,
                            double* sigma_opt) {
  if (!mix) return fail(XMA_ERR_INVALID_ARGUMENT, "null mixture");
  if (n_models) *n_models = mix->mix.n_models();
  if (n_dof) *n_dof = static_cast<int>(mix->mix.grid.rows());
  if (sigma_opt) *sigma_opt = mix->mix.sigma_opt;
  return XMA_OK;
}

xma_status xma_mixture_predict(const xma_mixture* mix, const double* mu,
                               int p, double* field_out, double* weights_out,
                               int* degenerate_out) {
  if (!mix || !mu || !field_out)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (p != mix->mix.param_scaler.lo.size())
      throw std::invalid_argument("parameter length mismatch");
    const xma::MixturePrediction pred = xma::mixture_predict(
        mix->mix, Eigen::Map<const Eigen::VectorXd>(mu, p));
    std::memcpy(field_out, pred.field.data(),
                sizeof(double) * pred.field.size());
    if (weights_out)
      for (Eigen::Index i = 0; i < pred.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < pred.weights.cols(); ++j)
          weights_out[i * pred.weights.cols() + j] = pred.weights(i, j);
    if (degenerate_out) *degenerate_out = pred.degenerate_points;
    return XMA_OK;
  });
}

void xma_mixture_free(xma_mixture* mix) { delete mix; }

xma_status xma_run_experiment(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir)
    return fail(XMA_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const xma::ExperimentConfig config =
        xma::experiment_config_from_json(nlohmann::json::parse(config_json));
    const xma::ExperimentReport report = xma::run_experiment(config);
    xma::emit_report(report, out_dir);
    for (const auto& m : report.models)
      if (m.failed)
        throw std::runtime_error("model " + m.name + " failed: " + m.error);
    for (const auto& m : report.mixtures)
      if (m.failed)
        throw std::runtime_error("mixture " + m.variant +
                                 " failed: " + m.error);
    return XMA_OK;
  });
}

}  // extern "C"
