// Batch front-end over the xmarom C API: generate synthetic snapshot sets,
// train individual ROMs, aggregate them into a mixture, or run the full
// experiment pipeline with one command.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xmarom/xmarom.h"

namespace {

using SectionMap = std::map<std::string, std::map<std::string, std::string>>;

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"case",
     {"kind", "n_dof", "dim", "param_min", "param_max", "n_snapshots",
      "noise", "seed"}},
    {"split", {"n_train", "n_eval", "n_test"}},
    {"models",
     {"list", "latent_dim", "ae_hidden", "ae_learning_rate", "ae_epochs",
      "ae_target_loss", "ae_weight_decay", "ann_learning_rate", "ann_epochs",
      "ann_target_loss", "ann_weight_decay"}},
    {"forest", {"n_trees", "min_samples_leaf", "bootstrap"}},
    {"run", {"seed", "mixtures"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

SectionMap parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  SectionMap config;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      if (!kKnownKeys.count(section))
        throw std::runtime_error("unknown config section [" + section +
                                 "] at line " + std::to_string(line_no));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || section.empty())
      throw std::runtime_error("malformed config line " +
                               std::to_string(line_no) + ": " + t);
    const std::string key = trim(t.substr(0, eq));
    if (!kKnownKeys.at(section).count(key))
      throw std::runtime_error("unknown config key '" + key +
                               "' in section [" + section + "]");
    config[section][key] = trim(t.substr(eq + 1));
  }
  return config;
}

std::string get(const SectionMap& config, const std::string& section,
                const std::string& key, const std::string& fallback) {
  const auto s = config.find(section);
  if (s == config.end()) return fallback;
  const auto k = s->second.find(key);
  return k == s->second.end() ? fallback : k->second;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

void write_resolved_config(const SectionMap& config, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir + "/resolved_config.ini");
  for (const auto& [section, entries] : config) {
    out << "[" << section << "]\n";
    for (const auto& [key, value] : entries)
      out << key << " = " << value << "\n";
    out << "\n";
  }
}

nlohmann::json case_json(const SectionMap& config) {
  const std::string kind = get(config, "case", "kind", "smooth_family");
  nlohmann::json j;
  j["kind"] = kind;
  j["n_dof"] = std::stoi(get(config, "case", "n_dof", "500"));
  j["dim"] = std::stoi(get(config, "case", "dim", "1"));
  const std::string default_min = kind == "moving_front" ? "0" : "1";
  j["param_min"] = std::stod(get(config, "case", "param_min", default_min));
  j["param_max"] = std::stod(get(config, "case", "param_max", "10"));
  j["n_snapshots"] = std::stoi(get(config, "case", "n_snapshots", "100"));
  j["noise"] = std::stod(get(config, "case", "noise", "0"));
  j["seed"] = static_cast<std::uint64_t>(
      std::stoull(get(config, "case", "seed",
                      get(config, "run", "seed", "0"))));
  return j;
}

nlohmann::json model_spec_json(const SectionMap& config,
                               const std::string& name) {
  const auto dash = name.find('-');
  if (dash == std::string::npos)
    throw std::runtime_error("model name must look like pod-rbf: " + name);
  nlohmann::json j;
  j["reduction"] = name.substr(0, dash);
  j["approx"] = name.substr(dash + 1);
  j["latent_dim"] = std::stoi(get(config, "models", "latent_dim", "3"));
  nlohmann::json ae;
  ae["learning_rate"] =
      std::stod(get(config, "models", "ae_learning_rate", "5e-4"));
  ae["max_epochs"] = std::stoi(get(config, "models", "ae_epochs", "20000"));
  ae["target_loss"] =
      std::stod(get(config, "models", "ae_target_loss", "5e-6"));
  ae["weight_decay"] =
      std::stod(get(config, "models", "ae_weight_decay", "0"));
  const std::string hidden = get(config, "models", "ae_hidden", "50,20");
  std::vector<int> widths;
  for (const auto& w : split_list(hidden)) widths.push_back(std::stoi(w));
  ae["hidden"] = widths;
  j["ae"] = ae;
  nlohmann::json ann;
  ann["learning_rate"] =
      std::stod(get(config, "models", "ann_learning_rate", "5e-3"));
  ann["max_epochs"] = std::stoi(get(config, "models", "ann_epochs", "100000"));
  ann["target_loss"] =
      std::stod(get(config, "models", "ann_target_loss", "1e-4"));
  ann["weight_decay"] =
      std::stod(get(config, "models", "ann_weight_decay", "1e-7"));
  j["ann"] = ann;
  return j;
}

int check(xma_status status, const std::string& what) {
  if (status == XMA_OK) return 0;
  std::cerr << "error: " << what << ": " << xma_last_error() << "\n";
  return 1;
}

struct DatasetHandle {
  xma_dataset* ds = nullptr;
  ~DatasetHandle() { xma_dataset_free(ds); }
};

struct RomHandle {
  xma_rom* rom = nullptr;
  ~RomHandle() { xma_rom_free(rom); }
};

int prepare_dataset(const SectionMap& config, const std::string& data_dir,
                    DatasetHandle& handle) {
  const std::string path = data_dir + "/snapshots.csv";
  if (check(xma_dataset_load(path.c_str(), "csv", &handle.ds),
            "loading " + path))
    return 1;
  const int n_train = std::stoi(get(config, "split", "n_train", "70"));
  const int n_eval = std::stoi(get(config, "split", "n_eval", "20"));
  const int n_test = std::stoi(get(config, "split", "n_test", "10"));
  const std::uint64_t seed =
      std::stoull(get(config, "run", "seed", "0"));
  return check(
      xma_dataset_prepare(handle.ds, n_train, n_eval, n_test,
                          splitmix64(seed ^ 0x5917ull)),
      "splitting dataset");
}

int cmd_generate(const SectionMap& config, const std::string& out_dir) {
  const nlohmann::json spec = case_json(config);
  DatasetHandle handle;
  if (check(xma_dataset_generate(spec.dump().c_str(), &handle.ds),
            "generating case"))
    return 1;
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/snapshots.csv";
  if (check(xma_dataset_save(handle.ds, path.c_str(), "csv"),
            "writing " + path))
    return 1;
  nlohmann::json manifest;
  manifest["case"] = spec;
  std::ofstream mout(out_dir + "/manifest.json");
  mout << manifest.dump(1) << "\n";
  write_resolved_config(config, out_dir);
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_train(const SectionMap& config, const std::string& data_dir,
              const std::string& out_dir) {
  DatasetHandle ds;
  if (prepare_dataset(config, data_dir, ds)) return 1;
  const auto names = split_list(get(config, "models", "list", "pod-rbf"));
  if (names.empty()) {
    std::cerr << "error: no models requested\n";
    return 1;
  }
  const std::uint64_t seed = std::stoull(get(config, "run", "seed", "0"));
  std::vector<std::string> failed;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const nlohmann::json spec = model_spec_json(config, names[i]);
    RomHandle rom;
    const std::uint64_t model_seed = splitmix64(seed ^ (0x200ull + i));
    if (xma_rom_train(ds.ds, spec.dump().c_str(), model_seed, &rom.rom) !=
        XMA_OK) {
      std::cerr << "model " << names[i] << " failed: " << xma_last_error()
                << "\n";
      failed.push_back(names[i]);
      continue;
    }
    const std::string dir = out_dir + "/" + names[i];
    if (xma_rom_save(rom.rom, dir.c_str()) != XMA_OK) {
      std::cerr << "model " << names[i]
                << " failed to save: " << xma_last_error() << "\n";
      failed.push_back(names[i]);
      continue;
    }
    std::cout << "trained " << names[i] << " -> " << dir << "\n";
  }
  write_resolved_config(config, out_dir);
  if (!failed.empty()) {
    std::cerr << "failed models:";
    for (const auto& name : failed) std::cerr << " " << name;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

int cmd_aggregate(const SectionMap& config, const std::string& data_dir,
                  const std::string& roms_dir, const std::string& out_dir) {
  DatasetHandle ds;
  if (prepare_dataset(config, data_dir, ds)) return 1;
  const auto names = split_list(get(config, "models", "list", ""));
  if (names.size() < 2) {
    std::cerr << "error: aggregation needs at least two models\n";
    return 1;
  }
  std::vector<RomHandle> handles(names.size());
  std::vector<const xma_rom*> roms;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string dir = roms_dir + "/" + names[i];
    if (check(xma_rom_load(dir.c_str(), &handles[i].rom), "loading " + dir))
      return 1;
    roms.push_back(handles[i].rom);
  }
  const std::uint64_t seed = std::stoull(get(config, "run", "seed", "0"));
  nlohmann::json forest;
  forest["n_trees"] = std::stoi(get(config, "forest", "n_trees", "100"));
  forest["min_samples_leaf"] =
      std::stoi(get(config, "forest", "min_samples_leaf", "2"));
  forest["bootstrap"] =
      get(config, "forest", "bootstrap", "true") == "true";
  forest["seed"] = splitmix64(seed ^ 0x300ull);

  xma_mixture* mix = nullptr;
  if (check(xma_mixture_fit(ds.ds, roms.data(),
                            static_cast<int>(roms.size()),
                            forest.dump().c_str(), &mix),
            "fitting mixture"))
    return 1;
  const std::string dir = out_dir + "/mixture";
  const int rc = check(xma_mixture_save(mix, dir.c_str()), "saving mixture");
  double sigma = 0.0;
  xma_mixture_info(mix, nullptr, nullptr, &sigma);
  xma_mixture_free(mix);
  if (rc) return 1;
  write_resolved_config(config, out_dir);
  std::cout << "mixture saved to " << dir << " (sigma_opt=" << sigma << ")\n";
  return 0;
}

int cmd_report(const SectionMap& config, const std::string& out_dir) {
  nlohmann::json experiment;
  experiment["case"] = case_json(config);
  nlohmann::json roms = nlohmann::json::array();
  for (const auto& name :
       split_list(get(config, "models", "list", "pod-rbf,podae-rbf")))
    roms.push_back(model_spec_json(config, name));
  experiment["roms"] = roms;
  experiment["n_train"] = std::stoi(get(config, "split", "n_train", "70"));
  experiment["n_eval"] = std::stoi(get(config, "split", "n_eval", "20"));
  experiment["n_test"] = std::stoi(get(config, "split", "n_test", "10"));
  experiment["forest"] = {
      {"n_trees", std::stoi(get(config, "forest", "n_trees", "100"))},
      {"min_samples_leaf",
       std::stoi(get(config, "forest", "min_samples_leaf", "2"))},
      {"bootstrap", get(config, "forest", "bootstrap", "true") == "true"}};
  experiment["master_seed"] =
      static_cast<std::uint64_t>(std::stoull(get(config, "run", "seed", "0")));
  experiment["mixtures"] =
      split_list(get(config, "run", "mixtures", "rbf-pair,two-best"));

  const int rc = check(
      xma_run_experiment(experiment.dump().c_str(), out_dir.c_str()),
      "running experiment");
  write_resolved_config(config, out_dir);
  if (!rc) std::cout << "report written to " << out_dir << "\n";
  return rc;
}

void apply_overrides(SectionMap& config, const std::string& case_kind,
                     int latent_dim, const std::string& models,
                     const std::string& mixture, long long seed_flag) {
  if (!case_kind.empty()) config["case"]["kind"] = case_kind;
  if (latent_dim > 0)
    config["models"]["latent_dim"] = std::to_string(latent_dim);
  if (!models.empty()) config["models"]["list"] = models;
  if (!mixture.empty()) config["run"]["mixtures"] = mixture;
  if (seed_flag >= 0) config["run"]["seed"] = std::to_string(seed_flag);
  if (!config["run"].count("seed")) config["run"]["seed"] = "0";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"xmarom: non-intrusive ROMs with space-dependent aggregation"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, roms_dir;
  std::string case_kind, models, mixture;
  int latent_dim = -1;
  long long seed_flag = -1;

  const auto add_common = [&](CLI::App* cmd, bool needs_data,
                              bool needs_roms) {
    cmd->add_option("--config", config_path, "INI config file");
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--seed", seed_flag, "master seed");
    cmd->add_option("--case", case_kind,
                    "case kind: smooth_family|moving_front");
    cmd->add_option("--latent-dim", latent_dim, "latent dimension r");
    cmd->add_option("--models", models, "comma list, e.g. pod-rbf,ae-rbf");
    cmd->add_option("--mixture", mixture, "rbf-pair|two-best");
    if (needs_data)
      cmd->add_option("--data", data_dir, "directory with snapshots.csv")
          ->required();
    if (needs_roms)
      cmd->add_option("--roms", roms_dir, "directory with ROM bundles")
          ->required();
  };

  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(generate, false, false);
  auto* train = app.add_subcommand("train", "train ROM bundles");
  add_common(train, true, false);
  auto* aggregate = app.add_subcommand("aggregate", "fit a mixture bundle");
  add_common(aggregate, true, true);
  auto* report = app.add_subcommand("report", "run the full experiment");
  add_common(report, false, false);

  CLI11_PARSE(app, argc, argv);

  try {
    SectionMap config;
    if (!config_path.empty()) config = parse_ini(config_path);
    apply_overrides(config, case_kind, latent_dim, models, mixture,
                    seed_flag);
    if (generate->parsed()) return cmd_generate(config, out_dir);
    if (train->parsed()) return cmd_train(config, data_dir, out_dir);
    if (aggregate->parsed())
      return cmd_aggregate(config, data_dir, roms_dir, out_dir);
    if (report->parsed()) return cmd_report(config, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
