#include "core/rom.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

std::string to_string(ReductionKind k) {
  switch (k) {
    case ReductionKind::pod: return "pod";
    case ReductionKind::ae: return "ae";
    case ReductionKind::podae: return "podae";
  }
  return "?";
}

std::string to_string(ApproxKind k) {
  switch (k) {
    case ApproxKind::rbf: return "rbf";
    case ApproxKind::gpr: return "gpr";
    case ApproxKind::ann: return "ann";
  }
  return "?";
}

ReductionKind reduction_from_string(const std::string& s) {
  if (s == "pod") return ReductionKind::pod;
  if (s == "ae") return ReductionKind::ae;
  if (s == "podae") return ReductionKind::podae;
  throw std::invalid_argument("unknown reduction kind: " + s);
}

ApproxKind approx_from_string(const std::string& s) {
  if (s == "rbf") return ApproxKind::rbf;
  if (s == "gpr") return ApproxKind::gpr;
  if (s == "ann") return ApproxKind::ann;
  throw std::invalid_argument("unknown approximation kind: " + s);
}

Eigen::VectorXd reducer_encode(const Reducer& reducer,
                               const Eigen::VectorXd& field) {
  return std::visit(
      [&](const auto& r) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PodBasis>) return pod_encode(r, field);
        else if constexpr (std::is_same_v<T, AeModel>) return ae_encode(r, field);
        else return podae_encode(r, field);
      },
      reducer);
}

Eigen::VectorXd reducer_decode(const Reducer& reducer,
                               const Eigen::VectorXd& code) {
  return std::visit(
      [&](const auto& r) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PodBasis>) return pod_decode(r, code);
        else if constexpr (std::is_same_v<T, AeModel>) return ae_decode(r, code);
        else return podae_decode(r, code);
      },
      reducer);
}

Eigen::VectorXd map_predict(const LatentMap& map, const Eigen::VectorXd& mu) {
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RbfModel>) return rbf_predict(m, mu);
        else if constexpr (std::is_same_v<T, GprModel>) return gpr_predict(m, mu);
        else return ann_predict(m, mu);
      },
      map);
}

Eigen::VectorXd Rom::predict_normalized(const Eigen::VectorXd& mu) const {
  return reducer_decode(reducer, map_predict(map, param_scaler.apply(mu)));
}

Eigen::VectorXd Rom::predict(const Eigen::VectorXd& mu) const {
  return denormalize_field(norm, predict_normalized(mu));
}

Rom rom_train(const SnapshotSet& set, const std::vector<int>& train_indices,
              const RomSpec& spec, std::uint64_t seed) {
  if (!set.norm.applied)
    throw std::invalid_argument("rom_train: snapshot set must be normalized");
  if (train_indices.empty())
    throw std::invalid_argument("rom_train: empty train split");

  const int n_train = static_cast<int>(train_indices.size());
  Eigen::MatrixXd s_train(set.n_dof(), n_train);
  Eigen::MatrixXd mu_train(n_train, set.n_params());
  for (int i = 0; i < n_train; ++i) {
    s_train.col(i) = set.fields.col(train_indices[i]);
    mu_train.row(i) = set.params.row(train_indices[i]);
  }

  Rom rom;
  rom.spec = spec;
  rom.norm = set.norm;
  rom.param_scaler = fit_scaler(mu_train);

  switch (spec.reduction) {
    case ReductionKind::pod:
      rom.reducer = pod_fit(s_train, spec.r);
      break;
    case ReductionKind::ae: {
      TrainConfig cfg = spec.ae_train;
      cfg.seed = derive_seed(seed, 0xAE);
      rom.reducer = ae_fit(s_train, spec.r, spec.ae_arch, cfg);
      break;
    }
    case ReductionKind::podae: {
      TrainConfig cfg = spec.ae_train;
      cfg.seed = derive_seed(seed, 0xAE);
      rom.reducer = podae_fit(s_train, spec.r, spec.ae_arch, cfg);
      break;
    }
  }

  Eigen::MatrixXd codes(n_train, spec.r);
  for (int i = 0; i < n_train; ++i)
    codes.row(i) = reducer_encode(rom.reducer, s_train.col(i)).transpose();
  const Eigen::MatrixXd mu_scaled = rom.param_scaler.apply_rows(mu_train);

  switch (spec.approx) {
    case ApproxKind::rbf:
      rom.map = rbf_fit(mu_scaled, codes);
      break;
    case ApproxKind::gpr:
      rom.map = gpr_fit(mu_scaled, codes);
      break;
    case ApproxKind::ann: {
      TrainConfig cfg = spec.ann_train;
      cfg.seed = derive_seed(seed, 0xA11);
      rom.map = ann_fit(mu_scaled, codes, cfg);
      break;
    }
  }
  return rom;
}

double relative_error(const Eigen::VectorXd& pred,
                      const Eigen::VectorXd& truth, bool* zero_norm_flag) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("relative_error: length mismatch");
  const double truth_norm = truth.norm();
  if (zero_norm_flag) *zero_norm_flag = truth_norm == 0.0;
  const double abs_err = (pred - truth).norm();
  return truth_norm == 0.0 ? abs_err : abs_err / truth_norm;
}

nlohmann::json rom_spec_to_json(const RomSpec& spec) {
  nlohmann::json j;
  j["reduction"] = to_string(spec.reduction);
  j["approx"] = to_string(spec.approx);
  j["latent_dim"] = spec.r;
  j["ae"] = {{"hidden", spec.ae_arch.hidden},
             {"learning_rate", spec.ae_train.learning_rate},
             {"max_epochs", spec.ae_train.max_epochs},
             {"target_loss", spec.ae_train.target_loss},
             {"weight_decay", spec.ae_train.weight_decay}};
  j["ann"] = {{"learning_rate", spec.ann_train.learning_rate},
              {"max_epochs", spec.ann_train.max_epochs},
              {"target_loss", spec.ann_train.target_loss},
              {"weight_decay", spec.ann_train.weight_decay}};
  return j;
}

RomSpec rom_spec_from_json(const nlohmann::json& j) {
  RomSpec spec;
  spec.reduction = reduction_from_string(j.at("reduction").get<std::string>());
  spec.approx = approx_from_string(j.at("approx").get<std::string>());
  spec.r = j.at("latent_dim").get<int>();
  if (spec.r < 1) throw std::invalid_argument("rom spec: latent_dim must be >= 1");
  if (j.contains("ae")) {
    const auto& a = j.at("ae");
    if (a.contains("hidden"))
      spec.ae_arch.hidden = a.at("hidden").get<std::vector<int>>();
    if (a.contains("learning_rate"))
      spec.ae_train.learning_rate = a.at("learning_rate").get<double>();
    if (a.contains("max_epochs"))
      spec.ae_train.max_epochs = a.at("max_epochs").get<int>();
    if (a.contains("target_loss"))
      spec.ae_train.target_loss = a.at("target_loss").get<double>();
    if (a.contains("weight_decay"))
      spec.ae_train.weight_decay = a.at("weight_decay").get<double>();
  }
  if (j.contains("ann")) {
    const auto& a = j.at("ann");
    if (a.contains("learning_rate"))
      spec.ann_train.learning_rate = a.at("learning_rate").get<double>();
    if (a.contains("max_epochs"))
      spec.ann_train.max_epochs = a.at("max_epochs").get<int>();
    if (a.contains("target_loss"))
      spec.ann_train.target_loss = a.at("target_loss").get<double>();
    if (a.contains("weight_decay"))
      spec.ann_train.weight_decay = a.at("weight_decay").get<double>();
  }
  return spec;
}

namespace {

nlohmann::json scaler_to_json(const AxisScaler& s) {
  return {{"lo", std::vector<double>(s.lo.data(), s.lo.data() + s.lo.size())},
          {"span",
           std::vector<double>(s.span.data(), s.span.data() + s.span.size())}};
}

AxisScaler scaler_from_json(const nlohmann::json& j) {
  AxisScaler s;
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto span = j.at("span").get<std::vector<double>>();
  s.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size());
  s.span = Eigen::Map<const Eigen::VectorXd>(span.data(), span.size());
  return s;
}

nlohmann::json norm_to_json(const NormSpec& n) {
  return {{"shift", n.shift},
          {"scale", n.scale},
          {"zero_variance", n.zero_variance},
          {"applied", n.applied}};
}

NormSpec norm_from_json(const nlohmann::json& j) {
  NormSpec n;
  n.shift = j.at("shift").get<double>();
  n.scale = j.at("scale").get<double>();
  n.zero_variance = j.at("zero_variance").get<bool>();
  n.applied = j.at("applied").get<bool>();
  return n;
}

void dump_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1) << "\n";
}

nlohmann::json slurp_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace

void rom_save(const Rom& rom, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = rom_spec_to_json(rom.spec);
  meta["param_scaler"] = scaler_to_json(rom.param_scaler);
  meta["norm"] = norm_to_json(rom.norm);
  dump_json(meta, dir + "/spec.json");

  const nlohmann::json reducer = std::visit(
      [](const auto& r) -> nlohmann::json {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, PodBasis>) return pod_to_json(r);
        else if constexpr (std::is_same_v<T, AeModel>) return ae_to_json(r);
        else return podae_to_json(r);
      },
      rom.reducer);
  dump_json(reducer, dir + "/reducer.json");

  const nlohmann::json map = std::visit(
      [](const auto& m) -> nlohmann::json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RbfModel>) return rbf_to_json(m);
        else if constexpr (std::is_same_v<T, GprModel>) return gpr_to_json(m);
        else return ann_to_json(m);
      },
      rom.map);
  dump_json(map, dir + "/map.json");
}

Rom rom_load(const std::string& dir) {
  const nlohmann::json meta = slurp_json(dir + "/spec.json");
  Rom rom;
  rom.spec = rom_spec_from_json(meta);
  rom.param_scaler = scaler_from_json(meta.at("param_scaler"));
  rom.norm = norm_from_json(meta.at("norm"));

  const nlohmann::json reducer = slurp_json(dir + "/reducer.json");
  switch (rom.spec.reduction) {
    case ReductionKind::pod: rom.reducer = pod_from_json(reducer); break;
    case ReductionKind::ae: rom.reducer = ae_from_json(reducer); break;
    case ReductionKind::podae: rom.reducer = podae_from_json(reducer); break;
  }
  const nlohmann::json map = slurp_json(dir + "/map.json");
  switch (rom.spec.approx) {
    case ApproxKind::rbf: rom.map = rbf_from_json(map); break;
    case ApproxKind::gpr: rom.map = gpr_from_json(map); break;
    case ApproxKind::ann: rom.map = ann_from_json(map); break;
  }
  return rom;
}

}  // namespace xma
