#include "core/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

namespace {

// Largest-magnitude entry of each mode made positive so bases are unique.
void fix_mode_signs(Eigen::MatrixXd& modes) {
  for (Eigen::Index c = 0; c < modes.cols(); ++c) {
    Eigen::Index imax = 0;
    modes.col(c).cwiseAbs().maxCoeff(&imax);
    if (modes(imax, c) < 0.0) modes.col(c) = -modes.col(c);
  }
}

struct SvdResult {
  Eigen::MatrixXd u;          // n_dof x k
  Eigen::VectorXd sigma;      // k values, nonincreasing
};

SvdResult direct_svd(const Eigen::MatrixXd& s, int n_modes) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU);
  SvdResult out;
  out.sigma = svd.singularValues();
  out.u = svd.matrixU().leftCols(n_modes);
  return out;
}

// Method of snapshots: eigen-decomposition of S^T S. Cheaper than a direct
// factorization for tall matrices, but the recovered modes degrade when a
// requested singular value vanishes, in which case we fall back.
SvdResult gram_svd(const Eigen::MatrixXd& s, int n_modes) {
  const Eigen::MatrixXd gram = s.transpose() * s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("pod_fit: eigen-decomposition failed");

  const Eigen::Index n = gram.rows();
  SvdResult out;
  out.sigma.resize(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out.sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));

  const double sigma_max = out.sigma.size() ? out.sigma(0) : 0.0;
  if (sigma_max <= 0.0 || out.sigma(n_modes - 1) <= 1e-12 * sigma_max)
    return direct_svd(s, n_modes);

  out.u.resize(s.rows(), n_modes);
  for (int i = 0; i < n_modes; ++i)
    out.u.col(i) = s * eig.eigenvectors().col(n - 1 - i) / out.sigma(i);
  return out;
}

}  // namespace

PodBasis pod_fit(const Eigen::MatrixXd& snapshots, int r) {
  const int max_r = static_cast<int>(
      std::min(snapshots.rows(), snapshots.cols()));
  if (r < 1 || r > max_r)
    throw std::invalid_argument("pod_fit: r=" + std::to_string(r) +
                                " out of range [1, " + std::to_string(max_r) +
                                "]");
  const bool tall = snapshots.rows() >= 2 * snapshots.cols();
  SvdResult svd = tall ? gram_svd(snapshots, r) : direct_svd(snapshots, r);

  PodBasis basis;
  basis.r = r;
  basis.singular_values = std::move(svd.sigma);
  basis.modes = std::move(svd.u);
  fix_mode_signs(basis.modes);
  return basis;
}

Eigen::VectorXd pod_encode(const PodBasis& basis, const Eigen::VectorXd& s) {
  if (s.size() != basis.modes.rows())
    throw std::invalid_argument("pod_encode: field length mismatch");
  return basis.modes.transpose() * s;
}

Eigen::VectorXd pod_decode(const PodBasis& basis, const Eigen::VectorXd& a) {
  if (a.size() != basis.r)
    throw std::invalid_argument("pod_decode: code length mismatch");
  return basis.modes * a;
}

Eigen::VectorXd singular_spectrum(const Eigen::MatrixXd& snapshots) {
  if (snapshots.rows() >= 2 * snapshots.cols()) {
    const Eigen::MatrixXd gram = snapshots.transpose() * snapshots;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::Index n = gram.rows();
    Eigen::VectorXd sigma(n);
    for (Eigen::Index i = 0; i < n; ++i)
      sigma(i) = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1 - i)));
    return sigma;
  }
  return Eigen::BDCSVD<Eigen::MatrixXd>(snapshots).singularValues();
}

namespace {

std::vector<int> encoder_sizes(int n_in, const AeArchitecture& arch, int r) {
  std::vector<int> sizes;
  sizes.push_back(n_in);
  sizes.insert(sizes.end(), arch.hidden.begin(), arch.hidden.end());
  sizes.push_back(r);
  return sizes;
}

std::vector<int> decoder_sizes(int n_in, const AeArchitecture& arch, int r) {
  std::vector<int> sizes;
  sizes.push_back(r);
  sizes.insert(sizes.end(), arch.hidden.rbegin(), arch.hidden.rend());
  sizes.push_back(n_in);
  return sizes;
}

}  // namespace

AeModel ae_fit(const Eigen::MatrixXd& snapshots, int r,
               const AeArchitecture& arch, const TrainConfig& cfg) {
  if (r < 1) throw std::invalid_argument("ae_fit: r must be >= 1");
  const int n_in = static_cast<int>(snapshots.rows());

  AeModel model;
  model.r = r;
  model.encoder = make_network(encoder_sizes(n_in, arch, r),
                               derive_seed(cfg.seed, 1));
  model.decoder = make_network(decoder_sizes(n_in, arch, r),
                               derive_seed(cfg.seed, 2));
  const TrainResult result =
      train_autoencoder(model.encoder, model.decoder, snapshots, cfg);
  model.final_loss = result.final_loss();
  model.diverged = result.diverged;
  if (result.diverged)
    throw std::runtime_error("ae_fit: training diverged (last finite loss " +
                             std::to_string(model.final_loss) + ")");
  return model;
}

Eigen::VectorXd ae_encode(const AeModel& model, const Eigen::VectorXd& s) {
  return forward(model.encoder, s);
}

Eigen::VectorXd ae_decode(const AeModel& model, const Eigen::VectorXd& a) {
  return forward(model.decoder, a);
}

PodAeModel podae_fit(const Eigen::MatrixXd& snapshots, int r,
                     const AeArchitecture& arch, const TrainConfig& cfg) {
  const int n_train = static_cast<int>(snapshots.cols());
  if (n_train < r)
    throw std::invalid_argument("podae_fit: need at least r train snapshots");
  const int r_med = static_cast<int>(
      std::min(snapshots.rows(), snapshots.cols()));

  PodAeModel model;
  model.outer = pod_fit(snapshots, r_med);

  const double sq_mean =
      model.outer.singular_values.head(r_med).squaredNorm() / r_med;
  model.coeff_scale = sq_mean > 0.0 ? std::sqrt(sq_mean) : 1.0;

  const Eigen::MatrixXd coeffs =
      model.outer.modes.transpose() * snapshots / model.coeff_scale;
  model.inner = ae_fit(coeffs, r, arch, cfg);
  return model;
}

Eigen::VectorXd podae_encode(const PodAeModel& model,
                             const Eigen::VectorXd& s) {
  return ae_encode(model.inner,
                   pod_encode(model.outer, s) / model.coeff_scale);
}

Eigen::VectorXd podae_decode(const PodAeModel& model,
                             const Eigen::VectorXd& a) {
  return pod_decode(model.outer,
                    ae_decode(model.inner, a) * model.coeff_scale);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      m(i, k) = j[i][k].get<double>();
  return m;
}

}  // namespace

nlohmann::json pod_to_json(const PodBasis& basis) {
  nlohmann::json j;
  j["r"] = basis.r;
  j["modes"] = matrix_to_json(basis.modes);
  j["singular_values"] = std::vector<double>(
      basis.singular_values.data(),
      basis.singular_values.data() + basis.singular_values.size());
  return j;
}

PodBasis pod_from_json(const nlohmann::json& j) {
  PodBasis basis;
  basis.r = j.at("r").get<int>();
  basis.modes = matrix_from_json(j.at("modes"));
  const auto sv = j.at("singular_values").get<std::vector<double>>();
  basis.singular_values =
      Eigen::Map<const Eigen::VectorXd>(sv.data(), sv.size());
  return basis;
}

nlohmann::json ae_to_json(const AeModel& model) {
  nlohmann::json j;
  j["r"] = model.r;
  j["final_loss"] = model.final_loss;
  j["encoder"] = network_to_json(model.encoder);
  j["decoder"] = network_to_json(model.decoder);
  return j;
}

AeModel ae_from_json(const nlohmann::json& j) {
  AeModel model;
  model.r = j.at("r").get<int>();
  model.final_loss = j.at("final_loss").get<double>();
  model.encoder = network_from_json(j.at("encoder"));
  model.decoder = network_from_json(j.at("decoder"));
  return model;
}

nlohmann::json podae_to_json(const PodAeModel& model) {
  nlohmann::json j;
  j["coeff_scale"] = model.coeff_scale;
  j["outer"] = pod_to_json(model.outer);
  j["inner"] = ae_to_json(model.inner);
  return j;
}

PodAeModel podae_from_json(const nlohmann::json& j) {
  PodAeModel model;
  model.coeff_scale = j.at("coeff_scale").get<double>();
  model.outer = pod_from_json(j.at("outer"));
  model.inner = ae_from_json(j.at("inner"));
  return model;
}

}  // namespace xma
