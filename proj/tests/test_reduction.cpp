#include <doctest.h>

#include <chrono>
#include <cmath>

#include "core/bench.hpp"
#include "core/reduction.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace xma;

namespace {

Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i)
    m.data()[i] = rng.uniform(-1, 1);
  return m;
}

double train_reconstruction_error(const PodBasis& basis,
                                  const Eigen::MatrixXd& s) {
  double num = 0.0;
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    num += (s.col(c) - pod_decode(basis, pod_encode(basis, s.col(c))))
               .squaredNorm();
  return std::sqrt(num) / s.norm();
}

int modes_for_energy(const Eigen::VectorXd& spectrum, double fraction) {
  const double total = spectrum.squaredNorm();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
    cum += spectrum(i) * spectrum(i);
    if (cum >= fraction * total) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(spectrum.size());
}

}  // namespace

TEST_CASE("rank-1 matrix has one nonzero singular value and mode ~ c") {
  Rng rng(4);
  Eigen::VectorXd c(12);
  for (int i = 0; i < 12; ++i) c(i) = rng.uniform(-1, 1);
  Eigen::MatrixXd s(12, 2);
  s.col(0) = c;
  s.col(1) = 2.0 * c;
  const PodBasis basis = pod_fit(s, 1);
  CHECK(basis.singular_values(0) > 0.0);
  CHECK(basis.singular_values(1) < 1e-12 * basis.singular_values(0));
  const Eigen::VectorXd unit = c / c.norm();
  const double align = std::abs(basis.modes.col(0).dot(unit));
  CHECK(align == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("full-rank basis reconstructs the train set") {
  const Eigen::MatrixXd s = random_matrix(40, 12, 5);
  const PodBasis basis = pod_fit(s, 12);
  CHECK(train_reconstruction_error(basis, s) < 1e-10);
}

TEST_CASE("reconstruction error is nonincreasing in r") {
  const Eigen::MatrixXd s = random_matrix(30, 10, 6);
  double prev = 2.0;
  for (int r = 1; r <= 10; ++r) {
    const double err = train_reconstruction_error(pod_fit(s, r), s);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("singular values match the Jacobi Gram oracle") {
  const Eigen::MatrixXd s = random_matrix(20, 8, 7);
  const PodBasis basis = pod_fit(s, 3);
  const auto expected = oracle::gram_singular_values(s);
  REQUIRE(basis.singular_values.size() == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(basis.singular_values(i) ==
          doctest::Approx(expected[i]).epsilon(1e-8));
}

TEST_CASE("modes are orthonormal on both code paths") {
  for (auto [rows, cols] : {std::pair{200, 50}, std::pair{30, 25}}) {
    const Eigen::MatrixXd s = random_matrix(rows, cols, 8 + rows);
    const PodBasis basis = pod_fit(s, std::min(cols, 10));
    const Eigen::MatrixXd gram =
        basis.modes.transpose() * basis.modes;
    const Eigen::MatrixXd eye =
        Eigen::MatrixXd::Identity(gram.rows(), gram.cols());
    CHECK((gram - eye).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("pod_fit rejects r out of range") {
  const Eigen::MatrixXd s = random_matrix(10, 4, 9);
  CHECK_THROWS_AS(pod_fit(s, 0), std::invalid_argument);
  CHECK_THROWS_AS(pod_fit(s, 5), std::invalid_argument);
}

TEST_CASE("encode of a mode is a canonical unit code") {
  const Eigen::MatrixXd s = random_matrix(25, 6, 10);
  const PodBasis basis = pod_fit(s, 3);
  const Eigen::VectorXd code = pod_encode(basis, basis.modes.col(0));
  CHECK(code(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(code(1)) < 1e-12);
  CHECK(std::abs(code(2)) < 1e-12);
}

TEST_CASE("field orthogonal to all modes encodes to zero") {
  const Eigen::MatrixXd s = random_matrix(25, 6, 11);
  const PodBasis basis = pod_fit(s, 4);
  Eigen::VectorXd v = random_matrix(25, 1, 12);
  v -= basis.modes * (basis.modes.transpose() * v);
  const Eigen::VectorXd code = pod_encode(basis, v);
  CHECK(code.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("decode(encode(s)) is the orthogonal projection") {
  const Eigen::MatrixXd s = random_matrix(25, 9, 13);
  const PodBasis basis = pod_fit(s, 4);
  const Eigen::VectorXd v = random_matrix(25, 1, 14);
  const Eigen::VectorXd projected = pod_decode(basis, pod_encode(basis, v));
  const Eigen::VectorXd residual = v - projected;
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(residual.dot(basis.modes.col(j))) < 1e-10);
  // projecting twice changes nothing
  const Eigen::VectorXd twice =
      pod_decode(basis, pod_encode(basis, projected));
  CHECK((twice - projected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("encode/decode reject wrong lengths") {
  const Eigen::MatrixXd s = random_matrix(10, 4, 15);
  const PodBasis basis = pod_fit(s, 2);
  CHECK_THROWS_AS(pod_encode(basis, Eigen::VectorXd::Zero(11)),
                  std::invalid_argument);
  CHECK_THROWS_AS(pod_decode(basis, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("spectrum of orthogonal columns is their norms") {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(6, 3);
  s(0, 0) = 3.0;
  s(1, 1) = 2.0;
  s(2, 2) = 1.0;
  const Eigen::VectorXd spectrum = singular_spectrum(s);
  CHECK(spectrum(0) == doctest::Approx(3.0));
  CHECK(spectrum(1) == doctest::Approx(2.0));
  CHECK(spectrum(2) == doctest::Approx(1.0));
}

TEST_CASE("rank-1 spectrum has a single nonzero value") {
  Eigen::MatrixXd s(4, 3);
  Eigen::VectorXd c(4);
  c << 1, 2, 3, 4;
  for (int j = 0; j < 3; ++j) s.col(j) = (j + 1.0) * c;
  const Eigen::VectorXd spectrum = singular_spectrum(s);
  CHECK(spectrum(0) > 0.0);
  CHECK(spectrum(1) < 1e-12 * spectrum(0));
}

TEST_CASE("moving front spectrum decays far slower than the smooth family") {
  // measured across seeds on the 500-point grid: smooth reaches 99.99%
  // energy in 3 modes, the front needs 14-15
  CaseSpec smooth = default_case(CaseKind::smooth_family);
  smooth.n_snapshots = 70;
  smooth.n_dof = 500;
  smooth.seed = 3;
  CaseSpec front = default_case(CaseKind::moving_front);
  front.n_snapshots = 70;
  front.n_dof = 500;
  front.seed = 3;
  const int smooth_modes =
      modes_for_energy(singular_spectrum(generate_case(smooth).fields), 0.9999);
  const int front_modes =
      modes_for_energy(singular_spectrum(generate_case(front).fields), 0.9999);
  CHECK(smooth_modes <= 5);
  CHECK(front_modes > 13);
  CHECK(front_modes >= 3 * smooth_modes);
}

TEST_CASE("autoencoder nails a constant dataset quickly") {
  Eigen::MatrixXd s(8, 10);
  for (int j = 0; j < 10; ++j) s.col(j).setConstant(0.37);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 5000;
  cfg.target_loss = 1e-6;
  cfg.seed = 21;
  AeArchitecture arch;
  arch.hidden = {6};
  const AeModel model = ae_fit(s, 2, arch, cfg);
  CHECK(model.final_loss < 1e-6);
}

TEST_CASE("autoencoder compresses a linear two-parameter family") {
  // fields live exactly on a 2-dimensional linear subspace
  Rng rng(9);
  Eigen::VectorXd b1 = random_matrix(40, 1, 31), b2 = random_matrix(40, 1, 32);
  Eigen::MatrixXd s(40, 60);
  for (int j = 0; j < 60; ++j)
    s.col(j) = rng.uniform(-1, 1) * b1 + rng.uniform(-1, 1) * b2;
  const PodBasis pod = pod_fit(s, 2);
  CHECK(train_reconstruction_error(pod, s) < 1e-8);  // linear data: POD wins

  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.max_epochs = 6000;
  cfg.target_loss = 0.0;
  cfg.seed = 22;
  AeArchitecture arch;
  arch.hidden = {20, 10};
  const AeModel model = ae_fit(s, 2, arch, cfg);
  double num = 0.0;
  for (int j = 0; j < 60; ++j)
    num += (s.col(j) - ae_decode(model, ae_encode(model, s.col(j))))
               .squaredNorm();
  CHECK(std::sqrt(num) / s.norm() < 1e-2);
}

TEST_CASE("autoencoder honors the stop criteria") {
  Eigen::MatrixXd s = random_matrix(10, 8, 33);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 40;
  cfg.target_loss = 5e-6;
  cfg.seed = 1;
  AeArchitecture arch;
  arch.hidden = {5};
  DenseNetwork enc = make_network({10, 5, 2}, 1);
  DenseNetwork dec = make_network({2, 5, 10}, 2);
  const TrainResult result = train_autoencoder(enc, dec, s, cfg);
  CHECK(result.epochs_run <= 40);
}

TEST_CASE("ae encode/decode compose the underlying networks") {
  Eigen::MatrixXd s = random_matrix(12, 9, 41);
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = 10;
  cfg.seed = 5;
  AeArchitecture arch;
  arch.hidden = {7};
  const AeModel model = ae_fit(s, 3, arch, cfg);
  const Eigen::VectorXd x = random_matrix(12, 1, 42);
  const Eigen::VectorXd code = ae_encode(model, x);
  CHECK(code.size() == 3);
  CHECK((code - forward(model.encoder, x)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::VectorXd rec = ae_decode(model, code);
  CHECK((rec - forward(model.decoder, forward(model.encoder, x)))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("podae outer step is lossless on train data") {
  const Eigen::MatrixXd s = random_matrix(80, 15, 50);
  TrainConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.max_epochs = 800;
  cfg.seed = 6;
  AeArchitecture arch;
  arch.hidden = {12, 8};
  const PodAeModel model = podae_fit(s, 3, arch, cfg);
  CHECK(model.outer.r == 15);  // r_med = N_train

  // round-trip error equals the inner AE error on scaled coefficients
  const Eigen::MatrixXd coeffs =
      model.outer.modes.transpose() * s / model.coeff_scale;
  double ae_err = 0.0, full_err = 0.0;
  for (int j = 0; j < 15; ++j) {
    const Eigen::VectorXd c = coeffs.col(j);
    ae_err +=
        (c - ae_decode(model.inner, ae_encode(model.inner, c))).squaredNorm();
    full_err += (s.col(j) - podae_decode(model, podae_encode(model, s.col(j))))
                    .squaredNorm();
  }
  // outer basis is orthonormal, so the two errors agree up to the scale
  CHECK(std::sqrt(full_err) ==
        doctest::Approx(model.coeff_scale * std::sqrt(ae_err)).epsilon(1e-8));
}

TEST_CASE("podae with r = r_med can reach near-zero loss") {
  const Eigen::MatrixXd s = random_matrix(30, 5, 51);
  TrainConfig cfg;
  cfg.learning_rate = 5e-3;
  cfg.max_epochs = 4000;
  cfg.target_loss = 1e-8;
  cfg.seed = 7;
  AeArchitecture arch;
  arch.hidden = {10, 8};
  const PodAeModel model = podae_fit(s, 5, arch, cfg);
  CHECK(model.inner.final_loss < 1e-4);
}

TEST_CASE("podae trains faster than a raw autoencoder on a large field") {
  const int n_dof = 10000, n_train = 40, epochs = 50;
  Eigen::MatrixXd s(n_dof, n_train);
  CaseSpec spec = default_case(CaseKind::smooth_family);
  spec.n_dof = n_dof;
  for (int j = 0; j < n_train; ++j)
    s.col(j) = ground_truth(spec, 1.0 + 9.0 * j / (n_train - 1));

  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.max_epochs = epochs;
  cfg.target_loss = 0.0;
  cfg.seed = 8;
  AeArchitecture arch;
  arch.hidden = {50, 20};

  const auto t0 = std::chrono::steady_clock::now();
  podae_fit(s, 3, arch, cfg);
  const auto t1 = std::chrono::steady_clock::now();
  ae_fit(s, 3, arch, cfg);
  const auto t2 = std::chrono::steady_clock::now();
  CHECK(std::chrono::duration<double>(t1 - t0).count() <
        std::chrono::duration<double>(t2 - t1).count());
}

TEST_CASE("reduction serialization round trips") {
  const Eigen::MatrixXd s = random_matrix(12, 6, 60);
  const PodBasis pod = pod_fit(s, 3);
  const PodBasis pod2 = pod_from_json(pod_to_json(pod));
  CHECK(pod2.modes == pod.modes);
  CHECK(pod2.singular_values == pod.singular_values);

  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 3;
  AeArchitecture arch;
  arch.hidden = {5};
  const PodAeModel podae = podae_fit(s, 2, arch, cfg);
  const PodAeModel podae2 = podae_from_json(podae_to_json(podae));
  const Eigen::VectorXd x = random_matrix(12, 1, 61);
  CHECK((podae_encode(podae2, x) - podae_encode(podae, x))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}
