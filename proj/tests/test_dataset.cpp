#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "core/bench.hpp"
#include "core/dataset.hpp"
#include "core/rng.hpp"

using namespace xma;

namespace {

SnapshotSet tiny_set() {
  SnapshotSet set;
  set.params.resize(3, 1);
  set.params << 1.0, 2.0, 3.0;
  set.fields.resize(5, 3);
  set.fields << 0.1, 0.2, 0.3,
                1.1, 1.2, 1.3,
                2.1, 2.2, 2.3,
                3.1, 3.2, 3.3,
                4.1, 4.2, 4.3;
  set.grid.resize(5, 1);
  set.grid << 0.0, 0.25, 0.5, 0.75, 1.0;
  return set;
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("xma_test_" + std::to_string(std::rand()) +
            std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("csv schema round trip keeps counts") {
  TempDir tmp;
  const SnapshotSet set = tiny_set();
  write_snapshots(set, tmp.file("snap.csv"), SnapshotFormat::csv);
  const SnapshotSet loaded =
      load_snapshots(tmp.file("snap.csv"), SnapshotFormat::csv);
  CHECK(loaded.n_snapshots() == 3);
  CHECK(loaded.n_dof() == 5);
  CHECK(loaded.n_params() == 1);
  CHECK(loaded.dim() == 1);
}

TEST_CASE("csv and json round trips are bit exact") {
  TempDir tmp;
  SnapshotSet set = tiny_set();
  // awkward values that expose lossy serialization
  set.fields(0, 0) = 1.0 / 3.0;
  set.fields(4, 2) = 1e-17;
  set.params(1, 0) = 0.1 + 0.2;

  write_snapshots(set, tmp.file("snap.csv"), SnapshotFormat::csv);
  const SnapshotSet csv =
      load_snapshots(tmp.file("snap.csv"), SnapshotFormat::csv);
  CHECK(csv.fields == set.fields);
  CHECK(csv.params == set.params);
  CHECK(csv.grid == set.grid);

  write_snapshots(set, tmp.file("snap.json"), SnapshotFormat::json);
  const SnapshotSet json =
      load_snapshots(tmp.file("snap.json"), SnapshotFormat::json);
  CHECK(json.fields == set.fields);
  CHECK(json.params == set.params);
  CHECK(json.grid == set.grid);
}

TEST_CASE("ragged row errors name the offending row") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.csv"));
    out << "p=1,n_dof=3,d=1\n";
    out << "1,0.1,0.2,0.3\n";
    out << "2,0.1,0.2,0.3,0.4\n";
  }
  {
    std::ofstream gout(tmp.file("bad.grid.csv"));
    gout << "0\n0.5\n1\n";
  }
  CHECK_THROWS_WITH_AS(load_snapshots(tmp.file("bad.csv"), SnapshotFormat::csv),
                       doctest::Contains("row 2"), std::runtime_error);
}

TEST_CASE("non-numeric entry is rejected") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.csv"));
    out << "p=1,n_dof=2,d=1\n";
    out << "1,0.1,oops\n";
  }
  {
    std::ofstream gout(tmp.file("bad.grid.csv"));
    gout << "0\n1\n";
  }
  CHECK_THROWS_WITH_AS(load_snapshots(tmp.file("bad.csv"), SnapshotFormat::csv),
                       doctest::Contains("non-numeric"), std::runtime_error);
}

TEST_CASE("empty file is rejected") {
  TempDir tmp;
  { std::ofstream out(tmp.file("empty.csv")); }
  CHECK_THROWS_AS(load_snapshots(tmp.file("empty.csv"), SnapshotFormat::csv),
                  std::runtime_error);
}

TEST_CASE("split produces a seeded partition") {
  CaseSpec spec = default_case(CaseKind::smooth_family);
  spec.n_snapshots = 100;
  spec.n_dof = 20;
  const SnapshotSet set = generate_case(spec);

  const SplitIndices s = split(set, 70, 20, 10, 0);
  CHECK(s.train.size() == 70);
  CHECK(s.eval.size() == 20);
  CHECK(s.test.size() == 10);

  std::set<int> all;
  for (int i : s.train) all.insert(i);
  for (int i : s.eval) all.insert(i);
  for (int i : s.test) all.insert(i);
  CHECK(all.size() == 100);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 99);

  const SplitIndices again = split(set, 70, 20, 10, 0);
  CHECK(again.train == s.train);
  CHECK(again.eval == s.eval);
  CHECK(again.test == s.test);

  const SplitIndices other = split(set, 70, 20, 10, 1);
  CHECK(other.train != s.train);
}

TEST_CASE("degenerate split puts everything in train") {
  const SnapshotSet set = tiny_set();
  const SplitIndices s = split(set, 3, 0, 0, 42);
  CHECK(s.train == std::vector<int>{0, 1, 2});
  CHECK(s.eval.empty());
  CHECK(s.test.empty());
}

TEST_CASE("split rejects counts that do not sum") {
  const SnapshotSet set = tiny_set();
  CHECK_THROWS_AS(split(set, 2, 0, 0, 0), std::invalid_argument);
}

TEST_CASE("normalize handles a constant field") {
  SnapshotSet set = tiny_set();
  set.fields.setConstant(5.0);
  const SnapshotSet normed = normalize(set, {0, 1, 2});
  CHECK(normed.norm.zero_variance);
  CHECK(normed.norm.scale == 1.0);
  CHECK(normed.fields.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("normalized train columns live in [-1, 1]") {
  SnapshotSet set = tiny_set();
  set.fields.setRandom();  // in [-1,1]
  set.fields = set.fields * 2.0 - Eigen::MatrixXd::Constant(5, 3, 1.0);
  const SnapshotSet normed = normalize(set, {0, 1, 2});
  CHECK(normed.fields.maxCoeff() <= 1.0 + 1e-15);
  CHECK(normed.fields.minCoeff() >= -1.0 - 1e-15);
}

TEST_CASE("normalization statistics come from the train split only") {
  SnapshotSet set = tiny_set();
  const SnapshotSet base = normalize(set, {0, 1});
  set.fields.col(2).setConstant(1e6);  // held-out outlier
  const SnapshotSet poked = normalize(set, {0, 1});
  CHECK(base.norm.shift == poked.norm.shift);
  CHECK(base.norm.scale == poked.norm.scale);
  // the outlier column itself maps outside [-1,1], which is expected
  CHECK(poked.fields.col(2).maxCoeff() > 1.0);
}

TEST_CASE("normalize/denormalize round trip within 1e-12") {
  Rng rng(7);
  SnapshotSet set;
  set.params.resize(4, 2);
  set.fields.resize(30, 4);
  set.grid.resize(30, 1);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) set.params(i, j) = rng.uniform(-5, 5);
  for (int i = 0; i < 30; ++i) {
    set.grid(i, 0) = i / 29.0;
    for (int j = 0; j < 4; ++j) set.fields(i, j) = rng.uniform(-300, 40);
  }
  const SnapshotSet round = denormalize(normalize(set, {0, 2}));
  const double scale = set.fields.cwiseAbs().maxCoeff();
  CHECK((round.fields - set.fields).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("axis scaler maps train box onto the unit box") {
  Eigen::MatrixXd rows(3, 2);
  rows << 1.0, -2.0,
          3.0, -2.0,
          2.0, -2.0;
  const AxisScaler scaler = fit_scaler(rows);
  const Eigen::MatrixXd scaled = scaler.apply_rows(rows);
  CHECK(scaled.col(0).minCoeff() == 0.0);
  CHECK(scaled.col(0).maxCoeff() == 1.0);
  // degenerate axis maps to zero
  CHECK(scaled.col(1).cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd probe(2);
  probe << 2.0, -2.0;
  CHECK(scaler.apply(probe)(0) == doctest::Approx(0.5));
}
