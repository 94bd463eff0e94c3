#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace xma {

enum class SnapshotFormat { csv, json };

// Affine normalization record for one field family. A set holds a single
// field, so one shift/scale pair covers all snapshots.
struct NormSpec {
  double shift = 0.0;
  double scale = 1.0;
  bool zero_variance = false;  // scale would have been 0 and was forced to 1
  bool applied = false;        // fields currently hold normalized values
};

// Parameter vectors paired with field samples on a fixed grid. The columns
// of `fields` form the snapshot matrix S (n_dof x N).
struct SnapshotSet {
  Eigen::MatrixXd params;  // N x p
  Eigen::MatrixXd fields;  // n_dof x N
  Eigen::MatrixXd grid;    // n_dof x d
  NormSpec norm;

  int n_snapshots() const { return static_cast<int>(params.rows()); }
  int n_params() const { return static_cast<int>(params.cols()); }
  int n_dof() const { return static_cast<int>(fields.rows()); }
  int dim() const { return static_cast<int>(grid.cols()); }
};

// Disjoint, exhaustive partition of snapshot indices.
struct SplitIndices {
  std::vector<int> train, eval, test;
};

// Per-axis affine map onto [0,1]; degenerate axes map to 0.
struct AxisScaler {
  Eigen::VectorXd lo;
  Eigen::VectorXd span;  // hi - lo, zero spans replaced by 1

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

AxisScaler fit_scaler(const Eigen::MatrixXd& rows);

// CSV layout: header `p=<int>,n_dof=<int>,d=<int>`, then one row per
// snapshot holding p parameter values followed by n_dof field values.
// Grid coordinates live in a sibling file (see grid_path_for), one row of
// d values per grid point. JSON mirrors everything in a single file.
SnapshotSet load_snapshots(const std::string& path, SnapshotFormat format);
void write_snapshots(const SnapshotSet& set, const std::string& path,
                     SnapshotFormat format);
std::string grid_path_for(const std::string& csv_path);

SplitIndices split(const SnapshotSet& set, int n_train, int n_eval,
                   int n_test, std::uint64_t seed);

// Shift to zero mean and scale to unit max-abs, with statistics taken from
// the train columns only; the transform is applied to every column.
SnapshotSet normalize(const SnapshotSet& set,
                      const std::vector<int>& train_indices);
SnapshotSet denormalize(const SnapshotSet& set);

Eigen::VectorXd normalize_field(const NormSpec& norm,
                                const Eigen::VectorXd& field);
Eigen::VectorXd denormalize_field(const NormSpec& norm,
                                  const Eigen::VectorXd& field);

}  // namespace xma
