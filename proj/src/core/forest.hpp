#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

namespace xma {

// CART regression forest: variance-reduction splits on all features,
// bootstrap resampling, mean vote.
struct ForestConfig {
  int n_trees = 100;
  int min_samples_leaf = 2;
  bool bootstrap = true;
  std::uint64_t seed = 0;
  // split criterion: mse; max_features: all
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;      // leaf mean

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const Eigen::RowVectorXd& x) const;
};

struct Forest {
  std::vector<RegressionTree> trees;
  ForestConfig config;
  int n_features = 0;
};

Forest forest_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                  const ForestConfig& cfg);
double forest_predict(const Forest& forest, const Eigen::RowVectorXd& x);
Eigen::VectorXd forest_predict_many(const Forest& forest,
                                    const Eigen::MatrixXd& rows);

// Best (feature, threshold, sse_reduction) of a single node by exhaustive
// midpoint search; exposed for oracle comparison in tests.
struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;       // total SSE reduction
  bool valid = false;
};

SplitChoice best_split(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& y,
                       const std::vector<int>& sample_idx,
                       int min_samples_leaf);

nlohmann::json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& j);

}  // namespace xma
