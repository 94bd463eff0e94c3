#include "core/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "core/rng.hpp"

namespace xma {

namespace {

struct TreeBuilder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  int min_leaf;
  std::vector<TreeNode> nodes;

  // Each node carries, per feature, its sample indices sorted by that
  // feature (ties by index). Partitioning keeps the order, so sorting
  // happens once per tree.
  int build(std::vector<std::vector<int>>& sorted) {
    const auto& any = sorted[0];
    const int n = static_cast<int>(any.size());

    double sum = 0.0, y_min = y(any[0]), y_max = y(any[0]);
    for (int idx : any) {
      sum += y(idx);
      y_min = std::min(y_min, y(idx));
      y_max = std::max(y_max, y(idx));
    }

    const auto make_leaf = [&]() {
      TreeNode leaf;
      leaf.value = y_min == y_max ? y_min : sum / n;
      nodes.push_back(leaf);
      return static_cast<int>(nodes.size()) - 1;
    };

    if (n < 2 * min_leaf || y_min == y_max) return make_leaf();

    // Best split by SSE reduction; candidates are midpoints between
    // consecutive distinct values. Ties resolve to the lowest feature
    // index, then the smallest threshold, via scan order and strict >.
    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    const double parent_score = sum * sum / n;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      const auto& order = sorted[f];
      double left_sum = 0.0;
      for (int i = 0; i + 1 < n; ++i) {
        left_sum += y(order[i]);
        const double v = x(order[i], f);
        const double v_next = x(order[i + 1], f);
        if (v == v_next) continue;
        const int n_left = i + 1, n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double gain = left_sum * left_sum / n_left +
                            right_sum * right_sum / n_right - parent_score;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = v + 0.5 * (v_next - v);
        }
      }
    }
    if (best_feature < 0) return make_leaf();

    std::vector<std::vector<int>> left(sorted.size()), right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
      for (int idx : sorted[f]) {
        if (x(idx, best_feature) <= best_threshold)
          left[f].push_back(idx);
        else
          right[f].push_back(idx);
      }
      sorted[f].clear();
      sorted[f].shrink_to_fit();
    }

    TreeNode node;
    node.feature = best_feature;
    node.threshold = best_threshold;
    nodes.push_back(node);
    const int self = static_cast<int>(nodes.size()) - 1;
    nodes[self].left = build(left);
    nodes[self].right = build(right);
    return self;
  }
};

RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<int>& samples, int min_leaf) {
  const int f = static_cast<int>(x.cols());
  std::vector<std::vector<int>> sorted(f);
  for (int c = 0; c < f; ++c) {
    sorted[c] = samples;
    std::stable_sort(sorted[c].begin(), sorted[c].end(),
                     [&](int a, int b) { return x(a, c) < x(b, c); });
  }
  TreeBuilder builder{x, y, min_leaf, {}};
  builder.build(sorted);
  RegressionTree tree;
  tree.nodes = std::move(builder.nodes);
  return tree;
}

}  // namespace

double RegressionTree::predict(const Eigen::RowVectorXd& x) const {
  int i = 0;
  while (!nodes[i].is_leaf())
    i = x(nodes[i].feature) <= nodes[i].threshold ? nodes[i].left
                                                  : nodes[i].right;
  return nodes[i].value;
}

SplitChoice best_split(const Eigen::MatrixXd& features,
                       const Eigen::VectorXd& y,
                       const std::vector<int>& sample_idx,
                       int min_samples_leaf) {
  const int n = static_cast<int>(sample_idx.size());
  SplitChoice choice;
  if (n < 2 * min_samples_leaf) return choice;
  double sum = 0.0;
  for (int idx : sample_idx) sum += y(idx);
  const double parent_score = sum * sum / n;

  for (int f = 0; f < features.cols(); ++f) {
    std::vector<int> order = sample_idx;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return features(a, f) < features(b, f);
    });
    double left_sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      left_sum += y(order[i]);
      const double v = features(order[i], f);
      const double v_next = features(order[i + 1], f);
      if (v == v_next) continue;
      const int n_left = i + 1, n_right = n - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      const double right_sum = sum - left_sum;
      const double gain = left_sum * left_sum / n_left +
                          right_sum * right_sum / n_right - parent_score;
      if (gain > choice.gain) {
        choice.gain = gain;
        choice.feature = f;
        choice.threshold = v + 0.5 * (v_next - v);
        choice.valid = true;
      }
    }
  }
  return choice;
}

Forest forest_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                  const ForestConfig& cfg) {
  const int n = static_cast<int>(features.rows());
  if (n < 2 || y.size() != n)
    throw std::invalid_argument("forest_fit: need >= 2 samples matching y");
  if (cfg.n_trees < 1 || cfg.min_samples_leaf < 1)
    throw std::invalid_argument("forest_fit: invalid config");

  Forest forest;
  forest.config = cfg;
  forest.n_features = static_cast<int>(features.cols());
  forest.trees.reserve(cfg.n_trees);
  for (int t = 0; t < cfg.n_trees; ++t) {
    std::vector<int> samples(n);
    if (cfg.bootstrap) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
      for (int i = 0; i < n; ++i)
        samples[i] = static_cast<int>(rng.uniform_int(n));
      std::sort(samples.begin(), samples.end());
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    forest.trees.push_back(
        grow_tree(features, y, samples, cfg.min_samples_leaf));
  }
  return forest;
}

double forest_predict(const Forest& forest, const Eigen::RowVectorXd& x) {
  if (x.size() != forest.n_features)
    throw std::invalid_argument("forest_predict: feature width mismatch");
  double sum = 0.0;
  for (const auto& tree : forest.trees) sum += tree.predict(x);
  return sum / static_cast<double>(forest.trees.size());
}

Eigen::VectorXd forest_predict_many(const Forest& forest,
                                    const Eigen::MatrixXd& rows) {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out(i) = forest_predict(forest, rows.row(i));
  return out;
}

nlohmann::json forest_to_json(const Forest& forest) {
  nlohmann::json j;
  j["n_trees"] = forest.config.n_trees;
  j["min_samples_leaf"] = forest.config.min_samples_leaf;
  j["bootstrap"] = forest.config.bootstrap;
  j["seed"] = forest.config.seed;
  j["n_features"] = forest.n_features;
  auto& trees = j["trees"] = nlohmann::json::array();
  for (const auto& tree : forest.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes)
      nodes.push_back({{"f", n.feature},
                       {"t", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"v", n.value}});
    trees.push_back(std::move(nodes));
  }
  return j;
}

Forest forest_from_json(const nlohmann::json& j) {
  Forest forest;
  forest.config.n_trees = j.at("n_trees").get<int>();
  forest.config.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  forest.config.bootstrap = j.at("bootstrap").get<bool>();
  forest.config.seed = j.at("seed").get<std::uint64_t>();
  forest.n_features = j.at("n_features").get<int>();
  for (const auto& tj : j.at("trees")) {
    RegressionTree tree;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at("f").get<int>();
      n.threshold = nj.at("t").get<double>();
      n.left = nj.at("l").get<int>();
      n.right = nj.at("r").get<int>();
      n.value = nj.at("v").get<double>();
      tree.nodes.push_back(n);
    }
    forest.trees.push_back(std::move(tree));
  }
  return forest;
}

}  // namespace xma
