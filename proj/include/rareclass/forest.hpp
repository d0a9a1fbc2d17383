// Classification trees with axis-aligned splits, bagged into a random
// forest with vote-proportion probabilities and out-of-bag estimation.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rareclass/dataset.hpp"
#include "rareclass/random.hpp"

namespace rareclass {

// Flattened pre-order tree node. Interior nodes send value < threshold to
// the left child and value >= threshold to the right; leaves carry -1 in
// feature and both children. Class counts cover the bootstrap rows (with
// multiplicity) that reached the node.
struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::uint32_t n0 = 0;
  std::uint32_t n1 = 0;
  std::int32_t left = -1;
  std::int32_t right = -1;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // pre-order, root at index 0
  bool operator==(const DecisionTree&) const = default;
};

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t mtry = 0;            // 0 = floor(sqrt(p))
  std::size_t bootstrap_size = 0;  // 0 = n; drawn with replacement
  std::size_t min_node_size = 1;
  std::uint64_t master_seed = 0;
  bool operator==(const ForestConfig&) const = default;
};

struct ForestModel {
  ForestConfig config;  // resolved: mtry and bootstrap_size filled in
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;
  std::vector<std::vector<std::uint32_t>> inbag;  // per tree: count per training row
  bool operator==(const ForestModel&) const = default;
};

// 2 q (1-q) with q the positive fraction; 0 for a pure node, 0.5 at balance.
double gini(std::size_t count_neg, std::size_t count_pos);

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // size-weighted child impurity
};

// Exhaustive scan over the candidate features and every midpoint between
// consecutive distinct sorted values; empty when no candidate separates the
// rows. Ties break to the lowest feature index, then the lowest threshold.
std::optional<SplitChoice> best_split(const Dataset& data,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const std::size_t> candidate_features,
                                      std::size_t min_child_rows = 1);

// Grows one tree on a bootstrap sample (row indices with multiplicity). At
// each splittable node mtry features are drawn without replacement from the
// given stream; when none of them separates the rows the scan widens to all
// features, so every leaf is pure or covers identical feature vectors.
DecisionTree grow_tree(const Dataset& data, std::vector<std::uint32_t> rows,
                       std::size_t mtry, std::size_t min_node_size, Rng& rng);

// Bagging: n_trees trees, each on its own bootstrap sample drawn from a
// stream derived from (master_seed, tree_index) alone, so the model is a
// pure function of (data, config) whatever the thread schedule.
ForestModel fit_forest(const Dataset& data, const ForestConfig& config);

// Majority class of the leaf reached by x; a tied leaf votes positive.
int tree_vote(const DecisionTree& tree, std::span<const double> x);

// Fraction of trees voting positive.
double predict_proba(const ForestModel& model, std::span<const double> x);
std::vector<double> predict_proba(const ForestModel& model, const Dataset& data);

// 1 iff predict_proba(x) > threshold, strictly.
int predict_class(const ForestModel& model, std::span<const double> x,
                  double threshold);

// Per-row vote fraction over the trees whose bag excludes the row; empty
// when every tree trained on it. data must be the training dataset.
std::vector<std::optional<double>> oob_proba(const ForestModel& model,
                                             const Dataset& data);

// Misclassification rate of the out-of-bag majority vote (threshold 0.5)
// for each prefix of t = 1..n_trees trees, over the rows with at least one
// out-of-bag tree among the first t. A prefix covering no rows yields NaN.
std::vector<double> oob_error_curve(const ForestModel& model, const Dataset& data);

// Compact JSON: config echo, flattened pre-order node arrays, per-tree
// inbag count arrays. Streamed both ways; a full-size forest holds millions
// of nodes, far too many for a DOM round trip.
void save_forest(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace rareclass
