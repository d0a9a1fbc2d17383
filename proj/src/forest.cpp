#include "rareclass/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rareclass/error.hpp"
#include "rareclass/parallel.hpp"
#include "text_io.hpp"

namespace rareclass {
namespace {

void append_int(std::string& out, std::int64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

void append_uint(std::string& out, std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::size_t isqrt_floor(std::size_t p) {
  auto m = static_cast<std::size_t>(std::sqrt(static_cast<double>(p)));
  while (m > 0 && m * m > p) {
    --m;
  }
  while ((m + 1) * (m + 1) <= p) {
    ++m;
  }
  return m;
}

}  // namespace

double gini(std::size_t count_neg, std::size_t count_pos) {
  const std::size_t total = count_neg + count_pos;
  if (total == 0) {
    throw Error(ErrorKind::invalid_argument, "gini of an empty node");
  }
  const double q = static_cast<double>(count_pos) / static_cast<double>(total);
  return 2.0 * q * (1.0 - q);
}

std::optional<SplitChoice> best_split(const Dataset& data,
                                      std::span<const std::uint32_t> rows,
                                      std::span<const std::size_t> candidate_features,
                                      std::size_t min_child_rows) {
  const std::size_t n = rows.size();
  if (n < 2) {
    return std::nullopt;
  }
  const auto labels = data.labels();
  std::size_t total_pos = 0;
  for (const auto r : rows) {
    total_pos += static_cast<std::size_t>(labels[r]);
  }
  std::optional<SplitChoice> best;
  std::vector<std::pair<double, int>> vals;
  vals.reserve(n);
  for (const std::size_t f : candidate_features) {
    if (f >= data.cols()) {
      throw Error(ErrorKind::invalid_argument, "candidate feature index out of range");
    }
    vals.clear();
    for (const auto r : rows) {
      vals.emplace_back(data.value(r, f), labels[r]);
    }
    std::sort(vals.begin(), vals.end());
    if (vals.front().first == vals.back().first) {
      continue;  // constant on these rows
    }
    std::size_t left_n = 0;
    std::size_t left_pos = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_pos += static_cast<std::size_t>(vals[i].second);
      if (!(vals[i + 1].first > vals[i].first)) {
        continue;  // split only between distinct values
      }
      const std::size_t right_n = n - left_n;
      if (left_n < min_child_rows || right_n < min_child_rows) {
        continue;
      }
      const std::size_t right_pos = total_pos - left_pos;
      const double gl = gini(left_n - left_pos, left_pos);
      const double gr = gini(right_n - right_pos, right_pos);
      const double impurity = (static_cast<double>(left_n) * gl +
                               static_cast<double>(right_n) * gr) /
                              static_cast<double>(n);
      const double lo = vals[i].first;
      const double hi = vals[i + 1].first;
      double threshold = lo + (hi - lo) / 2.0;
      if (!(threshold > lo)) {
        threshold = hi;  // adjacent doubles; keep the left child nonempty
      }
      // Strict improvement keeps the lowest feature index and threshold.
      if (!best || impurity < best->impurity) {
        best = SplitChoice{f, threshold, impurity};
      }
    }
  }
  return best;
}

DecisionTree grow_tree(const Dataset& data, std::vector<std::uint32_t> rows,
                       std::size_t mtry, std::size_t min_node_size, Rng& rng) {
  if (rows.empty()) {
    throw Error(ErrorKind::invalid_argument, "cannot grow a tree on zero rows");
  }
  const std::size_t p = data.cols();
  if (mtry < 1 || mtry > p) {
    throw Error(ErrorKind::invalid_argument, "mtry out of range");
  }
  const auto labels = data.labels();

  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), 0);

  struct Work {
    std::vector<std::uint32_t> rows;
    std::int32_t parent;
    bool left_child;
  };
  DecisionTree tree;
  std::vector<Work> stack;
  stack.push_back({std::move(rows), -1, false});
  while (!stack.empty()) {
    Work item = std::move(stack.back());
    stack.pop_back();
    const auto idx = static_cast<std::int32_t>(tree.nodes.size());
    std::uint32_t n1 = 0;
    for (const auto r : item.rows) {
      n1 += static_cast<std::uint32_t>(labels[r]);
    }
    const auto n0 = static_cast<std::uint32_t>(item.rows.size()) - n1;
    tree.nodes.push_back(TreeNode{-1, 0.0, n0, n1, -1, -1});
    if (item.parent >= 0) {
      auto& parent = tree.nodes[static_cast<std::size_t>(item.parent)];
      (item.left_child ? parent.left : parent.right) = idx;
    }
    if (n0 == 0 || n1 == 0 || item.rows.size() < 2 ||
        item.rows.size() < 2 * min_node_size) {
      continue;
    }
    const std::vector<std::size_t> drawn = sample_without_replacement(p, mtry, rng);
    auto choice = best_split(data, item.rows, drawn, min_node_size);
    if (!choice && mtry < p) {
      // The drawn features were constant here; the leaf-purity guarantee
      // needs the full scan before giving up.
      choice = best_split(data, item.rows, all_features, min_node_size);
    }
    if (!choice) {
      continue;  // identical feature vectors with mixed labels
    }
    std::vector<std::uint32_t> left_rows;
    std::vector<std::uint32_t> right_rows;
    for (const auto r : item.rows) {
      if (data.value(r, choice->feature) < choice->threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    auto& node = tree.nodes[static_cast<std::size_t>(idx)];
    node.feature = static_cast<std::int32_t>(choice->feature);
    node.threshold = choice->threshold;
    // Right pushed first so the left subtree is laid out next (pre-order).
    stack.push_back({std::move(right_rows), idx, false});
    stack.push_back({std::move(left_rows), idx, true});
  }
  return tree;
}

ForestModel fit_forest(const Dataset& data, const ForestConfig& config) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  ForestConfig resolved = config;
  if (resolved.n_trees < 1) {
    throw Error(ErrorKind::invalid_argument, "n_trees must be at least 1");
  }
  if (resolved.mtry == 0) {
    resolved.mtry = std::max<std::size_t>(1, isqrt_floor(p));
  }
  if (resolved.mtry > p) {
    throw Error(ErrorKind::invalid_argument, "mtry exceeds the feature count");
  }
  if (resolved.bootstrap_size == 0) {
    resolved.bootstrap_size = n;
  }
  if (resolved.min_node_size < 1) {
    throw Error(ErrorKind::invalid_argument, "min_node_size must be at least 1");
  }

  ForestModel model;
  model.config = resolved;
  model.n_rows = n;
  model.n_features = p;
  model.trees.resize(resolved.n_trees);
  model.inbag.resize(resolved.n_trees);
  parallel_for_index(resolved.n_trees, [&](std::size_t t) {
    Rng rng = Rng::derive(resolved.master_seed, t);
    std::vector<std::uint32_t> rows(resolved.bootstrap_size);
    std::vector<std::uint32_t> counts(n, 0);
    for (auto& r : rows) {
      r = static_cast<std::uint32_t>(rng.uniform_index(n));
      ++counts[r];
    }
    model.trees[t] =
        grow_tree(data, std::move(rows), resolved.mtry, resolved.min_node_size, rng);
    model.inbag[t] = std::move(counts);
  });
  return model;
}

int tree_vote(const DecisionTree& tree, std::span<const double> x) {
  std::size_t idx = 0;
  while (true) {
    const TreeNode& node = tree.nodes[idx];
    if (node.is_leaf()) {
      return node.n1 >= node.n0 ? 1 : 0;
    }
    const double v = x[static_cast<std::size_t>(node.feature)];
    idx = static_cast<std::size_t>(v < node.threshold ? node.left : node.right);
  }
}

double predict_proba(const ForestModel& model, std::span<const double> x) {
  if (x.size() != model.n_features) {
    throw Error(ErrorKind::mismatch, "feature row width differs from the model");
  }
  std::size_t votes = 0;
  for (const auto& tree : model.trees) {
    votes += static_cast<std::size_t>(tree_vote(tree, x));
  }
  return static_cast<double>(votes) / static_cast<double>(model.trees.size());
}

std::vector<double> predict_proba(const ForestModel& model, const Dataset& data) {
  if (data.cols() != model.n_features) {
    throw Error(ErrorKind::mismatch, "dataset width differs from the model");
  }
  std::vector<double> out(data.rows());
  parallel_for_index(data.rows(), [&](std::size_t i) {
    out[i] = predict_proba(model, data.row(i));
  });
  return out;
}

int predict_class(const ForestModel& model, std::span<const double> x,
                  double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::domain, "decision threshold must lie in [0,1]");
  }
  return predict_proba(model, x) > threshold ? 1 : 0;
}

namespace {

void check_training_shape(const ForestModel& model, const Dataset& data) {
  if (data.rows() != model.n_rows || data.cols() != model.n_features) {
    throw Error(ErrorKind::mismatch,
                "out-of-bag estimation needs the forest's training dataset");
  }
}

}  // namespace

std::vector<std::optional<double>> oob_proba(const ForestModel& model,
                                             const Dataset& data) {
  check_training_shape(model, data);
  const std::size_t n = model.n_rows;
  std::vector<std::optional<double>> out(n);
  parallel_for_index(n, [&](std::size_t i) {
    std::size_t votes = 0;
    std::size_t cnt = 0;
    const auto x = data.row(i);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (model.inbag[t][i] == 0) {
        votes += static_cast<std::size_t>(tree_vote(model.trees[t], x));
        ++cnt;
      }
    }
    if (cnt > 0) {
      out[i] = static_cast<double>(votes) / static_cast<double>(cnt);
    }
  });
  return out;
}

std::vector<double> oob_error_curve(const ForestModel& model, const Dataset& data) {
  check_training_shape(model, data);
  const std::size_t n = model.n_rows;
  const auto labels = data.labels();
  std::vector<std::uint32_t> votes(n, 0);
  std::vector<std::uint32_t> cnt(n, 0);
  std::vector<double> curve(model.trees.size());
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (model.inbag[t][i] == 0) {
        votes[i] += static_cast<std::uint32_t>(tree_vote(model.trees[t], data.row(i)));
        ++cnt[i];
      }
    }
    std::size_t covered = 0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (cnt[i] == 0) {
        continue;
      }
      ++covered;
      const double proba = static_cast<double>(votes[i]) / static_cast<double>(cnt[i]);
      const int pred = proba > 0.5 ? 1 : 0;
      wrong += static_cast<std::size_t>(pred != labels[i]);
    }
    curve[t] = covered > 0 ? static_cast<double>(wrong) / static_cast<double>(covered)
                           : std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

void save_forest(const ForestModel& model, const std::filesystem::path& path) {
  detail::atomic_write(path, [&](std::ostream& out) {
    std::string buf;
    buf.reserve(1 << 20);
    buf += "{\"n_trees\":";
    append_uint(buf, model.config.n_trees);
    buf += ",\"mtry\":";
    append_uint(buf, model.config.mtry);
    buf += ",\"bootstrap_size\":";
    append_uint(buf, model.config.bootstrap_size);
    buf += ",\"min_node_size\":";
    append_uint(buf, model.config.min_node_size);
    buf += ",\"master_seed\":";
    append_uint(buf, model.config.master_seed);
    buf += ",\"n_rows\":";
    append_uint(buf, model.n_rows);
    buf += ",\"n_features\":";
    append_uint(buf, model.n_features);
    buf += ",\"trees\":[";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      if (t > 0) {
        buf += ',';
      }
      buf += '[';
      const auto& nodes = model.trees[t].nodes;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const TreeNode& node = nodes[i];
        if (i > 0) {
          buf += ',';
        }
        if (node.is_leaf()) {
          buf += "{\"feature\":null,\"threshold\":null,\"n0\":";
          append_uint(buf, node.n0);
          buf += ",\"n1\":";
          append_uint(buf, node.n1);
          buf += ",\"left\":null,\"right\":null}";
        } else {
          buf += "{\"feature\":";
          append_int(buf, node.feature);
          buf += ",\"threshold\":";
          buf += detail::format_double(node.threshold);
          buf += ",\"n0\":";
          append_uint(buf, node.n0);
          buf += ",\"n1\":";
          append_uint(buf, node.n1);
          buf += ",\"left\":";
          append_int(buf, node.left);
          buf += ",\"right\":";
          append_int(buf, node.right);
          buf += '}';
        }
      }
      buf += ']';
      if (buf.size() > (1 << 20)) {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
    buf += "],\"inbag\":[";
    for (std::size_t t = 0; t < model.inbag.size(); ++t) {
      if (t > 0) {
        buf += ',';
      }
      buf += '[';
      const auto& counts = model.inbag[t];
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (i > 0) {
          buf += ',';
        }
        append_uint(buf, counts[i]);
      }
      buf += ']';
      if (buf.size() > (1 << 20)) {
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        buf.clear();
      }
    }
    buf += "]}\n";
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  });
}

namespace {

// Event-driven reader for the forest document; a DOM of a full-size model
// would not fit in memory.
struct ForestSax {
  ForestModel model;
  std::uint64_t meta[7] = {0, 0, 0, 0, 0, 0, 0};
  bool meta_seen[7] = {false, false, false, false, false, false, false};
  static constexpr const char* kMetaKeys[7] = {
      "n_trees", "mtry", "bootstrap_size", "min_node_size",
      "master_seed", "n_rows", "n_features"};

  enum class Where { root, top, trees, tree, node, inbag, bag };
  std::vector<Where> stack{Where::root};
  std::string current_key;

  struct Draft {
    std::optional<std::int64_t> feature;
    std::optional<double> threshold;
    std::optional<std::int64_t> n0;
    std::optional<std::int64_t> n1;
    std::optional<std::int64_t> left;
    std::optional<std::int64_t> right;
    bool feature_null = false;
    bool threshold_null = false;
    bool left_null = false;
    bool right_null = false;
  } draft;

  [[noreturn]] static void fail(const std::string& what) {
    throw Error(ErrorKind::schema, "forest model file: " + what);
  }

  bool start_object(std::size_t) {
    switch (stack.back()) {
      case Where::root:
        stack.push_back(Where::top);
        break;
      case Where::tree:
        draft = Draft{};
        stack.push_back(Where::node);
        break;
      default:
        fail("object in an unexpected position");
    }
    return true;
  }

  bool key(std::string& k) {
    current_key = k;
    return true;
  }

  bool end_object() {
    if (stack.back() == Where::node) {
      finish_node();
    }
    stack.pop_back();
    return true;
  }

  bool start_array(std::size_t) {
    switch (stack.back()) {
      case Where::top:
        if (current_key == "trees") {
          stack.push_back(Where::trees);
        } else if (current_key == "inbag") {
          stack.push_back(Where::inbag);
        } else {
          fail("array under unexpected key \"" + current_key + "\"");
        }
        break;
      case Where::trees:
        model.trees.emplace_back();
        stack.push_back(Where::tree);
        break;
      case Where::inbag:
        model.inbag.emplace_back();
        stack.push_back(Where::bag);
        break;
      default:
        fail("array in an unexpected position");
    }
    return true;
  }

  bool end_array() {
    stack.pop_back();
    return true;
  }

  bool null() {
    if (stack.back() != Where::node) {
      fail("null outside a node object");
    }
    if (current_key == "feature") {
      draft.feature_null = true;
    } else if (current_key == "threshold") {
      draft.threshold_null = true;
    } else if (current_key == "left") {
      draft.left_null = true;
    } else if (current_key == "right") {
      draft.right_null = true;
    } else {
      fail("null under key \"" + current_key + "\"");
    }
    return true;
  }

  bool number_unsigned(std::uint64_t v) {
    if (stack.back() == Where::top) {
      for (int i = 0; i < 7; ++i) {
        if (current_key == kMetaKeys[i]) {
          meta[i] = v;
          meta_seen[i] = true;
          return true;
        }
      }
      fail("unexpected key \"" + current_key + "\"");
    }
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail("integer out of range under \"" + current_key + "\"");
    }
    return number_integer(static_cast<std::int64_t>(v));
  }

  bool number_integer(std::int64_t v) {
    switch (stack.back()) {
      case Where::node:
        if (current_key == "feature") {
          draft.feature = v;
        } else if (current_key == "threshold") {
          draft.threshold = static_cast<double>(v);
        } else if (current_key == "n0") {
          draft.n0 = v;
        } else if (current_key == "n1") {
          draft.n1 = v;
        } else if (current_key == "left") {
          draft.left = v;
        } else if (current_key == "right") {
          draft.right = v;
        } else {
          fail("unexpected node key \"" + current_key + "\"");
        }
        return true;
      case Where::bag:
        if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) {
          fail("inbag count out of range");
        }
        model.inbag.back().push_back(static_cast<std::uint32_t>(v));
        return true;
      case Where::top:
        fail("negative value under \"" + current_key + "\"");
      default:
        fail("number in an unexpected position");
    }
  }

  bool number_float(double v, const std::string&) {
    if (stack.back() == Where::node && current_key == "threshold") {
      if (!std::isfinite(v)) {
        fail("non-finite threshold");
      }
      draft.threshold = v;
      return true;
    }
    fail("unexpected floating value under \"" + current_key + "\"");
  }

  bool boolean(bool) { fail("unexpected boolean"); }
  bool string(std::string&) { fail("unexpected string"); }
  bool binary(nlohmann::json::binary_t&) { fail("unexpected binary value"); }

  bool parse_error(std::size_t, const std::string&,
                   const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::parse, std::string("forest model file: ") + ex.what());
  }

  void finish_node() {
    const bool is_leaf = draft.feature_null;
    if (is_leaf) {
      if (!draft.threshold_null || !draft.left_null || !draft.right_null ||
          draft.feature || draft.threshold || draft.left || draft.right) {
        fail("leaf node with split fields");
      }
    } else {
      if (!draft.feature || !draft.threshold || !draft.left || !draft.right ||
          draft.threshold_null || draft.left_null || draft.right_null) {
        fail("split node with missing fields");
      }
    }
    if (!draft.n0 || !draft.n1 || *draft.n0 < 0 || *draft.n1 < 0 ||
        *draft.n0 > std::numeric_limits<std::uint32_t>::max() ||
        *draft.n1 > std::numeric_limits<std::uint32_t>::max()) {
      fail("node class counts missing or out of range");
    }
    if (*draft.n0 + *draft.n1 < 1) {
      fail("empty node");
    }
    TreeNode node;
    node.n0 = static_cast<std::uint32_t>(*draft.n0);
    node.n1 = static_cast<std::uint32_t>(*draft.n1);
    if (!is_leaf) {
      node.feature = static_cast<std::int32_t>(*draft.feature);
      node.threshold = *draft.threshold;
      node.left = static_cast<std::int32_t>(*draft.left);
      node.right = static_cast<std::int32_t>(*draft.right);
      if (*draft.feature < 0 || *draft.left < 0 || *draft.right < 0 ||
          *draft.feature > std::numeric_limits<std::int32_t>::max() ||
          *draft.left > std::numeric_limits<std::int32_t>::max() ||
          *draft.right > std::numeric_limits<std::int32_t>::max()) {
        fail("node reference out of range");
      }
    }
    model.trees.back().nodes.push_back(node);
  }
};

constexpr const char* ForestSax::kMetaKeys[7];

}  // namespace

ForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, "cannot open model file: " + path.string());
  }
  ForestSax sax;
  nlohmann::json::sax_parse(in, &sax);

  for (int i = 0; i < 7; ++i) {
    if (!sax.meta_seen[i]) {
      ForestSax::fail(std::string("missing \"") + ForestSax::kMetaKeys[i] + "\"");
    }
  }
  ForestModel model = std::move(sax.model);
  model.config.n_trees = sax.meta[0];
  model.config.mtry = sax.meta[1];
  model.config.bootstrap_size = sax.meta[2];
  model.config.min_node_size = sax.meta[3];
  model.config.master_seed = sax.meta[4];
  model.n_rows = sax.meta[5];
  model.n_features = sax.meta[6];

  if (model.n_rows < 1 || model.n_features < 1) {
    ForestSax::fail("empty training shape");
  }
  if (model.config.n_trees < 1 || model.trees.size() != model.config.n_trees ||
      model.inbag.size() != model.config.n_trees) {
    ForestSax::fail("tree or inbag count differs from n_trees");
  }
  if (model.config.mtry < 1 || model.config.mtry > model.n_features ||
      model.config.min_node_size < 1 || model.config.bootstrap_size < 1) {
    ForestSax::fail("config echo out of range");
  }
  for (const auto& bag : model.inbag) {
    if (bag.size() != model.n_rows) {
      ForestSax::fail("inbag array length differs from n_rows");
    }
    std::uint64_t total = 0;
    for (const auto c : bag) {
      total += c;
    }
    if (total != model.config.bootstrap_size) {
      ForestSax::fail("inbag counts do not sum to bootstrap_size");
    }
  }
  for (const auto& tree : model.trees) {
    const auto size = static_cast<std::int64_t>(tree.nodes.size());
    if (size == 0) {
      ForestSax::fail("empty tree");
    }
    for (std::int64_t i = 0; i < size; ++i) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(i)];
      if (node.is_leaf()) {
        continue;
      }
      if (node.feature >= static_cast<std::int64_t>(model.n_features)) {
        ForestSax::fail("split feature out of range");
      }
      // Children always follow their parent in the pre-order layout.
      if (node.left <= i || node.right <= i || node.left >= size ||
          node.right >= size || node.left == node.right) {
        ForestSax::fail("node children out of order");
      }
    }
  }
  return model;
}

}  // namespace rareclass
