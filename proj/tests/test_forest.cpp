#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rareclass/dataset.hpp"
#include "rareclass/forest.hpp"
#include "rareclass/metrics.hpp"
#include "rareclass/parallel.hpp"
#include "rareclass/random.hpp"

using namespace rareclass;
using testutil::error_kind;
using testutil::read_file;
using testutil::TempDir;
using testutil::write_file;

namespace {

Dataset from_columns(const std::vector<std::vector<double>>& cols,
                     std::vector<int> labels, std::vector<std::string> names) {
  const std::size_t n = labels.size();
  const std::size_t p = cols.size();
  std::vector<double> feats(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      feats[i * p + j] = cols[j][i];
    }
  }
  return Dataset(std::move(feats), std::move(labels), std::move(names), "test");
}

std::vector<std::uint32_t> all_rows(const Dataset& d) {
  std::vector<std::uint32_t> rows(d.rows());
  std::iota(rows.begin(), rows.end(), 0u);
  return rows;
}

// Index of the leaf x lands in, following the strict less-than routing.
std::size_t leaf_of(const DecisionTree& tree, std::span<const double> x) {
  std::size_t at = 0;
  while (!tree.nodes[at].is_leaf()) {
    const auto& n = tree.nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold
                                      ? n.left
                                      : n.right);
  }
  return at;
}

}  // namespace

TEST_CASE("gini impurity") {
  CHECK(gini(2, 2) == 0.5);
  CHECK(gini(3, 1) == 0.375);
  CHECK(gini(5, 0) == 0.0);
  CHECK(gini(0, 4) == 0.0);
  CHECK(error_kind([] { gini(0, 0); }) == ErrorKind::invalid_argument);
}

TEST_CASE("best split scans midpoints between distinct values") {
  const auto d = from_columns({{1, 2, 3, 4}}, {0, 0, 1, 1}, {"a"});
  const std::size_t feats[] = {0};
  const auto rows = all_rows(d);
  const auto s = best_split(d, rows, feats);
  REQUIRE(s.has_value());
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->impurity == 0.0);
}

TEST_CASE("equal-impurity splits keep the lowest threshold") {
  const auto d = from_columns({{1, 2, 3, 4}}, {0, 1, 0, 1}, {"a"});
  const std::size_t feats[] = {0};
  const auto s = best_split(d, all_rows(d), feats);
  REQUIRE(s.has_value());
  // cuts at 1.5 and 3.5 tie; the first one wins
  CHECK(s->threshold == 1.5);
  CHECK(s->impurity == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("equal-impurity features keep the lowest index") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto d = from_columns({v, v}, {0, 0, 1, 1}, {"a", "b"});
  const std::size_t feats[] = {0, 1};
  const auto s = best_split(d, all_rows(d), feats);
  REQUIRE(s.has_value());
  CHECK(s->feature == 0);
}

TEST_CASE("a constant candidate yields no split") {
  const auto d = from_columns({{7, 7, 7}}, {0, 1, 0}, {"a"});
  const std::size_t feats[] = {0};
  CHECK(!best_split(d, all_rows(d), feats).has_value());
}

TEST_CASE("min child rows constrains the cut points") {
  const auto d = from_columns({{1, 2, 3, 4, 5, 6}}, {1, 0, 0, 0, 0, 0}, {"a"});
  const std::size_t feats[] = {0};
  const auto s = best_split(d, all_rows(d), feats, 2);
  REQUIRE(s.has_value());
  // the pure cut at 1.5 would leave a single row; 2.5 is the best legal one
  CHECK(s->threshold == 2.5);
}

TEST_CASE("routing is strictly less-than on the threshold") {
  DecisionTree t;
  t.nodes.push_back(TreeNode{0, 0.5, 1, 1, 1, 2});
  t.nodes.push_back(TreeNode{-1, 0.0, 1, 0, -1, -1});  // left leaf, votes 0
  t.nodes.push_back(TreeNode{-1, 0.0, 0, 1, -1, -1});  // right leaf, votes 1
  const double below[] = {0.49};
  const double at[] = {0.5};
  const double above[] = {0.51};
  CHECK(tree_vote(t, below) == 0);
  CHECK(tree_vote(t, at) == 1);  // boundary value goes right
  CHECK(tree_vote(t, above) == 1);
}

TEST_CASE("a tied leaf votes positive") {
  DecisionTree t;
  t.nodes.push_back(TreeNode{-1, 0.0, 2, 2, -1, -1});
  const double x[] = {0.0};
  CHECK(tree_vote(t, x) == 1);
}

TEST_CASE("grown leaves are pure or sit on identical feature vectors") {
  // 2-decimal features plus four contradictory duplicate rows
  Rng rng(41);
  std::vector<std::vector<double>> cols(3, std::vector<double>(44));
  std::vector<int> labels(44);
  for (std::size_t i = 0; i < 40; ++i) {
    for (auto& c : cols) {
      c[i] = std::round(rng.normal() * 100.0) / 100.0;
    }
    labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  for (std::size_t k = 0; k < 4; ++k) {
    for (auto& c : cols) {
      c[40 + k] = c[k];
    }
    labels[40 + k] = 1 - labels[k];
  }
  const auto d = from_columns(cols, labels, {"a", "b", "c"});

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Rng stream(seed);
    const auto tree = grow_tree(d, all_rows(d), 1, 1, stream);
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < d.rows(); ++i) {
      groups[leaf_of(tree, d.row(i))].push_back(i);
    }
    for (const auto& [leaf, members] : groups) {
      bool pure = true;
      bool identical = true;
      for (const std::size_t i : members) {
        pure = pure && labels[i] == labels[members[0]];
        const auto a = d.row(i);
        const auto b = d.row(members[0]);
        identical = identical && std::equal(a.begin(), a.end(), b.begin());
      }
      CHECK((pure || identical));
    }
  }
}

TEST_CASE("node counts add up through the tree") {
  const auto d = synth_generate({200, 4, {1.0, -1.0, 0.5, 0.0}, 0.4, 0.05, 6});
  Rng stream(9);
  const auto tree = grow_tree(d, all_rows(d), 2, 1, stream);
  const auto& nodes = tree.nodes;
  REQUIRE(!nodes.empty());
  CHECK(nodes[0].n0 + nodes[0].n1 == 200);
  for (const auto& n : nodes) {
    if (n.is_leaf()) {
      CHECK(n.n0 + n.n1 >= 1);
      continue;
    }
    const auto& l = nodes[static_cast<std::size_t>(n.left)];
    const auto& r = nodes[static_cast<std::size_t>(n.right)];
    CHECK(l.n0 + r.n0 == n.n0);
    CHECK(l.n1 + r.n1 == n.n1);
    CHECK(l.n0 + l.n1 >= 1);
    CHECK(r.n0 + r.n1 >= 1);
  }
}

TEST_CASE("a constant draw falls back to the full feature scan") {
  // feature a never separates anything; with mtry 1 half the draws pick it
  std::vector<double> constant(10, 1.0);
  std::vector<double> ramp(10);
  std::iota(ramp.begin(), ramp.end(), 0.0);
  const auto d =
      from_columns({constant, ramp}, {0, 0, 0, 0, 0, 1, 1, 1, 1, 1}, {"a", "b"});
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng stream(seed);
    const auto tree = grow_tree(d, all_rows(d), 1, 1, stream);
    for (std::size_t i = 0; i < d.rows(); ++i) {
      CHECK(tree_vote(tree, d.row(i)) == d.labels()[i]);
    }
  }
}

TEST_CASE("min node size stops growth early") {
  const auto d = synth_generate({300, 3, {1.5, -1.5, 0.0}, 0.5, 0.1, 8});
  Rng s1(3);
  const auto deep = grow_tree(d, all_rows(d), 1, 1, s1);
  Rng s2(3);
  const auto shallow = grow_tree(d, all_rows(d), 1, 40, s2);
  CHECK(shallow.nodes.size() < deep.nodes.size());
  for (const auto& n : shallow.nodes) {
    if (!n.is_leaf()) {
      const auto& l = shallow.nodes[static_cast<std::size_t>(n.left)];
      const auto& r = shallow.nodes[static_cast<std::size_t>(n.right)];
      CHECK(l.n0 + l.n1 >= 40);
      CHECK(r.n0 + r.n1 >= 40);
    }
  }
}

TEST_CASE("fit resolves defaulted config fields") {
  const auto d = synth_generate({80, 9, std::vector<double>(9, 0.3), 0.5, 0.0, 4});
  const auto model = fit_forest(d, {10, 0, 0, 1, 77});
  CHECK(model.config.mtry == 3);  // floor(sqrt(9))
  CHECK(model.config.bootstrap_size == 80);
  CHECK(model.config.n_trees == 10);
  CHECK(model.n_rows == 80);
  CHECK(model.n_features == 9);
  CHECK(model.trees.size() == 10);
  CHECK(model.inbag.size() == 10);
  for (const auto& bag : model.inbag) {
    CHECK(std::accumulate(bag.begin(), bag.end(), 0u) == 80u);
  }
}

TEST_CASE("fit validates its config") {
  const auto d = synth_generate({30, 2, {1.0, 0.0}, 0.5, 0.0, 4});
  CHECK(error_kind([&] { fit_forest(d, {0, 0, 0, 1, 0}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([&] { fit_forest(d, {5, 3, 0, 1, 0}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([&] { fit_forest(d, {5, 0, 0, 0, 0}); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("a bootstrap sample leaves about a third of rows out") {
  const auto d = synth_generate({10000, 2, {1.0, -1.0}, 0.5, 0.0, 12});
  const auto model = fit_forest(d, {1, 0, 0, 1, 5});
  std::size_t excluded = 0;
  for (const auto c : model.inbag[0]) {
    excluded += c == 0;
  }
  const double fraction = static_cast<double>(excluded) / 10000.0;
  CHECK(fraction > 0.348);  // e^-1 = 0.3679
  CHECK(fraction < 0.388);
}

TEST_CASE("the model is a pure function of data and config") {
  const auto d = synth_generate({400, 5, {2.0, 0.0, -2.0, 0.0, 1.0}, 0.3, 0.05, 19});
  const ForestConfig cfg{25, 0, 0, 1, 3};

  set_max_threads(1);
  const auto seq = fit_forest(d, cfg);
  set_max_threads(4);
  const auto par = fit_forest(d, cfg);
  set_max_threads(0);
  CHECK(seq == par);

  TempDir dir;
  save_forest(seq, dir.file("a.json"));
  save_forest(par, dir.file("b.json"));
  CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));

  // a different seed grows a different forest
  ForestConfig other = cfg;
  other.master_seed = 4;
  CHECK(!(fit_forest(d, other) == seq));
}

TEST_CASE("save and load round trip the whole model") {
  TempDir dir;
  const auto d = synth_generate({120, 3, {1.0, 0.0, -1.0}, 0.4, 0.0, 15});
  const auto model = fit_forest(d, {12, 1, 0, 2, 8});
  const auto path = dir.file("forest.json");
  save_forest(model, path);
  const auto back = load_forest(path);
  CHECK(back == model);
  // predictions agree bit for bit
  const auto p1 = predict_proba(model, d);
  const auto p2 = predict_proba(back, d);
  CHECK(p1 == p2);
}

TEST_CASE("forest loading failure taxonomy") {
  TempDir dir;
  CHECK(error_kind([&] { load_forest(dir.file("absent.json")); }) == ErrorKind::io);
  const auto garbled = dir.file("g.json");
  write_file(garbled, "oops [1, 2");
  CHECK(error_kind([&] { load_forest(garbled); }) == ErrorKind::parse);
  const auto wrong = dir.file("w.json");
  write_file(wrong, "{\"intercept\": 0.0, \"coefficients\": {}}");
  CHECK(error_kind([&] { load_forest(wrong); }) == ErrorKind::schema);
  // a well formed token stream in the wrong shape is a schema error even
  // when the text turns invalid later
  const auto shape = dir.file("s.json");
  write_file(shape, "[1, 2, oops");
  CHECK(error_kind([&] { load_forest(shape); }) == ErrorKind::schema);
  const auto truncated = dir.file("t.json");
  write_file(truncated, "{\"n_trees\": 2, \"mtry\": 1,");
  CHECK(error_kind([&] { load_forest(truncated); }) == ErrorKind::parse);
}

TEST_CASE("prediction checks the feature width") {
  const auto d = synth_generate({60, 3, {1.0, 0.0, 0.0}, 0.5, 0.0, 2});
  const auto model = fit_forest(d, {5, 0, 0, 1, 1});
  const auto narrow = synth_generate({10, 2, {1.0, 0.0}, 0.5, 0.0, 2});
  CHECK(error_kind([&] { predict_proba(model, narrow); }) == ErrorKind::mismatch);
  const double x[] = {0.1, 0.2};
  CHECK(error_kind([&] { predict_proba(model, std::span<const double>(x)); }) ==
        ErrorKind::mismatch);
}

TEST_CASE("vote proportions and the strict class cut") {
  ForestModel m;
  m.config = {2, 1, 2, 1, 0};
  m.n_rows = 2;
  m.n_features = 1;
  DecisionTree yes;
  yes.nodes.push_back(TreeNode{-1, 0.0, 0, 2, -1, -1});
  DecisionTree no;
  no.nodes.push_back(TreeNode{-1, 0.0, 2, 0, -1, -1});
  m.trees = {yes, no};
  m.inbag = {{1, 1}, {1, 1}};
  const double x[] = {0.0};
  CHECK(predict_proba(m, x) == 0.5);
  CHECK(predict_class(m, x, 0.5) == 0);   // strictly greater only
  CHECK(predict_class(m, x, 0.49) == 1);
  CHECK(error_kind([&] { predict_class(m, x, 1.5); }) == ErrorKind::domain);
}

TEST_CASE("out-of-bag estimates cover exactly the excluded rows") {
  const auto d = synth_generate({150, 3, {1.5, 0.0, -1.5}, 0.4, 0.0, 33});
  const auto model = fit_forest(d, {8, 0, 0, 1, 6});
  const auto oob = oob_proba(model, d);
  REQUIRE(oob.size() == 150);
  for (std::size_t i = 0; i < oob.size(); ++i) {
    bool excluded_somewhere = false;
    for (const auto& bag : model.inbag) {
      excluded_somewhere = excluded_somewhere || bag[i] == 0;
    }
    CHECK(oob[i].has_value() == excluded_somewhere);
    if (oob[i]) {
      CHECK(*oob[i] >= 0.0);
      CHECK(*oob[i] <= 1.0);
    }
  }
}

TEST_CASE("the error curve tracks prefix majority votes") {
  const auto d = synth_generate({250, 4, {2.0, -2.0, 0.0, 0.0}, 0.5, 0.05, 27});
  const auto model = fit_forest(d, {20, 0, 0, 1, 14});
  const auto curve = oob_error_curve(model, d);
  REQUIRE(curve.size() == 20);
  for (const double e : curve) {
    if (!std::isnan(e)) {
      CHECK(e >= 0.0);
      CHECK(e <= 1.0);
    }
  }
  // final entry equals the full out-of-bag vote recomputed directly
  const auto oob = oob_proba(model, d);
  std::size_t covered = 0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < oob.size(); ++i) {
    if (!oob[i]) {
      continue;
    }
    ++covered;
    const int pred = *oob[i] > 0.5 ? 1 : 0;
    wrong += pred != d.labels()[i];
  }
  REQUIRE(covered > 0);
  CHECK(curve.back() ==
        static_cast<double>(wrong) / static_cast<double>(covered));
}

TEST_CASE("monotone feature transforms leave the votes unchanged") {
  Rng rng(55);
  const std::size_t n = 120;
  std::vector<std::vector<double>> cols(3, std::vector<double>(n));
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : cols) {
      c[i] = std::round(rng.normal() * 100.0) / 100.0;
    }
    labels[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-2.0 * cols[0][i]))) ? 1 : 0;
  }
  const auto d = from_columns(cols, labels, {"a", "b", "c"});

  auto cubed = cols;
  for (auto& c : cubed) {
    for (auto& v : c) {
      v = v * v * v;
    }
  }
  const auto dt = from_columns(cubed, labels, {"a", "b", "c"});

  const ForestConfig cfg{12, 1, 0, 1, 7};
  const auto m1 = fit_forest(d, cfg);
  const auto m2 = fit_forest(dt, cfg);
  CHECK(m1.inbag == m2.inbag);
  REQUIRE(m1.trees.size() == m2.trees.size());
  for (std::size_t t = 0; t < m1.trees.size(); ++t) {
    const auto& a = m1.trees[t].nodes;
    const auto& b = m2.trees[t].nodes;
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].feature == b[k].feature);
      CHECK(a[k].n0 == b[k].n0);
      CHECK(a[k].n1 == b[k].n1);
    }
  }

  // each bagged row lands in the same leaf; rows outside a node's bag can
  // fall inside the split gap, where midpoints are not transform covariant
  auto leaf_of = [](const DecisionTree& tree, std::span<const double> row) {
    std::int32_t at = 0;
    while (!tree.nodes[at].is_leaf()) {
      const auto& nd = tree.nodes[at];
      at = row[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left
                                                                    : nd.right;
    }
    return at;
  };
  for (std::size_t t = 0; t < m1.trees.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (m1.inbag[t][i] == 0) {
        continue;
      }
      CHECK(leaf_of(m1.trees[t], d.row(i)) == leaf_of(m2.trees[t], dt.row(i)));
    }
  }
}
