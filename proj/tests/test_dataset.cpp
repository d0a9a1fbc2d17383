#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rareclass/dataset.hpp"
#include "rareclass/logistic.hpp"

using namespace rareclass;
using testutil::error_kind;
using testutil::error_message;
using testutil::TempDir;
using testutil::write_file;

namespace {

Dataset tiny(std::vector<double> feats, std::vector<int> labels,
             std::vector<std::string> names) {
  return Dataset(std::move(feats), std::move(labels), std::move(names), "test");
}

}  // namespace

TEST_CASE("construction validates labels, names and shape") {
  CHECK(error_kind([] { tiny({1.0, 2.0}, {0, 2}, {"a"}); }) == ErrorKind::label);
  CHECK(error_message([] { tiny({1.0, 2.0}, {0, 2}, {"a"}); }).find("row 2") !=
        std::string::npos);
  CHECK(error_kind([] { tiny({1.0}, {0}, {"cv"}); }) == ErrorKind::invalid_argument);
  CHECK(error_kind([] { tiny({1.0, 2.0}, {0}, {"a", "a"}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { tiny({1.0, 2.0, 3.0}, {0, 1}, {"a"}); }) ==
        ErrorKind::invalid_argument);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(error_kind([inf] { tiny({inf}, {0}, {"a"}); }) == ErrorKind::invalid_argument);
  CHECK(error_kind([] { tiny({}, {}, {"a"}); }) == ErrorKind::invalid_argument);
}

TEST_CASE("column lookup is by name") {
  const auto d = tiny({1.0, 2.0, 3.0, 4.0}, {0, 1}, {"alpha", "beta"});
  CHECK(d.column_index("beta") == 1u);
  CHECK(!d.column_index("gamma").has_value());
  CHECK(d.value(1, 0) == 3.0);
  CHECK(d.row(0)[1] == 2.0);
}

TEST_CASE("csv write and load round trip") {
  TempDir dir;
  const auto d = tiny({1.5, -2.25, 1e-7, 0.1, 12345.678, -0.0625}, {1, 0, 1},
                      {"temp", "slope"});
  const auto path = dir.file("d.csv");
  write_csv(d, path);
  const auto back = load_csv(path);
  CHECK(back == d);
  CHECK(back.column_names() == std::vector<std::string>{"temp", "slope"});
  // provenance differs (it carries the source path) but equality ignores it
  CHECK(back.provenance() != d.provenance());
}

TEST_CASE("csv loader reports precise coordinates") {
  TempDir dir;
  const auto p = dir.file("in.csv");

  CHECK(error_kind([&] { load_csv(dir.file("absent.csv")); }) == ErrorKind::io);

  write_file(p, "");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::schema);

  write_file(p, "a,b\n1,2\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::schema);

  write_file(p, "cv\n1\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::schema);

  write_file(p, "a,a,cv\n1,2,0\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::schema);

  write_file(p, "a,cv,cv\n1,2,0\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::schema);

  write_file(p, "a,b,cv\n1,2,0\n3,4\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::structure);
  CHECK(error_message([&] { load_csv(p); }).find("line 3") != std::string::npos);

  write_file(p, "a,b,cv\n1,2,0\n3,oops,1\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::parse);
  {
    const auto msg = error_message([&] { load_csv(p); });
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("\"b\"") != std::string::npos);
    CHECK(msg.find("oops") != std::string::npos);
  }

  write_file(p, "a,b,cv\n1,2,0\n3,4,2\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::label);
  CHECK(error_message([&] { load_csv(p); }).find("line 3") != std::string::npos);

  write_file(p, "a,b,cv\n1,2,0\n\n3,4,1\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::structure);

  write_file(p, "a,b,cv\n1,2,nan\n");
  CHECK(error_kind([&] { load_csv(p); }) == ErrorKind::parse);
}

TEST_CASE("csv loader tolerates CRLF, padding and trailing blank lines") {
  TempDir dir;
  const auto p = dir.file("in.csv");
  write_file(p, "a,cv\r\n 1.5 ,0\r\n-2 , 1\r\n\n\n");
  const auto d = load_csv(p);
  CHECK(d.rows() == 2);
  CHECK(d.value(0, 0) == 1.5);
  CHECK(d.value(1, 0) == -2.0);
  CHECK(d.labels()[1] == 1);
}

TEST_CASE("class counts") {
  const auto d = tiny({0, 0, 0, 0, 0}, {1, 0, 0, 1, 0}, {"a"});
  const auto s = class_counts(d);
  CHECK(s.n_pos == 2);
  CHECK(s.n_neg == 3);
  CHECK(s.prevalence == 0.4);
}

namespace {

// n_min positives then n_maj negatives; feature 0 holds the original row index
// so selections can be traced.
Dataset indexed(std::size_t n_min, std::size_t n_maj) {
  std::vector<double> feats;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n_min + n_maj; ++i) {
    feats.push_back(static_cast<double>(i));
    labels.push_back(i < n_min ? 1 : 0);
  }
  return Dataset(std::move(feats), std::move(labels), {"idx"}, "test");
}

}  // namespace

TEST_CASE("rebalance keeps every minority row and hits the target count") {
  const auto d = indexed(6, 100);
  const auto out = rebalance(d, {0.2, 7});

  REQUIRE(out.rows() == 36);  // 6 + round(6 / 0.2)
  const auto s = class_counts(out);
  CHECK(s.n_pos == 6);
  CHECK(s.n_neg == 30);

  // minority block first, in original order
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(out.labels()[i] == 1);
    CHECK(out.value(i, 0) == static_cast<double>(i));
  }
  // majority picks: distinct, from the majority pool, original order kept
  std::set<double> picked;
  double prev = -1.0;
  for (std::size_t i = 6; i < out.rows(); ++i) {
    const double v = out.value(i, 0);
    CHECK(out.labels()[i] == 0);
    CHECK(v >= 6.0);
    CHECK(v > prev);
    prev = v;
    picked.insert(v);
  }
  CHECK(picked.size() == 30);
}

TEST_CASE("rebalance is seed-deterministic") {
  const auto d = indexed(6, 100);
  CHECK(rebalance(d, {0.2, 7}) == rebalance(d, {0.2, 7}));
  CHECK(!(rebalance(d, {0.2, 7}) == rebalance(d, {0.2, 8})));
}

TEST_CASE("rebalance caps at the available majority") {
  const auto out = rebalance(indexed(10, 20), {0.2, 1});
  const auto s = class_counts(out);
  CHECK(s.n_pos == 10);
  CHECK(s.n_neg == 20);  // target 50 exceeds the pool, keep all
}

TEST_CASE("rebalance rounds the target to the nearest integer") {
  const auto out = rebalance(indexed(7, 100), {0.3, 1});
  CHECK(class_counts(out).n_neg == 23);  // round(7 / 0.3) = round(23.33)
}

TEST_CASE("rebalance at ratio one keeps as many negatives as positives") {
  const auto out = rebalance(indexed(12, 60), {1.0, 4});
  const auto s = class_counts(out);
  CHECK(s.n_pos == 12);
  CHECK(s.n_neg == 12);
}

TEST_CASE("rebalance argument errors") {
  const auto d = indexed(5, 20);
  CHECK(error_kind([&] { rebalance(d, {0.0, 0}); }) == ErrorKind::invalid_argument);
  CHECK(error_kind([&] { rebalance(d, {1.5, 0}); }) == ErrorKind::invalid_argument);
  const auto all_neg = tiny({1, 2, 3}, {0, 0, 0}, {"a"});
  CHECK(error_kind([&] { rebalance(all_neg, {0.2, 0}); }) == ErrorKind::degenerate);
}

TEST_CASE("synthetic generator is deterministic per seed") {
  const SynthSpec spec{500, 3, {1.0, 0.0, -1.0}, 0.4, 0.0, 11};
  const auto a = synth_generate(spec);
  const auto b = synth_generate(spec);
  CHECK(a == b);

  SynthSpec other = spec;
  other.seed = 12;
  CHECK(!(a == synth_generate(other)));
}

TEST_CASE("synthetic generator honors the prevalence target") {
  // with all-zero coefficients every row has probability sigmoid(alpha)
  const SynthSpec spec{10000, 2, {0.0, 0.0}, 0.3, 0.0, 5};
  CHECK(std::abs(sigmoid(synth_intercept(spec)) - 0.3) <= 1.0e-3);
  const auto d = synth_generate(spec);
  CHECK(std::abs(class_counts(d).prevalence - 0.3) < 0.02);
}

TEST_CASE("mislabeling flips labels, never features") {
  SynthSpec clean{10000, 2, {1.5, -1.5}, 0.5, 0.0, 9};
  SynthSpec noisy = clean;
  noisy.mislabel_rate = 0.2;
  const auto a = synth_generate(clean);
  const auto b = synth_generate(noisy);
  REQUIRE(a.rows() == b.rows());
  const auto fa = a.features();
  const auto fb = b.features();
  CHECK(std::equal(fa.begin(), fa.end(), fb.begin()));
  std::size_t flips = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    flips += a.labels()[i] != b.labels()[i];
  }
  CHECK(flips > 1800);  // Binomial(10000, 0.2), far beyond 5 sigma
  CHECK(flips < 2200);
}

TEST_CASE("synthetic generator validates its spec") {
  CHECK(error_kind([] { synth_generate({0, 2, {1, 1}, 0.5, 0.0, 0}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { synth_generate({10, 2, {1.0}, 0.5, 0.0, 0}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { synth_generate({10, 1, {1.0}, 0.0, 0.0, 0}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { synth_generate({10, 1, {1.0}, 0.5, 0.5, 0}); }) ==
        ErrorKind::invalid_argument);
  const std::vector<std::string> short_names{"only"};
  CHECK(error_kind([&] {
          synth_generate({10, 2, {1.0, 1.0}, 0.5, 0.0, 0}, &short_names);
        }) == ErrorKind::invalid_argument);
}

TEST_CASE("synthetic columns can carry custom names") {
  const std::vector<std::string> names{"left", "right"};
  const auto d = synth_generate({20, 2, {1.0, -1.0}, 0.5, 0.0, 3}, &names);
  CHECK(d.column_names() == names);
  const auto dflt = synth_generate({20, 2, {1.0, -1.0}, 0.5, 0.0, 3});
  CHECK(dflt.column_names() == std::vector<std::string>{"x1", "x2"});
  // names do not feed the stream: same values either way
  const auto fa = d.features();
  const auto fb = dflt.features();
  CHECK(std::equal(fa.begin(), fa.end(), fb.begin()));
}

TEST_CASE("canonical schema lists 41 distinct feature names") {
  const auto names = canonical_schema();
  REQUIRE(names.size() == 41);
  std::set<std::string> uniq(names.begin(), names.end());
  CHECK(uniq.size() == 41);
  CHECK(uniq.count("cv") == 0);
  CHECK(names.front() == "TsBT.0.0");
  CHECK(uniq.count("VtproT.0.0") == 1);
  // usable as synthetic column names end to end
  std::vector<std::string> vec(names.begin(), names.end());
  std::vector<double> beta(41, 0.0);
  beta[0] = 1.0;
  const auto d = synth_generate({30, 41, beta, 0.5, 0.0, 1}, &vec);
  CHECK(d.column_names().size() == 41);
  CHECK(d.column_index("SST.0.15.30").has_value());
}
