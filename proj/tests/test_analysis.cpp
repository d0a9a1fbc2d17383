#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rareclass/analysis.hpp"
#include "rareclass/metrics.hpp"
#include "rareclass/random.hpp"

using namespace rareclass;
using testutil::error_kind;
using testutil::error_message;

namespace {

double trapezoid(const DensityEstimate& est) {
  double acc = 0.0;
  for (std::size_t k = 1; k < est.grid.size(); ++k) {
    acc += (est.values[k] + est.values[k - 1]) / 2.0 *
           (est.grid[k] - est.grid[k - 1]);
  }
  return acc;
}

}  // namespace

TEST_CASE("kernel density matches an external computation") {
  const std::vector<double> vals{0.12, 0.31, 0.05, 0.44, 0.27, 0.63,
                                 0.18, 0.09, 0.36, 0.51, 0.22, 0.40};
  const auto est = kde(vals);
  REQUIRE(est.grid.size() == 512);
  REQUIRE(est.values.size() == 512);
  CHECK(std::abs(est.bandwidth - 0.097241980308407125) < 1e-15);
  CHECK(std::abs(est.grid.front() - -0.24172594092522137) < 1e-12);
  CHECK(std::abs(est.grid.back() - 0.92172594092522142) < 1e-12);
  CHECK(std::abs(est.values[0] - 0.0051849590012627766) < 1e-12);
  CHECK(std::abs(est.values[100] - 0.67225685308459948) < 1e-12);
  CHECK(std::abs(est.values[255] - 1.7794887292446639) < 1e-12);
  CHECK(std::abs(est.values[511] - 0.00384352914648668) < 1e-12);
  CHECK(std::abs(trapezoid(est) - 0.99973796819502636) < 1e-10);
}

TEST_CASE("density mass stays near one") {
  Rng rng(61);
  std::vector<double> vals(1000);
  for (auto& v : vals) {
    v = rng.uniform01();
  }
  const auto est = kde(vals);
  const double mass = trapezoid(est);
  CHECK(mass > 0.98);
  CHECK(mass < 1.02);
  for (const double v : est.values) {
    CHECK(v >= 0.0);
  }
  for (std::size_t k = 1; k < est.grid.size(); ++k) {
    CHECK(est.grid[k] > est.grid[k - 1]);
  }
}

TEST_CASE("density inherits the data's symmetry") {
  const std::vector<double> vals{0.1, 0.2, 0.3, 0.7, 0.8, 0.9};
  const auto est = kde(vals);
  const std::size_t n = est.values.size();
  for (std::size_t k = 0; k < n / 2; ++k) {
    CHECK(std::abs(est.values[k] - est.values[n - 1 - k]) < 1e-10);
  }
}

TEST_CASE("density is invariant under input permutation") {
  const std::vector<double> a{0.4, 0.1, 0.9, 0.3, 0.6, 0.2};
  std::vector<double> b = a;
  std::reverse(b.begin(), b.end());
  const auto ea = kde(a);
  const auto eb = kde(b);
  CHECK(ea.bandwidth == eb.bandwidth);
  CHECK(ea.grid == eb.grid);
  CHECK(ea.values == eb.values);
}

TEST_CASE("two clusters make two humps") {
  std::vector<double> vals;
  for (int k = 0; k < 7; ++k) {
    vals.push_back(0.10 + 0.005 * k);
    vals.push_back(0.90 - 0.005 * k);
  }
  const auto est = kde(vals);
  auto value_near = [&](double x) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < est.grid.size(); ++k) {
      if (std::abs(est.grid[k] - x) < std::abs(est.grid[best] - x)) {
        best = k;
      }
    }
    return est.values[best];
  };
  CHECK(value_near(0.11) > 2.0 * value_near(0.5));
  CHECK(value_near(0.89) > 2.0 * value_near(0.5));
}

TEST_CASE("a collapsed interquartile range falls back to the deviation") {
  // seven identical central values pinch the IQR to zero
  const std::vector<double> vals{0.1, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.9};
  const auto est = kde(vals);
  const double sd = 0.2;  // mean 0.5, ss = 2 * 0.16, n-1 = 8
  CHECK(est.bandwidth ==
        doctest::Approx(0.9 * sd * std::pow(9.0, -0.2)).epsilon(1e-12));
}

TEST_CASE("density estimation failure modes") {
  const std::vector<double> single{0.5};
  CHECK(error_kind([&] { kde(single); }) == ErrorKind::degenerate);
  const std::vector<double> tied{0.5, 0.5, 0.5};
  CHECK(error_kind([&] { kde(tied); }) == ErrorKind::degenerate);
  const std::vector<double> with_nan{0.1, std::nan(""), 0.3};
  CHECK(error_kind([&] { kde(with_nan); }) == ErrorKind::domain);
  const std::vector<double> fine{0.1, 0.9};
  CHECK(error_kind([&] { kde(fine, 1); }) == ErrorKind::invalid_argument);
}

TEST_CASE("class densities split by label and name the failing class") {
  const std::vector<double> probs{0.1, 0.3, 0.5, 0.8, 0.6, 0.2};
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const auto [pos, neg] = class_densities(probs, labels);
  const std::vector<double> pos_vals{0.8, 0.6, 0.2};
  const std::vector<double> neg_vals{0.1, 0.3, 0.5};
  CHECK(pos.bandwidth == kde(pos_vals).bandwidth);
  CHECK(pos.values == kde(pos_vals).values);
  CHECK(neg.bandwidth == kde(neg_vals).bandwidth);

  // the tied class is named in the failure
  const std::vector<double> flat{0.4, 0.4, 0.4, 0.1, 0.2, 0.9};
  const auto msg = error_message([&] { class_densities(flat, labels); });
  CHECK(msg.find("class 0") != std::string::npos);
}

TEST_CASE("histogram bins close on the left edges") {
  const std::vector<double> probs{0.0, 0.2, 0.21, 0.5, 0.51, 1.0, 0.05, 0.35};
  const std::vector<int> labels{1, 1, 1, 1, 1, 1, 0, 0};
  const auto h = histogram_triptych(probs, labels);
  CHECK(h.pos_counts[0] == 2);  // 0.0 and 0.2
  CHECK(h.pos_counts[1] == 2);  // 0.21 and 0.5
  CHECK(h.pos_counts[2] == 2);  // 0.51 and 1.0
  CHECK(h.neg_counts[0] == 1);
  CHECK(h.neg_counts[1] == 1);
  CHECK(h.neg_counts[2] == 0);
  CHECK(kTriptychEdges[1] == 0.2);
  CHECK(kTriptychEdges[2] == 0.5);
}

TEST_CASE("rescaling hits its anchor points") {
  CHECK(rescale_phi(0.0) == 0.0);
  CHECK(std::abs(rescale_phi(0.25) - 0.2) < 1e-12);
  CHECK(std::abs(rescale_phi(0.5) - 0.5) < 1e-12);
  CHECK(std::abs(rescale_phi(0.75) - 0.874875) < 1e-12);
  CHECK(rescale_phi(1.0) == 1.0);
}

TEST_CASE("rescaling is strictly increasing") {
  double prev = rescale_phi(0.0);
  for (int k = 1; k <= 10000; ++k) {
    const double x = static_cast<double>(k) / 10000.0;
    const double y = rescale_phi(x);
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("rescaling preserves order statistics") {
  Rng rng(71);
  std::vector<double> probs(400);
  std::vector<double> mapped(400);
  std::vector<int> labels(400);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = rng.uniform01();
    mapped[i] = rescale_phi(probs[i]);
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    const double raw = probs[i] - probs[i - 1];
    const double img = mapped[i] - mapped[i - 1];
    CHECK(std::signbit(raw) == std::signbit(img));
  }
  CHECK(roc(mapped, labels).auc == roc(probs, labels).auc);
  CHECK(kendall_paired(probs, mapped).tau == 1.0);
}

TEST_CASE("rescaling validates domain and anchors") {
  CHECK(error_kind([] { rescale_phi(-0.1); }) == ErrorKind::domain);
  CHECK(error_kind([] { rescale_phi(1.1); }) == ErrorKind::domain);
  CHECK(error_kind([] { rescale_phi(0.5, {0.0, 1e-3}); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([] { rescale_phi(0.5, {0.6, 1.5}); }) ==
        ErrorKind::invalid_argument);
}

TEST_CASE("rank concordance matches external values, no ties") {
  const std::vector<double> a{0.1, 0.9, 0.4, 0.7, 0.2, 0.95, 0.5};
  const std::vector<double> b{0.3, 0.8, 0.2, 0.9, 0.1, 0.7, 0.6};
  const auto r = kendall_paired(a, b);
  CHECK(r.n == 7);
  CHECK(std::abs(r.tau - 0.52380952380952384) < 1e-12);
  CHECK(std::abs(r.p_value - 0.1361111111111111) < 1e-12);  // exact enumeration
}

TEST_CASE("rank concordance matches external values, ties in both vectors") {
  const std::vector<double> a{1.0, 1.0, 2.0, 3.0, 3.0, 4.0};
  const std::vector<double> b{0.2, 0.5, 0.2, 0.9, 0.7, 0.9};
  const auto r = kendall_paired(a, b);
  CHECK(std::abs(r.tau - 0.69230769230769229) < 1e-12);  // 9/13
  CHECK(std::abs(r.p_value - 0.1) < 1e-12);
}

TEST_CASE("rank concordance matches external values, large tied sample") {
  const std::vector<double> a{
      0.7, 0.2, 0.3, 0.8, 1.0, 0.1, 0.1, 0.2, 0.4, 0.2, 0.6, 0.6, 0.1,
      0.6, 0.0, 0.5, 1.0, 0.8, 0.6, 0.3, 0.2, 0.4, 0.3, 0.9, 0.2, 0.3,
      0.8, 0.3, 0.3, 0.1, 0.5, 0.3, 0.9, 0.3, 0.8, 0.5, 0.5, 1.0, 0.9,
      0.1, 0.2, 0.2, 0.9, 0.6, 0.4, 0.8, 0.3, 0.7, 0.2, 0.0};
  const std::vector<double> b{
      0.4, 0.3, 0.5, 0.7, 1.0, 0.4, 0.4,  0.4, 0.2, 0.2, 0.8, 0.5, -0.1,
      0.4, -0.2, 0.3, 0.9, 1.1, 0.4, 0.5, 0.3, 0.4, 0.1, 0.8, 0.7, 0.3,
      0.9, 0.5, 0.6, 0.0, 0.3, 0.3, 0.8,  0.5, 0.8, 0.6, 0.5, 1.3, 0.8,
      0.0, 0.4, 0.2, 1.0, 0.4, 0.4, 0.9,  0.0, 0.5, 0.3, 0.6};
  const auto r = kendall_paired(a, b);
  CHECK(r.n == 50);
  CHECK(std::abs(r.tau - 0.58516907123080764) < 1e-12);
  // tie-corrected normal approximation with continuity correction
  CHECK(r.p_value == doctest::Approx(3.2258834216421978e-08).epsilon(1e-10));
}

TEST_CASE("rank concordance matches external values, distinct large sample") {
  std::vector<double> a(40), b(40);
  for (std::size_t i = 0; i < 40; ++i) {
    const double t = static_cast<double>(i);
    a[i] = std::sin(1.7 * t) + 0.01 * t;
    b[i] = std::sin(1.7 * t + 0.4) + 0.013 * t;
  }
  const auto r = kendall_paired(a, b);
  CHECK(std::abs(r.tau - 0.7384615384615385) < 1e-12);
  CHECK(r.p_value == doctest::Approx(2.0935597933629098e-11).epsilon(1e-10));
}

TEST_CASE("self-concordance is exactly one") {
  Rng rng(83);
  std::vector<double> a(60);
  for (auto& v : a) {
    v = rng.uniform01();
  }
  CHECK(kendall_paired(a, a).tau == 1.0);
  std::vector<double> neg(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    neg[i] = -a[i];
  }
  CHECK(kendall_paired(a, neg).tau == -1.0);
}

TEST_CASE("two pairs can never be significant") {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{5.0, 9.0};
  const auto r = kendall_paired(a, b);
  CHECK(r.tau == 1.0);
  CHECK(r.p_value == 1.0);  // both orderings reach |tau| = 1
}

TEST_CASE("rank concordance failure modes") {
  const std::vector<double> a{1.0, 1.0, 1.0};
  const std::vector<double> b{0.1, 0.5, 0.9};
  CHECK(error_kind([&] { kendall_paired(a, b); }) == ErrorKind::degenerate);
  CHECK(error_kind([&] { kendall_paired(b, a); }) == ErrorKind::degenerate);
  CHECK(error_kind([&] { kendall_paired(b, {b.data(), 2}); }) ==
        ErrorKind::mismatch);
  const std::vector<double> single{1.0};
  CHECK(error_kind([&] { kendall_paired(single, single); }) ==
        ErrorKind::invalid_argument);
  const std::vector<double> with_nan{0.1, std::nan(""), 0.3};
  CHECK(error_kind([&] { kendall_paired(with_nan, b); }) == ErrorKind::domain);
}

TEST_CASE("comparison joins identical grids directly") {
  Rng rng(91);
  std::vector<double> pa(200), pb(200);
  std::vector<int> labels(200);
  for (std::size_t i = 0; i < 200; ++i) {
    pa[i] = rng.uniform01();
    pb[i] = rng.uniform01();
    labels[i] = rng.bernoulli(0.3) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  const auto sa = sweep(pa, labels, 11);
  const auto sb = sweep(pb, labels, 11);
  const auto cmp = tsfar_compare(sa, sb, 0.33);
  CHECK(cmp.warnings.empty());
  REQUIRE(cmp.rows.size() == 11);
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(cmp.rows[k].threshold == sa.points[k].threshold);
    CHECK(cmp.rows[k].far_a == sa.points[k].far);
    CHECK(cmp.rows[k].ts_a == sa.points[k].ts);
    CHECK(cmp.rows[k].far_b == sb.points[k].far);
    CHECK(cmp.rows[k].ts_b == sb.points[k].ts);
  }
  // 0.33 sits closest to the 0.3 grid line
  CHECK(cmp.mark_a.threshold == doctest::Approx(0.3));
  CHECK(cmp.mark_b.threshold == doctest::Approx(0.3));
}

TEST_CASE("comparison resamples mismatched grids onto the coarser one") {
  Rng rng(93);
  std::vector<double> pa(100), pb(100);
  std::vector<int> labels(100);
  for (std::size_t i = 0; i < 100; ++i) {
    pa[i] = rng.uniform01();
    pb[i] = rng.uniform01();
    labels[i] = rng.bernoulli(0.4) ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
  const auto sa = sweep(pa, labels, 11);
  const auto sb = sweep(pb, labels, 21);
  const auto cmp = tsfar_compare(sa, sb, 0.5);
  CHECK(!cmp.warnings.empty());
  REQUIRE(cmp.rows.size() == 11);
  // wherever the grids coincide the resampled values are the originals
  for (std::size_t k = 0; k < 11; ++k) {
    CHECK(cmp.rows[k].far_b == sb.points[2 * k].far);
    CHECK(cmp.rows[k].ts_b == sb.points[2 * k].ts);
  }
}

TEST_CASE("comparison argument checks") {
  const ThresholdSweep empty;
  const std::vector<double> p{0.2, 0.8};
  const std::vector<int> y{0, 1};
  const auto sw = sweep(p, y, 5);
  CHECK(error_kind([&] { tsfar_compare(empty, sw, 0.5); }) ==
        ErrorKind::invalid_argument);
  CHECK(error_kind([&] { tsfar_compare(sw, sw, 1.5); }) == ErrorKind::domain);
}

TEST_CASE("rescaling leaves the attainable operating set unchanged") {
  // coarse scores so that the 500-point grid separates every adjacent image
  Rng rng(97);
  std::vector<double> probs;
  std::vector<int> labels;
  for (int k = 0; k <= 18; ++k) {
    probs.push_back(0.05 * k);
    labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  probs.push_back(1.0);
  labels.push_back(1);
  labels[0] = 0;

  std::vector<double> mapped(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    mapped[i] = rescale_phi(probs[i]);
  }
  auto operating_set = [&](const std::vector<double>& p) {
    std::vector<std::array<std::size_t, 4>> set;
    for (const auto& pt : sweep(p, labels, 500).points) {
      set.push_back({pt.confusion.hits, pt.confusion.false_alarms,
                     pt.confusion.misses, pt.confusion.correct_rejections});
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
  };
  CHECK(operating_set(probs) == operating_set(mapped));
}
