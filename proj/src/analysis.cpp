#include "rareclass/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "rareclass/error.hpp"
#include "rareclass/parallel.hpp"
#include "validate.hpp"

namespace rareclass {
namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void check_finite(std::span<const double> values, const char* what) {
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::domain, std::string(what) + " contains a non-finite value");
    }
  }
}

// Type-7 quantile on a sorted vector (the convention of most statistical
// software): linear interpolation at rank (n-1)p.
double quantile7(const std::vector<double>& sorted, double p) {
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) {
    return sorted[n - 1];
  }
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

DensityEstimate kde_checked(std::span<const double> values, std::size_t n_grid,
                            const char* what) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw Error(ErrorKind::degenerate,
                std::string(what) + ": density estimation needs at least 2 values");
  }
  if (n_grid < 2) {
    throw Error(ErrorKind::invalid_argument, "density grid needs at least 2 points");
  }
  check_finite(values, what);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw Error(ErrorKind::degenerate,
                std::string(what) + ": all values identical, no density to estimate");
  }

  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (const double v : sorted) {
    ss += (v - mean) * (v - mean);
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double iqr = quantile7(sorted, 0.75) - quantile7(sorted, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread == 0.0) {
    spread = sd;  // heavy central ties; sd > 0 because not all values agree
  }
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);

  DensityEstimate out;
  out.bandwidth = h;
  out.grid.resize(n_grid);
  out.values.resize(n_grid);
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(n_grid - 1);
  const double scale = kInvSqrt2Pi / (static_cast<double>(n) * h);
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double x = lo + step * static_cast<double>(g);
    double sum = 0.0;
    for (const double v : sorted) {
      const double z = (x - v) / h;
      sum += std::exp(-0.5 * z * z);
    }
    out.grid[g] = x;
    out.values[g] = scale * sum;
  }
  return out;
}

}  // namespace

DensityEstimate kde(std::span<const double> values, std::size_t n_grid) {
  return kde_checked(values, n_grid, "sample");
}

std::pair<DensityEstimate, DensityEstimate> class_densities(
    std::span<const double> probs, std::span<const int> labels) {
  detail::check_prob_label_vectors(probs, labels);
  std::vector<double> pos;
  std::vector<double> neg;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    (labels[i] == 1 ? pos : neg).push_back(probs[i]);
  }
  return {kde_checked(pos, 512, "class 1"), kde_checked(neg, 512, "class 0")};
}

HistogramTriptych histogram_triptych(std::span<const double> probs,
                                     std::span<const int> labels) {
  detail::check_prob_label_vectors(probs, labels);
  HistogramTriptych out;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    const std::size_t bin = p <= 0.2 ? 0 : (p <= 0.5 ? 1 : 2);
    (labels[i] == 1 ? out.pos_counts : out.neg_counts)[bin] += 1;
  }
  return out;
}

double rescale_phi(double x, const RescaleParams& params) {
  if (!(params.low_anchor > 0.0 && params.low_anchor <= 1.0 &&
        params.high_anchor > 0.0 && params.high_anchor <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "rescale anchors must lie in (0,1]");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorKind::domain, "rescale input outside [0,1]");
  }
  if (x <= 0.5) {
    const double alpha = 2.0 * (1.0 - params.low_anchor) * x + params.low_anchor;
    return alpha * x;
  }
  const double beta = 2.0 * (1.0 - params.high_anchor) * (1.0 - x) + params.high_anchor;
  return 1.0 - beta * (1.0 - x);
}

namespace {

int sign_of(double d) { return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0); }

// Sum over i<j of sign(a_j-a_i) sign(b_j-b_i); integer, so any summation
// order gives the identical result.
std::int64_t pair_sign_sum(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  std::vector<std::int64_t> partial(n, 0);
  parallel_for_index(n, [&](std::size_t i) {
    std::int64_t s = 0;
    for (std::size_t j = i + 1; j < n; ++j) {
      s += sign_of(a[j] - a[i]) * sign_of(b[j] - b[i]);
    }
    partial[i] = s;
  });
  return std::accumulate(partial.begin(), partial.end(), std::int64_t{0});
}

// Run lengths of equal values.
std::vector<std::int64_t> tie_groups(std::span<const double> v) {
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> groups;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) {
      ++j;
    }
    groups.push_back(static_cast<std::int64_t>(j - i));
    i = j;
  }
  return groups;
}

double exact_permutation_p(std::span<const double> a, std::span<const double> b,
                           double denom, double tau_obs) {
  std::vector<double> perm(b.begin(), b.end());
  std::sort(perm.begin(), perm.end());
  const std::size_t n = perm.size();
  const double cut = std::abs(tau_obs) - 1e-12;
  std::uint64_t total = 0;
  std::uint64_t at_least = 0;
  do {
    std::int64_t s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        s += sign_of(a[j] - a[i]) * sign_of(perm[j] - perm[i]);
      }
    }
    ++total;
    if (std::abs(static_cast<double>(s) / denom) >= cut) {
      ++at_least;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(at_least) / static_cast<double>(total);
}

// Tie-aware variance of the pair-sign statistic under the null, with a
// one-unit continuity correction toward zero.
double normal_approx_p(std::size_t n_size, std::int64_t s,
                       const std::vector<std::int64_t>& ga,
                       const std::vector<std::int64_t>& gb) {
  const double n = static_cast<double>(n_size);
  auto sum_t = [](const std::vector<std::int64_t>& g, auto f) {
    double acc = 0.0;
    for (const std::int64_t t : g) {
      acc += f(static_cast<double>(t));
    }
    return acc;
  };
  const double v0 = n * (n - 1.0) * (2.0 * n + 5.0);
  const double vt = sum_t(ga, [](double t) { return t * (t - 1.0) * (2.0 * t + 5.0); });
  const double vu = sum_t(gb, [](double t) { return t * (t - 1.0) * (2.0 * t + 5.0); });
  const double t1a = sum_t(ga, [](double t) { return t * (t - 1.0); });
  const double t1b = sum_t(gb, [](double t) { return t * (t - 1.0); });
  const double t2a = sum_t(ga, [](double t) { return t * (t - 1.0) * (t - 2.0); });
  const double t2b = sum_t(gb, [](double t) { return t * (t - 1.0) * (t - 2.0); });
  double var = (v0 - vt - vu) / 18.0 + t1a * t1b / (2.0 * n * (n - 1.0));
  if (n > 2.0) {
    var += t2a * t2b / (9.0 * n * (n - 1.0) * (n - 2.0));
  }
  if (!(var > 0.0)) {
    return 1.0;
  }
  const double corrected =
      s > 0 ? static_cast<double>(s) - 1.0 : (s < 0 ? static_cast<double>(s) + 1.0 : 0.0);
  const double z = corrected / std::sqrt(var);
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

KendallResult kendall_paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::mismatch, "paired vectors differ in length");
  }
  const std::size_t n = a.size();
  if (n < 2) {
    throw Error(ErrorKind::invalid_argument, "rank test needs at least 2 pairs");
  }
  check_finite(a, "first vector");
  check_finite(b, "second vector");
  const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  if (*amin == *amax) {
    throw Error(ErrorKind::degenerate, "tau undefined: first vector entirely tied");
  }
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  if (*bmin == *bmax) {
    throw Error(ErrorKind::degenerate, "tau undefined: second vector entirely tied");
  }

  const std::int64_t s = pair_sign_sum(a, b);
  const auto ga = tie_groups(a);
  const auto gb = tie_groups(b);
  const auto nn = static_cast<std::int64_t>(n);
  const std::int64_t n0 = nn * (nn - 1) / 2;
  std::int64_t n1 = 0;
  for (const std::int64_t t : ga) {
    n1 += t * (t - 1) / 2;
  }
  std::int64_t n2 = 0;
  for (const std::int64_t t : gb) {
    n2 += t * (t - 1) / 2;
  }
  // Single sqrt so tau is exactly 1 for tie-free perfectly concordant input:
  // the product is then n0*n0 (exact below 2^53) and sqrt of a perfect square
  // is exact, while sqrt(n0)*sqrt(n0) can drift by an ulp.
  const double denom =
      std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));

  KendallResult out;
  out.n = n;
  out.tau = static_cast<double>(s) / denom;
  out.p_value = n <= 8 ? exact_permutation_p(a, b, denom, out.tau)
                       : normal_approx_p(n, s, ga, gb);
  out.p_value = std::clamp(out.p_value, 0.0, 1.0);
  return out;
}

namespace {

std::size_t nearest_threshold_index(const ThresholdSweep& sweep, double tau) {
  const auto& pts = sweep.points;
  std::size_t best = 0;
  double best_gap = std::abs(pts[0].threshold - tau);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double gap = std::abs(pts[i].threshold - tau);
    if (gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace

CompareResult tsfar_compare(const ThresholdSweep& sweep_a,
                            const ThresholdSweep& sweep_b, double tau_mark) {
  if (sweep_a.points.empty() || sweep_b.points.empty()) {
    throw Error(ErrorKind::invalid_argument, "cannot compare an empty sweep");
  }
  if (!(tau_mark >= 0.0 && tau_mark <= 1.0)) {
    throw Error(ErrorKind::domain, "marked threshold must lie in [0,1]");
  }

  CompareResult out;
  bool aligned = sweep_a.points.size() == sweep_b.points.size();
  if (aligned) {
    for (std::size_t i = 0; i < sweep_a.points.size(); ++i) {
      if (sweep_a.points[i].threshold != sweep_b.points[i].threshold) {
        aligned = false;
        break;
      }
    }
  }
  if (aligned) {
    out.rows.reserve(sweep_a.points.size());
    for (std::size_t i = 0; i < sweep_a.points.size(); ++i) {
      const auto& pa = sweep_a.points[i];
      const auto& pb = sweep_b.points[i];
      out.rows.push_back({pa.threshold, pa.far, pa.ts, pb.far, pb.ts});
    }
  } else {
    const ThresholdSweep& coarse =
        sweep_a.points.size() <= sweep_b.points.size() ? sweep_a : sweep_b;
    out.warnings.push_back(
        "sweep grids differ (" + std::to_string(sweep_a.points.size()) + " vs " +
        std::to_string(sweep_b.points.size()) +
        " points); table resampled onto the coarser grid");
    out.rows.reserve(coarse.points.size());
    for (const SweepPoint& pt : coarse.points) {
      const auto& pa = sweep_a.points[nearest_threshold_index(sweep_a, pt.threshold)];
      const auto& pb = sweep_b.points[nearest_threshold_index(sweep_b, pt.threshold)];
      out.rows.push_back({pt.threshold, pa.far, pa.ts, pb.far, pb.ts});
    }
  }
  out.mark_a = sweep_a.points[nearest_threshold_index(sweep_a, tau_mark)];
  out.mark_b = sweep_b.points[nearest_threshold_index(sweep_b, tau_mark)];
  return out;
}

}  // namespace rareclass
