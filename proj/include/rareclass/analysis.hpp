// Probability-distribution diagnostics: kernel densities, the three-bin
// histogram pair, the piecewise probability rescaling transform, paired
// Kendall rank concordance, and two-model TS/FAR comparison tables.
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rareclass/metrics.hpp"

namespace rareclass {

struct DensityEstimate {
  std::vector<double> grid;    // ascending, evenly spaced
  std::vector<double> values;  // same length, non-negative
  double bandwidth = 0.0;
};

// Gaussian kernel with the Silverman bandwidth 0.9 min(sd, IQR/1.34) n^(-1/5)
// (falling back to sd when the IQR collapses), evaluated on an even grid
// over [min - 3h, max + 3h]. Needs at least two distinct values.
DensityEstimate kde(std::span<const double> values, std::size_t n_grid = 512);

// kde per class partition: (positive-class density, negative-class density).
std::pair<DensityEstimate, DensityEstimate> class_densities(
    std::span<const double> probs, std::span<const int> labels);

// Bin edges for the three-bin probability histograms; 0.2 belongs to the
// first bin and 0.5 to the second.
inline constexpr std::array<double, 4> kTriptychEdges{0.0, 0.2, 0.5, 1.0};

struct HistogramTriptych {
  std::array<std::size_t, 3> pos_counts{};
  std::array<std::size_t, 3> neg_counts{};
};

HistogramTriptych histogram_triptych(std::span<const double> probs,
                                     std::span<const int> labels);

// Anchors of the piecewise rescaling: the lower branch flattens toward
// low_anchor at 0, the upper branch steepens toward high_anchor at 1.
struct RescaleParams {
  double low_anchor = 0.6;
  double high_anchor = 1e-3;
};

// phi(x) = (2(1-low)x + low) x            for x <= 0.5
//        = 1 - (2(1-high)(1-x) + high)(1-x) for x >  0.5
// Strictly increasing on [0,1] with phi(0)=0, phi(0.5)=0.5, phi(1)=1, so it
// reorders nothing: ranks, ROC and AUC are invariant under it.
double rescale_phi(double x, const RescaleParams& params = {});

struct KendallResult {
  double tau = 0.0;      // tau-b, tie corrected
  double p_value = 1.0;  // two sided
  std::size_t n = 0;
};

// Paired rank concordance over all n(n-1)/2 index pairs. The p-value is the
// exact permutation probability for n <= 8 and the tie-aware normal
// approximation with continuity correction above that (a documented
// compromise for 8 < n <= 50, where neither regime is ideal).
KendallResult kendall_paired(std::span<const double> a, std::span<const double> b);

struct CompareRow {
  double threshold = 0.0;
  std::optional<double> far_a;
  std::optional<double> ts_a;
  std::optional<double> far_b;
  std::optional<double> ts_b;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  SweepPoint mark_a;  // each model's point nearest the marked threshold
  SweepPoint mark_b;
  std::vector<std::string> warnings;
};

// Aligns two sweeps onto one threshold grid (resampling to the coarser one
// with a warning when the grids differ) and marks each model's operating
// point nearest tau_mark.
CompareResult tsfar_compare(const ThresholdSweep& sweep_a,
                            const ThresholdSweep& sweep_b, double tau_mark);

}  // namespace rareclass
