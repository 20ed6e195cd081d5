#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bordernet::stats {

/// Per-cycle test accuracies of the two models on one occlusion cell.
struct AccuracyPair {
  double lenet5 = 0.0;
  double bordernet = 0.0;
};

struct BootstrapResult {
  double median_pct = 0.0;
  double ci_low_pct = 0.0;
  double ci_high_pct = 0.0;
};

/// How a set of pairs is reduced to one improvement figure.
enum class ImprovementMode {
  /// Median over cycles of 100 * bordernet / lenet5.
  per_cycle_ratio,
  /// 100 * mean(bordernet) / mean(lenet5).
  ratio_of_means,
};

std::string to_string(ImprovementMode mode);
ImprovementMode parse_improvement_mode(const std::string& text);

/// 100 * a_B / a_L per pair; throws std::invalid_argument if any a_L <= 0.
std::vector<double> improvement_ratios(std::span<const AccuracyPair> pairs);

/// Sample median; the mean of the two middle values for even sizes.
double median(std::vector<double> values);

/// Smallest sorted value whose empirical CDF reaches q (inverse-CDF quantile).
double lower_quantile(std::span<const double> sorted, double q);

/// Improvement statistic of one (re)sample.
double improvement(std::span<const AccuracyPair> pairs, ImprovementMode mode);

/// Percentile bootstrap. Draws `resamples` paired resamples of size n with
/// replacement (make_rng(seed, 0)), computes the statistic of each and reports
/// the 2.5% / 97.5% inverse-CDF quantiles around the full-sample point
/// estimate. Deterministic given seed.
BootstrapResult bootstrap_median_improvement(std::span<const AccuracyPair> pairs,
                                             std::size_t resamples, std::uint64_t seed,
                                             ImprovementMode mode = ImprovementMode::per_cycle_ratio,
                                             double level = 0.95);

/// The infinite-resample limit: the exact bootstrap distribution over all
/// n^n ordered resamples, enumerated as multisets weighted by their
/// multinomial counts. Limited to n <= 10.
BootstrapResult bootstrap_exhaustive(std::span<const AccuracyPair> pairs,
                                     ImprovementMode mode = ImprovementMode::per_cycle_ratio,
                                     double level = 0.95);

}  // namespace bordernet::stats
