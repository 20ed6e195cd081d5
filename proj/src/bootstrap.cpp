#include "bordernet/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>

#include "bordernet/nn/network.hpp"

namespace bordernet::stats {
namespace {

// 1-based rank of the q-quantile among `total` ordered observations.
std::uint64_t quantile_rank(double q, std::uint64_t total) {
  const double k = std::ceil(q * static_cast<double>(total) * (1.0 - 1e-12));
  return std::clamp<std::uint64_t>(static_cast<std::uint64_t>(std::max(k, 1.0)), 1, total);
}

void check_inputs(std::span<const AccuracyPair> pairs, double level) {
  if (pairs.empty()) throw std::invalid_argument("bootstrap: no accuracy pairs");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap: level must be in (0, 1)");
  improvement_ratios(pairs);  // validates a_L > 0
}

}  // namespace

std::string to_string(ImprovementMode mode) {
  return mode == ImprovementMode::per_cycle_ratio ? "per-cycle-ratio" : "ratio-of-means";
}

ImprovementMode parse_improvement_mode(const std::string& text) {
  if (text == "per-cycle-ratio") return ImprovementMode::per_cycle_ratio;
  if (text == "ratio-of-means") return ImprovementMode::ratio_of_means;
  throw std::invalid_argument("unknown improvement mode '" + text +
                              "' (expected per-cycle-ratio|ratio-of-means)");
}

std::vector<double> improvement_ratios(std::span<const AccuracyPair> pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!(pairs[i].lenet5 > 0.0)) {
      throw std::invalid_argument("improvement ratio undefined: LeNet5 accuracy " +
                                  std::to_string(pairs[i].lenet5) + " in cycle " +
                                  std::to_string(i));
    }
    out.push_back(100.0 * pairs[i].bordernet / pairs[i].lenet5);
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

double lower_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  return sorted[quantile_rank(q, sorted.size()) - 1];
}

double improvement(std::span<const AccuracyPair> pairs, ImprovementMode mode) {
  if (mode == ImprovementMode::per_cycle_ratio) return median(improvement_ratios(pairs));
  double sum_l = 0.0;
  double sum_b = 0.0;
  for (const auto& p : pairs) {
    sum_l += p.lenet5;
    sum_b += p.bordernet;
  }
  if (!(sum_l > 0.0)) throw std::invalid_argument("improvement ratio undefined: LeNet5 mean is 0");
  return 100.0 * sum_b / sum_l;
}

BootstrapResult bootstrap_median_improvement(std::span<const AccuracyPair> pairs,
                                             std::size_t resamples, std::uint64_t seed,
                                             ImprovementMode mode, double level) {
  check_inputs(pairs, level);
  if (resamples == 0) throw std::invalid_argument("bootstrap: resamples must be >= 1");
  const std::size_t n = pairs.size();
  std::mt19937_64 rng = nn::make_rng(seed, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  std::vector<double> stats(resamples);
  std::vector<AccuracyPair> sample(n);
  for (double& s : stats) {
    for (auto& p : sample) p = pairs[pick(rng)];
    s = improvement(sample, mode);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  return {improvement(pairs, mode), lower_quantile(stats, tail), lower_quantile(stats, 1.0 - tail)};
}

BootstrapResult bootstrap_exhaustive(std::span<const AccuracyPair> pairs, ImprovementMode mode,
                                     double level) {
  check_inputs(pairs, level);
  const std::size_t n = pairs.size();
  if (n > 10) throw std::invalid_argument("bootstrap_exhaustive: n must be <= 10");

  std::vector<std::uint64_t> factorial(n + 1, 1);
  for (std::size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * k;

  // Walk every composition counts[0] + ... + counts[n-1] = n.
  std::vector<std::pair<double, std::uint64_t>> dist;
  std::vector<std::size_t> counts(n, 0);
  std::vector<AccuracyPair> sample;
  std::uint64_t total = 0;
  const auto visit = [&](auto&& self, std::size_t slot, std::size_t left) -> void {
    if (slot + 1 == n) {
      counts[slot] = left;
      sample.clear();
      std::uint64_t weight = factorial[n];
      for (std::size_t i = 0; i < n; ++i) {
        weight /= factorial[counts[i]];
        for (std::size_t r = 0; r < counts[i]; ++r) sample.push_back(pairs[i]);
      }
      dist.emplace_back(improvement(sample, mode), weight);
      total += weight;
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[slot] = c;
      self(self, slot + 1, left - c);
    }
  };
  visit(visit, 0, n);

  std::sort(dist.begin(), dist.end());
  const double tail = 0.5 * (1.0 - level);
  const auto quantile = [&](double q) {
    const std::uint64_t rank = quantile_rank(q, total);
    std::uint64_t cum = 0;
    for (const auto& [value, weight] : dist) {
      cum += weight;
      if (cum >= rank) return value;
    }
    return dist.back().first;
  };
  return {improvement(pairs, mode), quantile(tail), quantile(1.0 - tail)};
}

}  // namespace bordernet::stats
