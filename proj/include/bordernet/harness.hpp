#pragma once

// Multi-cycle LeNet5 vs BorderNet occlusion benchmark.
//
// Every cycle trains both models once on clean training data and evaluates
// them on every occluded variant of the test set. Cycle i uses seed
// base_seed + i: both models share the data shuffle (stream 0) and draw
// their initial weights from independent streams (1 for LeNet5, 2 for
// BorderNet).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bordernet/bootstrap.hpp"
#include "bordernet/datasets.hpp"
#include "bordernet/nn/spec.hpp"
#include "bordernet/nn/training.hpp"
#include "bordernet/vision.hpp"

namespace bordernet::harness {

struct ExperimentConfig {
  std::string dataset = "mnist";
  std::filesystem::path data_dir = "data";
  std::vector<vision::OcclusionKind> kinds{vision::OcclusionKind::stripes};
  /// (w, s) pairs; ignored when full_grid is set.
  std::vector<std::pair<int, int>> cells;
  bool full_grid = false;
  int cycles = 100;
  std::uint64_t base_seed = 42;
  int epochs = 10;
  std::size_t batch = 64;
  std::size_t train_limit = 0;  // 0 = whole training split
  std::size_t test_limit = 0;   // 0 = whole test split
  std::size_t resamples = 100000;
  stats::ImprovementMode improvement = stats::ImprovementMode::per_cycle_ratio;
  nn::BorderNetMode bordernet_mode = nn::BorderNetMode::bank;
  int jobs = 1;
  std::filesystem::path out_dir;  // empty = no files written
  bool verbose = false;

  /// Throws std::invalid_argument on cycles < 1 or cells outside [1,10]^2.
  void validate() const;

  /// Every (kind, w, s) evaluated, kinds outermost, in cell order.
  std::vector<vision::OcclusionSpec> occlusions() const;
};

/// Parses "w1,s1;w2,s2".
std::vector<std::pair<int, int>> parse_cells(const std::string& text);

/// All 100 cells of [1,10]^2, w-major.
std::vector<std::pair<int, int>> full_grid_cells();

struct CycleResult {
  int cycle = 0;
  stats::AccuracyPair clean;
  std::vector<stats::AccuracyPair> cells;  // aligned with config.occlusions()
};

struct CellResult {
  std::string dataset;
  vision::OcclusionSpec occlusion;
  std::vector<stats::AccuracyPair> pairs;  // one per cycle, cycle order
  double mean_lenet5 = 0.0;
  double std_lenet5 = 0.0;
  double mean_bordernet = 0.0;
  double std_bordernet = 0.0;
  double improvement_median_pct = 0.0;
  double ci_low_pct = 0.0;
  double ci_high_pct = 0.0;
  std::string error;  // non-empty when the statistics could not be computed

  std::size_t cycles() const { return pairs.size(); }
  bool ok() const { return error.empty(); }
};

/// Means, sample standard deviations and bootstrap statistics of one cell.
CellResult summarize_cell(const std::string& dataset, const vision::OcclusionSpec& occlusion,
                          std::vector<stats::AccuracyPair> pairs, std::size_t resamples,
                          std::uint64_t seed, stats::ImprovementMode mode);

/// Seeds the cell's bootstrap: distinct per cell, fixed by the base seed.
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t cell_index);

class Experiment {
 public:
  /// `data` is the raw split; training and test limits are applied here.
  Experiment(ExperimentConfig config, data::DatasetSplit data);

  const ExperimentConfig& config() const { return config_; }
  const std::vector<vision::OcclusionSpec>& occlusions() const { return occlusions_; }

  /// Trains both models for cycle `index` and evaluates them on all cells.
  CycleResult run_cycle(int index) const;

  /// Runs every cycle (up to config.jobs concurrently) and aggregates the
  /// cells in cycle order.
  std::vector<CellResult> run(const std::function<void(const CycleResult&)>& on_cycle = {}) const;

 private:
  ExperimentConfig config_;
  std::vector<vision::OcclusionSpec> occlusions_;
  data::NormalizedSet train_;
  data::LabeledSet test_raw_;
  data::NormalizedSet test_clean_;
};

/// Loads the dataset named in the config, runs the experiment and, if
/// out_dir is set, writes results.csv and one heatmap per occlusion kind.
std::vector<CellResult> run_experiment(const ExperimentConfig& config);

inline constexpr const char* kCsvHeader =
    "dataset,kind,w,s,mean_lenet5,std_lenet5,mean_bordernet,std_bordernet,imp_median_pct,ci_low,"
    "ci_high,cycles";

std::string results_csv(const std::vector<CellResult>& results);
void emit_csv(const std::vector<CellResult>& results, const std::filesystem::path& path);

/// Parses results_csv output. Per-cycle pairs are not stored in the CSV, so
/// `pairs` comes back empty.
std::vector<CellResult> parse_results_csv(const std::string& text);

/// Per-cycle accuracies, one row per (cell, cycle).
std::string cycles_csv(const std::vector<CellResult>& results);

enum class HeatmapValue { improvement, mean_lenet5, mean_bordernet };

/// 10x10 grid (rows w = 1..10, columns s = 1..10). Improvement uses a
/// diverging scale centred at 100%; accuracies a sequential scale. Each cell
/// carries its numeral and the legend states the colour-scale min and max.
std::string heatmap_svg(const std::vector<CellResult>& results, HeatmapValue value,
                        const std::string& title);
void emit_heatmap_svg(const std::vector<CellResult>& results, const std::filesystem::path& path,
                      HeatmapValue value, const std::string& title);

}  // namespace bordernet::harness
