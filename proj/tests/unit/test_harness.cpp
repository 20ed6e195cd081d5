#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bordernet/harness.hpp"

using namespace bordernet;
using namespace bordernet::harness;
using vision::OcclusionKind;

namespace {

data::LabeledSet synthetic_set(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(0, 60);
  data::IdxImages img{static_cast<std::uint32_t>(n), 28, 28, std::vector<std::uint8_t>(n * 784)};
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 10);
    labels[i] = static_cast<std::uint8_t>(label);
    for (std::size_t p = 0; p < 784; ++p) {
      // A thick bar whose row depends on the label.
      const std::size_t r = p / 28;
      const bool on = r >= 2 + 2 * static_cast<std::size_t>(label) && r < 5 + 2 * static_cast<std::size_t>(label);
      img.pixels[i * 784 + p] = static_cast<std::uint8_t>(on ? 255 - noise(rng) : noise(rng));
    }
  }
  return data::make_labeled_set("synthetic", std::move(img), std::move(labels));
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset = "synthetic";
  cfg.cells = {{1, 1}, {3, 3}};
  cfg.kinds = {OcclusionKind::stripes, OcclusionKind::grid};
  cfg.cycles = 2;
  cfg.epochs = 1;
  cfg.train_limit = 100;
  cfg.test_limit = 50;
  cfg.resamples = 500;
  return cfg;
}

std::vector<CellResult> mock_grid() {
  std::vector<CellResult> out;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.5, 0.99);
  std::size_t index = 0;
  for (auto [w, s] : full_grid_cells()) {
    std::vector<stats::AccuracyPair> pairs(5);
    for (auto& p : pairs) p = {u(rng), u(rng)};
    out.push_back(summarize_cell("mnist", {OcclusionKind::stripes, w, s}, pairs, 200, cell_seed(42, index++),
                                 stats::ImprovementMode::per_cycle_ratio));
  }
  return out;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("cell parsing and grid") {
  CHECK(parse_cells("1,1;3,3; 5,3") == std::vector<std::pair<int, int>>{{1, 1}, {3, 3}, {5, 3}});
  CHECK(parse_cells("").empty());
  CHECK_THROWS(parse_cells("1;2"));
  CHECK_THROWS(parse_cells("a,b"));
  const auto grid = full_grid_cells();
  CHECK(grid.size() == 100);
  CHECK(grid.front() == std::pair{1, 1});
  CHECK(grid[1] == std::pair{1, 2});
  CHECK(grid.back() == std::pair{10, 10});
}

TEST_CASE("config validation and occlusion order") {
  ExperimentConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  const auto occ = cfg.occlusions();
  REQUIRE(occ.size() == 4);
  CHECK(occ[0].kind == OcclusionKind::stripes);
  CHECK(occ[1].w == 3);
  CHECK(occ[2].kind == OcclusionKind::grid);
  cfg.full_grid = true;
  CHECK(cfg.occlusions().size() == 200);

  ExperimentConfig bad = small_config();
  bad.cycles = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.cells = {{11, 1}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.cells = {{1, 0}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("summarize_cell statistics") {
  const std::vector<stats::AccuracyPair> pairs{{0.8, 0.9}, {0.6, 0.66}, {0.7, 0.63}, {0.9, 0.99}};
  const auto r = summarize_cell("mnist", {OcclusionKind::grid, 2, 4}, pairs, 2000, 3,
                                stats::ImprovementMode::per_cycle_ratio);
  CHECK(r.ok());
  CHECK(r.cycles() == 4);
  double ml = 0, mb = 0;
  for (const auto& p : r.pairs) {
    ml += p.lenet5;
    mb += p.bordernet;
  }
  CHECK(r.mean_lenet5 == ml / 4);
  CHECK(r.mean_bordernet == mb / 4);
  double ss = 0;
  for (const auto& p : pairs) ss += (p.lenet5 - ml / 4) * (p.lenet5 - ml / 4);
  CHECK(r.std_lenet5 == doctest::Approx(std::sqrt(ss / 3)));
  CHECK(r.improvement_median_pct == doctest::Approx(110.0));
  CHECK(r.ci_low_pct <= r.improvement_median_pct);
  CHECK(r.improvement_median_pct <= r.ci_high_pct);

  const auto failed = summarize_cell("mnist", {}, {{0.0, 0.5}}, 100, 1, stats::ImprovementMode::per_cycle_ratio);
  CHECK_FALSE(failed.ok());
  CHECK(std::isnan(failed.improvement_median_pct));
  CHECK(failed.mean_bordernet == 0.5);
  CHECK(failed.std_bordernet == 0.0);
}

TEST_CASE("csv output") {
  CHECK(results_csv({}) == std::string(kCsvHeader) + "\n");

  const auto one = summarize_cell("mnist", {OcclusionKind::stripes, 3, 3}, {{0.78, 0.84}, {0.8, 0.83}}, 500, 1,
                                  stats::ImprovementMode::per_cycle_ratio);
  const std::string csv = results_csv({one});
  CHECK(count(csv, "\n") == 2);
  const auto back = parse_results_csv(csv);
  REQUIRE(back.size() == 1);
  CHECK(back[0].dataset == "mnist");
  CHECK(back[0].occlusion.kind == OcclusionKind::stripes);
  CHECK(back[0].occlusion.w == 3);
  CHECK(back[0].occlusion.s == 3);
  CHECK(back[0].mean_lenet5 == doctest::Approx(one.mean_lenet5).epsilon(1e-9));
  CHECK(back[0].improvement_median_pct == doctest::Approx(one.improvement_median_pct).epsilon(1e-9));
  CHECK(back[0].ci_high_pct == doctest::Approx(one.ci_high_pct).epsilon(1e-9));
  CHECK(csv.find(",2\n") != std::string::npos);

  const auto grid = mock_grid();
  const auto all = parse_results_csv(results_csv(grid));
  CHECK(all.size() == 100);

  const auto failed = summarize_cell("mnist", {}, {{0.0, 0.5}}, 100, 1, stats::ImprovementMode::per_cycle_ratio);
  const auto parsed = parse_results_csv(results_csv({failed}));
  CHECK(std::isnan(parsed[0].improvement_median_pct));

  CHECK_THROWS(parse_results_csv("wrong,header\n"));
  CHECK_THROWS(parse_results_csv(std::string(kCsvHeader) + "\nmnist,stripes,1\n"));

  const std::string cycles = cycles_csv({one});
  CHECK(count(cycles, "\n") == 3);
  CHECK_THROWS(emit_csv({one}, "/nonexistent/dir/results.csv"));
}

TEST_CASE("heatmap over a full mock grid") {
  const auto grid = mock_grid();
  double lo = 1e9, hi = -1e9;
  for (const auto& r : grid) {
    lo = std::min(lo, r.improvement_median_pct);
    hi = std::max(hi, r.improvement_median_pct);
  }
  const std::string svg = heatmap_svg(grid, HeatmapValue::improvement, "mock");
  CHECK(count(svg, "<rect x=") == 100);
  CHECK(count(svg, "rgb(220,220,220)") == 0);
  CHECK(svg.find("class=\"legend\"") != std::string::npos);
  char buf[32];
  std::snprintf(buf, sizeof buf, "min = %.6g", lo);
  CHECK(svg.find(buf) != std::string::npos);
  std::snprintf(buf, sizeof buf, "max = %.6g", hi);
  CHECK(svg.find(buf) != std::string::npos);

  const std::string acc = heatmap_svg(grid, HeatmapValue::mean_lenet5, "acc");
  CHECK(count(acc, "<rect x=") == 100);
  CHECK(count(acc, "text-anchor=\"middle\">0.") >= 100);

  const std::string partial = heatmap_svg({grid[0]}, HeatmapValue::improvement, "one");
  CHECK(count(partial, "rgb(220,220,220)") == 99);

  const auto path = std::filesystem::temp_directory_path() / "bordernet_heatmap.svg";
  emit_heatmap_svg(grid, path, HeatmapValue::mean_bordernet, "t");
  CHECK(std::filesystem::file_size(path) > 1000);
  std::filesystem::remove(path);
}

TEST_CASE("run_cycle contract") {
  const data::DatasetSplit split{synthetic_set(200, 1), synthetic_set(60, 2)};
  const Experiment exp(small_config(), split);
  const CycleResult a = exp.run_cycle(0);
  CHECK(a.cells.size() == 4);
  for (const auto& p : a.cells) {
    CHECK(p.lenet5 >= 0.0);
    CHECK(p.lenet5 <= 1.0);
    CHECK(p.bordernet >= 0.0);
    CHECK(p.bordernet <= 1.0);
  }
  const CycleResult again = exp.run_cycle(0);
  CHECK(again.clean.lenet5 == a.clean.lenet5);
  CHECK(again.clean.bordernet == a.clean.bordernet);
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    CHECK(again.cells[i].lenet5 == a.cells[i].lenet5);
    CHECK(again.cells[i].bordernet == a.cells[i].bordernet);
  }
}

TEST_CASE("parallel cycles aggregate in cycle order") {
  const data::DatasetSplit split{synthetic_set(200, 1), synthetic_set(60, 2)};
  ExperimentConfig cfg = small_config();
  cfg.cycles = 3;
  std::vector<int> seen;
  const auto serial = Experiment(cfg, split).run([&](const CycleResult& c) { seen.push_back(c.cycle); });
  CHECK(seen.size() == 3);
  cfg.jobs = 3;
  const auto parallel = Experiment(cfg, split).run();
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].cycles() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(serial[i].pairs[k].lenet5 == parallel[i].pairs[k].lenet5);
      CHECK(serial[i].pairs[k].bordernet == parallel[i].pairs[k].bordernet);
    }
    const bool same = serial[i].improvement_median_pct == parallel[i].improvement_median_pct ||
                      (std::isnan(serial[i].improvement_median_pct) && std::isnan(parallel[i].improvement_median_pct));
    CHECK(same);
    CHECK(serial[i].ci_low_pct <= serial[i].ci_high_pct);
  }
}

TEST_CASE("run_experiment writes its reports") {
  const auto dir = std::filesystem::temp_directory_path() / "bordernet_run_experiment";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir / "mnist");
  const auto train = synthetic_set(120, 3);
  const auto test = synthetic_set(40, 4);
  const auto files = data::dataset_files("mnist");
  data::write_idx_images(dir / "mnist" / files[0], data::to_idx(train));
  data::write_idx_labels(dir / "mnist" / files[1], train.labels);
  data::write_idx_images(dir / "mnist" / files[2], data::to_idx(test));
  data::write_idx_labels(dir / "mnist" / files[3], test.labels);

  ExperimentConfig cfg = small_config();
  cfg.dataset = "mnist";
  cfg.data_dir = dir;
  cfg.cycles = 1;
  cfg.out_dir = dir / "out";
  const auto results = run_experiment(cfg);
  CHECK(results.size() == 4);
  std::ifstream in(dir / "out" / "results.csv");
  std::stringstream text;
  text << in.rdbuf();
  CHECK(parse_results_csv(text.str()).size() == 4);
  CHECK(std::filesystem::exists(dir / "out" / "cycles.csv"));
  CHECK(std::filesystem::exists(dir / "out" / "mnist_stripes_improvement.svg"));
  CHECK(std::filesystem::exists(dir / "out" / "mnist_grid_bordernet.svg"));

  cfg.data_dir = dir / "missing";
  CHECK_THROWS(run_experiment(cfg));
  std::filesystem::remove_all(dir);
}
