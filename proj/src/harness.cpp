#include "bordernet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace bordernet::harness {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v, int precision = 10) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!text.empty() && text.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

double parse_number(const std::string& s) {
  if (s == "nan") return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

std::uint64_t model_seed(std::uint64_t cycle_seed, std::uint64_t stream) {
  return nn::make_rng(cycle_seed, stream)();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (cycles < 1) throw std::invalid_argument("cycles must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch < 1) throw std::invalid_argument("batch must be >= 1");
  if (resamples < 1) throw std::invalid_argument("resamples must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (kinds.empty()) throw std::invalid_argument("at least one occlusion kind is required");
  for (const auto& [w, s] : cells) {
    if (w < 1 || w > 10 || s < 1 || s > 10) {
      throw std::invalid_argument("cell (" + std::to_string(w) + "," + std::to_string(s) +
                                  ") lies outside [1,10]^2");
    }
  }
}

std::vector<vision::OcclusionSpec> ExperimentConfig::occlusions() const {
  const auto list = full_grid ? full_grid_cells() : cells;
  std::vector<vision::OcclusionSpec> out;
  for (vision::OcclusionKind kind : kinds) {
    for (const auto& [w, s] : list) out.push_back({kind, w, s});
  }
  return out;
}

std::vector<std::pair<int, int>> parse_cells(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  for (const std::string& raw : split(text, ';')) {
    const std::string item = trim(raw);
    if (item.empty()) continue;
    const auto parts = split(item, ',');
    if (parts.size() != 2) throw std::invalid_argument("cell '" + item + "': expected w,s");
    out.emplace_back(std::stoi(trim(parts[0])), std::stoi(trim(parts[1])));
  }
  return out;
}

std::vector<std::pair<int, int>> full_grid_cells() {
  std::vector<std::pair<int, int>> out;
  for (int w = 1; w <= 10; ++w) {
    for (int s = 1; s <= 10; ++s) out.emplace_back(w, s);
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t cell_index) {
  return model_seed(base_seed, 1000 + cell_index);
}

CellResult summarize_cell(const std::string& dataset, const vision::OcclusionSpec& occlusion,
                          std::vector<stats::AccuracyPair> pairs, std::size_t resamples,
                          std::uint64_t seed, stats::ImprovementMode mode) {
  CellResult r;
  r.dataset = dataset;
  r.occlusion = occlusion;
  r.pairs = std::move(pairs);
  const std::size_t n = r.pairs.size();
  if (n == 0) {
    r.mean_lenet5 = r.mean_bordernet = r.std_lenet5 = r.std_bordernet = kNaN;
    r.improvement_median_pct = r.ci_low_pct = r.ci_high_pct = kNaN;
    r.error = "no cycles";
    return r;
  }
  double sum_l = 0.0;
  double sum_b = 0.0;
  for (const auto& p : r.pairs) {
    sum_l += p.lenet5;
    sum_b += p.bordernet;
  }
  r.mean_lenet5 = sum_l / static_cast<double>(n);
  r.mean_bordernet = sum_b / static_cast<double>(n);
  double ss_l = 0.0;
  double ss_b = 0.0;
  for (const auto& p : r.pairs) {
    ss_l += (p.lenet5 - r.mean_lenet5) * (p.lenet5 - r.mean_lenet5);
    ss_b += (p.bordernet - r.mean_bordernet) * (p.bordernet - r.mean_bordernet);
  }
  r.std_lenet5 = n > 1 ? std::sqrt(ss_l / static_cast<double>(n - 1)) : 0.0;
  r.std_bordernet = n > 1 ? std::sqrt(ss_b / static_cast<double>(n - 1)) : 0.0;
  try {
    const auto boot = stats::bootstrap_median_improvement(r.pairs, resamples, seed, mode);
    r.improvement_median_pct = boot.median_pct;
    r.ci_low_pct = boot.ci_low_pct;
    r.ci_high_pct = boot.ci_high_pct;
  } catch (const std::invalid_argument& e) {
    r.improvement_median_pct = r.ci_low_pct = r.ci_high_pct = kNaN;
    r.error = e.what();
  }
  return r;
}

Experiment::Experiment(ExperimentConfig config, data::DatasetSplit split)
    : config_(std::move(config)), occlusions_(config_.occlusions()) {
  config_.validate();
  const data::LabeledSet train_raw = split.train.head(config_.train_limit);
  test_raw_ = split.test.head(config_.test_limit);
  train_ = data::normalize(train_raw);
  test_clean_ = data::normalize(test_raw_);
}

CycleResult Experiment::run_cycle(int index) const {
  const std::uint64_t seed = config_.base_seed + static_cast<std::uint64_t>(index);
  try {
    nn::TrainConfig tc;
    tc.epochs = config_.epochs;
    tc.batch = config_.batch;
    tc.shuffle_seed = seed;
    if (config_.verbose) {
      tc.on_epoch = [index](int epoch, double loss) {
        std::cerr << "  cycle " << index << " epoch " << epoch + 1 << " loss " << loss << '\n';
      };
    }
    const nn::Model lenet = nn::train(nn::lenet5_spec(model_seed(seed, 1)), train_, tc);
    const nn::Model border =
        nn::train(nn::bordernet_spec(config_.bordernet_mode, model_seed(seed, 2)), train_, tc);

    CycleResult out;
    out.cycle = index;
    out.clean = {nn::evaluate(lenet, test_clean_), nn::evaluate(border, test_clean_)};
    out.cells.reserve(occlusions_.size());
    for (const auto& occ : occlusions_) {
      const data::NormalizedSet test = data::normalize(data::occlude(test_raw_, occ));
      out.cells.push_back({nn::evaluate(lenet, test), nn::evaluate(border, test)});
    }
    return out;
  } catch (const std::exception& e) {
    throw std::runtime_error("cycle " + std::to_string(index) + " (seed " + std::to_string(seed) +
                             "): " + e.what());
  }
}

std::vector<CellResult> Experiment::run(
    const std::function<void(const CycleResult&)>& on_cycle) const {
  const auto n_cycles = static_cast<std::size_t>(config_.cycles);
  std::vector<std::optional<CycleResult>> cycles(n_cycles);
  std::vector<std::exception_ptr> errors(n_cycles);
  std::atomic<std::size_t> next{0};
  std::mutex report;

  const auto worker = [&] {
    for (std::size_t i = next++; i < n_cycles; i = next++) {
      try {
        cycles[i] = run_cycle(static_cast<int>(i));
        if (on_cycle) {
          std::lock_guard lock(report);
          on_cycle(*cycles[i]);
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(config_.jobs), n_cycles);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<CellResult> results;
  results.reserve(occlusions_.size());
  for (std::size_t c = 0; c < occlusions_.size(); ++c) {
    std::vector<stats::AccuracyPair> pairs;
    pairs.reserve(n_cycles);
    for (const auto& cyc : cycles) pairs.push_back(cyc->cells[c]);
    results.push_back(summarize_cell(config_.dataset, occlusions_[c], std::move(pairs),
                                     config_.resamples, cell_seed(config_.base_seed, c),
                                     config_.improvement));
  }
  return results;
}

std::vector<CellResult> run_experiment(const ExperimentConfig& config) {
  config.validate();
  Experiment experiment(config, data::load_dataset(config.dataset, config.data_dir));
  const auto results = experiment.run([&](const CycleResult& c) {
    if (config.verbose) {
      std::cerr << "cycle " << c.cycle << " clean accuracy lenet5=" << c.clean.lenet5
                << " bordernet=" << c.clean.bordernet << '\n';
    }
  });
  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    emit_csv(results, config.out_dir / "results.csv");
    std::ofstream(config.out_dir / "cycles.csv") << cycles_csv(results);
    for (vision::OcclusionKind kind : config.kinds) {
      std::vector<CellResult> subset;
      for (const auto& r : results) {
        if (r.occlusion.kind == kind) subset.push_back(r);
      }
      const std::string stem = config.dataset + "_" + vision::to_string(kind);
      emit_heatmap_svg(subset, config.out_dir / (stem + "_improvement.svg"),
                       HeatmapValue::improvement, stem + ": BorderNet / LeNet5 improvement (%)");
      emit_heatmap_svg(subset, config.out_dir / (stem + "_lenet5.svg"), HeatmapValue::mean_lenet5,
                       stem + ": LeNet5 mean accuracy");
      emit_heatmap_svg(subset, config.out_dir / (stem + "_bordernet.svg"),
                       HeatmapValue::mean_bordernet, stem + ": BorderNet mean accuracy");
    }
  }
  return results;
}

std::string results_csv(const std::vector<CellResult>& results) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : results) {
    os << r.dataset << ',' << vision::to_string(r.occlusion.kind) << ',' << r.occlusion.w << ','
       << r.occlusion.s << ',' << format_double(r.mean_lenet5) << ','
       << format_double(r.std_lenet5) << ',' << format_double(r.mean_bordernet) << ','
       << format_double(r.std_bordernet) << ',' << format_double(r.improvement_median_pct) << ','
       << format_double(r.ci_low_pct) << ',' << format_double(r.ci_high_pct) << ','
       << r.cycles() << '\n';
  }
  return os.str();
}

void emit_csv(const std::vector<CellResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << results_csv(results);
  if (!out) throw std::runtime_error("short write to " + path.string());
}

std::vector<CellResult> parse_results_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader) {
    throw std::invalid_argument("results CSV: missing or unexpected header");
  }
  std::vector<CellResult> out;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != 12) {
      throw std::invalid_argument("results CSV: expected 12 fields, got " + std::to_string(f.size()));
    }
    CellResult r;
    r.dataset = f[0];
    r.occlusion = {vision::parse_occlusion_kind(f[1]), std::stoi(f[2]), std::stoi(f[3])};
    r.mean_lenet5 = parse_number(f[4]);
    r.std_lenet5 = parse_number(f[5]);
    r.mean_bordernet = parse_number(f[6]);
    r.std_bordernet = parse_number(f[7]);
    r.improvement_median_pct = parse_number(f[8]);
    r.ci_low_pct = parse_number(f[9]);
    r.ci_high_pct = parse_number(f[10]);
    if (std::stoul(f[11]) == 0) r.error = "no cycles";
    out.push_back(std::move(r));
  }
  return out;
}

std::string cycles_csv(const std::vector<CellResult>& results) {
  std::ostringstream os;
  os << "dataset,kind,w,s,cycle,acc_lenet5,acc_bordernet\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
      os << r.dataset << ',' << vision::to_string(r.occlusion.kind) << ',' << r.occlusion.w << ','
         << r.occlusion.s << ',' << i << ',' << format_double(r.pairs[i].lenet5) << ','
         << format_double(r.pairs[i].bordernet) << '\n';
    }
  }
  return os.str();
}

namespace {

struct Rgb {
  double r, g, b;
};

Rgb mix(Rgb a, Rgb b, double t) {
  t = std::clamp(t, 0.0, 1.0);
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

std::string css(Rgb c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rgb(%d,%d,%d)", static_cast<int>(std::lround(c.r)),
                static_cast<int>(std::lround(c.g)), static_cast<int>(std::lround(c.b)));
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += ch;
    }
  }
  return out;
}

double cell_value(const CellResult& r, HeatmapValue value) {
  switch (value) {
    case HeatmapValue::improvement:
      return r.improvement_median_pct;
    case HeatmapValue::mean_lenet5:
      return r.mean_lenet5;
    case HeatmapValue::mean_bordernet:
      return r.mean_bordernet;
  }
  return kNaN;
}

}  // namespace

std::string heatmap_svg(const std::vector<CellResult>& results, HeatmapValue value,
                        const std::string& title) {
  constexpr int kCell = 52;
  constexpr int kLeft = 60;
  constexpr int kTop = 60;
  constexpr int kWidth = kLeft + 10 * kCell + 30;
  constexpr int kHeight = kTop + 10 * kCell + 70;
  const Rgb white{255, 255, 255};
  const Rgb red{178, 24, 43};
  const Rgb blue{33, 102, 172};
  const Rgb dark{8, 48, 107};

  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (const auto& r : results) {
    const double v = cell_value(r, value);
    if (std::isnan(v)) continue;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const bool any = std::isfinite(vmin);
  const double spread = any ? std::max({std::abs(vmax - 100.0), std::abs(vmin - 100.0), 1e-9}) : 1.0;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"15\">" << escape_xml(title) << "</text>\n"
     << "<text x=\"" << kLeft + 5 * kCell << "\" y=\"" << kTop - 12
     << "\" font-size=\"12\" text-anchor=\"middle\">spacing s</text>\n"
     << "<text x=\"16\" y=\"" << kTop + 5 * kCell << "\" font-size=\"12\" transform=\"rotate(-90 16 "
     << kTop + 5 * kCell << ")\" text-anchor=\"middle\">width w</text>\n";
  for (int k = 1; k <= 10; ++k) {
    os << "<text x=\"" << kLeft + (k - 1) * kCell + kCell / 2 << "\" y=\"" << kTop - 2
       << "\" font-size=\"11\" text-anchor=\"middle\">" << k << "</text>\n"
       << "<text x=\"" << kLeft - 6 << "\" y=\"" << kTop + (k - 1) * kCell + kCell / 2 + 4
       << "\" font-size=\"11\" text-anchor=\"end\">" << k << "</text>\n";
  }
  for (int w = 1; w <= 10; ++w) {
    for (int s = 1; s <= 10; ++s) {
      const auto it = std::find_if(results.begin(), results.end(), [&](const CellResult& r) {
        return r.occlusion.w == w && r.occlusion.s == s;
      });
      const int x = kLeft + (s - 1) * kCell;
      const int y = kTop + (w - 1) * kCell;
      const double v = it == results.end() ? kNaN : cell_value(*it, value);
      std::string fill = "rgb(220,220,220)";
      std::string label;
      if (!std::isnan(v)) {
        if (value == HeatmapValue::improvement) {
          const double t = (v - 100.0) / spread;
          fill = css(t >= 0 ? mix(white, red, t) : mix(white, blue, -t));
          label = format_double(std::round(v * 10.0) / 10.0, 5);
        } else {
          fill = css(mix(white, dark, v));
          char buf[16];
          std::snprintf(buf, sizeof buf, "%.3f", v);
          label = buf;
        }
      }
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell << "\" height=\"" << kCell
         << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n";
      if (!label.empty()) {
        os << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 4
           << "\" font-size=\"11\" text-anchor=\"middle\">" << label << "</text>\n";
      }
    }
  }
  os << "<text class=\"legend\" x=\"" << kLeft << "\" y=\"" << kTop + 10 * kCell + 30
     << "\" font-size=\"12\">scale min = " << (any ? format_double(vmin, 6) : "n/a")
     << ", max = " << (any ? format_double(vmax, 6) : "n/a")
     << (value == HeatmapValue::improvement ? " (diverging, centred at 100%)" : "") << "</text>\n"
     << "</svg>\n";
  return os.str();
}

void emit_heatmap_svg(const std::vector<CellResult>& results, const std::filesystem::path& path,
                      HeatmapValue value, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << heatmap_svg(results, value, title);
}

}  // namespace bordernet::harness
