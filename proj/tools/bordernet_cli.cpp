#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "bordernet/datasets.hpp"
#include "bordernet/filters.hpp"
#include "bordernet/geodesy.hpp"
#include "bordernet/harness.hpp"
#include "bordernet/nn/spec.hpp"
#include "bordernet/nn/training.hpp"
#include "bordernet/vision.hpp"

namespace fs = std::filesystem;
using namespace bordernet;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

struct GeodesicsArgs {
  double energy = geodesy::kDefaultEnergy;
  std::string gammas;
  int fan = 11;
  double t_end = geodesy::kDefaultTEnd;
  double dt = geodesy::kDefaultDt;
  std::string system = "reduced";
  fs::path out;
  fs::path svg;
};

int run_geodesics(const GeodesicsArgs& a) {
  const std::vector<double> gammas = a.gammas.empty() ? geodesy::fan_phases(a.fan) : parse_list(a.gammas);
  std::string csv;
  std::string svg;
  if (a.system == "reduced") {
    const auto fan = geodesy::association_fan(a.energy, gammas, a.t_end, a.dt);
    csv = geodesy::to_csv(std::span<const geodesy::ReducedTrajectory>(fan));
    svg = geodesy::fan_svg(std::span<const geodesy::ReducedTrajectory>(fan));
  } else {
    if (!(a.energy > 0.0)) throw std::invalid_argument("--energy must be > 0");
    std::vector<geodesy::FullTrajectory> fan;
    for (double g : gammas) {
      fan.push_back(geodesy::integrate(geodesy::to_full({0, 0, 0, g, 0}, a.energy), a.t_end, a.dt));
    }
    csv = geodesy::to_csv(std::span<const geodesy::FullTrajectory>(fan));
    svg = geodesy::fan_svg(std::span<const geodesy::FullTrajectory>(fan));
  }
  write_text(a.out, csv);
  if (!a.svg.empty()) write_text(a.svg, svg);
  return 0;
}

struct OccludeArgs {
  fs::path in;
  fs::path out;
  std::string kind = "stripes";
  int w = 1;
  int s = 1;
  int phase = 0;
  fs::path preview_dir;
  std::size_t preview_count = 8;
};

int run_occlude(const OccludeArgs& a) {
  const vision::OcclusionSpec spec{vision::parse_occlusion_kind(a.kind), a.w, a.s, a.phase};
  spec.validate();
  data::IdxImages images = data::load_idx_images(a.in);
  vision::occlude_bytes(images.pixels, images.rows, images.cols, vision::make_mask(images.rows, images.cols, spec));
  data::write_idx_images(a.out, images);
  if (!a.preview_dir.empty()) {
    fs::create_directories(a.preview_dir);
    const std::size_t area = std::size_t{images.rows} * images.cols;
    for (std::size_t i = 0; i < std::min<std::size_t>(a.preview_count, images.count); ++i) {
      const auto img = vision::ImageGrid::from_bytes(images.rows, images.cols,
                                                     std::span(images.pixels).subspan(i * area, area));
      char name[32];
      std::snprintf(name, sizeof name, "preview_%03zu.pgm", i);
      vision::write_pgm(a.preview_dir / name, img);
    }
  }
  std::cerr << "occluded " << images.count << " images (" << a.kind << ", w=" << a.w << ", s=" << a.s
            << ") -> " << a.out.string() << '\n';
  return 0;
}

struct OrientationArgs {
  fs::path in;
  int bins = vision::kDefaultOrientationBins;
  double eps = vision::kDefaultGradientEpsilon;
  fs::path out;
};

int run_orientation(const OrientationArgs& a) {
  vision::ImageGrid img = vision::read_pgm(a.in);
  if (img.range == vision::RangeTag::raw) img = vision::normalize(img);
  write_text(a.out, vision::orientation_csv(vision::orientation_map(img, a.bins, a.eps)));
  return 0;
}

int run_filters(const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& k : filters::bank()) {
    const std::string stem = filters::to_string(k.orientation());
    write_text(dir / (stem + ".csv"), k.to_csv());
    vision::ImageGrid img(static_cast<std::size_t>(k.size()), static_cast<std::size_t>(k.size()),
                          vision::RangeTag::raw);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = 255.0 * k.weights()[i];
    vision::write_pgm(dir / (stem + ".pgm"), img);
  }
  std::cerr << "wrote 4 kernels to " << dir.string() << '\n';
  return 0;
}

struct TrainArgs {
  std::string model = "lenet5";
  std::string dataset = "mnist";
  fs::path data_dir = "data";
  std::uint64_t seed = 42;
  int epochs = 10;
  std::size_t batch = 64;
  std::size_t train_limit = 0;
  fs::path out;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  const auto split = data::load_dataset(a.dataset, a.data_dir);
  const auto train = data::normalize(split.train.head(a.train_limit));
  nn::TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.shuffle_seed = a.seed;
  if (!a.quiet) {
    cfg.on_epoch = [](int epoch, double loss) {
      std::cerr << "epoch " << epoch + 1 << " loss " << loss << '\n';
    };
  }
  const nn::Model model = nn::train(nn::model_spec(a.model, a.seed), train, cfg);
  const double acc = nn::evaluate(model, data::normalize(split.test));
  std::cout << "test_accuracy " << std::setprecision(6) << acc << '\n';
  if (!a.out.empty()) nn::save_checkpoint(a.out, model);
  return 0;
}

struct EvalArgs {
  fs::path model_file;
  std::string dataset = "mnist";
  fs::path data_dir = "data";
  std::string occlusion;
  std::size_t test_limit = 0;
};

int run_eval(const EvalArgs& a) {
  const nn::Model model = nn::load_checkpoint(a.model_file);
  data::LabeledSet test = data::load_dataset(a.dataset, a.data_dir).test.head(a.test_limit);
  if (!a.occlusion.empty()) test = data::occlude(test, vision::parse_occlusion(a.occlusion));
  std::cout << "accuracy " << std::setprecision(6) << nn::evaluate(model, data::normalize(test)) << '\n';
  return 0;
}

// Flat key=value bench configuration. Keys without a section belong to the
// bench subcommand; '#' starts a comment so cell lists may contain ';'.
class BenchConfig : public CLI::ConfigINI {
 public:
  BenchConfig() {
    comment('#');
    arrayDelimiter('\x1f');
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    for (auto& item : items) {
      if (item.parents.empty() || item.parents == std::vector<std::string>{"default"}) item.parents = {"bench"};
    }
    return items;
  }
};

struct BenchArgs {
  harness::ExperimentConfig cfg;
  std::string kind = "stripes";
  std::string cells;
  std::string improvement = "per-cycle-ratio";
  std::string bordernet_mode = "bank";
};

int run_bench(BenchArgs a) {
  auto& cfg = a.cfg;
  if (a.kind == "both") {
    cfg.kinds = {vision::OcclusionKind::stripes, vision::OcclusionKind::grid};
  } else {
    cfg.kinds = {vision::parse_occlusion_kind(a.kind)};
  }
  if (!cfg.full_grid) {
    cfg.cells = harness::parse_cells(a.cells);
    if (cfg.cells.empty()) throw std::invalid_argument("bench: give --cells or --full-grid");
  }
  cfg.improvement = stats::parse_improvement_mode(a.improvement);
  cfg.bordernet_mode = nn::parse_bordernet_mode(a.bordernet_mode);
  const auto results = harness::run_experiment(cfg);
  std::cout << harness::results_csv(results);
  int failed = 0;
  for (const auto& r : results) {
    if (!r.ok()) {
      ++failed;
      std::cerr << "cell " << vision::to_string(r.occlusion.kind) << " (" << r.occlusion.w << ","
                << r.occlusion.s << ") failed: " << r.error << '\n';
    }
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BorderNet: SE(2) geodesics, oriented filters and occlusion benchmarks"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<BenchConfig>());
  app.set_config("--config", "", "Flat key=value file of bench options; flags take precedence");
  const auto data_dir_option = [](CLI::App* sub, fs::path& dir) {
    sub->add_option("--data-dir", dir, "Dataset root")->envname("BORDERNET_DATA_DIR");
  };

  GeodesicsArgs geo;
  auto* g = app.add_subcommand("geodesics", "Integrate a fan of geodesics and write CSV");
  g->add_option("--energy", geo.energy, "Energy E = p1^2 + p2^2");
  auto* gammas = g->add_option("--gammas", geo.gammas, "Comma-separated initial phases");
  g->add_option("--fan", geo.fan, "Number of evenly spaced phases in (0, 2pi)")->excludes(gammas);
  g->add_option("--t-end", geo.t_end);
  g->add_option("--dt", geo.dt);
  g->add_option("--system", geo.system)->check(CLI::IsMember({"full", "reduced"}));
  g->add_option("--out", geo.out, "CSV output (stdout if omitted)");
  g->add_option("--svg", geo.svg, "SVG of the (x, y) projection");

  OccludeArgs occ;
  auto* o = app.add_subcommand("occlude", "Black out an IDX image file with stripes or a grid");
  o->add_option("--in", occ.in)->required();
  o->add_option("--out", occ.out)->required();
  o->add_option("--kind", occ.kind)->check(CLI::IsMember({"stripes", "grid"}));
  o->add_option("--w", occ.w)->check(CLI::PositiveNumber);
  o->add_option("--s", occ.s)->check(CLI::PositiveNumber);
  o->add_option("--phase", occ.phase);
  o->add_option("--png-preview", occ.preview_dir, "Directory for PGM previews of the first images");
  o->add_option("--preview-count", occ.preview_count);

  OrientationArgs ori;
  auto* r = app.add_subcommand("orientation", "Orientation map of a PGM image as CSV");
  r->add_option("--in", ori.in)->required();
  r->add_option("--bins", ori.bins);
  r->add_option("--eps", ori.eps, "Gradient magnitude threshold");
  r->add_option("--out", ori.out);

  fs::path dump_dir;
  auto* f = app.add_subcommand("filters", "Dump the oriented kernels as CSV and PGM");
  f->add_option("--dump", dump_dir)->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train LeNet5 or BorderNet on clean data");
  t->add_option("--model", tr.model)->check(CLI::IsMember({"lenet5", "bordernet", "bordernet-bank", "bordernet-cascade"}));
  t->add_option("--dataset", tr.dataset)->check(CLI::IsMember(data::dataset_names()));
  data_dir_option(t, tr.data_dir);
  t->add_option("--seed", tr.seed);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--batch", tr.batch);
  t->add_option("--train-limit", tr.train_limit, "Use the first N training images (0 = all)");
  t->add_option("--out", tr.out, "Checkpoint path");
  t->add_flag("--quiet", tr.quiet);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint, optionally on occluded test images");
  e->add_option("--model-file", ev.model_file)->required();
  e->add_option("--dataset", ev.dataset)->check(CLI::IsMember(data::dataset_names()));
  data_dir_option(e, ev.data_dir);
  e->add_option("--occlusion", ev.occlusion, "kind,w,s");
  e->add_option("--test-limit", ev.test_limit);

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Multi-cycle LeNet5 vs BorderNet occlusion benchmark");
  b->fallthrough();
  b->add_option("--dataset", bench.cfg.dataset)->check(CLI::IsMember(data::dataset_names()));
  data_dir_option(b, bench.cfg.data_dir);
  b->add_option("--kind", bench.kind)->check(CLI::IsMember({"stripes", "grid", "both"}));
  auto* cells = b->add_option("--cells", bench.cells, "\"w1,s1;w2,s2\"");
  b->add_flag("--full-grid", bench.cfg.full_grid)->excludes(cells);
  b->add_option("--cycles", bench.cfg.cycles);
  b->add_option("--seed", bench.cfg.base_seed);
  b->add_option("--epochs", bench.cfg.epochs);
  b->add_option("--batch", bench.cfg.batch);
  b->add_option("--train-limit", bench.cfg.train_limit);
  b->add_option("--test-limit", bench.cfg.test_limit);
  b->add_option("--resamples", bench.cfg.resamples);
  b->add_option("--improvement", bench.improvement)->check(CLI::IsMember({"per-cycle-ratio", "ratio-of-means"}));
  b->add_option("--bordernet-mode", bench.bordernet_mode)->check(CLI::IsMember({"bank", "cascade"}));
  b->add_option("--jobs", bench.cfg.jobs);
  b->add_option("--out", bench.cfg.out_dir, "Directory for results.csv, cycles.csv and heatmaps");
  b->add_flag("--verbose", bench.cfg.verbose);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) return run_geodesics(geo);
    if (*o) return run_occlude(occ);
    if (*r) return run_orientation(ori);
    if (*f) return run_filters(dump_dir);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*b) return run_bench(bench);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
