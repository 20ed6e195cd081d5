#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bordernet/bootstrap.hpp"
#include "bordernet/datasets.hpp"
#include "bordernet/filters.hpp"
#include "bordernet/geodesy.hpp"
#include "bordernet/nn/network.hpp"
#include "bordernet/nn/spec.hpp"
#include "bordernet/nn/training.hpp"
#include "bordernet/vision.hpp"

namespace py = pybind11;
using namespace bordernet;

namespace {

template <typename State>
py::dict trajectory_dict(const geodesy::Trajectory<State>& t) {
  const std::size_t n = t.states.size();
  py::array_t<double> time(n), x(n), y(n), theta(n);
  auto tt = time.mutable_unchecked<1>();
  auto xx = x.mutable_unchecked<1>();
  auto yy = y.mutable_unchecked<1>();
  auto th = theta.mutable_unchecked<1>();
  for (std::size_t i = 0; i < n; ++i) {
    tt(i) = t.times[i];
    xx(i) = t.states[i].x;
    yy(i) = t.states[i].y;
    th(i) = t.states[i].theta;
  }
  py::dict out;
  out["t"] = time;
  out["x"] = x;
  out["y"] = y;
  out["theta"] = theta;
  out["energy"] = t.energy;
  return out;
}

vision::OcclusionSpec occlusion(const std::string& kind, int w, int s) {
  vision::OcclusionSpec spec{vision::parse_occlusion_kind(kind), w, s};
  spec.validate();
  return spec;
}

vision::ImageGrid to_grid(const py::array_t<double, py::array::c_style | py::array::forcecast>& image) {
  if (image.ndim() != 2) throw std::invalid_argument("expected a 2-D image");
  vision::ImageGrid grid(image.shape(0), image.shape(1), vision::RangeTag::raw);
  std::copy(image.data(), image.data() + image.size(), grid.pixels.begin());
  return grid;
}

py::array_t<std::uint8_t> mask_array(const vision::Mask& m) {
  py::array_t<std::uint8_t> out({m.height, m.width});
  std::copy(m.occluded.begin(), m.occluded.end(), out.mutable_data());
  return out;
}

std::vector<stats::AccuracyPair> pairs_from(const std::vector<double>& lenet5, const std::vector<double>& bordernet) {
  if (lenet5.size() != bordernet.size()) throw std::invalid_argument("accuracy lists differ in length");
  std::vector<stats::AccuracyPair> pairs(lenet5.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i] = {lenet5[i], bordernet[i]};
  return pairs;
}

py::dict result_dict(const stats::BootstrapResult& r) {
  py::dict out;
  out["median_pct"] = r.median_pct;
  out["ci_low_pct"] = r.ci_low_pct;
  out["ci_high_pct"] = r.ci_high_pct;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "BorderNet core: SE(2) geodesics, orientation maps, occlusions and the CNN benchmark";

  m.def(
      "geodesic",
      [](double energy, double gamma0, double gammadot0, double t_end, double dt, const std::string& system) {
        const geodesy::ReducedState r0{0, 0, 0, gamma0, gammadot0};
        if (system == "reduced") return trajectory_dict(geodesy::integrate(r0, energy, t_end, dt));
        if (system == "full") return trajectory_dict(geodesy::integrate(geodesy::to_full(r0, energy), t_end, dt));
        throw std::invalid_argument("system must be 'reduced' or 'full'");
      },
      py::arg("energy") = geodesy::kDefaultEnergy, py::arg("gamma0") = 0.0, py::arg("gammadot0") = 0.0,
      py::arg("t_end") = geodesy::kDefaultTEnd, py::arg("dt") = geodesy::kDefaultDt, py::arg("system") = "reduced");

  m.def(
      "association_fan",
      [](double energy, std::vector<double> gammas, double t_end, double dt) {
        py::list out;
        for (const auto& t : geodesy::association_fan(energy, gammas, t_end, dt)) out.append(trajectory_dict(t));
        return out;
      },
      py::arg("energy"), py::arg("gammas"), py::arg("t_end") = geodesy::kDefaultTEnd,
      py::arg("dt") = geodesy::kDefaultDt);
  m.def("fan_phases", &geodesy::fan_phases, py::arg("n"));

  m.def(
      "orientation_map",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> image, int bins, double eps) {
        const auto map = vision::orientation_map(to_grid(image), bins, eps);
        py::array_t<double> out({map.height, map.width});
        std::copy(map.theta.begin(), map.theta.end(), out.mutable_data());
        return out;
      },
      py::arg("image"), py::arg("bins") = vision::kDefaultOrientationBins,
      py::arg("eps") = vision::kDefaultGradientEpsilon);

  m.def(
      "occlusion_mask",
      [](const std::string& kind, int w, int s, std::size_t height, std::size_t width) {
        return mask_array(vision::make_mask(height, width, occlusion(kind, w, s)));
      },
      py::arg("kind"), py::arg("w"), py::arg("s"), py::arg("height") = data::kSide, py::arg("width") = data::kSide);

  m.def(
      "occlude",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> images, const std::string& kind, int w,
         int s) {
        if (images.ndim() < 2) throw std::invalid_argument("expected (..., height, width) bytes");
        const auto h = static_cast<std::size_t>(images.shape(images.ndim() - 2));
        const auto wd = static_cast<std::size_t>(images.shape(images.ndim() - 1));
        py::array_t<std::uint8_t> out(std::vector<py::ssize_t>(images.shape(), images.shape() + images.ndim()));
        std::copy(images.data(), images.data() + images.size(), out.mutable_data());
        vision::occlude_bytes(std::span<std::uint8_t>(out.mutable_data(), static_cast<std::size_t>(out.size())), h, wd,
                              vision::make_mask(h, wd, occlusion(kind, w, s)));
        return out;
      },
      py::arg("images"), py::arg("kind"), py::arg("w"), py::arg("s"));

  m.def("filter_bank", [] {
    const auto bank = filters::bank();
    py::array_t<double> out({bank.size(), std::size_t{7}, std::size_t{7}});
    double* dst = out.mutable_data();
    for (const auto& k : bank) dst = std::copy(k.weights().begin(), k.weights().end(), dst);
    return out;
  });

  m.def(
      "bootstrap_improvement",
      [](const std::vector<double>& lenet5, const std::vector<double>& bordernet, std::size_t resamples,
         std::uint64_t seed, const std::string& mode) {
        const auto pairs = pairs_from(lenet5, bordernet);
        return result_dict(stats::bootstrap_median_improvement(pairs, resamples, seed, stats::parse_improvement_mode(mode)));
      },
      py::arg("lenet5"), py::arg("bordernet"), py::arg("resamples") = 100000, py::arg("seed") = 42,
      py::arg("mode") = "per-cycle-ratio");
  m.def(
      "bootstrap_exhaustive",
      [](const std::vector<double>& lenet5, const std::vector<double>& bordernet, const std::string& mode) {
        const auto pairs = pairs_from(lenet5, bordernet);
        return result_dict(stats::bootstrap_exhaustive(pairs, stats::parse_improvement_mode(mode)));
      },
      py::arg("lenet5"), py::arg("bordernet"), py::arg("mode") = "per-cycle-ratio");

  m.def(
      "parameter_count",
      [](const std::string& model, bool trainable_only) {
        return nn::Model(nn::model_spec(model, 42)).parameter_count(trainable_only);
      },
      py::arg("model"), py::arg("trainable_only") = true);
  m.def(
      "model_spec_json", [](const std::string& model, std::uint64_t seed) { return nn::model_spec(model, seed).to_json(); },
      py::arg("model"), py::arg("seed") = 42);

  m.def(
      "train_and_evaluate",
      [](const std::string& model, const std::string& dataset, const std::filesystem::path& data_dir, int epochs,
         std::size_t train_limit, std::size_t test_limit, std::uint64_t seed, const std::string& occlusion) {
        py::gil_scoped_release release;
        const auto split = data::load_dataset(dataset, data_dir);
        nn::TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.shuffle_seed = seed;
        const auto net = nn::train(nn::model_spec(model, seed), data::normalize(split.train.head(train_limit)), cfg);
        auto test = split.test.head(test_limit);
        if (!occlusion.empty()) test = data::occlude(test, vision::parse_occlusion(occlusion));
        return nn::evaluate(net, data::normalize(test));
      },
      py::arg("model"), py::arg("dataset") = "mnist", py::arg("data_dir") = "data", py::arg("epochs") = 10,
      py::arg("train_limit") = 0, py::arg("test_limit") = 0, py::arg("seed") = 42, py::arg("occlusion") = "");
}
