#include "bordernet/nn/spec.hpp"

#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "bordernet/filters.hpp"

namespace bordernet::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

std::size_t conv_extent(std::size_t in, int k, int stride, int pad) {
  const long span = static_cast<long>(in) + 2L * pad - k;
  if (span < 0) throw std::invalid_argument("conv: kernel larger than padded input");
  return static_cast<std::size_t>(span / stride + 1);
}

}  // namespace

std::vector<Shape> NetworkSpec::shapes() const {
  if (input.size() != 3) throw std::invalid_argument("network input must be (C, H, W)");
  std::vector<Shape> out;
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string where = "layer " + std::to_string(i) + ": ";
    cur = std::visit(
        Overloaded{
            [&](const ConvSpec& c) -> Shape {
              if (cur.size() != 3) throw std::invalid_argument(where + "conv expects (C,H,W) input");
              if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1 || c.pad < 0) {
                throw std::invalid_argument(where + "bad conv geometry");
              }
              if (!c.trainable) {
                const std::size_t need = static_cast<std::size_t>(c.out_channels) * cur[0] *
                                         static_cast<std::size_t>(c.kernel * c.kernel);
                if (c.fixed_weights.size() != need ||
                    c.fixed_bias.size() != static_cast<std::size_t>(c.out_channels)) {
                  throw std::invalid_argument(where + "fixed conv weights have the wrong size");
                }
              }
              return {static_cast<std::size_t>(c.out_channels),
                      conv_extent(cur[1], c.kernel, c.stride, c.pad),
                      conv_extent(cur[2], c.kernel, c.stride, c.pad)};
            },
            [&](const ReluSpec&) -> Shape { return cur; },
            [&](const MaxPoolSpec& p) -> Shape {
              if (cur.size() != 3) throw std::invalid_argument(where + "pool expects (C,H,W) input");
              const auto k = static_cast<std::size_t>(p.size);
              if (k < 1 || cur[1] < k || cur[2] < k) {
                throw std::invalid_argument(where + "pool window does not fit");
              }
              return {cur[0], cur[1] / k, cur[2] / k};
            },
            [&](const FlattenSpec&) -> Shape { return {shape_size(cur)}; },
            [&](const DenseSpec& d) -> Shape {
              if (cur.size() != 1) throw std::invalid_argument(where + "dense expects flat input");
              if (d.out_dim < 1) throw std::invalid_argument(where + "dense out_dim must be >= 1");
              return {static_cast<std::size_t>(d.out_dim)};
            },
        },
        layers[i]);
    out.push_back(cur);
  }
  if (cur.size() != 1 || cur[0] != static_cast<std::size_t>(classes)) {
    throw std::invalid_argument("network output " + shape_string(cur) + " does not match " +
                                std::to_string(classes) + " classes");
  }
  return out;
}

std::string NetworkSpec::to_json() const {
  using nlohmann::json;
  json layers_json = json::array();
  for (const auto& layer : layers) {
    layers_json.push_back(std::visit(
        Overloaded{
            [](const ConvSpec& c) {
              json j{{"type", "conv"},  {"out_channels", c.out_channels}, {"kernel", c.kernel},
                     {"stride", c.stride}, {"pad", c.pad}, {"trainable", c.trainable}};
              if (!c.trainable) {
                j["fixed_weights"] = c.fixed_weights;
                j["fixed_bias"] = c.fixed_bias;
              }
              return j;
            },
            [](const ReluSpec&) { return json{{"type", "relu"}}; },
            [](const MaxPoolSpec& p) { return json{{"type", "maxpool"}, {"size", p.size}}; },
            [](const FlattenSpec&) { return json{{"type", "flatten"}}; },
            [](const DenseSpec& d) { return json{{"type", "dense"}, {"out_dim", d.out_dim}}; },
        },
        layer));
  }
  json j{{"name", name}, {"input", input}, {"layers", layers_json},
         {"classes", classes}, {"seed", seed}};
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  using nlohmann::json;
  NetworkSpec spec;
  try {
    const json j = json::parse(text);
    spec.name = j.at("name").get<std::string>();
    spec.input = j.at("input").get<Shape>();
    spec.classes = j.at("classes").get<int>();
    spec.seed = j.at("seed").get<std::uint64_t>();
    for (const json& l : j.at("layers")) {
      const auto type = l.at("type").get<std::string>();
      if (type == "conv") {
        ConvSpec c;
        c.out_channels = l.at("out_channels").get<int>();
        c.kernel = l.at("kernel").get<int>();
        c.stride = l.at("stride").get<int>();
        c.pad = l.at("pad").get<int>();
        c.trainable = l.at("trainable").get<bool>();
        if (!c.trainable) {
          c.fixed_weights = l.at("fixed_weights").get<std::vector<double>>();
          c.fixed_bias = l.at("fixed_bias").get<std::vector<double>>();
        }
        spec.layers.emplace_back(std::move(c));
      } else if (type == "relu") {
        spec.layers.emplace_back(ReluSpec{});
      } else if (type == "maxpool") {
        spec.layers.emplace_back(MaxPoolSpec{l.at("size").get<int>()});
      } else if (type == "flatten") {
        spec.layers.emplace_back(FlattenSpec{});
      } else if (type == "dense") {
        spec.layers.emplace_back(DenseSpec{l.at("out_dim").get<int>()});
      } else {
        throw std::invalid_argument("unknown layer type '" + type + "'");
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("network spec: ") + e.what());
  }
  spec.shapes();
  return spec;
}

std::string to_string(BorderNetMode mode) { return mode == BorderNetMode::bank ? "bank" : "cascade"; }

BorderNetMode parse_bordernet_mode(const std::string& text) {
  if (text == "bank") return BorderNetMode::bank;
  if (text == "cascade") return BorderNetMode::cascade;
  throw std::invalid_argument("unknown BorderNet mode '" + text + "' (expected bank|cascade)");
}

NetworkSpec lenet5_spec(std::uint64_t seed, int in_channels) {
  NetworkSpec spec;
  spec.name = "lenet5";
  spec.input = {static_cast<std::size_t>(in_channels), 28, 28};
  spec.seed = seed;
  spec.layers = {
      ConvSpec{.out_channels = 6, .kernel = 5, .stride = 1, .pad = 2},
      ReluSpec{},
      MaxPoolSpec{2},
      ConvSpec{.out_channels = 16, .kernel = 5, .stride = 1, .pad = 0},
      ReluSpec{},
      MaxPoolSpec{2},
      FlattenSpec{},
      DenseSpec{120},
      ReluSpec{},
      DenseSpec{84},
      ReluSpec{},
      DenseSpec{10},
  };
  return spec;
}

NetworkSpec bordernet_spec(BorderNetMode mode, std::uint64_t seed) {
  const std::vector<filters::FilterKernel> kernels = filters::bank();
  NetworkSpec spec;
  std::vector<LayerSpec> front;
  if (mode == BorderNetMode::bank) {
    ConvSpec conv{.out_channels = static_cast<int>(kernels.size()),
                  .kernel = filters::kDefaultSize,
                  .stride = 1,
                  .pad = filters::kDefaultSize / 2,
                  .trainable = false};
    for (const auto& k : kernels) {
      const auto w = k.normalized();
      conv.fixed_weights.insert(conv.fixed_weights.end(), w.begin(), w.end());
    }
    conv.fixed_bias.assign(kernels.size(), 0.0);
    front.emplace_back(std::move(conv));
    spec = lenet5_spec(seed, static_cast<int>(kernels.size()));
    spec.name = "bordernet";
  } else {
    for (const auto& k : kernels) {
      front.emplace_back(ConvSpec{.out_channels = 1,
                                  .kernel = filters::kDefaultSize,
                                  .stride = 1,
                                  .pad = filters::kDefaultSize / 2,
                                  .trainable = false,
                                  .fixed_weights = k.normalized(),
                                  .fixed_bias = {0.0}});
    }
    spec = lenet5_spec(seed, 1);
    spec.name = "bordernet-cascade";
  }
  spec.input = {1, 28, 28};
  spec.layers.insert(spec.layers.begin(), front.begin(), front.end());
  return spec;
}

NetworkSpec model_spec(const std::string& name, std::uint64_t seed) {
  if (name == "lenet5") return lenet5_spec(seed);
  if (name == "bordernet" || name == "bordernet-bank") return bordernet_spec(BorderNetMode::bank, seed);
  if (name == "bordernet-cascade") return bordernet_spec(BorderNetMode::cascade, seed);
  throw std::invalid_argument("unknown model '" + name +
                              "' (expected lenet5|bordernet|bordernet-cascade)");
}

}  // namespace bordernet::nn
