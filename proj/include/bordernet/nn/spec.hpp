#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bordernet/nn/tensor.hpp"

namespace bordernet::nn {

/// Convolution layer. A fixed (non-trainable) layer carries its weights
/// (out, in, k, k) and bias (out) explicitly.
struct ConvSpec {
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 0;
  bool trainable = true;
  std::vector<double> fixed_weights;
  std::vector<double> fixed_bias;

  bool operator==(const ConvSpec&) const = default;
};

struct ReluSpec {
  bool operator==(const ReluSpec&) const = default;
};

struct MaxPoolSpec {
  int size = 2;
  bool operator==(const MaxPoolSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

struct DenseSpec {
  int out_dim = 1;
  bool operator==(const DenseSpec&) const = default;
};

using LayerSpec = std::variant<ConvSpec, ReluSpec, MaxPoolSpec, FlattenSpec, DenseSpec>;

/// Ordered layer list ending in logits; the softmax cross-entropy head is
/// implicit. `seed` drives weight initialization.
struct NetworkSpec {
  std::string name;
  Shape input{1, 28, 28};
  std::vector<LayerSpec> layers;
  int classes = 10;
  std::uint64_t seed = 42;

  bool operator==(const NetworkSpec&) const = default;

  /// Per-sample output shape after each layer. Throws std::invalid_argument
  /// on incompatible consecutive shapes or logits that do not match classes.
  std::vector<Shape> shapes() const;

  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
};

enum class BorderNetMode { bank, cascade };

std::string to_string(BorderNetMode mode);
BorderNetMode parse_bordernet_mode(const std::string& text);

/// conv(6@5x5, pad 2) relu pool conv(16@5x5) relu pool flatten
/// dense(120) relu dense(84) relu dense(10), for an input of `in_channels`x28x28.
NetworkSpec lenet5_spec(std::uint64_t seed = 42, int in_channels = 1);

/// LeNet5 preceded by the fixed, L1-normalized orientation bank.
/// bank: one 1->4 conv (7x7, pad 3) feeding a 4-channel LeNet5.
/// cascade: four 1->1 convs applied one after another, then plain LeNet5.
NetworkSpec bordernet_spec(BorderNetMode mode = BorderNetMode::bank, std::uint64_t seed = 42);

/// Model selector used by the CLI and harness: "lenet5", "bordernet",
/// "bordernet-cascade".
NetworkSpec model_spec(const std::string& name, std::uint64_t seed);

}  // namespace bordernet::nn
