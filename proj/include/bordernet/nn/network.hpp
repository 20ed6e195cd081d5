#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "bordernet/nn/layers.hpp"
#include "bordernet/nn/spec.hpp"

namespace bordernet::nn {

/// Independent 64-bit Mersenne Twister stream `stream` of `seed`.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream);

/// Layer stack built from a NetworkSpec, with the softmax cross-entropy head.
///
/// Trainable conv and dense weights are drawn uniformly from
/// [-sqrt(6 / fan_in), +sqrt(6 / fan_in)] using make_rng(spec.seed, 0);
/// biases start at zero. Draws are made in double precision, so float and
/// double networks built from one spec start from the same values up to
/// rounding. Fixed convolutions take their weights from the spec.
template <typename T>
class Network {
 public:
  explicit Network(NetworkSpec spec);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;
  ~Network() = default;

  const NetworkSpec& spec() const { return spec_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

  /// Logits for a (N, C, H, W) batch. No state is touched.
  Tensor<T> infer(const Tensor<T>& x) const;

  /// Argmax class per sample; ties go to the lowest class.
  std::vector<int> predict(const Tensor<T>& x) const;

  /// Zeroes gradients, runs forward + backward and returns the mean loss.
  /// Backward stops at the first layer that owns trainable parameters.
  T loss_and_gradients(const Tensor<T>& x, std::span<const int> labels);

  /// Mean loss without touching gradients.
  T loss(const Tensor<T>& x, std::span<const int> labels) const;

  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::vector<Parameter<T>*> trainable_parameters();

  std::size_t parameter_count(bool trainable_only) const;

  void zero_grad();

 private:
  void build();

  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  SoftmaxCrossEntropy<T> head_;
  std::size_t first_trainable_ = 0;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace bordernet::nn
