#pragma once

// Layers with hand-written backward passes. Every layer offers a const
// `infer` (no caching, safe for concurrent callers) and a `forward` that
// caches what `backward` needs. Parameter gradients accumulate until the
// owner zeroes them.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bordernet/nn/tensor.hpp"

namespace bordernet::nn {

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Tensor<T> infer(const Tensor<T>& x) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x) = 0;

  /// Accumulates parameter gradients and, if `need_input_grad`, returns
  /// dL/dx; otherwise returns an empty tensor.
  virtual Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

/// Cross-correlation (no kernel flip) with zero padding.
/// weight: (out, in, k, k); bias: (out).
template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t pad, bool trainable);

  std::string kind() const override { return trainable() ? "conv" : "conv(fixed)"; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  bool trainable() const { return weight_.trainable; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  const Parameter<T>& weight() const { return weight_; }
  const Parameter<T>& bias() const { return bias_; }

 private:
  std::size_t in_channels_;
  std::size_t out_channels_;
  std::size_t kernel_;
  std::size_t stride_;
  std::size_t pad_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Relu>(*this); }

 private:
  std::vector<std::uint8_t> active_;
};

/// Non-overlapping max pooling, window = stride = size. Ties go to the first
/// position in row-major window order.
template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  explicit MaxPool2d(std::size_t size) : size_(size) {}

  std::string kind() const override { return "maxpool"; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool2d>(*this); }

  /// Flat input index chosen for each output element by the last forward.
  const std::vector<std::size_t>& argmax() const { return argmax_; }

 private:
  Tensor<T> pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const;

  std::size_t size_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

template <typename T>
class Flatten final : public Layer<T> {
 public:
  std::string kind() const override { return "flatten"; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

/// y = x W^T + b. weight: (out, in); bias: (out).
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in_dim, std::size_t out_dim);

  std::string kind() const override { return "dense"; }
  Tensor<T> infer(const Tensor<T>& x) const override;
  Tensor<T> forward(const Tensor<T>& x) override;
  Tensor<T> backward(const Tensor<T>& grad_out, bool need_input_grad) override;
  std::vector<Parameter<T>*> parameters() override { return {&weight_, &bias_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_dim_;
  std::size_t out_dim_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Tensor<T> input_;
};

/// Mean softmax cross-entropy over a batch of logits (N, classes).
template <typename T>
class SoftmaxCrossEntropy {
 public:
  T forward(const Tensor<T>& logits, std::span<const int> labels);
  /// dL/dlogits for the last forward; each row sums to zero.
  Tensor<T> backward() const;

  const Tensor<T>& probabilities() const { return probs_; }

 private:
  Tensor<T> probs_;
  std::vector<int> labels_;
};

/// Row-wise softmax, max-shifted.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace bordernet::nn
