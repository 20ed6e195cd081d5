#include "bordernet/nn/network.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bordernet::nn {

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

template <typename T>
void check_finite(const Tensor<T>& t, const std::string& where) {
#ifndef NDEBUG
  if (!t.all_finite()) throw std::runtime_error("non-finite activation after " + where);
#else
  (void)t;
  (void)where;
#endif
}

}  // namespace

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  build();
}

template <typename T>
Network<T>::Network(const Network& other)
    : spec_(other.spec_), head_(other.head_), first_trainable_(other.first_trainable_) {
  layers_.reserve(other.layers_.size());
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Network<T>& Network<T>::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
void Network<T>::build() {
  const std::vector<Shape> shapes = spec_.shapes();
  std::mt19937_64 rng = make_rng(spec_.seed, 0);
  Shape cur = spec_.input;
  first_trainable_ = spec_.layers.size();

  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    std::unique_ptr<Layer<T>> layer = std::visit(
        Overloaded{
            [&](const ConvSpec& c) -> std::unique_ptr<Layer<T>> {
              auto conv = std::make_unique<Conv2d<T>>(
                  cur[0], static_cast<std::size_t>(c.out_channels),
                  static_cast<std::size_t>(c.kernel), static_cast<std::size_t>(c.stride),
                  static_cast<std::size_t>(c.pad), c.trainable);
              if (c.trainable) {
                const double fan_in = static_cast<double>(cur[0]) * c.kernel * c.kernel;
                std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in),
                                                            std::sqrt(6.0 / fan_in));
                for (T& v : conv->weight().value.values()) v = static_cast<T>(dist(rng));
              } else {
                auto& w = conv->weight().value.values();
                auto& b = conv->bias().value.values();
                for (std::size_t k = 0; k < w.size(); ++k) w[k] = static_cast<T>(c.fixed_weights[k]);
                for (std::size_t k = 0; k < b.size(); ++k) b[k] = static_cast<T>(c.fixed_bias[k]);
              }
              return conv;
            },
            [&](const ReluSpec&) -> std::unique_ptr<Layer<T>> { return std::make_unique<Relu<T>>(); },
            [&](const MaxPoolSpec& p) -> std::unique_ptr<Layer<T>> {
              return std::make_unique<MaxPool2d<T>>(static_cast<std::size_t>(p.size));
            },
            [&](const FlattenSpec&) -> std::unique_ptr<Layer<T>> {
              return std::make_unique<Flatten<T>>();
            },
            [&](const DenseSpec& d) -> std::unique_ptr<Layer<T>> {
              auto dense = std::make_unique<Dense<T>>(cur[0], static_cast<std::size_t>(d.out_dim));
              const double fan_in = static_cast<double>(cur[0]);
              std::uniform_real_distribution<double> dist(-std::sqrt(6.0 / fan_in),
                                                          std::sqrt(6.0 / fan_in));
              for (T& v : dense->weight().value.values()) v = static_cast<T>(dist(rng));
              return dense;
            },
        },
        spec_.layers[i]);

    for (Parameter<T>* p : layer->parameters()) p->name = std::to_string(i) + "." + p->name;
    if (first_trainable_ == spec_.layers.size()) {
      for (const Parameter<T>* p : layer->parameters()) {
        if (p->trainable) {
          first_trainable_ = i;
          break;
        }
      }
    }
    layers_.push_back(std::move(layer));
    cur = shapes[i];
  }
}

template <typename T>
Tensor<T> Network<T>::infer(const Tensor<T>& x) const {
  Tensor<T> a = x;
  for (const auto& layer : layers_) {
    a = layer->infer(a);
    check_finite(a, layer->kind());
  }
  return a;
}

template <typename T>
std::vector<int> Network<T>::predict(const Tensor<T>& x) const {
  const Tensor<T> logits = infer(x);
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  std::vector<int> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (logits[r * cols + c] > logits[r * cols + best]) best = c;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

template <typename T>
T Network<T>::loss_and_gradients(const Tensor<T>& x, std::span<const int> labels) {
  zero_grad();
  Tensor<T> a = x;
  for (const auto& layer : layers_) {
    a = layer->forward(a);
    check_finite(a, layer->kind());
  }
  const T value = head_.forward(a, labels);
  Tensor<T> g = head_.backward();
  for (std::size_t i = layers_.size(); i-- > first_trainable_;) {
    g = layers_[i]->backward(g, i > first_trainable_);
  }
  return value;
}

template <typename T>
T Network<T>::loss(const Tensor<T>& x, std::span<const int> labels) const {
  SoftmaxCrossEntropy<T> head;
  return head.forward(infer(x), labels);
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& layer : layers_) {
    for (Parameter<T>* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& layer : layers_) {
    for (Parameter<T>* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::trainable_parameters() {
  std::vector<Parameter<T>*> out;
  for (Parameter<T>* p : parameters()) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count(bool trainable_only) const {
  std::size_t n = 0;
  for (const Parameter<T>* p : parameters()) {
    if (!trainable_only || p->trainable) n += p->value.size();
  }
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->grad.fill(T{});
}

template class Network<float>;
template class Network<double>;

}  // namespace bordernet::nn
