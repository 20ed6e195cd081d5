#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bordernet/nn/layers.hpp"

namespace bordernet::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators for one parameter tensor.
template <typename T>
struct AdamMoments {
  std::vector<T> m;
  std::vector<T> v;
};

/// Bias-corrected ADAM update of one parameter block at step `t` (1-based):
///   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2,
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& moments,
                 std::uint64_t t, const AdamConfig& config);

/// ADAM over a fixed set of parameters. Parameters flagged non-trainable are
/// rejected at construction, so frozen layers can never be updated.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig config = {});

  /// Applies one update from the current gradients. If any gradient entry is
  /// non-finite, throws std::runtime_error naming the parameter and leaves
  /// every parameter and moment untouched.
  void step();

  std::uint64_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<AdamMoments<T>>& moments() const { return moments_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<AdamMoments<T>> moments_;
  AdamConfig config_;
  std::uint64_t t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace bordernet::nn
