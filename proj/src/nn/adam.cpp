#include "bordernet/nn/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bordernet::nn {

template <typename T>
void adam_update(std::span<T> param, std::span<const T> grad, AdamMoments<T>& moments,
                 std::uint64_t t, const AdamConfig& config) {
  if (param.size() != grad.size()) throw std::invalid_argument("adam_update: size mismatch");
  if (t == 0) throw std::invalid_argument("adam_update: step index is 1-based");
  if (moments.m.size() != param.size()) {
    moments.m.assign(param.size(), T{});
    moments.v.assign(param.size(), T{});
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    moments.m[i] = static_cast<T>(b1 * moments.m[i] + (1.0 - b1) * g);
    moments.v[i] = static_cast<T>(b2 * moments.v[i] + (1.0 - b2) * g * g);
    const double m_hat = moments.m[i] / c1;
    const double v_hat = moments.v[i] / c2;
    param[i] = static_cast<T>(param[i] - config.lr * m_hat / (std::sqrt(v_hat) + config.eps));
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  moments_.resize(params_.size());
  for (std::size_t k = 0; k < params_.size(); ++k) {
    if (!params_[k]->trainable) {
      throw std::invalid_argument("Adam: parameter '" + params_[k]->name + "' is frozen");
    }
    moments_[k].m.assign(params_[k]->value.size(), T{});
    moments_[k].v.assign(params_[k]->value.size(), T{});
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto grad = params_[k]->grad.data();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      if (!std::isfinite(grad[i])) {
        throw std::runtime_error("Adam: non-finite gradient " + std::to_string(grad[i]) +
                                 " in parameter #" + std::to_string(k) + " ('" +
                                 params_[k]->name + "') at element " + std::to_string(i) +
                                 ", step " + std::to_string(t_ + 1) + " aborted");
      }
    }
  }
  ++t_;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    adam_update<T>(params_[k]->value.data(), params_[k]->grad.data(), moments_[k], t_, config_);
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, AdamMoments<float>&,
                                 std::uint64_t, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>,
                                  AdamMoments<double>&, std::uint64_t, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace bordernet::nn
