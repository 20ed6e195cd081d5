#include "bordernet/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bordernet::nn {
namespace {

// Output positions o in [lo, hi) whose input tap o*stride + offset - pad
// falls inside [0, in_extent).
struct TapRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
};

TapRange valid_taps(std::size_t in_extent, std::size_t out_extent, std::size_t offset,
                    std::size_t stride, std::size_t pad) {
  TapRange r;
  if (pad > offset) r.lo = (pad - offset + stride - 1) / stride;
  if (in_extent + pad > offset) {
    r.hi = std::min(out_extent, (in_extent + pad - offset + stride - 1) / stride);
  }
  r.lo = std::min(r.lo, r.hi);
  return r;
}

std::size_t conv_out(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad) {
  if (in + 2 * pad < k) throw std::invalid_argument("conv: kernel larger than padded input");
  return (in + 2 * pad - k) / stride + 1;
}

template <typename T>
void require_rank(const Tensor<T>& x, std::size_t rank, const char* who) {
  if (x.rank() != rank) {
    throw std::invalid_argument(std::string(who) + ": expected rank " + std::to_string(rank) +
                                " input, got " + shape_string(x.shape()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t pad, bool trainable)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {
  if (in_channels == 0 || out_channels == 0 || kernel == 0 || stride == 0) {
    throw std::invalid_argument("Conv2d: zero-sized geometry");
  }
  const Shape wshape{out_channels, in_channels, kernel, kernel};
  weight_ = {"weight", Tensor<T>(wshape), Tensor<T>(wshape), trainable};
  bias_ = {"bias", Tensor<T>({out_channels}), Tensor<T>({out_channels}), trainable};
}

template <typename T>
Tensor<T> Conv2d<T>::infer(const Tensor<T>& x) const {
  require_rank(x, 4, "Conv2d");
  if (x.dim(1) != in_channels_) {
    throw std::invalid_argument("Conv2d: expected " + std::to_string(in_channels_) +
                                " input channels, got " + shape_string(x.shape()));
  }
  const std::size_t n_batch = x.dim(0);
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  const std::size_t ho = conv_out(h, kernel_, stride_, pad_);
  const std::size_t wo = conv_out(w, kernel_, stride_, pad_);
  Tensor<T> y({n_batch, out_channels_, ho, wo});

  const T* wt = weight_.value.data().data();
  const T* in_all = x.data().data();
  T* out_all = y.data().data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t o = 0; o < out_channels_; ++o) {
      T* out = out_all + (n * out_channels_ + o) * ho * wo;
      std::fill(out, out + ho * wo, bias_.value[o]);
      for (std::size_t c = 0; c < in_channels_; ++c) {
        const T* in = in_all + (n * in_channels_ + c) * h * w;
        for (std::size_t kh = 0; kh < kernel_; ++kh) {
          const TapRange rows = valid_taps(h, ho, kh, stride_, pad_);
          for (std::size_t kw = 0; kw < kernel_; ++kw) {
            const TapRange cols = valid_taps(w, wo, kw, stride_, pad_);
            const T wv = wt[((o * in_channels_ + c) * kernel_ + kh) * kernel_ + kw];
            for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
              // Unsigned wrap-around in `base` cancels once ow is added.
              const std::size_t base = (oh * stride_ + kh - pad_) * w + kw - pad_;
              T* orow = out + oh * wo;
              if (stride_ == 1) {
                for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) orow[ow] += wv * in[base + ow];
              } else {
                for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) {
                  orow[ow] += wv * in[base + ow * stride_];
                }
              }
            }
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = infer(x);
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  const std::size_t n_batch = input_.dim(0);
  const std::size_t h = input_.dim(2);
  const std::size_t w = input_.dim(3);
  const std::size_t ho = conv_out(h, kernel_, stride_, pad_);
  const std::size_t wo = conv_out(w, kernel_, stride_, pad_);
  if (grad_out.shape() != Shape{n_batch, out_channels_, ho, wo}) {
    throw std::invalid_argument("Conv2d::backward: gradient shape " +
                                shape_string(grad_out.shape()) + " does not match output");
  }

  Tensor<T> grad_in;
  if (need_input_grad) grad_in = Tensor<T>(input_.shape());
  if (!trainable() && !need_input_grad) return grad_in;

  const T* wt = weight_.value.data().data();
  T* gw = weight_.grad.data().data();
  const T* in_all = input_.data().data();
  const T* g_all = grad_out.data().data();
  T* gi_all = need_input_grad ? grad_in.data().data() : nullptr;

  for (std::size_t n = 0; n < n_batch; ++n) {
    for (std::size_t o = 0; o < out_channels_; ++o) {
      const T* g = g_all + (n * out_channels_ + o) * ho * wo;
      if (trainable()) {
        T acc{};
        for (std::size_t i = 0; i < ho * wo; ++i) acc += g[i];
        bias_.grad[o] += acc;
      }
      for (std::size_t c = 0; c < in_channels_; ++c) {
        const T* in = in_all + (n * in_channels_ + c) * h * w;
        T* gin = gi_all ? gi_all + (n * in_channels_ + c) * h * w : nullptr;
        for (std::size_t kh = 0; kh < kernel_; ++kh) {
          const TapRange rows = valid_taps(h, ho, kh, stride_, pad_);
          for (std::size_t kw = 0; kw < kernel_; ++kw) {
            const TapRange cols = valid_taps(w, wo, kw, stride_, pad_);
            const std::size_t widx = ((o * in_channels_ + c) * kernel_ + kh) * kernel_ + kw;
            const T wv = wt[widx];
            T acc{};
            for (std::size_t oh = rows.lo; oh < rows.hi; ++oh) {
              const std::size_t base = (oh * stride_ + kh - pad_) * w + kw - pad_;
              const T* grow = g + oh * wo;
              for (std::size_t ow = cols.lo; ow < cols.hi; ++ow) {
                const std::size_t idx = base + ow * stride_;
                acc += grow[ow] * in[idx];
                if (gin) gin[idx] += wv * grow[ow];
              }
            }
            if (trainable()) gw[widx] += acc;
          }
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Relu

template <typename T>
Tensor<T> Relu<T>::infer(const Tensor<T>& x) const {
  Tensor<T> y = x;
  for (T& v : y.values()) v = v > T{} ? v : T{};
  return y;
}

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x) {
  active_.resize(x.size());
  Tensor<T> y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    active_[i] = x[i] > T{};
    if (!active_[i]) y[i] = T{};
  }
  return y;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  if (grad_out.size() != active_.size()) {
    throw std::invalid_argument("Relu::backward: gradient size does not match forward input");
  }
  Tensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!active_[i]) g[i] = T{};
  }
  return g;
}

// ---------------------------------------------------------------------------
// MaxPool2d

template <typename T>
Tensor<T> MaxPool2d<T>::pool(const Tensor<T>& x, std::vector<std::size_t>* argmax) const {
  require_rank(x, 4, "MaxPool2d");
  const std::size_t n_batch = x.dim(0);
  const std::size_t ch = x.dim(1);
  const std::size_t h = x.dim(2);
  const std::size_t w = x.dim(3);
  const std::size_t ho = h / size_;
  const std::size_t wo = w / size_;
  if (ho == 0 || wo == 0) throw std::invalid_argument("MaxPool2d: window larger than input");
  Tensor<T> y({n_batch, ch, ho, wo});
  if (argmax) argmax->assign(y.size(), 0);
  std::size_t out_idx = 0;
  for (std::size_t plane = 0; plane < n_batch * ch; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t oh = 0; oh < ho; ++oh) {
      for (std::size_t ow = 0; ow < wo; ++ow, ++out_idx) {
        std::size_t best = base + (oh * size_) * w + ow * size_;
        T best_v = x[best];
        for (std::size_t dh = 0; dh < size_; ++dh) {
          for (std::size_t dw = 0; dw < size_; ++dw) {
            const std::size_t idx = base + (oh * size_ + dh) * w + ow * size_ + dw;
            if (x[idx] > best_v) {
              best_v = x[idx];
              best = idx;
            }
          }
        }
        y[out_idx] = best_v;
        if (argmax) (*argmax)[out_idx] = best;
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::infer(const Tensor<T>& x) const {
  return pool(x, nullptr);
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return pool(x, &argmax_);
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  if (grad_out.size() != argmax_.size()) {
    throw std::invalid_argument("MaxPool2d::backward: gradient size does not match output");
  }
  Tensor<T> g(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) g[argmax_[i]] += grad_out[i];
  return g;
}

// ---------------------------------------------------------------------------
// Flatten

template <typename T>
Tensor<T> Flatten<T>::infer(const Tensor<T>& x) const {
  if (x.rank() < 1) throw std::invalid_argument("Flatten: empty input");
  Tensor<T> y = x;
  y.reshape({x.dim(0), x.size() / std::max<std::size_t>(1, x.dim(0))});
  return y;
}

template <typename T>
Tensor<T> Flatten<T>::forward(const Tensor<T>& x) {
  input_shape_ = x.shape();
  return infer(x);
}

template <typename T>
Tensor<T> Flatten<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor<T> g = grad_out;
  g.reshape(input_shape_);
  return g;
}

// ---------------------------------------------------------------------------
// Dense

template <typename T>
Dense<T>::Dense(std::size_t in_dim, std::size_t out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  if (in_dim == 0 || out_dim == 0) throw std::invalid_argument("Dense: zero-sized geometry");
  weight_ = {"weight", Tensor<T>({out_dim, in_dim}), Tensor<T>({out_dim, in_dim}), true};
  bias_ = {"bias", Tensor<T>({out_dim}), Tensor<T>({out_dim}), true};
}

template <typename T>
Tensor<T> Dense<T>::infer(const Tensor<T>& x) const {
  require_rank(x, 2, "Dense");
  if (x.dim(1) != in_dim_) {
    throw std::invalid_argument("Dense: expected " + std::to_string(in_dim_) + " inputs, got " +
                                shape_string(x.shape()));
  }
  const std::size_t n_batch = x.dim(0);
  Tensor<T> y({n_batch, out_dim_});
  const T* wt = weight_.value.data().data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    const T* xin = x.data().data() + n * in_dim_;
    for (std::size_t o = 0; o < out_dim_; ++o) {
      const T* wrow = wt + o * in_dim_;
      T acc = bias_.value[o];
      for (std::size_t i = 0; i < in_dim_; ++i) acc += wrow[i] * xin[i];
      y[n * out_dim_ + o] = acc;
    }
  }
  return y;
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x) {
  Tensor<T> y = infer(x);
  input_ = x;
  return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, bool need_input_grad) {
  const std::size_t n_batch = input_.dim(0);
  if (grad_out.shape() != Shape{n_batch, out_dim_}) {
    throw std::invalid_argument("Dense::backward: gradient shape " +
                                shape_string(grad_out.shape()) + " does not match output");
  }
  Tensor<T> grad_in;
  if (need_input_grad) grad_in = Tensor<T>({n_batch, in_dim_});
  const T* wt = weight_.value.data().data();
  T* gw = weight_.grad.data().data();
  for (std::size_t n = 0; n < n_batch; ++n) {
    const T* xin = input_.data().data() + n * in_dim_;
    T* gin = need_input_grad ? grad_in.data().data() + n * in_dim_ : nullptr;
    for (std::size_t o = 0; o < out_dim_; ++o) {
      const T g = grad_out[n * out_dim_ + o];
      bias_.grad[o] += g;
      T* gwrow = gw + o * in_dim_;
      for (std::size_t i = 0; i < in_dim_; ++i) gwrow[i] += g * xin[i];
      if (gin) {
        const T* wrow = wt + o * in_dim_;
        for (std::size_t i = 0; i < in_dim_; ++i) gin[i] += g * wrow[i];
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits, 2, "softmax");
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  Tensor<T> p = logits;
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = p.data().data() + r * cols;
    const T peak = *std::max_element(row, row + cols);
    T total{};
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - peak);
      total += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= total;
  }
  return p;
}

template <typename T>
T SoftmaxCrossEntropy<T>::forward(const Tensor<T>& logits, std::span<const int> labels) {
  require_rank(logits, 2, "SoftmaxCrossEntropy");
  const std::size_t rows = logits.dim(0);
  const std::size_t cols = logits.dim(1);
  if (labels.size() != rows) throw std::invalid_argument("SoftmaxCrossEntropy: label count mismatch");
  if (rows == 0) throw std::invalid_argument("SoftmaxCrossEntropy: empty batch");
  probs_ = softmax(logits);
  labels_.assign(labels.begin(), labels.end());
  T loss{};
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= cols) {
      throw std::invalid_argument("SoftmaxCrossEntropy: label " + std::to_string(y) +
                                  " out of range");
    }
    // log p_y computed from the logits directly for accuracy.
    const T* row = logits.data().data() + r * cols;
    const T peak = *std::max_element(row, row + cols);
    T total{};
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(row[c] - peak);
    loss += std::log(total) - (row[y] - peak);
  }
  return loss / static_cast<T>(rows);
}

template <typename T>
Tensor<T> SoftmaxCrossEntropy<T>::backward() const {
  Tensor<T> g = probs_;
  const std::size_t rows = g.dim(0);
  const std::size_t cols = g.dim(1);
  const T scale = T{1} / static_cast<T>(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    g[r * cols + static_cast<std::size_t>(labels_[r])] -= T{1};
    for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] *= scale;
  }
  return g;
}

#define BORDERNET_INSTANTIATE(T)                 \
  template class Conv2d<T>;                      \
  template class Relu<T>;                        \
  template class MaxPool2d<T>;                   \
  template class Flatten<T>;                     \
  template class Dense<T>;                       \
  template class SoftmaxCrossEntropy<T>;         \
  template Tensor<T> softmax(const Tensor<T>&);

BORDERNET_INSTANTIATE(float)
BORDERNET_INSTANTIATE(double)

#undef BORDERNET_INSTANTIATE

}  // namespace bordernet::nn
