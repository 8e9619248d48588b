#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "canopy/rng.hpp"
#include "canopy/tensor.hpp"

namespace canopy {

namespace detail {

// C[M x N] += A[M x K] * B[K x N], all row-major. The k-middle / j-inner
// ordering keeps the innermost loop contiguous in both B and C.
template <typename T>
void gemm_accumulate(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b, T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    T* crow = c + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      if (av == T(0)) continue;
      const T* brow = b + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[K x N] += A^T B with A[M x K], B[M x N].
template <typename T>
void gemm_at_b_accumulate(std::size_t m, std::size_t k, std::size_t n, const T* a, const T* b,
                          T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T av = arow[kk];
      if (av == T(0)) continue;
      T* crow = c + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M x K] += B A^T with B[M x N], A[K x N]; inner dot runs over contiguous N.
template <typename T>
void gemm_b_at_accumulate(std::size_t m, std::size_t k, std::size_t n, const T* b, const T* a,
                          T* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* brow = b + i * n;
    T* crow = c + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T* arow = a + kk * n;
      T acc = T(0);
      for (std::size_t j = 0; j < n; ++j) acc += brow[j] * arow[j];
      crow[kk] += acc;
    }
  }
}

// Patch matrix for "same" zero-padded stride-1 convolution:
// patches[(y*W + x) * (k*k*Cin) + (kh*k + kw)*Cin + ci].
template <typename T>
std::vector<T> im2col_same(const Tensor<T>& input, std::size_t k) {
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  std::vector<T> patches(h * w * k * k * cin, T(0));
  const std::size_t patch_len = k * k * cin;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      T* dst = patches.data() + (y * w + x) * patch_len;
      for (std::size_t kh = 0; kh < k; ++kh) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + kh) - pad;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kw = 0; kw < k; ++kw) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kw) - pad;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
          const T* src = input.data() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * cin;
          T* cell = dst + (kh * k + kw) * cin;
          for (std::size_t ci = 0; ci < cin; ++ci) cell[ci] = src[ci];
        }
      }
    }
  }
  return patches;
}

template <typename T>
void col2im_same_accumulate(const std::vector<T>& dpatches, std::size_t h, std::size_t w,
                            std::size_t cin, std::size_t k, Tensor<T>& d_input) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t patch_len = k * k * cin;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const T* src = dpatches.data() + (y * w + x) * patch_len;
      for (std::size_t kh = 0; kh < k; ++kh) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + kh) - pad;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kw = 0; kw < k; ++kw) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kw) - pad;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
          T* dst = d_input.data() + (static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)) * cin;
          const T* cell = src + (kh * k + kw) * cin;
          for (std::size_t ci = 0; ci < cin; ++ci) dst[ci] += cell[ci];
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias) {
  if (input.rank() != 3) {
    throw std::invalid_argument("conv2d: input must be rank 3 [H,W,Cin], got " +
                                shape_to_string(input.shape()));
  }
  if (kernels.rank() != 4 || kernels.dim(0) != kernels.dim(1)) {
    throw std::invalid_argument("conv2d: kernels must be rank 4 [k,k,Cin,Cout], got " +
                                shape_to_string(kernels.shape()));
  }
  if (kernels.dim(0) % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel size must be odd, got " +
                                std::to_string(kernels.dim(0)));
  }
  if (kernels.dim(2) != input.dim(2)) {
    throw std::invalid_argument("conv2d: input channels " + std::to_string(input.dim(2)) +
                                " do not match kernel Cin " + std::to_string(kernels.dim(2)) +
                                " (input " + shape_to_string(input.shape()) + ", kernels " +
                                shape_to_string(kernels.shape()) + ")");
  }
  if (bias.rank() != 1 || bias.dim(0) != kernels.dim(3)) {
    throw std::invalid_argument("conv2d: bias must be [Cout]=" + std::to_string(kernels.dim(3)) +
                                ", got " + shape_to_string(bias.shape()));
  }
}

}  // namespace detail

/// "Same" zero-padded stride-1 convolution: [H,W,Cin] -> [H,W,Cout].
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias) {
  detail::check_conv_shapes(input, kernels, bias);
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t k = kernels.dim(0), cout = kernels.dim(3);
  const std::vector<T> patches = detail::im2col_same(input, k);
  Tensor<T> out({h, w, cout});
  T* o = out.data();
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t co = 0; co < cout; ++co) o[i * cout + co] = bias[co];
  }
  // kernels [k,k,Cin,Cout] flattens row-major to exactly [k*k*Cin x Cout]
  detail::gemm_accumulate(h * w, k * k * cin, cout, patches.data(), kernels.data(), o);
  return out;
}

template <typename T>
struct Conv2dGrads {
  Tensor<T> d_input;
  Tensor<T> d_kernels;
  Tensor<T> d_bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels,
                               const Tensor<T>& bias, const Tensor<T>& upstream) {
  detail::check_conv_shapes(input, kernels, bias);
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t k = kernels.dim(0), cout = kernels.dim(3);
  require_shape(upstream.shape(), {h, w, cout}, "conv2d backward upstream");

  Conv2dGrads<T> g{Tensor<T>(input.shape()), Tensor<T>(kernels.shape()), Tensor<T>(bias.shape())};
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t co = 0; co < cout; ++co) g.d_bias[co] += upstream[i * cout + co];
  }
  const std::vector<T> patches = detail::im2col_same(input, k);
  detail::gemm_at_b_accumulate(h * w, k * k * cin, cout, patches.data(), upstream.data(),
                               g.d_kernels.data());
  std::vector<T> dpatches(patches.size(), T(0));
  detail::gemm_b_at_accumulate(h * w, k * k * cin, cout, upstream.data(), kernels.data(),
                               dpatches.data());
  detail::col2im_same_accumulate(dpatches, h, w, cin, k, g.d_input);
  return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  return out;
}

/// Subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
  require_shape(upstream.shape(), input.shape(), "relu backward upstream");
  Tensor<T> out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? upstream[i] : T(0);
  return out;
}

struct MaxPoolCache {
  Shape input_shape;
  std::vector<std::size_t> argmax;  // flat input index feeding each output cell
};

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  MaxPoolCache cache;
};

/// 2x2 window, stride 2; odd trailing rows/columns are dropped.
template <typename T>
MaxPoolResult<T> maxpool2d_forward(const Tensor<T>& input) {
  if (input.rank() != 3) {
    throw std::invalid_argument("maxpool2d: input must be rank 3 [H,W,C], got " +
                                shape_to_string(input.shape()));
  }
  const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
  if (h < 2 || w < 2) {
    throw std::invalid_argument("maxpool2d: spatial dims must be >= 2, got " +
                                shape_to_string(input.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  MaxPoolResult<T> r{Tensor<T>({oh, ow, c}), {input.shape(), {}}};
  r.cache.argmax.resize(oh * ow * c);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        T best = -std::numeric_limits<T>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (input[idx] > best) {
              best = input[idx];
              best_idx = idx;
            }
          }
        }
        const std::size_t out_idx = (y * ow + x) * c + ch;
        r.output[out_idx] = best;
        r.cache.argmax[out_idx] = best_idx;
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2d_backward(const MaxPoolCache& cache, const Tensor<T>& upstream) {
  Tensor<T> d_input(cache.input_shape);
  if (upstream.size() != cache.argmax.size()) {
    throw std::invalid_argument("maxpool2d backward: upstream size " +
                                std::to_string(upstream.size()) + " does not match cached " +
                                std::to_string(cache.argmax.size()));
  }
  for (std::size_t i = 0; i < upstream.size(); ++i) d_input[cache.argmax[i]] += upstream[i];
  return d_input;
}

/// Affine map: input[n] * weights[n,m] + bias[m].
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (weights.rank() != 2) {
    throw std::invalid_argument("dense: weights must be rank 2 [n,m], got " +
                                shape_to_string(weights.shape()));
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (input.size() != n) {
    throw std::invalid_argument("dense: input length " + std::to_string(input.size()) +
                                " does not match weight rows " + std::to_string(n));
  }
  require_shape(bias.shape(), {m}, "dense bias");
  Tensor<T> out({m}, bias.values());
  detail::gemm_accumulate(1, n, m, input.data(), weights.data(), out.data());
  return out;
}

template <typename T>
struct DenseGrads {
  Tensor<T> d_input;
  Tensor<T> d_weights;
  Tensor<T> d_bias;
};

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& upstream) {
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (input.size() != n) {
    throw std::invalid_argument("dense backward: input length " + std::to_string(input.size()) +
                                " does not match weight rows " + std::to_string(n));
  }
  require_shape(upstream.shape(), {m}, "dense backward upstream");
  DenseGrads<T> g{Tensor<T>({n}), Tensor<T>(weights.shape()), Tensor<T>({m}, upstream.values())};
  detail::gemm_at_b_accumulate(1, n, m, input.data(), upstream.data(), g.d_weights.data());
  detail::gemm_b_at_accumulate(1, n, m, upstream.data(), weights.data(), g.d_input.data());
  return g;
}

template <typename T>
struct DropoutResult {
  Tensor<T> output;
  std::vector<std::uint8_t> keep;  // empty when the layer was an identity
  T scale = T(1);
};

/// Inverted dropout: survivors are scaled by 1/(1-rate) at training time so
/// inference is a pure identity.
template <typename T>
DropoutResult<T> dropout_forward(const Tensor<T>& input, double rate, RngStream& rng,
                                 bool training) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  DropoutResult<T> r;
  if (!training || rate == 0.0) {
    r.output = input;
    return r;
  }
  r.scale = static_cast<T>(1.0 / (1.0 - rate));
  r.keep.resize(input.size());
  r.output = Tensor<T>(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    const bool dropped = rng.bernoulli(rate);
    r.keep[i] = dropped ? 0 : 1;
    r.output[i] = dropped ? T(0) : input[i] * r.scale;
  }
  return r;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutResult<T>& cache, const Tensor<T>& upstream) {
  if (cache.keep.empty()) return upstream;
  if (upstream.size() != cache.keep.size()) {
    throw std::invalid_argument("dropout backward: upstream size mismatch");
  }
  Tensor<T> out(upstream.shape());
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    out[i] = cache.keep[i] ? upstream[i] * cache.scale : T(0);
  }
  return out;
}

template <typename T>
struct SoftmaxXentResult {
  T loss;
  Tensor<T> d_logits;
};

/// Weighted categorical cross-entropy with max-subtraction for stability.
/// loss = -w[target] * log softmax(logits)[target];
/// d_logits = w[target] * (softmax(logits) - onehot(target)).
template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target_class,
                                           const std::optional<Tensor<T>>& class_weights = {}) {
  const std::size_t k = logits.size();
  if (k < 2) {
    throw std::invalid_argument("softmax_cross_entropy: need at least 2 classes, got " +
                                std::to_string(k));
  }
  if (target_class >= k) {
    throw std::invalid_argument("softmax_cross_entropy: target class " +
                                std::to_string(target_class) + " out of range for K=" +
                                std::to_string(k));
  }
  if (class_weights && class_weights->size() != k) {
    throw std::invalid_argument("softmax_cross_entropy: class weights size " +
                                std::to_string(class_weights->size()) + " != K " +
                                std::to_string(k));
  }
  T max_logit = logits[0];
  for (std::size_t i = 1; i < k; ++i) max_logit = std::max(max_logit, logits[i]);
  T z = T(0);
  Tensor<T> probs({k});
  for (std::size_t i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - max_logit);
    z += probs[i];
  }
  for (std::size_t i = 0; i < k; ++i) probs[i] /= z;
  const T w = class_weights ? (*class_weights)[target_class] : T(1);
  SoftmaxXentResult<T> r;
  r.loss = -w * ((logits[target_class] - max_logit) - std::log(z));
  r.d_logits = Tensor<T>({k});
  for (std::size_t i = 0; i < k; ++i) r.d_logits[i] = w * probs[i];
  r.d_logits[target_class] -= w;
  return r;
}

template <typename T>
SoftmaxXentResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::size_t target_class,
                                           const Tensor<T>& class_weights) {
  return softmax_cross_entropy(logits, target_class, std::optional<Tensor<T>>(class_weights));
}

}  // namespace canopy
