#pragma once

#include <cstdint>

#include "canopy/rng.hpp"
#include "canopy/tensor.hpp"

namespace canopy::testing {

/// Direct six-nested-loop "same"-padding stride-1 convolution. Kept
/// deliberately naive and independent of the im2col production kernel.
template <typename T>
Tensor<T> conv2d_loopnest(const Tensor<T>& input, const Tensor<T>& kernels,
                          const Tensor<T>& bias) {
  const std::size_t h = input.dim(0), w = input.dim(1), cin = input.dim(2);
  const std::size_t k = kernels.dim(0), cout = kernels.dim(3);
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor<T> out({h, w, cout});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t co = 0; co < cout; ++co) {
        T acc = bias[co];
        for (std::size_t kh = 0; kh < k; ++kh) {
          for (std::size_t kw = 0; kw < k; ++kw) {
            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + kh) - pad;
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kw) - pad;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h) || sx < 0 ||
                sx >= static_cast<std::ptrdiff_t>(w)) {
              continue;
            }
            for (std::size_t ci = 0; ci < cin; ++ci) {
              acc += input(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), ci) *
                     kernels(kh, kw, ci, co);
            }
          }
        }
        out(y, x, co) = acc;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  RngStream rng(seed);
  Tensor<T> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  T acc = T(0);
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return m;
}

template <typename T>
double max_rel_diff(const Tensor<T>& a, const Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]), y = static_cast<double>(b[i]);
    const double denom = std::max({std::fabs(x), std::fabs(y), 1e-300});
    m = std::max(m, std::fabs(x - y) / denom);
  }
  return m;
}

}  // namespace canopy::testing
