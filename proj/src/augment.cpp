#include "canopy/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace canopy {

void AugmentParams::validate() const {
  if (rotation_max < 0.0) throw std::invalid_argument("augment: rotation_max must be >= 0");
  if (width_shift_max < 0.0 || width_shift_max > 0.5 || height_shift_max < 0.0 ||
      height_shift_max > 0.5) {
    throw std::invalid_argument("augment: shift fractions must lie in [0, 0.5]");
  }
  if (hflip_prob < 0.0 || hflip_prob > 1.0) {
    throw std::invalid_argument("augment: hflip_prob must lie in [0,1]");
  }
  if (zoom_range.first <= 0.0 || zoom_range.second < zoom_range.first) {
    throw std::invalid_argument("augment: zoom range must be positive and ordered");
  }
  if (brightness_range.first <= 0.0 || brightness_range.second < brightness_range.first) {
    throw std::invalid_argument("augment: brightness range must be positive and ordered");
  }
}

namespace {

// reflect-101 fold into [0, n)
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

float sample_bilinear(const TensorF& img, double y, double x, std::size_t c) {
  const auto h = static_cast<std::ptrdiff_t>(img.dim(0));
  const auto w = static_cast<std::ptrdiff_t>(img.dim(1));
  const double fy = std::floor(y), fx = std::floor(x);
  const double ty = y - fy, tx = x - fx;
  const std::ptrdiff_t y0 = reflect_index(static_cast<std::ptrdiff_t>(fy), h);
  const std::ptrdiff_t y1 = reflect_index(static_cast<std::ptrdiff_t>(fy) + 1, h);
  const std::ptrdiff_t x0 = reflect_index(static_cast<std::ptrdiff_t>(fx), w);
  const std::ptrdiff_t x1 = reflect_index(static_cast<std::ptrdiff_t>(fx) + 1, w);
  const double v00 = img(static_cast<std::size_t>(y0), static_cast<std::size_t>(x0), c);
  const double v01 = img(static_cast<std::size_t>(y0), static_cast<std::size_t>(x1), c);
  const double v10 = img(static_cast<std::size_t>(y1), static_cast<std::size_t>(x0), c);
  const double v11 = img(static_cast<std::size_t>(y1), static_cast<std::size_t>(x1), c);
  const double top = v00 + (v01 - v00) * tx;
  const double bot = v10 + (v11 - v10) * tx;
  return static_cast<float>(top + (bot - top) * ty);
}

}  // namespace

TensorF augment(const TensorF& image, const AugmentParams& params, RngStream rng) {
  params.validate();
  if (image.rank() != 3 || image.dim(2) != 3 || image.dim(0) == 0 || image.dim(1) == 0) {
    throw std::invalid_argument("augment: image must be [H,W,3] with H,W >= 1, got " +
                                shape_to_string(image.shape()));
  }
  const std::size_t h = image.dim(0), w = image.dim(1);

  // One draw per transform in a fixed order, independent of the ranges.
  const double angle_deg = rng.uniform(-params.rotation_max, params.rotation_max);
  const double shift_x = rng.uniform(-params.width_shift_max, params.width_shift_max) *
                         static_cast<double>(w);
  const double shift_y = rng.uniform(-params.height_shift_max, params.height_shift_max) *
                         static_cast<double>(h);
  const bool flip = rng.bernoulli(params.hflip_prob);
  const double scale = rng.uniform(params.zoom_range.first, params.zoom_range.second);
  const double brightness = rng.uniform(params.brightness_range.first,
                                        params.brightness_range.second);

  TensorF out = image;

  if (angle_deg != 0.0 || shift_x != 0.0 || shift_y != 0.0 || scale != 1.0) {
    const double rad = angle_deg * 3.14159265358979323846 / 180.0;
    const double cos_a = std::cos(-rad), sin_a = std::sin(-rad);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    TensorF resampled({h, w, 3});
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        // inverse map: un-zoom about center, un-shift, un-rotate about center
        const double zx = (static_cast<double>(x) - cx) / scale - shift_x;
        const double zy = (static_cast<double>(y) - cy) / scale - shift_y;
        const double sx = cos_a * zx - sin_a * zy + cx;
        const double sy = sin_a * zx + cos_a * zy + cy;
        for (std::size_t c = 0; c < 3; ++c) {
          resampled(y, x, c) = sample_bilinear(image, sy, sx, c);
        }
      }
    }
    out = std::move(resampled);
  }

  if (flip) {
    TensorF mirrored({h, w, 3});
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t c = 0; c < 3; ++c) mirrored(y, x, c) = out(y, w - 1 - x, c);
      }
    }
    out = std::move(mirrored);
  }

  if (brightness != 1.0) {
    const float b = static_cast<float>(brightness);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = std::clamp(out[i] * b, 0.0f, 1.0f);
    }
  }

  return out;
}

std::vector<std::vector<std::size_t>> oversample_plan(const std::vector<std::size_t>& train_counts,
                                                      std::size_t target) {
  std::size_t max_count = 0;
  for (std::size_t c : train_counts) {
    if (c == 0) throw std::invalid_argument("oversample_plan: empty class");
    max_count = std::max(max_count, c);
  }
  if (target < max_count) {
    throw std::invalid_argument("oversample_plan: target " + std::to_string(target) +
                                " is below the largest class count " + std::to_string(max_count));
  }
  std::vector<std::vector<std::size_t>> plan;
  plan.reserve(train_counts.size());
  for (std::size_t c : train_counts) {
    const std::size_t deficit = target - c;
    const std::size_t base = deficit / c;
    const std::size_t rem = deficit % c;
    std::vector<std::size_t> per_original(c, base);
    for (std::size_t i = 0; i < rem; ++i) per_original[i] = base + 1;
    plan.push_back(std::move(per_original));
  }
  return plan;
}

}  // namespace canopy
