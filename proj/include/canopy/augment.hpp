#pragma once

#include <utility>
#include <vector>

#include "canopy/rng.hpp"
#include "canopy/tensor.hpp"

namespace canopy {

/// Ranges for the training-set augmentation stack: rotation, width/height
/// shift, horizontal flip, zoom and brightness. One value per transform is
/// sampled from its range on every call.
struct AugmentParams {
  double rotation_max = 40.0;  // degrees, sampled in [-max, max]
  double width_shift_max = 0.2;   // fraction of width
  double height_shift_max = 0.2;  // fraction of height
  double hflip_prob = 0.5;
  std::pair<double, double> zoom_range = {0.8, 1.2};
  std::pair<double, double> brightness_range = {0.8, 1.2};

  static AugmentParams identity() {
    return {0.0, 0.0, 0.0, 0.0, {1.0, 1.0}, {1.0, 1.0}};
  }

  void validate() const;

  bool operator==(const AugmentParams&) const = default;
};

/// Applies rotation (about center, bilinear, reflect fill), shifts, optional
/// horizontal flip, central zoom and a brightness multiply clamped to [0,1].
/// Shape is preserved; the identity configuration is a bit-exact no-op.
TensorF augment(const TensorF& image, const AugmentParams& params, RngStream rng);

/// Largest-remainder apportionment of (target - count) augmented copies over
/// each class's originals. Returned multiplicities per class sum to exactly
/// target - count.
std::vector<std::vector<std::size_t>> oversample_plan(const std::vector<std::size_t>& train_counts,
                                                      std::size_t target);

}  // namespace canopy
