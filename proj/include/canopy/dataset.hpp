#pragma once

#include <string>
#include <vector>

#include "canopy/data/split.hpp"
#include "canopy/tensor.hpp"

namespace canopy {

struct LabeledImage {
  std::string id;
  int label = 0;
  TensorF image;  // [H,W,3] in [0,1]
};

/// In-memory labelled split with a shared class-name table.
struct ImageSet {
  std::vector<std::string> classes;  // label index -> species name
  std::vector<LabeledImage> items;

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(classes.size(), 0);
    for (const auto& item : items) counts[static_cast<std::size_t>(item.label)]++;
    return counts;
  }
};

/// Loads one split's images from a manifest rooted at `root`. Class names
/// are the sorted distinct species of the whole manifest, so labels agree
/// across splits. Entries whose fetch failed are skipped.
ImageSet load_split_images(const DatasetManifest& manifest, const std::string& root, Split split);

}  // namespace canopy
