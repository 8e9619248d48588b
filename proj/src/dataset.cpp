#include "canopy/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "canopy/image_io.hpp"

namespace canopy {

ImageSet load_split_images(const DatasetManifest& manifest, const std::string& root, Split split) {
  ImageSet set;
  set.classes = manifest.species_sorted();
  for (const auto& e : manifest.entries) {
    if (e.split != split || e.status != "ok") continue;
    const auto it = std::find(set.classes.begin(), set.classes.end(), e.species);
    LabeledImage item;
    item.id = e.id;
    item.label = static_cast<int>(it - set.classes.begin());
    const std::filesystem::path path = std::filesystem::path(root) / e.path;
    item.image = image_to_tensor(read_png_file(path.string()));
    set.items.push_back(std::move(item));
  }
  return set;
}

}  // namespace canopy
