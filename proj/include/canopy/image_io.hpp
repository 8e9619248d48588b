#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "canopy/tensor.hpp"

namespace canopy {

/// 8-bit RGB image, row-major.
struct ImageU8 {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> rgb;  // height*width*3

  bool operator==(const ImageU8&) const = default;
};

std::vector<std::uint8_t> encode_png(const ImageU8& image);

/// Decodes any 8/16-bit gray/palette/RGB/RGBA PNG to RGB8.
ImageU8 decode_png(const std::uint8_t* data, std::size_t size);

ImageU8 read_png_file(const std::string& path);
void write_png_file(const std::string& path, const ImageU8& image);

/// [H,W,3] floats in [0,1]: 8-bit pixels divided by 255.
TensorF image_to_tensor(const ImageU8& image);
ImageU8 tensor_to_image(const TensorF& t);

}  // namespace canopy
