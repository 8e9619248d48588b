#include "canopy/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace canopy {

namespace {

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t offset;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t count) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->offset + count > r->size) {
    png_error(png, "read past end of PNG buffer");
    return;
  }
  std::memcpy(out, r->data + r->offset, count);
  r->offset += count;
}

void png_mem_write(png_structp png, png_bytep data, png_size_t count) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + count);
}

void png_mem_flush(png_structp) {}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageU8& image) {
  if (image.rgb.size() != image.height * image.width * 3 || image.height == 0 ||
      image.width == 0) {
    throw std::invalid_argument("encode_png: inconsistent image dimensions");
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("encode_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("encode_png: png_create_info_struct failed");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("encode_png: libpng error");
  }
  png_set_write_fn(png, &out, png_mem_write, png_mem_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + y * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

ImageU8 decode_png(const std::uint8_t* data, std::size_t size) {
  if (size < 8 || png_sig_cmp(data, 0, 8) != 0) {
    throw std::runtime_error("decode_png: not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("decode_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("decode_png: png_create_info_struct failed");
  }
  MemReader reader{data, size, 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("decode_png: libpng error (corrupt data?)");
  }
  png_set_read_fn(png, &reader, png_mem_read);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageU8 image;
  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("decode_png: unsupported channel layout after expansion");
  }
  image.rgb.resize(image.height * image.width * 3);
  for (std::size_t y = 0; y < image.height; ++y) {
    png_read_row(png, image.rgb.data() + y * image.width * 3, nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

ImageU8 read_png_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_png_file: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes.data(), bytes.size());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void write_png_file(const std::string& path, const ImageU8& image) {
  const auto bytes = encode_png(image);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("write_png_file: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write_png_file: write failed for " + path);
}

TensorF image_to_tensor(const ImageU8& image) {
  TensorF t({image.height, image.width, 3});
  for (std::size_t i = 0; i < image.rgb.size(); ++i) {
    t[i] = static_cast<float>(image.rgb[i]) / 255.0f;
  }
  return t;
}

ImageU8 tensor_to_image(const TensorF& t) {
  if (t.rank() != 3 || t.dim(2) != 3) {
    throw std::invalid_argument("tensor_to_image: expected [H,W,3], got " +
                                shape_to_string(t.shape()));
  }
  ImageU8 image;
  image.height = t.dim(0);
  image.width = t.dim(1);
  image.rgb.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const float v = std::clamp(t[i], 0.0f, 1.0f);
    image.rgb[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return image;
}

}  // namespace canopy
