#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcbdet/core/tensor.hpp"

namespace pcbdet::data {

// Interleaved 8-bit RGB image, row-major.
struct ImageU8 {
  int width = 0, height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  ImageU8() = default;
  ImageU8(int w, int h) : width(w), height(h), pixels(std::size_t(w) * h * 3, 0) {}

  std::size_t idx(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto i = idx(x, y);
    pixels[i] = r;
    pixels[i + 1] = g;
    pixels[i + 2] = b;
  }
};

// Binary PPM (P6), the pipeline's lossless 8-bit RGB carrier.
void write_ppm(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);

// u8 RGB -> 1 x 3 x H x W float tensor scaled to [0,1].
template <class S>
TensorPtr<S> image_to_tensor(const ImageU8& img) {
  auto t = make_tensor<S>(1, 3, img.height, img.width);
  const S inv = S(1) / S(255);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t->at(0, c, y, x) = static_cast<S>(img.pixels[img.idx(x, y) + c]) * inv;
  return t;
}

}  // namespace pcbdet::data
