#ifndef GDKIT_IMAGE_HPP_
#define GDKIT_IMAGE_HPP_

#include <cstdint>
#include <vector>

namespace gdkit {

// Grayscale raster. Pixel (x, y) is stored row-major at y * width + x;
// intensities are 8-bit and read back as floats in [0, 1].
struct ImageRaster {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  ImageRaster() = default;
  ImageRaster(std::uint32_t w, std::uint32_t h)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t at(std::uint32_t x, std::uint32_t y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t& at(std::uint32_t x, std::uint32_t y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }

  float intensity(std::uint32_t x, std::uint32_t y) const {
    return static_cast<float>(at(x, y)) / 255.0f;
  }

  // Bilinear sample with clamp-at-border, result in [0, 1].
  float sample_bilinear(double x, double y) const;

  bool operator==(const ImageRaster& other) const = default;
};

// 2x2 box average; odd trailing row/column is dropped.
ImageRaster downsample2(const ImageRaster& image);

// Resample the image rotated by `angle` radians about its center
// (counter-clockwise in pixel coordinates), bilinear, clamp-at-border.
ImageRaster rotate_about_center(const ImageRaster& image, double angle);

}  // namespace gdkit

#endif  // GDKIT_IMAGE_HPP_
