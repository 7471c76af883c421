#include "gdkit/image.hpp"

#include <algorithm>
#include <cmath>

namespace gdkit {

float ImageRaster::sample_bilinear(double x, double y) const {
  const double max_x = static_cast<double>(width) - 1.0;
  const double max_y = static_cast<double>(height) - 1.0;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);
  const std::uint32_t x0 = static_cast<std::uint32_t>(x);
  const std::uint32_t y0 = static_cast<std::uint32_t>(y);
  const std::uint32_t x1 = std::min(x0 + 1, width - 1);
  const std::uint32_t y1 = std::min(y0 + 1, height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = intensity(x0, y0);
  const double v10 = intensity(x1, y0);
  const double v01 = intensity(x0, y1);
  const double v11 = intensity(x1, y1);
  const double top = v00 + (v10 - v00) * fx;
  const double bot = v01 + (v11 - v01) * fx;
  return static_cast<float>(top + (bot - top) * fy);
}

ImageRaster downsample2(const ImageRaster& image) {
  ImageRaster out(image.width / 2, image.height / 2);
  for (std::uint32_t y = 0; y < out.height; ++y) {
    for (std::uint32_t x = 0; x < out.width; ++x) {
      const int sum = image.at(2 * x, 2 * y) + image.at(2 * x + 1, 2 * y) +
                      image.at(2 * x, 2 * y + 1) + image.at(2 * x + 1, 2 * y + 1);
      out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);
    }
  }
  return out;
}

ImageRaster rotate_about_center(const ImageRaster& image, double angle) {
  ImageRaster out(image.width, image.height);
  const double cx = (image.width - 1) / 2.0;
  const double cy = (image.height - 1) / 2.0;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::uint32_t y = 0; y < out.height; ++y) {
    for (std::uint32_t x = 0; x < out.width; ++x) {
      // Inverse map: rotate the output coordinate by -angle.
      const double dx = x - cx;
      const double dy = y - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const float v = image.sample_bilinear(sx, sy);
      out.at(x, y) = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
  }
  return out;
}

}  // namespace gdkit
