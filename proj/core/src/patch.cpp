#include "gdkit/patch.hpp"

#include <cmath>
#include <string>

#include "gdkit/error.hpp"
#include "gdkit/rng.hpp"

namespace gdkit {

SamplingGrid SamplingGrid::regular(int g_size) {
  if (g_size < 2) {
    throw Error(ErrorCode::kConfigInvalid, "grid size must be >= 2");
  }
  SamplingGrid grid;
  grid.g_size = g_size;
  grid.coords.resize(g_size);
  for (int i = 0; i < g_size; ++i) {
    grid.coords[i] = -1.0 + 2.0 * i / (g_size - 1);
  }
  // Pin the endpoints; the interior stays symmetric by construction.
  grid.coords.front() = -1.0;
  grid.coords.back() = 1.0;
  return grid;
}

Eigen::Vector2d grid_to_source(const Keypoint& kp, double k, double gx,
                               double gy) {
  const double r = k * kp.scale / 2.0;
  const double c = std::cos(kp.orientation);
  const double s = std::sin(kp.orientation);
  return {r * (c * gx + s * gy) + kp.x, r * (-s * gx + c * gy) + kp.y};
}

bool support_in_bounds(const ImageRaster& image, const Keypoint& kp,
                       double k) {
  if (!(kp.scale > 0.0)) return false;
  const double max_x = static_cast<double>(image.width) - 1.0;
  const double max_y = static_cast<double>(image.height) - 1.0;
  for (const double gx : {-1.0, 1.0}) {
    for (const double gy : {-1.0, 1.0}) {
      const Eigen::Vector2d src = grid_to_source(kp, k, gx, gy);
      if (src.x() < 0.0 || src.x() > max_x || src.y() < 0.0 ||
          src.y() > max_y) {
        return false;
      }
    }
  }
  return true;
}

Patch crop_patch(const ImageRaster& image, int image_id, const Keypoint& kp,
                 int g_size, double k) {
  if (!(kp.scale > 0.0)) {
    throw Error(ErrorCode::kNonPositiveScale,
                "keypoint scale " + std::to_string(kp.scale));
  }
  if (g_size < 8) {
    throw Error(ErrorCode::kConfigInvalid, "patch grid size must be >= 8");
  }
  if (!support_in_bounds(image, kp, k)) {
    throw Error(ErrorCode::kOutOfBounds,
                "patch support exits image " + std::to_string(image_id) +
                    " at keypoint (" + std::to_string(kp.x) + ", " +
                    std::to_string(kp.y) + "), sigma " +
                    std::to_string(kp.scale));
  }
  const SamplingGrid grid = SamplingGrid::regular(g_size);
  Patch patch;
  patch.g_size = g_size;
  patch.image_id = image_id;
  patch.keypoint = kp;
  patch.pixels.resize(g_size, g_size);
  for (int iy = 0; iy < g_size; ++iy) {
    for (int ix = 0; ix < g_size; ++ix) {
      const Eigen::Vector2d src =
          grid_to_source(kp, k, grid.coords[ix], grid.coords[iy]);
      patch.pixels(iy, ix) = image.sample_bilinear(src.x(), src.y());
    }
  }
  return patch;
}

Patch standardize(const Patch& patch) {
  const Eigen::Index n = patch.pixels.size();
  double mean = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) mean += patch.pixels(i);
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = patch.pixels(i) - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  const double denom = std::max(std::sqrt(var), 1e-8);

  Patch out = patch;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.pixels(i) = static_cast<float>((patch.pixels(i) - mean) / denom);
  }
  return out;
}

Patch flip_horizontal(const Patch& patch) {
  Patch out = patch;
  const int g = patch.g_size;
  for (int iy = 0; iy < g; ++iy) {
    for (int ix = 0; ix < g; ++ix) {
      out.pixels(iy, ix) = patch.pixels(iy, g - 1 - ix);
    }
  }
  return out;
}

Patch rotate90(const Patch& patch) {
  Patch out = patch;
  const int g = patch.g_size;
  for (int iy = 0; iy < g; ++iy) {
    for (int ix = 0; ix < g; ++ix) {
      out.pixels(iy, ix) = patch.pixels(g - 1 - ix, iy);
    }
  }
  return out;
}

Patch adjust_brightness(const Patch& patch, double offset) {
  Patch out = patch;
  out.pixels.array() += static_cast<float>(offset);
  return out;
}

Patch adjust_contrast(const Patch& patch, double gain) {
  const float mean = patch.pixels.mean();
  Patch out = patch;
  out.pixels = ((patch.pixels.array() - mean) * static_cast<float>(gain) +
                mean).matrix();
  return out;
}

std::pair<Patch, Patch> augment_pair(const Patch& a, const Patch& b,
                                     std::uint64_t seed,
                                     std::uint64_t pair_index,
                                     const AugmentParams& params) {
  RandomStream stream({seed, 0x617567ULL /*"aug"*/, pair_index});
  // Fixed draw order keeps the stream stable across parameter settings.
  const bool do_flip = stream.next_bernoulli(params.flip_p);
  const bool do_rot = stream.next_bernoulli(params.rot90_p);
  const double bright_a =
      stream.next_range(-params.brightness_range, params.brightness_range);
  const double contrast_a =
      stream.next_range(std::max(0.0, 1.0 - params.contrast_range),
                        1.0 + params.contrast_range);
  const double bright_b =
      stream.next_range(-params.brightness_range, params.brightness_range);
  const double contrast_b =
      stream.next_range(std::max(0.0, 1.0 - params.contrast_range),
                        1.0 + params.contrast_range);

  Patch out_a = a;
  Patch out_b = b;
  if (do_flip) {
    out_a = flip_horizontal(out_a);
    out_b = flip_horizontal(out_b);
  }
  if (do_rot) {
    out_a = rotate90(out_a);
    out_b = rotate90(out_b);
  }
  if (params.brightness_range > 0.0) {
    out_a = adjust_brightness(out_a, bright_a);
    out_b = adjust_brightness(out_b, bright_b);
  }
  if (params.contrast_range > 0.0) {
    out_a = adjust_contrast(out_a, contrast_a);
    out_b = adjust_contrast(out_b, contrast_b);
  }
  return {std::move(out_a), std::move(out_b)};
}

}  // namespace gdkit
