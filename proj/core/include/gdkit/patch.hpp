#ifndef GDKIT_PATCH_HPP_
#define GDKIT_PATCH_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "gdkit/image.hpp"
#include "gdkit/scene.hpp"

namespace gdkit {

// Support-size constant: a keypoint of scale sigma is cropped from a
// k*sigma x k*sigma rotated square around it.
inline constexpr double kDefaultSupportK = 12.0;

// Square grayscale patch; pixels(row, col) indexes (y, x).
struct Patch {
  int g_size = 0;
  Eigen::MatrixXf pixels;
  int image_id = -1;
  Keypoint keypoint;

  float at(int row, int col) const { return pixels(row, col); }
};

// Regular G x G output grid spanning [-1, 1]^2 with corners exactly at +-1,
// symmetric about 0.
struct SamplingGrid {
  int g_size = 0;
  std::vector<double> coords;  // shared axis for x and y

  static SamplingGrid regular(int g_size);
};

// Source-image coordinate of output grid point (gx, gy) for a keypoint:
// a rotation by the keypoint orientation scaled by k*sigma/2, centered on
// the keypoint position.
Eigen::Vector2d grid_to_source(const Keypoint& kp, double k, double gx,
                               double gy);

// True when the whole rotated k*sigma/2 support square lies inside the image.
bool support_in_bounds(const ImageRaster& image, const Keypoint& kp, double k);

// Crops the scale/rotation-normalized patch by bilinear interpolation.
// Output is raw intensity in [0, 1]; standardization is a separate step.
// Throws NonPositiveScale when sigma <= 0, OutOfBounds when the support
// exits the image.
Patch crop_patch(const ImageRaster& image, int image_id, const Keypoint& kp,
                 int g_size, double k = kDefaultSupportK);

// (patch - mean) / max(std, 1e-8); a constant patch maps to all zeros.
Patch standardize(const Patch& patch);

struct AugmentParams {
  double flip_p = 0.5;
  double rot90_p = 0.5;
  double brightness_range = 0.2;
  double contrast_range = 0.2;
};

// Elementary transforms used by augment_pair; exposed for direct testing.
Patch flip_horizontal(const Patch& patch);
Patch rotate90(const Patch& patch);
Patch adjust_brightness(const Patch& patch, double offset);
Patch adjust_contrast(const Patch& patch, double gain);

// Applies one sampled flip and 90-degree rotation identically to both
// patches, then independent per-patch brightness and contrast jitter.
// Deterministic in (seed, pair_index).
std::pair<Patch, Patch> augment_pair(const Patch& a, const Patch& b,
                                     std::uint64_t seed,
                                     std::uint64_t pair_index,
                                     const AugmentParams& params);

}  // namespace gdkit

#endif  // GDKIT_PATCH_HPP_
