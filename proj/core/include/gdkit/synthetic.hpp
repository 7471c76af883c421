#ifndef GDKIT_SYNTHETIC_HPP_
#define GDKIT_SYNTHETIC_HPP_

#include <cstdint>
#include <utility>

#include "gdkit/image.hpp"
#include "gdkit/scene.hpp"

namespace gdkit {

struct SyntheticConfig {
  int n_cameras = 12;
  int n_tracks = 2000;
  int texture_size = 1024;
  double camera_ring_radius = 4.0;
  double noise_px = 0.25;  // keypoint position jitter bound, must be <= 2
  int image_size = 256;
};

struct SyntheticScene {
  SceneReconstruction scene;
  ImageRaster texture;
};

// Band-limited noise plus smooth anisotropic blobs, quantized to 8 bits.
ImageRaster make_texture(int size, std::uint64_t seed);

// Places cameras on a ring above a textured plane at z = 0 and samples
// tracks on the plane. Every track is observed by every camera, keypoint
// scale follows the projected size of a per-track world radius, and image
// rasters are rendered from the texture through the plane geometry.
// Identical (config, seed) yields bit-identical output.
SyntheticScene generate_synthetic_scene(const SyntheticConfig& config,
                                        std::uint64_t seed);

}  // namespace gdkit

#endif  // GDKIT_SYNTHETIC_HPP_
