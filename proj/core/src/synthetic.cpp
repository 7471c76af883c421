#include "gdkit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "gdkit/error.hpp"
#include "gdkit/patch.hpp"
#include "gdkit/rng.hpp"

namespace gdkit {

namespace {

// The textured plane spans [-1, 1]^2 in world units at z = 0; tracks are
// sampled inside the slightly smaller square below so that patch supports
// stay clear of the texture border in every view.
constexpr double kPlaneHalfExtent = 1.0;
constexpr double kTrackHalfExtent = 0.8;
constexpr double kGuardHalfExtent = 0.85;
constexpr double kRingHeightFactor = 1.25;
constexpr double kWorldRadiusMin = 0.015;
constexpr double kWorldRadiusMax = 0.035;

void gaussian_blur_inplace(std::vector<double>& img, int size, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  std::vector<double> tmp(img.size());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int sx = std::clamp(x + i, 0, size - 1);
        acc += kernel[i + radius] * img[y * size + sx];
      }
      tmp[y * size + x] = acc;
    }
  }
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int sy = std::clamp(y + i, 0, size - 1);
        acc += kernel[i + radius] * tmp[sy * size + x];
      }
      img[y * size + x] = acc;
    }
  }
}

Eigen::Vector2d world_to_texture(const Eigen::Vector2d& xy, int texture_size) {
  const double scale = (texture_size - 1) / (2.0 * kPlaneHalfExtent);
  return {(xy.x() + kPlaneHalfExtent) * scale,
          (xy.y() + kPlaneHalfExtent) * scale};
}

Camera make_ring_camera(int id, double angle, double radius, double height,
                        double focal, int image_size) {
  Camera camera;
  camera.id = id;
  camera.center =
      Eigen::Vector3d(radius * std::cos(angle), radius * std::sin(angle),
                      height);
  const Eigen::Vector3d forward = (-camera.center).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  camera.rotation.row(0) = right;
  camera.rotation.row(1) = down;
  camera.rotation.row(2) = forward;
  camera.focal = focal;
  camera.principal_point =
      Eigen::Vector2d((image_size - 1) / 2.0, (image_size - 1) / 2.0);
  camera.width = image_size;
  camera.height = image_size;
  return camera;
}

// Intersects the pixel ray with the plane z = 0; returns false when the ray
// is parallel or exits away from the plane.
bool pixel_to_plane(const Camera& camera, double px, double py,
                    Eigen::Vector2d* xy) {
  const Eigen::Vector3d dir_cam((px - camera.principal_point.x()) / camera.focal,
                                (py - camera.principal_point.y()) / camera.focal,
                                1.0);
  const Eigen::Vector3d dir = camera.rotation.transpose() * dir_cam;
  if (std::abs(dir.z()) < 1e-12) return false;
  const double t = -camera.center.z() / dir.z();
  if (t <= 0.0) return false;
  const Eigen::Vector3d hit = camera.center + t * dir;
  *xy = hit.head<2>();
  return true;
}

ImageRaster render_view(const Camera& camera, const ImageRaster& texture) {
  ImageRaster image(camera.width, camera.height);
  // 2x2 supersampling tames aliasing from the oblique plane sweep.
  const double offsets[2] = {-0.25, 0.25};
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      double acc = 0.0;
      for (const double oy : offsets) {
        for (const double ox : offsets) {
          Eigen::Vector2d xy;
          double v = 0.5;
          if (pixel_to_plane(camera, x + ox, y + oy, &xy)) {
            const Eigen::Vector2d t =
                world_to_texture(xy, static_cast<int>(texture.width));
            v = texture.sample_bilinear(t.x(), t.y());
          }
          acc += v;
        }
      }
      image.at(x, y) =
          static_cast<std::uint8_t>(std::lround(acc / 4.0 * 255.0));
    }
  }
  return image;
}

// Worst-case support radius in pixels for a point at `xy` seen by `camera`,
// assuming the largest per-track world radius.
double support_radius_px(const Camera& camera, const Eigen::Vector2d& xy) {
  const Eigen::Vector3d point(xy.x(), xy.y(), 0.0);
  const double depth = (camera.rotation * (point - camera.center)).z();
  const double sigma = kWorldRadiusMax * camera.focal / depth;
  return kDefaultSupportK * sigma / 2.0 * std::numbers::sqrt2;
}

bool guard_region_fits(const Camera& camera, double margin_px) {
  for (const double gx : {-kGuardHalfExtent, kGuardHalfExtent}) {
    for (const double gy : {-kGuardHalfExtent, kGuardHalfExtent}) {
      const Eigen::Vector2d xy(gx, gy);
      Eigen::Vector2d pixel;
      try {
        pixel = project_point(camera, Eigen::Vector3d(gx, gy, 0.0)).pixel;
      } catch (const Error&) {
        return false;
      }
      const double pad = support_radius_px(camera, xy) + margin_px;
      if (pixel.x() < pad || pixel.x() > camera.width - 1 - pad ||
          pixel.y() < pad || pixel.y() > camera.height - 1 - pad) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

ImageRaster make_texture(int size, std::uint64_t seed) {
  RandomStream stream({seed, 0x746578ULL /*"tex"*/});
  std::vector<double> field(static_cast<std::size_t>(size) * size);
  for (double& v : field) v = stream.next_gaussian();
  gaussian_blur_inplace(field, size, 6.0);

  // Rescale the blurred noise to a fixed contrast band.
  double mean = 0.0;
  for (double v : field) mean += v;
  mean /= field.size();
  double var = 0.0;
  for (double v : field) var += (v - mean) * (v - mean);
  var /= field.size();
  const double inv_std = 1.0 / std::max(std::sqrt(var), 1e-12);
  for (double& v : field) v = 0.5 + 0.12 * (v - mean) * inv_std;

  // Smooth anisotropic blobs at random orientations; overlaps create the
  // corner-like structure that keeps patches discriminative.
  const int n_blobs = std::max(16, size * size / 16384);
  for (int b = 0; b < n_blobs; ++b) {
    const double cx = stream.next_range(0.0, size - 1.0);
    const double cy = stream.next_range(0.0, size - 1.0);
    const double sa = stream.next_range(6.0, 24.0);
    const double sb = stream.next_range(6.0, 24.0);
    const double theta = stream.next_range(0.0, std::numbers::pi);
    const double amp = stream.next_range(0.12, 0.28) *
                       (stream.next_bernoulli(0.5) ? 1.0 : -1.0);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const int radius = static_cast<int>(std::ceil(3.0 * std::max(sa, sb)));
    const int x0 = std::max(0, static_cast<int>(cx) - radius);
    const int x1 = std::min(size - 1, static_cast<int>(cx) + radius);
    const int y0 = std::max(0, static_cast<int>(cy) - radius);
    const int y1 = std::min(size - 1, static_cast<int>(cy) + radius);
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - cx;
        const double dy = y - cy;
        const double u = c * dx + s * dy;
        const double v = -s * dx + c * dy;
        field[y * size + x] +=
            amp * std::exp(-0.5 * (u * u / (sa * sa) + v * v / (sb * sb)));
      }
    }
  }

  ImageRaster texture(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double v = std::clamp(field[y * size + x], 0.02, 0.98);
      texture.at(x, y) = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return texture;
}

SyntheticScene generate_synthetic_scene(const SyntheticConfig& config,
                                        std::uint64_t seed) {
  if (config.n_cameras < 2) {
    throw Error(ErrorCode::kConfigInvalid, "n_cameras must be >= 2");
  }
  if (config.n_tracks < 1) {
    throw Error(ErrorCode::kConfigInvalid, "n_tracks must be >= 1");
  }
  if (config.texture_size < 64) {
    throw Error(ErrorCode::kConfigInvalid, "texture_size must be >= 64");
  }
  if (config.camera_ring_radius <= 0.0) {
    throw Error(ErrorCode::kConfigInvalid, "camera_ring_radius must be > 0");
  }
  if (config.noise_px < 0.0 || config.noise_px > 2.0) {
    // The generator guarantees that default track filtering keeps every
    // track, which bounds the permissible keypoint jitter.
    throw Error(ErrorCode::kConfigInvalid, "noise_px must lie in [0, 2]");
  }
  if (config.image_size < 64) {
    throw Error(ErrorCode::kConfigInvalid, "image_size must be >= 64");
  }

  SyntheticScene result;
  result.texture = make_texture(config.texture_size, seed);

  const double radius = config.camera_ring_radius;
  const double height = kRingHeightFactor * radius;
  const double view_dist = std::hypot(radius, height);

  // Start from a focal that frames the plane and shrink until the guarded
  // track region plus worst-case patch support fits every view.
  double focal = 0.5 * config.image_size * view_dist / 1.9;
  const double margin_px = config.noise_px + 2.0;
  for (int iter = 0; iter < 120; ++iter) {
    bool ok = true;
    for (int k = 0; k < config.n_cameras && ok; ++k) {
      const double angle = 2.0 * std::numbers::pi * k / config.n_cameras;
      const Camera camera = make_ring_camera(k, angle, radius, height, focal,
                                             config.image_size);
      ok = guard_region_fits(camera, margin_px);
    }
    if (ok) break;
    focal *= 0.96;
    if (focal < config.image_size / 8.0) {
      throw Error(ErrorCode::kConfigInvalid,
                  "cannot frame the track region; camera_ring_radius too "
                  "small for the requested image size");
    }
  }

  SceneReconstruction& scene = result.scene;
  for (int k = 0; k < config.n_cameras; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / config.n_cameras;
    scene.cameras.push_back(make_ring_camera(k, angle, radius, height, focal,
                                             config.image_size));
  }
  for (const Camera& camera : scene.cameras) {
    scene.images.emplace_back(camera.id, render_view(camera, result.texture));
  }

  RandomStream track_stream({seed, 0x74726bULL /*"trk"*/});
  for (int t = 0; t < config.n_tracks; ++t) {
    Track track;
    track.id = t;
    track.normal = Eigen::Vector3d::UnitZ();

    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const double wx =
          track_stream.next_range(-kTrackHalfExtent, kTrackHalfExtent);
      const double wy =
          track_stream.next_range(-kTrackHalfExtent, kTrackHalfExtent);
      const double world_radius =
          track_stream.next_range(kWorldRadiusMin, kWorldRadiusMax);
      const double world_theta =
          track_stream.next_range(-std::numbers::pi, std::numbers::pi);
      track.position = Eigen::Vector3d(wx, wy, 0.0);
      track.observations.clear();

      bool ok = true;
      for (const Camera& camera : scene.cameras) {
        const Projection proj = project_point(camera, track.position);
        Keypoint kp;
        kp.scale = world_radius * camera.focal / proj.depth;

        // Observed orientation: image direction of the in-plane reference
        // direction attached to the track.
        const Eigen::Vector3d probe =
            track.position + 1e-5 * Eigen::Vector3d(std::cos(world_theta),
                                                    std::sin(world_theta), 0.0);
        const Eigen::Vector2d dir =
            project_point(camera, probe).pixel - proj.pixel;
        kp.orientation = std::atan2(dir.y(), dir.x());
        if (kp.orientation >= std::numbers::pi) {
          kp.orientation -= 2.0 * std::numbers::pi;
        }

        // Radially clamped Gaussian jitter keeps the reprojection error
        // within noise_px.
        double nx = 0.0, ny = 0.0;
        if (config.noise_px > 0.0) {
          nx = track_stream.next_gaussian() * config.noise_px / 2.0;
          ny = track_stream.next_gaussian() * config.noise_px / 2.0;
          const double norm = std::hypot(nx, ny);
          if (norm > config.noise_px) {
            nx *= config.noise_px / norm;
            ny *= config.noise_px / norm;
          }
        }
        kp.x = proj.pixel.x() + nx;
        kp.y = proj.pixel.y() + ny;

        const ImageRaster* raster = scene.find_image(camera.id);
        if (!raster || !support_in_bounds(*raster, kp, kDefaultSupportK)) {
          ok = false;
          break;
        }
        track.observations.push_back({camera.id, kp});
      }
      placed = ok;
    }
    if (!placed) {
      throw Error(ErrorCode::kConfigInvalid,
                  "could not place track " + std::to_string(t) +
                      " with in-bounds support in all views");
    }
    scene.tracks.push_back(std::move(track));
  }

  scene.validate();
  return result;
}

}  // namespace gdkit
