#ifndef GDKIT_SCENE_HPP_
#define GDKIT_SCENE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "gdkit/image.hpp"

namespace gdkit {

// Pinhole camera without distortion. `rotation` maps world to camera frame;
// the camera looks down its +z axis.
struct Camera {
  int id = -1;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  double focal = 1.0;
  Eigen::Vector2d principal_point = Eigen::Vector2d::Zero();
  int width = 0;
  int height = 0;
};

// Detection parameters driving patch cropping: position, scale sigma in
// pixels and orientation theta in [-pi, pi).
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;
  double orientation = 0.0;
};

struct Observation {
  int camera_id = -1;
  Keypoint keypoint;
};

// A 3D point with its surface normal and the image observations that see it.
struct Track {
  int id = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  std::vector<Observation> observations;

  const Observation* find_observation(int camera_id) const;
};

struct SceneReconstruction {
  std::vector<Camera> cameras;
  std::vector<Track> tracks;
  // camera_id -> raster; rasters are optional (geometry-only scenes are valid).
  std::vector<std::pair<int, ImageRaster>> images;

  const Camera* find_camera(int camera_id) const;
  const ImageRaster* find_image(int camera_id) const;

  // Checks structural invariants: orthonormal rotations (det +1, 1e-9),
  // positive focals, image sizes >= 32, unit normals, >= 2 observations per
  // track, unique camera per track, resolvable camera ids.
  // Throws ConfigInvalid on violation.
  void validate() const;
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth;
};

// Pinhole projection; throws NonPositiveDepth when the camera-frame depth
// is <= 1e-9.
Projection project_point(const Camera& camera, const Eigen::Vector3d& point);
Projection project_track(const Camera& camera, const Track& track);

struct TrackFilterParams {
  double min_angle_deg = 3.0;
  int min_track_len = 2;
  double max_reproj_px = 2.0;
};

// Keeps exactly the tracks whose maximum pairwise viewing-ray intersection
// angle is >= min_angle_deg, whose observation count is >= min_track_len and
// whose per-observation reprojection error is <= max_reproj_px.
// Cameras and rasters are passed through unchanged.
SceneReconstruction filter_tracks(const SceneReconstruction& scene,
                                  const TrackFilterParams& params);

// Angle between two vectors in degrees, computed via atan2 for stability
// near 0 and 180 degrees.
double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

// Largest pairwise viewing-ray intersection angle at the track position.
double max_pairwise_view_angle_deg(const SceneReconstruction& scene,
                                   const Track& track);

}  // namespace gdkit

#endif  // GDKIT_SCENE_HPP_
