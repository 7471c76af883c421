#include "gdkit/scene.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "gdkit/error.hpp"

namespace gdkit {

namespace {
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}

const Observation* Track::find_observation(int camera_id) const {
  for (const Observation& obs : observations) {
    if (obs.camera_id == camera_id) return &obs;
  }
  return nullptr;
}

const Camera* SceneReconstruction::find_camera(int camera_id) const {
  for (const Camera& camera : cameras) {
    if (camera.id == camera_id) return &camera;
  }
  return nullptr;
}

const ImageRaster* SceneReconstruction::find_image(int camera_id) const {
  for (const auto& [id, raster] : images) {
    if (id == camera_id) return &raster;
  }
  return nullptr;
}

void SceneReconstruction::validate() const {
  for (const Camera& camera : cameras) {
    const Eigen::Matrix3d rtr =
        camera.rotation.transpose() * camera.rotation;
    if ((rtr - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(camera.rotation.determinant() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kConfigInvalid,
                  "camera " + std::to_string(camera.id) +
                      " rotation is not orthonormal with det +1");
    }
    if (!(camera.focal > 0.0)) {
      throw Error(ErrorCode::kConfigInvalid,
                  "camera " + std::to_string(camera.id) +
                      " has non-positive focal length");
    }
    if (camera.width < 32 || camera.height < 32) {
      throw Error(ErrorCode::kConfigInvalid,
                  "camera " + std::to_string(camera.id) +
                      " image size below 32 pixels");
    }
  }
  for (const Track& track : tracks) {
    if (std::abs(track.normal.norm() - 1.0) > 1e-9) {
      throw Error(ErrorCode::kConfigInvalid,
                  "track " + std::to_string(track.id) + " normal is not unit");
    }
    if (track.observations.size() < 2) {
      throw Error(ErrorCode::kConfigInvalid,
                  "track " + std::to_string(track.id) +
                      " has fewer than 2 observations");
    }
    std::set<int> seen;
    for (const Observation& obs : track.observations) {
      if (!find_camera(obs.camera_id)) {
        throw Error(ErrorCode::kConfigInvalid,
                    "track " + std::to_string(track.id) +
                        " references unknown camera " +
                        std::to_string(obs.camera_id));
      }
      if (!seen.insert(obs.camera_id).second) {
        throw Error(ErrorCode::kConfigInvalid,
                    "track " + std::to_string(track.id) +
                        " observes camera " + std::to_string(obs.camera_id) +
                        " more than once");
      }
    }
  }
  for (const auto& [camera_id, raster] : images) {
    if (!find_camera(camera_id)) {
      throw Error(ErrorCode::kConfigInvalid,
                  "image raster references unknown camera " +
                      std::to_string(camera_id));
    }
    (void)raster;
  }
}

Projection project_point(const Camera& camera, const Eigen::Vector3d& point) {
  const Eigen::Vector3d local = camera.rotation * (point - camera.center);
  if (local.z() <= 1e-9) {
    throw Error(ErrorCode::kNonPositiveDepth,
                "point at depth " + std::to_string(local.z()) +
                    " behind or on camera plane of camera " +
                    std::to_string(camera.id));
  }
  Projection result;
  result.pixel = camera.principal_point +
                 camera.focal * Eigen::Vector2d(local.x() / local.z(),
                                                local.y() / local.z());
  result.depth = local.z();
  return result;
}

Projection project_track(const Camera& camera, const Track& track) {
  return project_point(camera, track.position);
}

double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double cross = a.cross(b).norm();
  const double dot = a.dot(b);
  return std::atan2(cross, dot) * kRadToDeg;
}

double max_pairwise_view_angle_deg(const SceneReconstruction& scene,
                                   const Track& track) {
  double best = 0.0;
  const std::size_t n = track.observations.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Camera* cam_i = scene.find_camera(track.observations[i].camera_id);
    if (!cam_i) continue;
    const Eigen::Vector3d ray_i = cam_i->center - track.position;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Camera* cam_j = scene.find_camera(track.observations[j].camera_id);
      if (!cam_j) continue;
      const Eigen::Vector3d ray_j = cam_j->center - track.position;
      best = std::max(best, angle_between_deg(ray_i, ray_j));
    }
  }
  return best;
}

SceneReconstruction filter_tracks(const SceneReconstruction& scene,
                                  const TrackFilterParams& params) {
  if (!(params.min_angle_deg > 0.0 && params.min_angle_deg < 90.0)) {
    throw Error(ErrorCode::kConfigInvalid,
                "min_angle_deg must lie in (0, 90)");
  }
  if (params.min_track_len < 2) {
    throw Error(ErrorCode::kConfigInvalid, "min_track_len must be >= 2");
  }

  SceneReconstruction out;
  out.cameras = scene.cameras;
  out.images = scene.images;
  for (const Track& track : scene.tracks) {
    if (static_cast<int>(track.observations.size()) < params.min_track_len) {
      continue;
    }
    if (max_pairwise_view_angle_deg(scene, track) < params.min_angle_deg) {
      continue;
    }
    bool reproj_ok = true;
    for (const Observation& obs : track.observations) {
      const Camera* camera = scene.find_camera(obs.camera_id);
      if (!camera) {
        reproj_ok = false;
        break;
      }
      Eigen::Vector2d pixel;
      try {
        pixel = project_point(*camera, track.position).pixel;
      } catch (const Error&) {
        reproj_ok = false;
        break;
      }
      const double err = (pixel - Eigen::Vector2d(obs.keypoint.x,
                                                  obs.keypoint.y)).norm();
      if (err > params.max_reproj_px) {
        reproj_ok = false;
        break;
      }
    }
    if (reproj_ok) out.tracks.push_back(track);
  }
  return out;
}

}  // namespace gdkit
