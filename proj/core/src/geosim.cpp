#include "gdkit/geosim.hpp"

#include <cmath>
#include <string>

#include "gdkit/error.hpp"

namespace gdkit {

double angle_metric(double alpha_deg, double sigma_deg) {
  if (!(sigma_deg > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "angle metric sigma must be > 0");
  }
  return std::exp(-(alpha_deg * alpha_deg) / (2.0 * sigma_deg * sigma_deg));
}

PatchSimilarity patch_similarity(const Camera& cam_i, const Camera& cam_j,
                                 const Track& track,
                                 const GeoSimParams& params) {
  const Eigen::Vector3d ray_i = cam_i.center - track.position;
  const Eigen::Vector3d ray_j = cam_j.center - track.position;
  if (ray_i.norm() < 1e-12 || ray_j.norm() < 1e-12) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "camera center coincides with track " +
                    std::to_string(track.id));
  }
  const double intersection = angle_between_deg(ray_i, ray_j);
  const double incidence_i = angle_between_deg(ray_i, track.normal);
  const double incidence_j = angle_between_deg(ray_j, track.normal);

  PatchSimilarity sim;
  sim.s1 = angle_metric(intersection, params.sigma1_deg);
  // g is even, so the absolute difference matches the signed formulation
  // while making swap symmetry explicit.
  sim.s2 = angle_metric(std::abs(incidence_i - incidence_j),
                        params.sigma2_deg);
  sim.s_patch = sim.s1 * sim.s2;
  return sim;
}

std::vector<const Track*> shared_tracks(const SceneReconstruction& scene,
                                        int cam_i, int cam_j) {
  std::vector<const Track*> shared;
  for (const Track& track : scene.tracks) {
    if (track.find_observation(cam_i) && track.find_observation(cam_j)) {
      shared.push_back(&track);
    }
  }
  return shared;
}

SimilarityReport image_similarity(const SceneReconstruction& scene, int cam_i,
                                  int cam_j, const GeoSimParams& params) {
  const Camera* camera_i = scene.find_camera(cam_i);
  const Camera* camera_j = scene.find_camera(cam_j);
  if (!camera_i || !camera_j) {
    throw Error(ErrorCode::kConfigInvalid,
                "unknown camera id in pair (" + std::to_string(cam_i) + ", " +
                    std::to_string(cam_j) + ")");
  }
  SimilarityReport report;
  report.cam_i = cam_i;
  report.cam_j = cam_j;
  double sum = 0.0;
  for (const Track* track : shared_tracks(scene, cam_i, cam_j)) {
    SimilarityReport::Entry entry;
    entry.track_id = track->id;
    entry.sim = patch_similarity(*camera_i, *camera_j, *track, params);
    sum += entry.sim.s_patch;
    report.per_track.push_back(entry);
  }
  if (report.per_track.empty()) {
    throw Error(ErrorCode::kNoSharedTracks,
                "cameras " + std::to_string(cam_i) + " and " +
                    std::to_string(cam_j) + " share no tracks");
  }
  report.s_image = sum / static_cast<double>(report.per_track.size());
  return report;
}

std::vector<SimilarityReport> prune_pairs(
    const std::vector<SimilarityReport>& pairs, const GeoSimParams& params) {
  std::vector<SimilarityReport> kept;
  kept.reserve(pairs.size());
  for (const SimilarityReport& report : pairs) {
    if (report.s_image <= params.prune_threshold) {
      kept.push_back(report);
    }
  }
  return kept;
}

}  // namespace gdkit
