#ifndef GDKIT_GEOSIM_HPP_
#define GDKIT_GEOSIM_HPP_

#include <vector>

#include "gdkit/scene.hpp"

namespace gdkit {

struct GeoSimParams {
  double sigma1_deg = 15.0;
  double sigma2_deg = 20.0;
  double prune_threshold = 0.85;
};

// Gaussian angle penalty exp(-alpha^2 / (2 sigma^2)); both in degrees.
double angle_metric(double alpha_deg, double sigma_deg);

struct PatchSimilarity {
  double s_patch = 1.0;
  double s1 = 1.0;  // viewing-ray intersection term
  double s2 = 1.0;  // incidence-angle difference term
};

// Perspective-change difficulty of the patch pair observing `track` from the
// two cameras: s1 penalizes the ray intersection angle at the track, s2 the
// absolute difference of the incidence angles against the track normal.
// Throws DegenerateGeometry when a camera center coincides with the track.
PatchSimilarity patch_similarity(const Camera& cam_i, const Camera& cam_j,
                                 const Track& track,
                                 const GeoSimParams& params);

struct SimilarityReport {
  int cam_i = -1;
  int cam_j = -1;
  struct Entry {
    int track_id = -1;
    PatchSimilarity sim;
  };
  std::vector<Entry> per_track;
  double s_image = 0.0;  // arithmetic mean of per-track s_patch
};

// Mean patch similarity over all tracks the pair shares.
// Throws NoSharedTracks when the pair shares none.
SimilarityReport image_similarity(const SceneReconstruction& scene, int cam_i,
                                  int cam_j, const GeoSimParams& params);

// Tracks observed by both cameras, in scene order.
std::vector<const Track*> shared_tracks(const SceneReconstruction& scene,
                                        int cam_i, int cam_j);

// Keeps exactly the pairs with s_image <= prune_threshold (too-similar pairs
// are discarded); input order is preserved.
std::vector<SimilarityReport> prune_pairs(
    const std::vector<SimilarityReport>& pairs, const GeoSimParams& params);

}  // namespace gdkit

#endif  // GDKIT_GEOSIM_HPP_
