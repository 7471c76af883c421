#ifndef GDKIT_BATCH_HPP_
#define GDKIT_BATCH_HPP_

#include <cstdint>
#include <vector>

#include "gdkit/geosim.hpp"
#include "gdkit/patch.hpp"
#include "gdkit/scene.hpp"

namespace gdkit {

// One verified matching patch pair of a match set, with its geometric
// similarity.
struct MatchSetEntry {
  Patch patch_a;
  Patch patch_b;
  double s_patch = 1.0;
  int track_id = -1;
};

// N1 matching patch pairs extracted from a single image pair.
struct MatchSet {
  int id = -1;
  int cam_i = -1;
  int cam_j = -1;
  std::vector<MatchSetEntry> entries;
};

struct BatchConfig {
  int n1 = 64;
  int n2 = 12;
  std::uint64_t seed = 0;
  int g_size = 32;
  double support_k = kDefaultSupportK;
  GeoSimParams geo;
  AugmentParams augment;
};

// N2 match sets with augmented, standardized patches.
struct TrainingBatch {
  std::vector<MatchSet> match_sets;
};

// Chunks the pair's shared croppable tracks into floor(shared / n1) disjoint
// match sets of exactly n1 raw patch pairs; pairs sharing fewer than n1
// tracks yield an empty result. The shuffle is keyed by
// (seed, epoch, cam_i, cam_j) so every epoch re-chunks the leftovers.
std::vector<MatchSet> extract_match_sets(const SceneReconstruction& scene,
                                         int cam_i, int cam_j,
                                         const BatchConfig& config,
                                         int epoch = 0);

// Where a cached match set came from.
struct MatchSetProvenance {
  int set_id = -1;
  int cam_i = -1;
  int cam_j = -1;
  int epoch = 0;
  int chunk = 0;
};

// Extracts match sets for every image pair that shares at least one track
// and survives s_image pruning, for `epochs` re-chunked rounds. Sets get
// sequential ids; provenance rows are appended when requested.
std::vector<MatchSet> extract_training_pool(
    const SceneReconstruction& scene, const BatchConfig& config, int epochs,
    std::vector<MatchSetProvenance>* provenance = nullptr);

// Destroys the pair-wise structure of a pool by regrouping all entries into
// random sets of n1. Diagnostic baseline for batch-construction ablations.
std::vector<MatchSet> shuffle_entries_across_sets(
    const std::vector<MatchSet>& sets, int n1, std::uint64_t seed);

// Deterministic batch source: draws n2 match sets without replacement within
// an epoch, applies pair-consistent augmentation and standardization, and is
// a pure function of (seed, step). Backed either by an in-memory pool of raw
// match sets or lazily by a scene (patches cropped on demand).
class MatchSetStream {
 public:
  static MatchSetStream from_sets(std::vector<MatchSet> sets,
                                  const BatchConfig& config);
  // `scene` must outlive the stream.
  static MatchSetStream from_scene(const SceneReconstruction* scene,
                                   const BatchConfig& config);

  std::int64_t sets_per_epoch() const;
  std::int64_t batches_per_epoch() const;

  // Throws StreamExhausted when an epoch cannot supply n2 sets.
  TrainingBatch batch_at(std::int64_t step) const;

  const BatchConfig& config() const { return config_; }

 private:
  MatchSetStream() = default;

  struct LazySlot {
    int cam_i = -1;
    int cam_j = -1;
    int chunk = 0;
  };

  MatchSet materialize(std::int64_t epoch, std::int64_t slot) const;

  BatchConfig config_;
  std::vector<MatchSet> pool_;  // in-memory backend
  const SceneReconstruction* scene_ = nullptr;
  // Lazy backend: per surviving pair, the croppable shared track ids.
  struct LazyPair {
    int cam_i = -1;
    int cam_j = -1;
    std::vector<int> track_ids;
  };
  std::vector<LazyPair> lazy_pairs_;
  std::vector<LazySlot> lazy_slots_;
};

}  // namespace gdkit

#endif  // GDKIT_BATCH_HPP_
