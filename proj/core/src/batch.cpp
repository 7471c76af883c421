#include "gdkit/batch.hpp"

#include <algorithm>
#include <string>

#include "gdkit/error.hpp"
#include "gdkit/rng.hpp"

namespace gdkit {

namespace {

void check_config(const BatchConfig& config) {
  if (config.n1 < 2) {
    throw Error(ErrorCode::kConfigInvalid, "n1 must be >= 2");
  }
  if (config.n2 < 1) {
    throw Error(ErrorCode::kConfigInvalid, "n2 must be >= 1");
  }
}

// Shared tracks whose supports can be cropped from both rasters, shuffled by
// (seed, epoch, pair) and cut into disjoint chunks of exactly n1.
std::vector<std::vector<int>> chunked_track_ids(
    const SceneReconstruction& scene, int cam_i, int cam_j,
    const BatchConfig& config, int epoch) {
  const ImageRaster* raster_i = scene.find_image(cam_i);
  const ImageRaster* raster_j = scene.find_image(cam_j);
  if (!raster_i || !raster_j) {
    throw Error(ErrorCode::kConfigInvalid,
                "match-set extraction needs rasters for cameras " +
                    std::to_string(cam_i) + " and " + std::to_string(cam_j));
  }

  std::vector<int> ids;
  for (const Track* track : shared_tracks(scene, cam_i, cam_j)) {
    const Observation* obs_i = track->find_observation(cam_i);
    const Observation* obs_j = track->find_observation(cam_j);
    if (support_in_bounds(*raster_i, obs_i->keypoint, config.support_k) &&
        support_in_bounds(*raster_j, obs_j->keypoint, config.support_k)) {
      ids.push_back(track->id);
    }
  }

  RandomStream stream({config.seed, 0x63686e6bULL /*"chnk"*/,
                       static_cast<std::uint64_t>(epoch),
                       static_cast<std::uint64_t>(cam_i),
                       static_cast<std::uint64_t>(cam_j)});
  stream.shuffle(ids);

  std::vector<std::vector<int>> chunks;
  const std::size_t n_sets = ids.size() / static_cast<std::size_t>(config.n1);
  for (std::size_t c = 0; c < n_sets; ++c) {
    chunks.emplace_back(ids.begin() + c * config.n1,
                        ids.begin() + (c + 1) * config.n1);
  }
  return chunks;
}

MatchSet build_set(const SceneReconstruction& scene, int cam_i, int cam_j,
                   const std::vector<int>& track_ids,
                   const BatchConfig& config) {
  const Camera* camera_i = scene.find_camera(cam_i);
  const Camera* camera_j = scene.find_camera(cam_j);
  const ImageRaster* raster_i = scene.find_image(cam_i);
  const ImageRaster* raster_j = scene.find_image(cam_j);

  MatchSet set;
  set.cam_i = cam_i;
  set.cam_j = cam_j;
  for (const int track_id : track_ids) {
    const Track* track = nullptr;
    for (const Track& t : scene.tracks) {
      if (t.id == track_id) {
        track = &t;
        break;
      }
    }
    const Observation* obs_i = track->find_observation(cam_i);
    const Observation* obs_j = track->find_observation(cam_j);

    MatchSetEntry entry;
    entry.track_id = track_id;
    entry.patch_a = crop_patch(*raster_i, cam_i, obs_i->keypoint,
                               config.g_size, config.support_k);
    entry.patch_b = crop_patch(*raster_j, cam_j, obs_j->keypoint,
                               config.g_size, config.support_k);
    entry.s_patch =
        patch_similarity(*camera_i, *camera_j, *track, config.geo).s_patch;
    set.entries.push_back(std::move(entry));
  }
  return set;
}

}  // namespace

std::vector<MatchSet> extract_match_sets(const SceneReconstruction& scene,
                                         int cam_i, int cam_j,
                                         const BatchConfig& config,
                                         int epoch) {
  check_config(config);
  std::vector<MatchSet> sets;
  for (const std::vector<int>& chunk :
       chunked_track_ids(scene, cam_i, cam_j, config, epoch)) {
    sets.push_back(build_set(scene, cam_i, cam_j, chunk, config));
  }
  return sets;
}

std::vector<MatchSet> extract_training_pool(
    const SceneReconstruction& scene, const BatchConfig& config, int epochs,
    std::vector<MatchSetProvenance>* provenance) {
  check_config(config);
  std::vector<MatchSet> pool;
  int next_id = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (std::size_t a = 0; a < scene.cameras.size(); ++a) {
      for (std::size_t b = a + 1; b < scene.cameras.size(); ++b) {
        const int cam_i = scene.cameras[a].id;
        const int cam_j = scene.cameras[b].id;
        if (shared_tracks(scene, cam_i, cam_j).empty()) continue;
        const SimilarityReport report =
            image_similarity(scene, cam_i, cam_j, config.geo);
        if (report.s_image > config.geo.prune_threshold) continue;

        std::vector<MatchSet> sets =
            extract_match_sets(scene, cam_i, cam_j, config, epoch);
        for (std::size_t c = 0; c < sets.size(); ++c) {
          sets[c].id = next_id++;
          if (provenance) {
            provenance->push_back({sets[c].id, cam_i, cam_j, epoch,
                                   static_cast<int>(c)});
          }
          pool.push_back(std::move(sets[c]));
        }
      }
    }
  }
  return pool;
}

std::vector<MatchSet> shuffle_entries_across_sets(
    const std::vector<MatchSet>& sets, int n1, std::uint64_t seed) {
  std::vector<const MatchSetEntry*> entries;
  for (const MatchSet& set : sets) {
    for (const MatchSetEntry& entry : set.entries) entries.push_back(&entry);
  }
  RandomStream stream({seed, 0x78736866ULL /*"xshf"*/});
  stream.shuffle(entries);

  std::vector<MatchSet> out;
  const std::size_t n_sets = entries.size() / static_cast<std::size_t>(n1);
  for (std::size_t c = 0; c < n_sets; ++c) {
    MatchSet set;
    set.id = static_cast<int>(c);
    for (int e = 0; e < n1; ++e) {
      set.entries.push_back(*entries[c * n1 + e]);
    }
    out.push_back(std::move(set));
  }
  return out;
}

MatchSetStream MatchSetStream::from_sets(std::vector<MatchSet> sets,
                                         const BatchConfig& config) {
  check_config(config);
  MatchSetStream stream;
  stream.config_ = config;
  stream.pool_ = std::move(sets);
  return stream;
}

MatchSetStream MatchSetStream::from_scene(const SceneReconstruction* scene,
                                          const BatchConfig& config) {
  check_config(config);
  MatchSetStream stream;
  stream.config_ = config;
  stream.scene_ = scene;
  for (std::size_t a = 0; a < scene->cameras.size(); ++a) {
    for (std::size_t b = a + 1; b < scene->cameras.size(); ++b) {
      const int cam_i = scene->cameras[a].id;
      const int cam_j = scene->cameras[b].id;
      if (shared_tracks(*scene, cam_i, cam_j).empty()) continue;
      const SimilarityReport report =
          image_similarity(*scene, cam_i, cam_j, config.geo);
      if (report.s_image > config.geo.prune_threshold) continue;

      // Chunk count is epoch-invariant: it only depends on the number of
      // croppable shared tracks.
      const std::size_t n_sets =
          chunked_track_ids(*scene, cam_i, cam_j, config, 0).size();
      if (n_sets == 0) continue;
      LazyPair pair;
      pair.cam_i = cam_i;
      pair.cam_j = cam_j;
      stream.lazy_pairs_.push_back(pair);
      for (std::size_t c = 0; c < n_sets; ++c) {
        stream.lazy_slots_.push_back({cam_i, cam_j, static_cast<int>(c)});
      }
    }
  }
  return stream;
}

std::int64_t MatchSetStream::sets_per_epoch() const {
  return scene_ ? static_cast<std::int64_t>(lazy_slots_.size())
                : static_cast<std::int64_t>(pool_.size());
}

std::int64_t MatchSetStream::batches_per_epoch() const {
  return sets_per_epoch() / config_.n2;
}

MatchSet MatchSetStream::materialize(std::int64_t epoch,
                                     std::int64_t slot) const {
  if (scene_) {
    const LazySlot& s = lazy_slots_[slot];
    const std::vector<std::vector<int>> chunks = chunked_track_ids(
        *scene_, s.cam_i, s.cam_j, config_, static_cast<int>(epoch));
    MatchSet set = build_set(*scene_, s.cam_i, s.cam_j, chunks[s.chunk],
                             config_);
    set.id = static_cast<int>(slot);
    return set;
  }
  return pool_[slot];
}

TrainingBatch MatchSetStream::batch_at(std::int64_t step) const {
  const std::int64_t bpe = batches_per_epoch();
  if (bpe == 0) {
    throw Error(ErrorCode::kStreamExhausted,
                "epoch supplies " + std::to_string(sets_per_epoch()) +
                    " match sets but the batch needs " +
                    std::to_string(config_.n2));
  }
  const std::int64_t epoch = step / bpe;
  const std::int64_t index = step % bpe;

  std::vector<std::int64_t> order(sets_per_epoch());
  for (std::int64_t i = 0; i < sets_per_epoch(); ++i) order[i] = i;
  RandomStream stream({config_.seed, 0x6f726472ULL /*"ordr"*/,
                       static_cast<std::uint64_t>(epoch)});
  stream.shuffle(order);

  TrainingBatch batch;
  for (int p = 0; p < config_.n2; ++p) {
    MatchSet set = materialize(epoch, order[index * config_.n2 + p]);
    const std::uint64_t aug_seed =
        RandomStream::derive({config_.seed, 0x617567ULL /*"aug"*/,
                              static_cast<std::uint64_t>(step),
                              static_cast<std::uint64_t>(p)});
    for (std::size_t e = 0; e < set.entries.size(); ++e) {
      MatchSetEntry& entry = set.entries[e];
      auto [a, b] = augment_pair(entry.patch_a, entry.patch_b, aug_seed, e,
                                 config_.augment);
      entry.patch_a = standardize(a);
      entry.patch_b = standardize(b);
    }
    batch.match_sets.push_back(std::move(set));
  }
  return batch;
}

}  // namespace gdkit
