#include "gdkit/trainer.hpp"

#include <cmath>
#include <string>

#include "gdkit/error.hpp"

namespace gdkit {

Trainer::Trainer(const NetArch& arch, const TrainerConfig& config,
                 std::uint64_t init_seed)
    : config_(config), net_(arch) {
  net_.init_orthogonal(init_seed);
  opt_.config = config.adam;
  opt_.init_like(net_);
}

TrainStepResult Trainer::step(const TrainingBatch& batch) {
  if (batch.match_sets.empty()) {
    throw Error(ErrorCode::kEmptySet, "training batch holds no match sets");
  }
  const int n2 = static_cast<int>(batch.match_sets.size());
  const int n1 = static_cast<int>(batch.match_sets.front().entries.size());
  const int g = net_.arch().input_size;
  for (const MatchSet& set : batch.match_sets) {
    if (static_cast<int>(set.entries.size()) != n1) {
      throw Error(ErrorCode::kSizeMismatch,
                  "match sets in one batch differ in size");
    }
    for (const MatchSetEntry& entry : set.entries) {
      if (entry.patch_a.g_size != g || entry.patch_b.g_size != g) {
        throw Error(ErrorCode::kShapeMismatch,
                    "patch grid " + std::to_string(entry.patch_a.g_size) +
                        " does not match network input " + std::to_string(g));
      }
    }
  }

  // All first-side patches, then all second-side patches; the batch
  // statistics see both sides together.
  const int half = n2 * n1;
  Tensor<float> input;
  input.resize(2 * half, 1, g, g);
  for (int s = 0; s < n2; ++s) {
    for (int i = 0; i < n1; ++i) {
      const MatchSetEntry& entry = batch.match_sets[s].entries[i];
      float* dst_a = input.image(s * n1 + i);
      float* dst_b = input.image(half + s * n1 + i);
      for (int y = 0; y < g; ++y) {
        for (int x = 0; x < g; ++x) {
          dst_a[y * g + x] = entry.patch_a.pixels(y, x);
          dst_b[y * g + x] = entry.patch_b.pixels(y, x);
        }
      }
    }
  }

  Network<float>::Cache cache;
  const MatX<float> features = net_.forward_train(input, &cache);

  const int dim = net_.arch().descriptor_dim;
  std::vector<MatchSetFeatures> feats(n2);
  std::vector<Eigen::VectorXd> s_patch(n2);
  for (int s = 0; s < n2; ++s) {
    feats[s].f1 = features.block(s * n1, 0, n1, dim).cast<double>();
    feats[s].f2 = features.block(half + s * n1, 0, n1, dim).cast<double>();
    s_patch[s].resize(n1);
    for (int i = 0; i < n1; ++i) {
      s_patch[s](i) = batch.match_sets[s].entries[i].s_patch;
    }
  }

  TrainStepResult result;
  MatX<double> grad_features = MatX<double>::Zero(2 * half, dim);
  if (config_.objective == TrainObjective::kStructuredGeometric) {
    const TotalLossResult loss = total_loss(feats, s_patch, config_.loss);
    for (int s = 0; s < n2; ++s) {
      if (!std::isfinite(loss.e1_per_set[s]) ||
          !std::isfinite(loss.e2_per_set[s])) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "match set " + std::to_string(batch.match_sets[s].id) +
                        " (cameras " +
                        std::to_string(batch.match_sets[s].cam_i) + ", " +
                        std::to_string(batch.match_sets[s].cam_j) +
                        ") produced a non-finite loss");
      }
      result.mean_e1 += loss.e1_per_set[s] / n2;
      result.mean_e2 += loss.e2_per_set[s] / n2;
      grad_features.block(s * n1, 0, n1, dim) = loss.grad_f1[s];
      grad_features.block(half + s * n1, 0, n1, dim) = loss.grad_f2[s];
    }
    result.loss = loss.loss;
  } else {
    double total = 0.0;
    for (int s = 0; s < n2; ++s) {
      const HardestInBatchResult hard =
          hardest_in_batch_loss(feats[s], config_.hardest_margin);
      if (!std::isfinite(hard.loss)) {
        throw Error(ErrorCode::kNonFiniteLoss,
                    "match set " + std::to_string(batch.match_sets[s].id) +
                        " produced a non-finite loss");
      }
      total += hard.loss / n2;
      grad_features.block(s * n1, 0, n1, dim) = hard.grad_f1 / n2;
      grad_features.block(half + s * n1, 0, n1, dim) = hard.grad_f2 / n2;
    }
    result.loss = total;
    result.mean_e1 = total;
  }

  Network<float>::Gradients grads;
  net_.backward(cache, grad_features.cast<float>(), &grads);
  adam_update(net_, opt_, grads);
  net_.update_running_stats(cache);
  return result;
}

}  // namespace gdkit
