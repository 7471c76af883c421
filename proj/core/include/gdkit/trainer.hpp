#ifndef GDKIT_TRAINER_HPP_
#define GDKIT_TRAINER_HPP_

#include <cstdint>

#include "gdkit/batch.hpp"
#include "gdkit/loss.hpp"
#include "gdkit/net.hpp"

namespace gdkit {

enum class TrainObjective {
  kStructuredGeometric,   // E1 + lambda * E2
  kHardestFixedMargin,    // ablation baseline
};

struct TrainerConfig {
  LossParams loss;
  AdamConfig adam;
  TrainObjective objective = TrainObjective::kStructuredGeometric;
  double hardest_margin = 0.6;
};

struct TrainStepResult {
  double loss = 0.0;
  double mean_e1 = 0.0;
  double mean_e2 = 0.0;
};

// Owns the network parameters and optimizer state; updates are serialized
// through step().
class Trainer {
 public:
  Trainer(const NetArch& arch, const TrainerConfig& config,
          std::uint64_t init_seed);

  // Forward, loss, backprop, Adam with the scheduled learning rate.
  // Throws NonFiniteLoss (leaving parameters untouched) naming the offending
  // match set, ShapeMismatch when patches do not fit the architecture.
  TrainStepResult step(const TrainingBatch& batch);

  Network<float>& net() { return net_; }
  const Network<float>& net() const { return net_; }
  AdamState<float>& optimizer() { return opt_; }
  const TrainerConfig& config() const { return config_; }

 private:
  TrainerConfig config_;
  Network<float> net_;
  AdamState<float> opt_;
};

}  // namespace gdkit

#endif  // GDKIT_TRAINER_HPP_
