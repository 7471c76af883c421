#ifndef GDKIT_LOSS_HPP_
#define GDKIT_LOSS_HPP_

#include <Eigen/Core>
#include <vector>

namespace gdkit {

struct LossParams {
  double alpha = 0.4;   // distance ratio margin of the structured loss
  double lambda = 0.2;  // weight of the geometric term
};

// Adaptive margin tier: 0.7 for s_patch >= 0.5, 0.5 for 0.2 <= s_patch < 0.5,
// 0.2 otherwise.
double adaptive_margin(double s_patch);

// Unit-norm feature rows of the two sides of one match set.
struct MatchSetFeatures {
  Eigen::MatrixXd f1;
  Eigen::MatrixXd f2;
};

struct StructuredLossResult {
  double e1 = 0.0;
  Eigen::MatrixXd grad_f1;
  Eigen::MatrixXd grad_f2;
};

// Mean hinge loss over the off-diagonal of the cosine similarity matrix
// S = F1 F2^T with the per-row/per-column ratio margins (1 - alpha) s_ii.
// Gradients are exact subgradients (zero at an exactly-tight hinge).
// Throws SizeMismatch when the feature matrices differ in shape.
StructuredLossResult structured_loss(const MatchSetFeatures& feats,
                                     double alpha);

struct GeometricLossResult {
  double e2 = 0.0;
  Eigen::VectorXd grad_diag;  // d e2 / d s_ii
};

// Sum of hinges pulling each matching-pair cosine above its adaptive margin.
GeometricLossResult geometric_loss(const Eigen::VectorXd& diag_sims,
                                   const Eigen::VectorXd& s_patch);

struct TotalLossResult {
  double loss = 0.0;
  std::vector<double> e1_per_set;
  std::vector<double> e2_per_set;
  std::vector<Eigen::MatrixXd> grad_f1;
  std::vector<Eigen::MatrixXd> grad_f2;
};

// Mean over match sets of e1 + lambda * e2; gradients accumulate both terms
// through the shared cosine diagonal. Throws EmptySet on an empty batch.
TotalLossResult total_loss(const std::vector<MatchSetFeatures>& batch,
                           const std::vector<Eigen::VectorXd>& batch_s_patch,
                           const LossParams& params);

struct HardestInBatchResult {
  double loss = 0.0;
  Eigen::MatrixXd grad_f1;
  Eigen::MatrixXd grad_f2;
};

// Fixed-margin hardest-in-batch triplet aggregation on the same cosine
// matrix. Shipped only as a diagnostic comparator and ablation baseline,
// never as the training objective.
HardestInBatchResult hardest_in_batch_loss(const MatchSetFeatures& feats,
                                           double margin);

}  // namespace gdkit

#endif  // GDKIT_LOSS_HPP_
