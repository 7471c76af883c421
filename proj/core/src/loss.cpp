#include "gdkit/loss.hpp"

#include <string>

#include "gdkit/error.hpp"

namespace gdkit {

double adaptive_margin(double s_patch) {
  if (s_patch >= 0.5) return 0.7;
  if (s_patch >= 0.2) return 0.5;
  return 0.2;
}

StructuredLossResult structured_loss(const MatchSetFeatures& feats,
                                     double alpha) {
  const Eigen::MatrixXd& f1 = feats.f1;
  const Eigen::MatrixXd& f2 = feats.f2;
  if (f1.rows() != f2.rows() || f1.cols() != f2.cols()) {
    throw Error(ErrorCode::kSizeMismatch,
                "feature matrices are " + std::to_string(f1.rows()) + "x" +
                    std::to_string(f1.cols()) + " vs " +
                    std::to_string(f2.rows()) + "x" +
                    std::to_string(f2.cols()));
  }
  const Eigen::Index n = f1.rows();
  if (n < 2) {
    throw Error(ErrorCode::kSizeMismatch,
                "structured loss needs at least 2 pairs per match set");
  }

  const Eigen::MatrixXd sim = f1 * f2.transpose();
  const double keep = 1.0 - alpha;
  const double weight = 1.0 / (static_cast<double>(n) * (n - 1));

  double e1 = 0.0;
  Eigen::MatrixXd grad_sim = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double row_slack = sim(i, j) - keep * sim(i, i);
      if (row_slack > 0.0) {
        e1 += weight * row_slack;
        grad_sim(i, j) += weight;
        grad_sim(i, i) -= weight * keep;
      }
      const double col_slack = sim(i, j) - keep * sim(j, j);
      if (col_slack > 0.0) {
        e1 += weight * col_slack;
        grad_sim(i, j) += weight;
        grad_sim(j, j) -= weight * keep;
      }
    }
  }

  StructuredLossResult result;
  result.e1 = e1;
  result.grad_f1 = grad_sim * f2;
  result.grad_f2 = grad_sim.transpose() * f1;
  return result;
}

GeometricLossResult geometric_loss(const Eigen::VectorXd& diag_sims,
                                   const Eigen::VectorXd& s_patch) {
  if (diag_sims.size() != s_patch.size()) {
    throw Error(ErrorCode::kSizeMismatch,
                "diagonal similarities and s_patch lengths differ");
  }
  GeometricLossResult result;
  result.grad_diag = Eigen::VectorXd::Zero(diag_sims.size());
  for (Eigen::Index i = 0; i < diag_sims.size(); ++i) {
    const double beta = adaptive_margin(s_patch(i));
    const double slack = beta - diag_sims(i);
    if (slack > 0.0) {
      result.e2 += slack;
      result.grad_diag(i) = -1.0;
    }
  }
  return result;
}

TotalLossResult total_loss(const std::vector<MatchSetFeatures>& batch,
                           const std::vector<Eigen::VectorXd>& batch_s_patch,
                           const LossParams& params) {
  if (batch.empty()) {
    throw Error(ErrorCode::kEmptySet, "total loss over an empty batch");
  }
  if (batch.size() != batch_s_patch.size()) {
    throw Error(ErrorCode::kSizeMismatch,
                "batch has " + std::to_string(batch.size()) +
                    " match sets but " + std::to_string(batch_s_patch.size()) +
                    " s_patch vectors");
  }

  TotalLossResult result;
  const double inv_sets = 1.0 / static_cast<double>(batch.size());
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const MatchSetFeatures& feats = batch[s];
    StructuredLossResult e1 = structured_loss(feats, params.alpha);

    const Eigen::Index n = feats.f1.rows();
    if (batch_s_patch[s].size() != n) {
      throw Error(ErrorCode::kSizeMismatch,
                  "s_patch vector length does not match set size");
    }
    Eigen::VectorXd diag(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      diag(i) = feats.f1.row(i).dot(feats.f2.row(i));
    }
    GeometricLossResult e2 = geometric_loss(diag, batch_s_patch[s]);

    result.loss += inv_sets * (e1.e1 + params.lambda * e2.e2);
    result.e1_per_set.push_back(e1.e1);
    result.e2_per_set.push_back(e2.e2);

    Eigen::MatrixXd g1 = e1.grad_f1;
    Eigen::MatrixXd g2 = e1.grad_f2;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gd = params.lambda * e2.grad_diag(i);
      g1.row(i) += gd * feats.f2.row(i);
      g2.row(i) += gd * feats.f1.row(i);
    }
    result.grad_f1.push_back(inv_sets * g1);
    result.grad_f2.push_back(inv_sets * g2);
  }
  return result;
}

HardestInBatchResult hardest_in_batch_loss(const MatchSetFeatures& feats,
                                           double margin) {
  const Eigen::MatrixXd& f1 = feats.f1;
  const Eigen::MatrixXd& f2 = feats.f2;
  if (f1.rows() != f2.rows() || f1.cols() != f2.cols()) {
    throw Error(ErrorCode::kSizeMismatch, "feature matrices differ in shape");
  }
  const Eigen::Index n = f1.rows();
  const Eigen::MatrixXd sim = f1 * f2.transpose();

  HardestInBatchResult result;
  Eigen::MatrixXd grad_sim = Eigen::MatrixXd::Zero(n, n);
  const double weight = 1.0 / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    // Hardest negative for anchor i over both matching directions;
    // ties resolve to the first candidate in scan order.
    double hardest = -2.0;
    Eigen::Index hard_row = -1, hard_col = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      if (sim(i, j) > hardest) {
        hardest = sim(i, j);
        hard_row = i;
        hard_col = j;
      }
      if (sim(j, i) > hardest) {
        hardest = sim(j, i);
        hard_row = j;
        hard_col = i;
      }
    }
    if (hard_row < 0) continue;
    const double slack = margin - sim(i, i) + hardest;
    if (slack > 0.0) {
      result.loss += weight * slack;
      grad_sim(i, i) -= weight;
      grad_sim(hard_row, hard_col) += weight;
    }
  }
  result.grad_f1 = grad_sim * f2;
  result.grad_f2 = grad_sim.transpose() * f1;
  return result;
}

}  // namespace gdkit
