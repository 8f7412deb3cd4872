#pragma once

#include "boxmask/affinity.hpp"
#include "boxmask/image.hpp"

#include <string>

namespace boxmask {

/// Per-pixel logits with probs = sigmoid(logits) kept in sync.
struct MaskState {
  int width = 0;
  int height = 0;
  Plane logits;
  Plane probs;
};

/// Builds a MaskState from logits, computing probs.
MaskState make_mask_state(Plane logits);

/// Recomputes probs after an in-place logits update.
void refresh_probs(MaskState& mask);

/// Binary box indicators on both axes: l_x(col) = 1 iff the column is
/// inside the box, l_y(row) likewise.
struct ProjectionTargets {
  Eigen::ArrayXd l_x;  // length = width
  Eigen::ArrayXd l_y;  // length = height
};

ProjectionTargets projection_targets(const BoxAnnotation& box, int width, int height);

enum class Axis { kX, kY };

/// Per-column (x) or per-row (y) maximum of probs.
Eigen::ArrayXd project(const MaskState& mask, Axis axis);

/// 1 - 2*sum(p*q) / (sum(p^2) + sum(q^2) + eps), eps = 1e-6.
double dice_loss(const Eigen::Ref<const Eigen::ArrayXd>& p,
                 const Eigen::Ref<const Eigen::ArrayXd>& q);

/// dice(project(mask, x), l_x) + dice(project(mask, y), l_y).
double projection_loss(const MaskState& mask, const BoxAnnotation& box);

/// P(edge label = 1) = m_a*m_b + (1-m_a)*(1-m_b).
double pair_prob(double m_a, double m_b);

struct PairwiseLoss {
  double loss = 0.0;
  long long n_edges = 0;  // confident AND in-box edges
};

/// Mean of -log(pair_prob) over confident in-box edges; the log argument
/// is clamped below at 1e-12. Returns {0, 0} when no edge qualifies.
PairwiseLoss pairwise_loss(const MaskState& mask, const EdgeSet& edges);

struct LossReport {
  double l_proj = 0.0;
  double l_pair = 0.0;
  double l_mask = 0.0;
  long long confident_in_box_edges = 0;
};

LossReport mask_loss(const MaskState& mask, const BoxAnnotation& box, const EdgeSet& edges);

/// Closed-form d(l_mask)/d(logits). The projection term routes through
/// the per-row/per-column argmax (ties to the lowest index); the pairwise
/// term differentiates pair_prob through the sigmoid.
Plane mask_loss_gradient(const MaskState& mask, const BoxAnnotation& box, const EdgeSet& edges);

/// {"l_proj":..., "l_pair":..., "l_mask":..., "n_edges":...}
std::string loss_report_json(const LossReport& report);

}  // namespace boxmask
