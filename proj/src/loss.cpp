#include "boxmask/loss.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace boxmask {

namespace {

constexpr double kDiceEps = 1e-6;
constexpr double kLogClamp = 1e-12;

void check_mask_edges(const MaskState& mask, const EdgeSet& edges) {
  if (mask.width != edges.width || mask.height != edges.height)
    throw std::invalid_argument("mask and edge set have different dimensions");
}

}  // namespace

MaskState make_mask_state(Plane logits) {
  MaskState m;
  m.height = static_cast<int>(logits.rows());
  m.width = static_cast<int>(logits.cols());
  m.logits = std::move(logits);
  m.probs = 1.0 / (1.0 + (-m.logits).exp());
  return m;
}

void refresh_probs(MaskState& mask) {
  mask.probs = 1.0 / (1.0 + (-mask.logits).exp());
}

ProjectionTargets projection_targets(const BoxAnnotation& box, int width, int height) {
  validate_box(box, width, height);
  ProjectionTargets t;
  t.l_x = Eigen::ArrayXd::Zero(width);
  t.l_y = Eigen::ArrayXd::Zero(height);
  t.l_x.segment(box.x_min, box.width()).setOnes();
  t.l_y.segment(box.y_min, box.height()).setOnes();
  return t;
}

Eigen::ArrayXd project(const MaskState& mask, Axis axis) {
  if (axis == Axis::kX) return mask.probs.colwise().maxCoeff().transpose();
  return mask.probs.rowwise().maxCoeff();
}

double dice_loss(const Eigen::Ref<const Eigen::ArrayXd>& p,
                 const Eigen::Ref<const Eigen::ArrayXd>& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("dice_loss: length mismatch");
  const double overlap = (p * q).sum();
  const double denom = p.square().sum() + q.square().sum() + kDiceEps;
  return 1.0 - 2.0 * overlap / denom;
}

double projection_loss(const MaskState& mask, const BoxAnnotation& box) {
  const ProjectionTargets t = projection_targets(box, mask.width, mask.height);
  return dice_loss(project(mask, Axis::kX), t.l_x) +
         dice_loss(project(mask, Axis::kY), t.l_y);
}

double pair_prob(double m_a, double m_b) {
  return m_a * m_b + (1.0 - m_a) * (1.0 - m_b);
}

PairwiseLoss pairwise_loss(const MaskState& mask, const EdgeSet& edges) {
  check_mask_edges(mask, edges);
  double sum = 0.0;
  long long n = 0;
  for (const Edge& e : edges.edges) {
    if (!(e.confident && e.in_box)) continue;
    const double p = pair_prob(mask.probs(e.ay, e.ax), mask.probs(e.by, e.bx));
    sum += -std::log(std::max(p, kLogClamp));
    ++n;
  }
  if (n == 0) return {0.0, 0};
  return {sum / static_cast<double>(n), n};
}

LossReport mask_loss(const MaskState& mask, const BoxAnnotation& box, const EdgeSet& edges) {
  LossReport report;
  report.l_proj = projection_loss(mask, box);
  const PairwiseLoss pw = pairwise_loss(mask, edges);
  report.l_pair = pw.loss;
  report.confident_in_box_edges = pw.n_edges;
  report.l_mask = report.l_proj + report.l_pair;
  return report;
}

namespace {

// d(dice)/d(p_i) for fixed q: (-2 q_i S + 4 A p_i) / S^2 with
// A = sum(p q), S = sum(p^2) + sum(q^2) + eps.
Eigen::ArrayXd dice_grad(const Eigen::ArrayXd& p, const Eigen::ArrayXd& q) {
  const double overlap = (p * q).sum();
  const double denom = p.square().sum() + q.square().sum() + kDiceEps;
  return (-2.0 * q * denom + 4.0 * overlap * p) / (denom * denom);
}

}  // namespace

Plane mask_loss_gradient(const MaskState& mask, const BoxAnnotation& box, const EdgeSet& edges) {
  check_mask_edges(mask, edges);
  validate_box(box, mask.width, mask.height);
  const int w = mask.width;
  const int h = mask.height;

  Plane grad_probs = Plane::Zero(h, w);

  // Projection term, routed to the per-column / per-row argmax. Eigen's
  // maxCoeff reports the first maximum, which is the lowest index.
  const ProjectionTargets t = projection_targets(box, w, h);
  Eigen::ArrayXd px(w), py(h);
  std::vector<int> arg_row(static_cast<size_t>(w)), arg_col(static_cast<size_t>(h));
  for (int x = 0; x < w; ++x) {
    Eigen::Index r;
    px(x) = mask.probs.col(x).maxCoeff(&r);
    arg_row[static_cast<size_t>(x)] = static_cast<int>(r);
  }
  for (int y = 0; y < h; ++y) {
    Eigen::Index c;
    py(y) = mask.probs.row(y).maxCoeff(&c);
    arg_col[static_cast<size_t>(y)] = static_cast<int>(c);
  }
  const Eigen::ArrayXd gx = dice_grad(px, t.l_x);
  const Eigen::ArrayXd gy = dice_grad(py, t.l_y);
  for (int x = 0; x < w; ++x) grad_probs(arg_row[static_cast<size_t>(x)], x) += gx(x);
  for (int y = 0; y < h; ++y) grad_probs(y, arg_col[static_cast<size_t>(y)]) += gy(y);

  // Pairwise term: d(-log P)/d(m_a) = -(2 m_b - 1)/P, averaged over the
  // confident in-box edges. Clamped edges contribute nothing.
  long long n = 0;
  for (const Edge& e : edges.edges)
    if (e.confident && e.in_box) ++n;
  if (n > 0) {
    const double inv_n = 1.0 / static_cast<double>(n);
    for (const Edge& e : edges.edges) {
      if (!(e.confident && e.in_box)) continue;
      const double ma = mask.probs(e.ay, e.ax);
      const double mb = mask.probs(e.by, e.bx);
      const double p = pair_prob(ma, mb);
      if (p <= kLogClamp) continue;
      const double scale = -inv_n / p;
      grad_probs(e.ay, e.ax) += scale * (2.0 * mb - 1.0);
      grad_probs(e.by, e.bx) += scale * (2.0 * ma - 1.0);
    }
  }

  // Chain through the sigmoid.
  return grad_probs * mask.probs * (1.0 - mask.probs);
}

std::string loss_report_json(const LossReport& report) {
  nlohmann::json doc{{"l_proj", report.l_proj},
                     {"l_pair", report.l_pair},
                     {"l_mask", report.l_mask},
                     {"n_edges", report.confident_in_box_edges}};
  return doc.dump();
}

}  // namespace boxmask
