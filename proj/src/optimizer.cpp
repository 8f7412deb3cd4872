#include "boxmask/optimizer.hpp"

#include "boxmask/affinity.hpp"
#include "boxmask/features.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace boxmask {

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kLab: return "lab";
    case FeatureKind::kLbp: return "lbp";
    case FeatureKind::kFused: return "fused";
  }
  return "fused";
}

FeatureKind feature_kind_from_name(const std::string& name) {
  if (name == "lab") return FeatureKind::kLab;
  if (name == "lbp") return FeatureKind::kLbp;
  if (name == "fused") return FeatureKind::kFused;
  throw std::invalid_argument("unknown feature kind: " + name);
}

namespace {

void validate_config(const OptimizerConfig& cfg) {
  if (cfg.step_size <= 0.0) throw std::invalid_argument("step_size must be positive");
  if (cfg.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("momentum must lie in [0, 1)");
  if (std::abs(cfg.theta1 + cfg.theta2 - 1.0) > 1e-9 || cfg.theta1 < 0.0 || cfg.theta2 < 0.0)
    throw std::invalid_argument("theta1 + theta2 must equal 1");
  if (cfg.tau <= 0.0 || cfg.tau >= 1.0) throw std::invalid_argument("tau must lie in (0, 1)");
}

ImageGrid ensure_rgb(const ImageGrid& image) {
  if (image.channels() == 3) return image;
  ImageGrid rgb(image.width, image.height, 3);
  rgb.planes[0] = rgb.planes[1] = rgb.planes[2] = image.planes[0];
  return rgb;
}

// The confidence flag always tracks the fused similarity, so feature
// selection reduces to the effective fusion weights.
std::pair<double, double> effective_thetas(const OptimizerConfig& cfg) {
  switch (cfg.feature) {
    case FeatureKind::kLab: return {1.0, 0.0};
    case FeatureKind::kLbp: return {0.0, 1.0};
    case FeatureKind::kFused: return {cfg.theta1, cfg.theta2};
  }
  return {cfg.theta1, cfg.theta2};
}

}  // namespace

MaskState init_logits(const BoxAnnotation& box, int width, int height) {
  validate_box(box, width, height);
  Plane logits = Plane::Constant(height, width, -6.0);
  logits.block(box.y_min, box.x_min, box.height(), box.width()).setZero();
  return make_mask_state(std::move(logits));
}

RecoveryResult recover_mask(const ImageGrid& image, const BoxAnnotation& box,
                            const OptimizerConfig& config) {
  validate_config(config);
  validate_box(box, image.width, image.height);

  const ImageGrid rgb = ensure_rgb(image);
  const FeatureImage lab = lab_feature(srgb_to_lab(rgb));
  const FeatureImage lbp = lbp_feature(compute_lbp(grayscale(rgb)));
  const auto [theta1, theta2] = effective_thetas(config);
  const EdgeSet edges =
      annotate_edges(build_edges(image.width, image.height, config.k, config.dilation),
                     lab, lbp, theta1, theta2, config.tau, box);

  RecoveryResult result;
  result.mask = init_logits(box, image.width, image.height);
  Plane velocity = Plane::Zero(box.height(), box.width());

  LossReport current = mask_loss(result.mask, box, edges);
  if (!std::isfinite(current.l_mask))
    throw std::runtime_error("non-finite initial mask loss");
  result.loss_trace.push_back(current);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Plane grad = mask_loss_gradient(result.mask, box, edges);
    velocity = config.momentum * velocity +
               grad.block(box.y_min, box.x_min, box.height(), box.width());
    result.mask.logits.block(box.y_min, box.x_min, box.height(), box.width()) -=
        config.step_size * velocity;
    refresh_probs(result.mask);

    const LossReport next = mask_loss(result.mask, box, edges);
    if (!std::isfinite(next.l_mask)) {
      char msg[96];
      std::snprintf(msg, sizeof(msg), "non-finite mask loss at iteration %d", iter + 1);
      throw std::runtime_error(msg);
    }
    result.loss_trace.push_back(next);
    ++result.iterations_run;
    const bool settled = std::abs(next.l_mask - current.l_mask) < config.stop_delta;
    current = next;
    if (settled) {
      result.converged = true;
      break;
    }
  }
  return result;
}

GroundTruthMask threshold_mask(const MaskState& mask, double t) {
  if (t <= 0.0 || t >= 1.0)
    throw std::invalid_argument("threshold_mask: t must lie in (0, 1)");
  GroundTruthMask out(mask.width, mask.height);
  out.data = (mask.probs >= t).cast<int>();
  return out;
}

void write_loss_trace_csv(const std::vector<LossReport>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out.good())
    throw std::runtime_error("cannot open file for writing: " + path);
  out << "iter,l_proj,l_pair,l_mask\n";
  char line[160];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g,%.17g\n", i, trace[i].l_proj,
                  trace[i].l_pair, trace[i].l_mask);
    out << line;
  }
}

}  // namespace boxmask
