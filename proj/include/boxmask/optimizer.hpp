#pragma once

#include "boxmask/image.hpp"
#include "boxmask/loss.hpp"

#include <cstdint>
#include <vector>

namespace boxmask {

/// Which similarity drives the confidence flag.
enum class FeatureKind { kLab, kLbp, kFused };

const char* feature_kind_name(FeatureKind kind);
FeatureKind feature_kind_from_name(const std::string& name);

struct OptimizerConfig {
  double step_size = 1.0;
  int max_iters = 500;
  double momentum = 0.9;
  double stop_delta = 1e-6;  // on |delta l_mask|
  double theta1 = 0.9;
  double theta2 = 0.1;
  double tau = 0.2;
  int k = 3;
  int dilation = 2;
  FeatureKind feature = FeatureKind::kFused;
  std::uint64_t seed = 0;
};

struct RecoveryResult {
  MaskState mask;
  std::vector<LossReport> loss_trace;  // entry 0 is the initial state
  int iterations_run = 0;
  bool converged = false;
};

/// Logits 0 inside the box (prob 0.5), -6 outside (prob ~0.0025).
/// Outside-box pixels are background by the box prior and stay frozen.
MaskState init_logits(const BoxAnnotation& box, int width, int height);

/// Recover an instance mask for one box by momentum descent on the mask
/// loss over the in-box logits. Features and the edge graph are built
/// once up front. Deterministic for fixed inputs and config.
RecoveryResult recover_mask(const ImageGrid& image, const BoxAnnotation& box,
                            const OptimizerConfig& config);

/// probs >= t -> 1, else 0. t must lie in (0, 1).
GroundTruthMask threshold_mask(const MaskState& mask, double t = 0.5);

/// iter,l_proj,l_pair,l_mask rows for a recovery trace.
void write_loss_trace_csv(const std::vector<LossReport>& trace, const std::string& path);

}  // namespace boxmask
