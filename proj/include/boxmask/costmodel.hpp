#pragma once

#include <string>
#include <vector>

namespace boxmask {

enum class ConvKind { kStandard, kDepthwiseSeparable };

/// Kernel/channel/output-size description of one convolution layer.
struct ConvSpec {
  ConvKind kind = ConvKind::kStandard;
  long long k = 1;
  long long c_in = 1;
  long long c_out = 1;
  long long w_out = 1;
  long long h_out = 1;
  std::string label;
};

struct LayerCost {
  std::string label;
  long long mults = 0;
  long long params = 0;
};

struct CostReport {
  long long mults = 0;
  long long params = 0;
  std::vector<LayerCost> layers;
};

/// Multiplication and parameter counts (bias-free):
///   standard:            mults = K^2 * C_in * W * H * C_out,
///                        params = K^2 * C_in * C_out
///   depthwise separable: mults = K^2 * C_in * W * H + C_in * W * H * C_out,
///                        params = K^2 * C_in + C_in * C_out
CostReport conv_cost(const ConvSpec& spec);
CostReport conv_cost(const std::vector<ConvSpec>& specs);

/// total mults(after) / total mults(before).
double ratio(const std::vector<ConvSpec>& before, const std::vector<ConvSpec>& after);

/// A named before/after layer inventory reproducing one of the published
/// reduction claims, with the assumed shapes spelled out.
struct ReductionPreset {
  std::string name;
  double claimed_ratio = 1.0;
  std::vector<ConvSpec> before;
  std::vector<ConvSpec> after;
  std::vector<std::string> assumptions;
};

/// FPN: one standard 3x3 256->256 output conv per level, replaced by a
/// ghost-block FEM (two units of 1x1 standard + 3x3 depthwise separable)
/// at 96 channels. Claimed ratio 1/15.
ReductionPreset fpn_preset();

/// Detection head: four conv groups in each of the two branches of
/// standard 3x3 256->256, replaced by two shared 5x5 96->96 depthwise
/// separable layers. Claimed ratio 0.5%.
ReductionPreset head_preset();

}  // namespace boxmask
