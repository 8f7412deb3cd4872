#include "boxmask/costmodel.hpp"

#include <stdexcept>

namespace boxmask {

namespace {

long long checked_mul(long long a, long long b) {
  long long out;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error("conv_cost: count overflows 64-bit integer");
  return out;
}

long long checked_add(long long a, long long b) {
  long long out;
  if (__builtin_add_overflow(a, b, &out))
    throw std::overflow_error("conv_cost: count overflows 64-bit integer");
  return out;
}

void validate(const ConvSpec& spec) {
  if (spec.k <= 0 || spec.c_in <= 0 || spec.c_out <= 0 || spec.w_out <= 0 || spec.h_out <= 0)
    throw std::invalid_argument("conv_cost: all ConvSpec fields must be positive");
}

}  // namespace

CostReport conv_cost(const ConvSpec& spec) {
  validate(spec);
  const long long k2c = checked_mul(checked_mul(spec.k, spec.k), spec.c_in);
  const long long area = checked_mul(spec.w_out, spec.h_out);
  LayerCost layer;
  layer.label = spec.label;
  if (spec.kind == ConvKind::kStandard) {
    layer.mults = checked_mul(checked_mul(k2c, area), spec.c_out);
    layer.params = checked_mul(k2c, spec.c_out);
  } else {
    const long long depthwise = checked_mul(k2c, area);
    const long long pointwise = checked_mul(checked_mul(spec.c_in, area), spec.c_out);
    layer.mults = checked_add(depthwise, pointwise);
    layer.params = checked_add(k2c, checked_mul(spec.c_in, spec.c_out));
  }
  CostReport report;
  report.mults = layer.mults;
  report.params = layer.params;
  report.layers.push_back(std::move(layer));
  return report;
}

CostReport conv_cost(const std::vector<ConvSpec>& specs) {
  if (specs.empty())
    throw std::invalid_argument("conv_cost: spec list is empty");
  CostReport total;
  for (const ConvSpec& spec : specs) {
    CostReport one = conv_cost(spec);
    total.mults = checked_add(total.mults, one.mults);
    total.params = checked_add(total.params, one.params);
    total.layers.push_back(std::move(one.layers.front()));
  }
  return total;
}

double ratio(const std::vector<ConvSpec>& before, const std::vector<ConvSpec>& after) {
  const CostReport b = conv_cost(before);
  const CostReport a = conv_cost(after);
  if (b.mults == 0) throw std::invalid_argument("ratio: zero denominator");
  return static_cast<double>(a.mults) / static_cast<double>(b.mults);
}

namespace {

ConvSpec standard(long long k, long long c, long long size, std::string label) {
  return ConvSpec{ConvKind::kStandard, k, c, c, size, size, std::move(label)};
}

ConvSpec dwsep(long long k, long long c, long long size, std::string label) {
  return ConvSpec{ConvKind::kDepthwiseSeparable, k, c, c, size, size, std::move(label)};
}

// The published reduction ratios leave the feature-map size implicit; it
// cancels because every layer here shares the same W_out = H_out.
constexpr long long kMapSize = 40;

}  // namespace

ReductionPreset fpn_preset() {
  ReductionPreset preset;
  preset.name = "fpn";
  preset.claimed_ratio = 1.0 / 15.0;
  preset.before = {standard(3, 256, kMapSize, "fpn output 3x3 conv, 256 ch")};
  preset.after = {
      standard(1, 96, kMapSize, "ghost unit 1: 1x1 conv, 96 ch"),
      dwsep(3, 96, kMapSize, "ghost unit 1: 3x3 dw-sep conv, 96 ch"),
      standard(1, 96, kMapSize, "ghost unit 2: 1x1 conv, 96 ch"),
      dwsep(3, 96, kMapSize, "ghost unit 2: 3x3 dw-sep conv, 96 ch"),
  };
  preset.assumptions = {
      "per FPN level: one standard 3x3 conv at 256 channels is removed",
      "replacement FEM is a ghost block: two units of 1x1 standard conv + 3x3 depthwise separable conv at 96 channels",
      "W_out = H_out for all layers, so the spatial size cancels in the ratio",
      "bias terms excluded; multiplications only",
  };
  return preset;
}

ReductionPreset head_preset() {
  ReductionPreset preset;
  preset.name = "head";
  preset.claimed_ratio = 0.005;
  for (int branch = 0; branch < 2; ++branch)
    for (int layer = 0; layer < 4; ++layer)
      preset.before.push_back(standard(
          3, 256, kMapSize,
          std::string(branch == 0 ? "cls" : "reg") + " branch conv " + std::to_string(layer + 1) +
              ": 3x3, 256 ch"));
  preset.after = {
      dwsep(5, 96, kMapSize, "shared conv 1: 5x5 dw-sep, 96 ch"),
      dwsep(5, 96, kMapSize, "shared conv 2: 5x5 dw-sep, 96 ch"),
  };
  preset.assumptions = {
      "original head: four conv groups in each of the two branches (classification, regression), standard 3x3 at 256 channels",
      "optimized head: two groups of convolution shared by both branches, 5x5 depthwise separable at 96 channels",
      "final prediction layers excluded on both sides",
      "W_out = H_out for all layers, so the spatial size cancels in the ratio",
      "bias terms excluded; multiplications only",
  };
  return preset;
}

}  // namespace boxmask
