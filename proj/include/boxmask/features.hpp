#pragma once

#include "boxmask/image.hpp"

namespace boxmask {

/// CIELAB planes. L* in [0, 100]; a*, b* roughly [-128, 127] for sRGB input.
struct LabImage {
  int width = 0;
  int height = 0;
  Plane L, a, b;
};

/// Rotation-invariant uniform (riu2) LBP codes, P=8 R=1.
/// Codes 0..8 are the uniform patterns keyed by popcount; 9 is the
/// non-uniform bucket.
struct LbpImage {
  int width = 0;
  int height = 0;
  IntPlane codes;
};

/// Per-pixel feature vectors stored as one plane per component.
struct FeatureImage {
  int width = 0;
  int height = 0;
  std::vector<Plane> components;

  int dim() const { return static_cast<int>(components.size()); }
};

/// sRGB -> linear RGB -> XYZ (D65) -> CIELAB. Input must be 3-channel.
LabImage srgb_to_lab(const ImageGrid& grid);

/// (L/100, a/110, b/110) per pixel; components land in [-2, 2].
FeatureImage normalize_lab(const LabImage& lab);

/// Raw (L, a, b) triplets. This is the scaling the edge similarity uses:
/// with it exp(-d/2) spans (0,1] over real color pairs, so the tau
/// threshold can actually separate boundaries from flat regions.
FeatureImage lab_feature(const LabImage& lab);

/// riu2 codes over the aligned 3x3 neighborhood. Comparison is
/// g_p >= g_c (ties count as 1); borders use replicate padding.
/// Requires a 1-channel image of at least 3x3.
LbpImage compute_lbp(const ImageGrid& gray);

/// Scalar feature code/9 in [0, 1].
FeatureImage lbp_feature(const LbpImage& lbp);

}  // namespace boxmask
