#include "boxmask/features.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace boxmask {

namespace {

// sRGB companding and the D65 conversion constants.
double inverse_gamma(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

constexpr double kXn = 0.95047;
constexpr double kYn = 1.0;
constexpr double kZn = 1.08883;

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  constexpr double kDelta3 = kDelta * kDelta * kDelta;
  return t > kDelta3 ? std::cbrt(t) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

Plane replicate_pad(const Plane& g) {
  const auto h = g.rows();
  const auto w = g.cols();
  Plane p(h + 2, w + 2);
  p.block(1, 1, h, w) = g;
  p.block(0, 1, 1, w) = g.row(0);
  p.block(h + 1, 1, 1, w) = g.row(h - 1);
  p.block(1, 0, h, 1) = g.col(0);
  p.block(1, w + 1, h, 1) = g.col(w - 1);
  p(0, 0) = g(0, 0);
  p(0, w + 1) = g(0, w - 1);
  p(h + 1, 0) = g(h - 1, 0);
  p(h + 1, w + 1) = g(h - 1, w - 1);
  return p;
}

// riu2 map over 8-bit patterns: uniform (<= 2 circular transitions) ->
// popcount, everything else -> 9.
std::array<int, 256> make_riu2_table() {
  std::array<int, 256> table{};
  for (int code = 0; code < 256; ++code) {
    int transitions = 0;
    int ones = 0;
    for (int p = 0; p < 8; ++p) {
      const int bit = (code >> p) & 1;
      const int next = (code >> ((p + 1) % 8)) & 1;
      transitions += bit != next;
      ones += bit;
    }
    table[static_cast<size_t>(code)] = transitions <= 2 ? ones : 9;
  }
  return table;
}

}  // namespace

LabImage srgb_to_lab(const ImageGrid& grid) {
  if (grid.channels() != 3)
    throw std::invalid_argument("srgb_to_lab: input must be 3-channel");

  const Plane rl = grid.planes[0].unaryExpr(&inverse_gamma);
  const Plane gl = grid.planes[1].unaryExpr(&inverse_gamma);
  const Plane bl = grid.planes[2].unaryExpr(&inverse_gamma);

  const Plane fx = ((0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / kXn).unaryExpr(&lab_f);
  const Plane fy = ((0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl) / kYn).unaryExpr(&lab_f);
  const Plane fz = ((0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / kZn).unaryExpr(&lab_f);

  LabImage out;
  out.width = grid.width;
  out.height = grid.height;
  out.L = 116.0 * fy - 16.0;
  out.a = 500.0 * (fx - fy);
  out.b = 200.0 * (fy - fz);
  return out;
}

FeatureImage normalize_lab(const LabImage& lab) {
  FeatureImage out;
  out.width = lab.width;
  out.height = lab.height;
  out.components = {lab.L / 100.0, lab.a / 110.0, lab.b / 110.0};
  return out;
}

FeatureImage lab_feature(const LabImage& lab) {
  FeatureImage out;
  out.width = lab.width;
  out.height = lab.height;
  out.components = {lab.L, lab.a, lab.b};
  return out;
}

LbpImage compute_lbp(const ImageGrid& gray) {
  if (gray.channels() != 1)
    throw std::invalid_argument("compute_lbp: input must be 1-channel");
  if (gray.width < 3 || gray.height < 3)
    throw std::invalid_argument("compute_lbp: image must be at least 3x3");

  const Plane& g = gray.planes[0];
  const auto h = g.rows();
  const auto w = g.cols();
  const Plane padded = replicate_pad(g);

  // Circular neighbor order at radius 1, starting east, counterclockwise
  // in image coordinates. Any consistent circular order yields the same
  // riu2 codes.
  static constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

  IntPlane pattern = IntPlane::Zero(h, w);
  for (int p = 0; p < 8; ++p) {
    const auto neighbor = padded.block(1 + kDy[p], 1 + kDx[p], h, w);
    pattern += (neighbor >= g).cast<int>() * (1 << p);
  }

  static const std::array<int, 256> kTable = make_riu2_table();
  LbpImage out;
  out.width = gray.width;
  out.height = gray.height;
  out.codes = pattern.unaryExpr([](int c) { return kTable[static_cast<size_t>(c)]; });
  return out;
}

FeatureImage lbp_feature(const LbpImage& lbp) {
  FeatureImage out;
  out.width = lbp.width;
  out.height = lbp.height;
  out.components = {lbp.codes.cast<double>() / 9.0};
  return out;
}

}  // namespace boxmask
