#pragma once

#include "boxmask/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace boxmask {

struct FillSpec {
  enum class Kind { kFlat, kStripes, kChecker };

  Kind kind = Kind::kFlat;
  Eigen::Vector3d color_a{0.5, 0.5, 0.5};
  Eigen::Vector3d color_b{0.5, 0.5, 0.5};
  int period = 2;          // stripes: rows/cols per band; checker: cell size
  bool vertical = false;   // stripe orientation
};

struct ShapeSpec {
  enum class Geometry { kDisk, kRectangle };

  Geometry geometry = Geometry::kDisk;
  FillSpec fill;

  // Placement; negative values mean "sample from the scene seed".
  int cx = -1, cy = -1, radius = -1;  // disk
  int x = -1, y = -1, w = -1, h = -1; // rectangle
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  std::uint64_t seed = 0;
  FillSpec background;
  std::vector<ShapeSpec> shapes;
};

struct SceneInstance {
  GroundTruthMask mask;
  BoxAnnotation box;  // tightest box of the mask
};

struct Scene {
  ImageGrid image;
  std::vector<SceneInstance> instances;
};

/// Deterministic render of the spec. Unplaced shapes are sampled from the
/// seed with rejection so they fit fully inside the image and do not
/// overlap; throws after bounded retries.
Scene generate_scene(const SceneSpec& spec);

// SceneSpec JSON (see README for the schema).
SceneSpec load_scene_json(const std::string& path);
void save_scene_json(const SceneSpec& spec, const std::string& path);

/// |pred & gt| / |pred | gt|; 1 when both are empty.
double iou(const GroundTruthMask& pred, const GroundTruthMask& gt);

/// 2|pred & gt| / (|pred| + |gt|); 1 when both are empty.
double dice_coefficient(const GroundTruthMask& pred, const GroundTruthMask& gt);

struct EvalReport {
  double iou = 0.0;
  double dice = 0.0;
};

EvalReport evaluate_mask(const GroundTruthMask& pred, const GroundTruthMask& gt);

// Seeded scene families used by the verification suites.

/// One flat-color disk (even seed) or rectangle (odd seed) on a strongly
/// contrasting flat background.
SceneSpec high_contrast_scene(std::uint64_t seed, int width = 64, int height = 64);

/// One striped disk whose two stripe colors average to the flat
/// background color: object and background match in mean color and
/// differ only in texture.
SceneSpec texture_challenge_scene(std::uint64_t seed, int width = 64, int height = 64);

}  // namespace boxmask
