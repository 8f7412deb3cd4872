#include "boxmask/synth.hpp"

#include "boxmask/features.hpp"
#include "boxmask/rng.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace boxmask {

namespace {

Eigen::Vector3d fill_color(const FillSpec& fill, int x, int y) {
  switch (fill.kind) {
    case FillSpec::Kind::kFlat:
      return fill.color_a;
    case FillSpec::Kind::kStripes: {
      const int band = ((fill.vertical ? x : y) / fill.period) % 2;
      return band == 0 ? fill.color_a : fill.color_b;
    }
    case FillSpec::Kind::kChecker: {
      const int parity = (x / fill.period + y / fill.period) % 2;
      return parity == 0 ? fill.color_a : fill.color_b;
    }
  }
  return fill.color_a;
}

void validate_fill(const FillSpec& fill) {
  if (fill.kind != FillSpec::Kind::kFlat && fill.period < 1)
    throw std::invalid_argument("fill period/cell must be >= 1");
  for (const auto& c : {fill.color_a, fill.color_b})
    if ((c.array() < 0.0).any() || (c.array() > 1.0).any())
      throw std::invalid_argument("fill colors must lie in [0,1]");
}

GroundTruthMask rasterize_disk(int width, int height, int cx, int cy, int r) {
  GroundTruthMask mask(width, height);
  const long long r2 = static_cast<long long>(r) * r;
  for (int y = std::max(0, cy - r); y <= std::min(height - 1, cy + r); ++y)
    for (int x = std::max(0, cx - r); x <= std::min(width - 1, cx + r); ++x) {
      const long long dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r2) mask.data(y, x) = 1;
    }
  return mask;
}

GroundTruthMask rasterize_rect(int width, int height, int x0, int y0, int w, int h) {
  GroundTruthMask mask(width, height);
  mask.data.block(y0, x0, h, w).setOnes();
  return mask;
}

bool overlaps(const GroundTruthMask& mask, const IntPlane& occupied) {
  return ((mask.data * occupied) != 0).any();
}

constexpr int kPlacementRetries = 100;

}  // namespace

Scene generate_scene(const SceneSpec& spec) {
  if (spec.width < 4 || spec.height < 4)
    throw std::invalid_argument("generate_scene: scene must be at least 4x4");
  validate_fill(spec.background);

  Scene scene;
  scene.image = ImageGrid(spec.width, spec.height, 3);
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d c = fill_color(spec.background, x, y);
      for (int ch = 0; ch < 3; ++ch) scene.image.planes[ch](y, x) = c(ch);
    }

  Rng rng(spec.seed);
  IntPlane occupied = IntPlane::Zero(spec.height, spec.width);

  for (const ShapeSpec& shape : spec.shapes) {
    validate_fill(shape.fill);
    GroundTruthMask mask;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      if (shape.geometry == ShapeSpec::Geometry::kDisk) {
        const int max_r = (std::min(spec.width, spec.height) - 2) / 2;
        const int r = shape.radius >= 0 ? shape.radius
                                        : rng.uniform_int(std::max(2, max_r / 3), std::max(3, max_r / 2));
        if (r < 1 || 2 * r + 1 > std::min(spec.width, spec.height))
          throw std::invalid_argument("disk radius does not fit the image");
        const int cx = shape.cx >= 0 ? shape.cx : rng.uniform_int(r, spec.width - 1 - r);
        const int cy = shape.cy >= 0 ? shape.cy : rng.uniform_int(r, spec.height - 1 - r);
        if (cx - r < 0 || cx + r >= spec.width || cy - r < 0 || cy + r >= spec.height)
          throw std::invalid_argument("disk does not fit the image");
        mask = rasterize_disk(spec.width, spec.height, cx, cy, r);
      } else {
        const int w = shape.w > 0 ? shape.w
                                  : rng.uniform_int(spec.width / 6 + 1, std::max(spec.width / 6 + 2, spec.width / 2));
        const int h = shape.h > 0 ? shape.h
                                  : rng.uniform_int(spec.height / 6 + 1, std::max(spec.height / 6 + 2, spec.height / 2));
        if (w < 1 || h < 1 || w > spec.width || h > spec.height)
          throw std::invalid_argument("rectangle does not fit the image");
        const int x0 = shape.x >= 0 ? shape.x : rng.uniform_int(0, spec.width - w);
        const int y0 = shape.y >= 0 ? shape.y : rng.uniform_int(0, spec.height - h);
        if (x0 < 0 || y0 < 0 || x0 + w > spec.width || y0 + h > spec.height)
          throw std::invalid_argument("rectangle does not fit the image");
        mask = rasterize_rect(spec.width, spec.height, x0, y0, w, h);
      }
      placed = !overlaps(mask, occupied);
      // Explicitly placed shapes have nothing to resample.
      const bool explicit_placement =
          shape.geometry == ShapeSpec::Geometry::kDisk
              ? (shape.cx >= 0 && shape.cy >= 0 && shape.radius >= 0)
              : (shape.x >= 0 && shape.y >= 0 && shape.w > 0 && shape.h > 0);
      if (!placed && explicit_placement)
        throw std::runtime_error("explicitly placed shapes overlap");
    }
    if (!placed)
      throw std::runtime_error("could not place shape without overlap after retries");

    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        if (mask.data(y, x) == 0) continue;
        const Eigen::Vector3d c = fill_color(shape.fill, x, y);
        for (int ch = 0; ch < 3; ++ch) scene.image.planes[ch](y, x) = c(ch);
      }
    occupied += mask.data;
    SceneInstance instance;
    instance.box = tight_box(mask);
    instance.mask = std::move(mask);
    scene.instances.push_back(std::move(instance));
  }
  return scene;
}

double iou(const GroundTruthMask& pred, const GroundTruthMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("iou: dimension mismatch");
  const long long inter = ((pred.data != 0) && (gt.data != 0)).count();
  const long long uni = ((pred.data != 0) || (gt.data != 0)).count();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double dice_coefficient(const GroundTruthMask& pred, const GroundTruthMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw std::invalid_argument("dice_coefficient: dimension mismatch");
  const long long inter = ((pred.data != 0) && (gt.data != 0)).count();
  const long long total = (pred.data != 0).count() + (gt.data != 0).count();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

EvalReport evaluate_mask(const GroundTruthMask& pred, const GroundTruthMask& gt) {
  return EvalReport{iou(pred, gt), dice_coefficient(pred, gt)};
}

// --- JSON ---

namespace {

nlohmann::json color_json(const Eigen::Vector3d& c) {
  return nlohmann::json::array({c(0), c(1), c(2)});
}

Eigen::Vector3d color_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("color must be a [r,g,b] triple");
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

nlohmann::json fill_json(const FillSpec& fill) {
  switch (fill.kind) {
    case FillSpec::Kind::kFlat:
      return {{"type", "flat"}, {"color", color_json(fill.color_a)}};
    case FillSpec::Kind::kStripes:
      return {{"type", "stripes"},
              {"period", fill.period},
              {"orientation", fill.vertical ? "vertical" : "horizontal"},
              {"colors", nlohmann::json::array({color_json(fill.color_a), color_json(fill.color_b)})}};
    case FillSpec::Kind::kChecker:
      return {{"type", "checker"},
              {"cell", fill.period},
              {"colors", nlohmann::json::array({color_json(fill.color_a), color_json(fill.color_b)})}};
  }
  return {};
}

FillSpec fill_from_json(const nlohmann::json& j) {
  FillSpec fill;
  const std::string type = j.at("type").get<std::string>();
  if (type == "flat") {
    fill.kind = FillSpec::Kind::kFlat;
    fill.color_a = fill.color_b = color_from_json(j.at("color"));
  } else if (type == "stripes" || type == "checker") {
    fill.kind = type == "stripes" ? FillSpec::Kind::kStripes : FillSpec::Kind::kChecker;
    fill.period = j.at(type == "stripes" ? "period" : "cell").get<int>();
    const auto& colors = j.at("colors");
    if (!colors.is_array() || colors.size() != 2)
      throw std::invalid_argument("textured fill needs exactly two colors");
    fill.color_a = color_from_json(colors[0]);
    fill.color_b = color_from_json(colors[1]);
    if (type == "stripes") {
      const std::string orientation = j.value("orientation", "horizontal");
      if (orientation != "horizontal" && orientation != "vertical")
        throw std::invalid_argument("stripe orientation must be horizontal or vertical");
      fill.vertical = orientation == "vertical";
    }
  } else {
    throw std::invalid_argument("unknown fill type: " + type);
  }
  return fill;
}

}  // namespace

SceneSpec load_scene_json(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::invalid_argument("cannot open scene file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed scene JSON " + path + ": " + e.what());
  }
  SceneSpec spec;
  try {
    spec.width = doc.at("width").get<int>();
    spec.height = doc.at("height").get<int>();
    spec.seed = doc.value("seed", 0ULL);
    spec.background = fill_from_json(doc.at("background"));
    for (const auto& s : doc.at("shapes")) {
      ShapeSpec shape;
      const std::string geometry = s.at("geometry").get<std::string>();
      if (geometry == "disk") {
        shape.geometry = ShapeSpec::Geometry::kDisk;
        shape.cx = s.value("cx", -1);
        shape.cy = s.value("cy", -1);
        shape.radius = s.value("radius", -1);
      } else if (geometry == "rectangle") {
        shape.geometry = ShapeSpec::Geometry::kRectangle;
        shape.x = s.value("x", -1);
        shape.y = s.value("y", -1);
        shape.w = s.value("w", -1);
        shape.h = s.value("h", -1);
      } else {
        throw std::invalid_argument("unknown geometry: " + geometry);
      }
      shape.fill = fill_from_json(s.at("fill"));
      spec.shapes.push_back(shape);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed scene JSON " + path + ": " + e.what());
  }
  return spec;
}

void save_scene_json(const SceneSpec& spec, const std::string& path) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const ShapeSpec& s : spec.shapes) {
    nlohmann::json j{{"fill", fill_json(s.fill)}};
    if (s.geometry == ShapeSpec::Geometry::kDisk) {
      j["geometry"] = "disk";
      if (s.cx >= 0) j["cx"] = s.cx;
      if (s.cy >= 0) j["cy"] = s.cy;
      if (s.radius >= 0) j["radius"] = s.radius;
    } else {
      j["geometry"] = "rectangle";
      if (s.x >= 0) j["x"] = s.x;
      if (s.y >= 0) j["y"] = s.y;
      if (s.w > 0) j["w"] = s.w;
      if (s.h > 0) j["h"] = s.h;
    }
    shapes.push_back(std::move(j));
  }
  nlohmann::json doc{{"width", spec.width},
                     {"height", spec.height},
                     {"seed", spec.seed},
                     {"background", fill_json(spec.background)},
                     {"shapes", std::move(shapes)}};
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot open file for writing: " + path);
  out << doc.dump(2) << "\n";
}

// --- Seeded scene families ---

namespace {

double gray_lightness(double v) {
  ImageGrid one(1, 1, 3, v);
  return srgb_to_lab(one).L(0, 0);
}

// Finds delta so that L*(m+delta) - L*(m-delta) hits the target.
double calibrate_stripe_delta(double mid, double target_dl) {
  double lo = 1e-4, hi = 0.2;
  for (int i = 0; i < 60; ++i) {
    const double d = 0.5 * (lo + hi);
    const double dl = gray_lightness(mid + d) - gray_lightness(mid - d);
    (dl < target_dl ? lo : hi) = d;
  }
  return 0.5 * (lo + hi);
}

// Closed-form CIELAB -> sRGB (D65), the inverse of srgb_to_lab.
Eigen::Vector3d lab_to_srgb(double L, double a, double b) {
  const double fy = (L + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  const auto finv = [](double t) {
    constexpr double kDelta = 6.0 / 29.0;
    return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
  };
  const double X = 0.95047 * finv(fx);
  const double Y = finv(fy);
  const double Z = 1.08883 * finv(fz);
  const double rl = 3.2404542 * X - 1.5371385 * Y - 0.4985314 * Z;
  const double gl = -0.9692660 * X + 1.8760108 * Y + 0.0415560 * Z;
  const double bl = 0.0556434 * X - 0.2040259 * Y + 1.0572252 * Z;
  const auto gamma = [](double c) {
    c = std::min(std::max(c, 0.0), 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
  };
  return Eigen::Vector3d(gamma(rl), gamma(gl), gamma(bl));
}

}  // namespace

SceneSpec high_contrast_scene(std::uint64_t seed, int width, int height) {
  Rng rng(seed);
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed * 1000003ULL + 17ULL;

  spec.background.kind = FillSpec::Kind::kFlat;
  spec.background.color_a = Eigen::Vector3d(0.16 + rng.uniform(0.0, 0.04),
                                            0.20 + rng.uniform(0.0, 0.04),
                                            0.42 + rng.uniform(0.0, 0.06));
  spec.background.color_b = spec.background.color_a;

  ShapeSpec shape;
  shape.fill.kind = FillSpec::Kind::kFlat;
  shape.fill.color_a = Eigen::Vector3d(0.88 + rng.uniform(0.0, 0.06),
                                       0.78 + rng.uniform(0.0, 0.06),
                                       0.14 + rng.uniform(0.0, 0.06));
  shape.fill.color_b = shape.fill.color_a;
  const int m = std::min(width, height);
  if (seed % 2 == 0) {
    shape.geometry = ShapeSpec::Geometry::kDisk;
    shape.radius = rng.uniform_int(m * 9 / 32, m * 13 / 32);
    shape.cx = rng.uniform_int(shape.radius, width - 1 - shape.radius);
    shape.cy = rng.uniform_int(shape.radius, height - 1 - shape.radius);
  } else {
    shape.geometry = ShapeSpec::Geometry::kRectangle;
    shape.w = rng.uniform_int(m * 2 / 5, m * 3 / 5);
    shape.h = rng.uniform_int(m * 2 / 5, m * 3 / 5);
    shape.x = rng.uniform_int(0, width - shape.w);
    shape.y = rng.uniform_int(0, height - shape.h);
  }
  spec.shapes.push_back(shape);
  return spec;
}

// Object and background share the mean Lab color; only texture separates
// them. The disk is a chroma checker whose rim contrast keeps the object
// boundary below tau for both feature choices. The box corners hold
// low-contrast striped patches whose Lab distance to the surrounding
// background falls just below tau while the fused similarity stays above
// it: with Lab alone they detach from the background and keep their
// initial foreground-ish state, with the fused feature the LBP term
// reconnects them and they are cleaned to background.
SceneSpec texture_challenge_scene(std::uint64_t seed, int width, int height) {
  Rng rng(seed);
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.seed = seed * 2654435761ULL + 3ULL;

  const double mid = rng.uniform(0.47, 0.53);
  const double mid_l = gray_lightness(mid);
  constexpr double kChroma = 4.8;

  spec.background.kind = FillSpec::Kind::kFlat;
  spec.background.color_a = Eigen::Vector3d::Constant(mid);
  spec.background.color_b = spec.background.color_a;

  ShapeSpec disk;
  disk.geometry = ShapeSpec::Geometry::kDisk;
  const int m = std::min(width, height);
  disk.radius = rng.uniform_int(m * 21 / 64, m * 13 / 32);
  disk.cx = rng.uniform_int(disk.radius + 1, width - 2 - disk.radius);
  disk.cy = rng.uniform_int(disk.radius + 1, height - 2 - disk.radius);
  disk.fill.kind = FillSpec::Kind::kChecker;
  disk.fill.period = 2;
  disk.fill.color_a = lab_to_srgb(mid_l, kChroma, 0.0);
  disk.fill.color_b = lab_to_srgb(mid_l, -kChroma, 0.0);
  spec.shapes.push_back(disk);

  // Thin strips hugging the box edges at the four corners, fully inside
  // the disk's tight box but clear of the disk: with thickness 4 and
  // length <= 0.48 r, the strip's innermost pixel stays outside radius r.
  const int r = disk.radius;
  const int t = 4;
  const int len = std::max(t + 1, r * 48 / 100);
  FillSpec patch_fill;
  patch_fill.kind = FillSpec::Kind::kStripes;
  patch_fill.period = 2;
  patch_fill.color_a = lab_to_srgb(mid_l + 3.3, 0.0, 0.0);
  patch_fill.color_b = lab_to_srgb(mid_l + 4.3, 0.0, 0.0);
  const int x_min = disk.cx - r, x_max = disk.cx + r + 1;
  const int y_min = disk.cy - r, y_max = disk.cy + r + 1;
  const int rest = len - t;  // the corner square goes to one strip of the L
  const std::array<std::array<int, 4>, 8> strips = {{
      {x_min, y_min, len, t},                  // top-left L
      {x_min, y_min + t, t, rest},
      {x_max - t, y_min, t, len},              // top-right L
      {x_max - len, y_min, rest, t},
      {x_min, y_max - len, t, len},            // bottom-left L
      {x_min + t, y_max - t, rest, t},
      {x_max - len, y_max - t, len, t},        // bottom-right L
      {x_max - t, y_max - len, t, rest},
  }};
  for (const auto& [px, py, pw, ph] : strips) {
    ShapeSpec patch;
    patch.geometry = ShapeSpec::Geometry::kRectangle;
    patch.x = px;
    patch.y = py;
    patch.w = pw;
    patch.h = ph;
    patch.fill = patch_fill;
    spec.shapes.push_back(patch);
  }
  return spec;
}

}  // namespace boxmask
