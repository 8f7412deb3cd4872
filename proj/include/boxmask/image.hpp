#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace boxmask {

// Single-channel raster plane, indexed (y, x) = (row, col).
using Plane = Eigen::ArrayXXd;
using IntPlane = Eigen::ArrayXXi;

/// Multi-channel raster with values in [0, 1].
struct ImageGrid {
  int width = 0;
  int height = 0;
  std::vector<Plane> planes;

  ImageGrid() = default;
  ImageGrid(int width, int height, int channels, double fill = 0.0);

  int channels() const { return static_cast<int>(planes.size()); }
  double at(int x, int y, int c) const { return planes[c](y, x); }
  double& at(int x, int y, int c) { return planes[c](y, x); }
};

/// Half-open pixel box: x in [x_min, x_max), y in [y_min, y_max).
struct BoxAnnotation {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  long long area() const { return static_cast<long long>(width()) * height(); }
  bool contains(int x, int y) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
};

/// Throws std::invalid_argument unless 0 <= x_min < x_max <= width etc.
void validate_box(const BoxAnnotation& box, int width, int height);

/// Per-pixel binary labels.
struct GroundTruthMask {
  int width = 0;
  int height = 0;
  IntPlane data;  // values in {0, 1}

  GroundTruthMask() = default;
  GroundTruthMask(int width, int height);

  long long count() const { return (data != 0).count(); }
};

/// Tightest box around the 1-pixels. Throws on an empty mask.
BoxAnnotation tight_box(const GroundTruthMask& mask);

// Image I/O. Readers sniff the magic bytes (PNG, P6, P5); writers pick the
// format from the extension (.png, .ppm, .pgm). 8-bit samples map to [0,1]
// by v/255.
ImageGrid load_image(const std::string& path);
void save_image(const ImageGrid& grid, const std::string& path);

/// BT.709 luma: 0.2126 R + 0.7152 G + 0.0722 B. Input must be 3-channel.
ImageGrid grayscale(const ImageGrid& grid);

// Box annotations as a JSON list of {"x_min","y_min","x_max","y_max"}.
std::vector<BoxAnnotation> load_boxes_json(const std::string& path);
void save_boxes_json(const std::vector<BoxAnnotation>& boxes, const std::string& path);

}  // namespace boxmask
