#include "boxmask/affinity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace boxmask {

namespace {

void check_feature_dims(const FeatureImage& f, const EdgeSet& edges, const char* name) {
  if (f.width != edges.width || f.height != edges.height)
    throw std::invalid_argument(std::string(name) + " feature image does not match edge-set size");
  if (f.dim() == 0)
    throw std::invalid_argument(std::string(name) + " feature image has no components");
}

double feature_similarity(const FeatureImage& f, int ax, int ay, int bx, int by) {
  double d2 = 0.0;
  for (const Plane& comp : f.components) {
    const double diff = comp(ay, ax) - comp(by, bx);
    d2 += diff * diff;
  }
  return std::exp(-std::sqrt(d2) / 2.0);
}

void check_thetas(double theta1, double theta2) {
  if (theta1 < 0.0 || theta2 < 0.0 || std::abs(theta1 + theta2 - 1.0) > 1e-9)
    throw std::invalid_argument("fuse weights must be nonnegative and sum to 1");
}

}  // namespace

EdgeSet build_edges(int width, int height, int k, int dilation) {
  if (width <= 0 || height <= 0)
    throw std::invalid_argument("build_edges: dimensions must be positive");
  if (k < 3 || k % 2 == 0)
    throw std::invalid_argument("build_edges: k must be odd and >= 3");
  if (dilation < 1)
    throw std::invalid_argument("build_edges: dilation must be >= 1");

  const int r = (k - 1) / 2;
  // One canonical direction per unordered pair: dy > 0, or dy == 0 and dx > 0.
  std::vector<std::pair<int, int>> offsets;
  for (int dy = 0; dy <= r; ++dy)
    for (int dx = (dy == 0 ? 1 : -r); dx <= r; ++dx)
      offsets.emplace_back(dx * dilation, dy * dilation);

  EdgeSet set;
  set.width = width;
  set.height = height;
  set.k = k;
  set.dilation = dilation;
  set.edges.reserve(static_cast<size_t>(width) * height * offsets.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (const auto& [dx, dy] : offsets) {
        const int nx = x + dx;
        const int ny = y + dy;
        if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
        Edge e;
        e.ax = x;
        e.ay = y;
        e.bx = nx;
        e.by = ny;
        set.edges.push_back(e);
      }
    }
  }
  return set;
}

double similarity(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("similarity: feature dimensions differ");
  return std::exp(-(a - b).norm() / 2.0);
}

double fuse(double s_lab, double s_lbp, double theta1, double theta2) {
  check_thetas(theta1, theta2);
  if (s_lab <= 0.0 || s_lab > 1.0 || s_lbp <= 0.0 || s_lbp > 1.0)
    throw std::invalid_argument("fuse: similarities must lie in (0, 1]");
  return theta1 * s_lab + theta2 * s_lbp;
}

EdgeSet annotate_edges(EdgeSet edges, const FeatureImage& lab_features,
                       const FeatureImage& lbp_features, double theta1,
                       double theta2, double tau, const BoxAnnotation& box) {
  check_feature_dims(lab_features, edges, "lab");
  check_feature_dims(lbp_features, edges, "lbp");
  check_thetas(theta1, theta2);
  if (tau <= 0.0 || tau >= 1.0)
    throw std::invalid_argument("annotate_edges: tau must lie in (0, 1)");
  validate_box(box, edges.width, edges.height);

  for (Edge& e : edges.edges) {
    e.s_lab = feature_similarity(lab_features, e.ax, e.ay, e.bx, e.by);
    e.s_lbp = feature_similarity(lbp_features, e.ax, e.ay, e.bx, e.by);
    e.s_fused = theta1 * e.s_lab + theta2 * e.s_lbp;
    e.confident = e.s_fused >= tau;
    e.in_box = box.contains(e.ax, e.ay) || box.contains(e.bx, e.by);
  }
  edges.tau = tau;
  return edges;
}

ImageGrid similarity_heatmap(const EdgeSet& edges, SimilarityMode mode) {
  if (edges.edges.empty())
    throw std::invalid_argument("similarity_heatmap: edge set is empty");

  Plane sum = Plane::Zero(edges.height, edges.width);
  Plane count = Plane::Zero(edges.height, edges.width);
  for (const Edge& e : edges.edges) {
    const double s = mode == SimilarityMode::kLab   ? e.s_lab
                     : mode == SimilarityMode::kLbp ? e.s_lbp
                                                    : e.s_fused;
    sum(e.ay, e.ax) += s;
    sum(e.by, e.bx) += s;
    count(e.ay, e.ax) += 1.0;
    count(e.by, e.bx) += 1.0;
  }

  ImageGrid out(edges.width, edges.height, 1, 1.0);
  out.planes[0] = (count > 0.0).select(sum / count.max(1.0), out.planes[0]);
  return out;
}

void write_edges_csv(const EdgeSet& edges, const std::string& path) {
  std::ofstream out(path);
  if (!out.good())
    throw std::runtime_error("cannot open file for writing: " + path);
  out << "a_x,a_y,b_x,b_y,s_lab,s_lbp,s_fused,confident,in_box\n";
  char line[256];
  for (const Edge& e : edges.edges) {
    std::snprintf(line, sizeof(line), "%d,%d,%d,%d,%.17g,%.17g,%.17g,%d,%d\n",
                  e.ax, e.ay, e.bx, e.by, e.s_lab, e.s_lbp, e.s_fused,
                  e.confident ? 1 : 0, e.in_box ? 1 : 0);
    out << line;
  }
}

}  // namespace boxmask
