#pragma once

#include "boxmask/features.hpp"
#include "boxmask/image.hpp"

#include <string>
#include <vector>

namespace boxmask {

/// Undirected pixel pair with its similarities and flags.
struct Edge {
  int ax = 0, ay = 0;
  int bx = 0, by = 0;
  double s_lab = 1.0;
  double s_lbp = 1.0;
  double s_fused = 1.0;
  bool confident = false;  // s_fused >= tau
  bool in_box = false;     // at least one endpoint inside the box
};

/// The pixel-pair graph. Each unordered pair appears once.
struct EdgeSet {
  int width = 0;
  int height = 0;
  int k = 3;
  int dilation = 2;
  double tau = 0.2;
  std::vector<Edge> edges;
};

/// Connect every pixel to its K*K - 1 dilated neighbors: offsets
/// (dx, dy) in {-r*d .. r*d step d}^2 \ {0,0}, r = (k-1)/2, clipped to
/// the image. k must be odd and >= 3, dilation >= 1.
EdgeSet build_edges(int width, int height, int k, int dilation);

/// exp(-||a - b|| / 2). Result in (0, 1], symmetric, strictly decreasing
/// in the distance.
double similarity(const Eigen::Ref<const Eigen::VectorXd>& a,
                  const Eigen::Ref<const Eigen::VectorXd>& b);

/// theta1 * s_lab + theta2 * s_lbp. Weights must be nonnegative and sum
/// to 1 within 1e-9.
double fuse(double s_lab, double s_lbp, double theta1, double theta2);

/// Fill in per-edge similarities, the confidence flag (s_fused >= tau)
/// and the in-box flag. Feature images must match the edge-set size.
EdgeSet annotate_edges(EdgeSet edges, const FeatureImage& lab_features,
                       const FeatureImage& lbp_features, double theta1,
                       double theta2, double tau, const BoxAnnotation& box);

enum class SimilarityMode { kLab, kLbp, kFused };

/// Per-pixel mean of the selected similarity over incident edges.
/// Pixels with no incident edge get 1.0. Throws on an empty edge set.
ImageGrid similarity_heatmap(const EdgeSet& edges, SimilarityMode mode);

/// Debug dump: a_x,a_y,b_x,b_y,s_lab,s_lbp,s_fused,confident,in_box.
void write_edges_csv(const EdgeSet& edges, const std::string& path);

}  // namespace boxmask
