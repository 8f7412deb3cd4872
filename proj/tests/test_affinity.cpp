#include "boxmask/affinity.hpp"
#include "boxmask/features.hpp"
#include "boxmask/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

using namespace boxmask;

namespace {

std::set<oracle::PixelPair> to_pairs(const EdgeSet& edges) {
  std::set<oracle::PixelPair> pairs;
  for (const Edge& e : edges.edges) {
    oracle::PixelPair p{e.ax, e.ay, e.bx, e.by};
    oracle::PixelPair q{e.bx, e.by, e.ax, e.ay};
    pairs.insert(std::min(p, q));
  }
  return pairs;
}

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

// A 4x4 image split down the middle into two flat tones.
ImageGrid two_tone_4x4() {
  ImageGrid grid(4, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const double v = x < 2 ? 0.15 : 0.85;
      for (int c = 0; c < 3; ++c) grid.planes[c](y, x) = v;
    }
  return grid;
}

FeatureImage lab_features_of(const ImageGrid& img) { return lab_feature(srgb_to_lab(img)); }

FeatureImage lbp_features_of(const ImageGrid& img) {
  return lbp_feature(compute_lbp(grayscale(img)));
}

}  // namespace

TEST_CASE("build_edges counts match brute force") {
  CHECK(build_edges(1, 2, 3, 1).edges.size() == 1);
  CHECK(build_edges(3, 3, 3, 1).edges.size() == 20);
  CHECK(build_edges(3, 3, 3, 1).edges.size() == oracle::edge_pairs(3, 3, 3, 1).size());
  CHECK(build_edges(3, 3, 3, 2).edges.size() == oracle::edge_pairs(3, 3, 3, 2).size());
  CHECK(build_edges(4, 4, 3, 1).edges.size() == oracle::edge_pairs(4, 4, 3, 1).size());

  for (const auto& [w, h, k, d] :
       {std::tuple{5, 4, 3, 1}, {6, 6, 3, 2}, {7, 5, 5, 1}, {9, 9, 5, 2}, {4, 9, 3, 3}}) {
    const EdgeSet set = build_edges(w, h, k, d);
    const auto pairs = to_pairs(set);
    CHECK(pairs.size() == set.edges.size());  // every unordered pair appears once
    CHECK(pairs == oracle::edge_pairs(w, h, k, d));
  }
}

TEST_CASE("interior pixels have K*K-1 incident edges") {
  const EdgeSet set = build_edges(7, 7, 3, 2);
  int incident = 0;
  for (const Edge& e : set.edges)
    if ((e.ax == 3 && e.ay == 3) || (e.bx == 3 && e.by == 3)) ++incident;
  CHECK(incident == 8);
}

TEST_CASE("build_edges rejects bad parameters") {
  CHECK_THROWS(build_edges(4, 4, 4, 1));
  CHECK_THROWS(build_edges(4, 4, 1, 1));
  CHECK_THROWS(build_edges(4, 4, 3, 0));
  CHECK_THROWS(build_edges(0, 4, 3, 1));
}

TEST_CASE("similarity closed forms") {
  CHECK(similarity(vec({0.3, 0.4}), vec({0.3, 0.4})) == 1.0);
  CHECK(similarity(vec({2, 0}), vec({0, 0})) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(similarity(vec({1, 0, 0}), vec({0, 0, 0})) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK_THROWS(similarity(vec({1, 2}), vec({1, 2, 3})));
}

TEST_CASE("similarity is symmetric and strictly decreasing in distance") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd a(3), b(3);
    for (int j = 0; j < 3; ++j) {
      a(j) = rng.uniform(-50, 50);
      b(j) = rng.uniform(-50, 50);
    }
    const double s = similarity(a, b);
    CHECK(s == similarity(b, a));
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    const Eigen::VectorXd farther = a + 1.5 * (b - a);
    if ((b - a).norm() > 1e-9) CHECK(similarity(a, farther) < s);
  }
}

TEST_CASE("fuse reproduces the published boundary arithmetic") {
  CHECK(std::abs(fuse(1.0 / 9.0, 1.0, 0.9, 0.1) - 0.2) < 1e-12);
  for (double s : {0.112, 0.2, 0.5, 0.9}) CHECK(fuse(s, 1.0, 0.9, 0.1) > 0.2);
  for (double s : {0.05, 0.4, 1.0}) {
    CHECK(fuse(s, s, 0.9, 0.1) == doctest::Approx(s).epsilon(1e-12));
    CHECK(fuse(s, s, 0.3, 0.7) == doctest::Approx(s).epsilon(1e-12));
  }
  CHECK(fuse(1.0, 1.0, 0.9, 0.1) == 1.0);
  CHECK_THROWS(fuse(0.5, 0.5, 0.9, 0.2));
  CHECK_THROWS(fuse(0.5, 0.5, -0.1, 1.1));
  CHECK_THROWS(fuse(0.0, 0.5, 0.9, 0.1));
}

TEST_CASE("annotate_edges on a uniform image") {
  ImageGrid grid(5, 5, 3, 0.6);
  const BoxAnnotation box{0, 0, 5, 5};
  const EdgeSet edges = annotate_edges(build_edges(5, 5, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2, box);
  for (const Edge& e : edges.edges) {
    CHECK(e.s_fused == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.confident);
    CHECK(e.in_box);
  }
}

TEST_CASE("two-tone confident count matches a brute-force recount") {
  const ImageGrid grid = two_tone_4x4();
  const FeatureImage lab = lab_features_of(grid);
  const FeatureImage lbp = lbp_features_of(grid);
  const BoxAnnotation box{0, 0, 4, 4};
  const EdgeSet edges =
      annotate_edges(build_edges(4, 4, 3, 1), lab, lbp, 0.9, 0.1, 0.2, box);
  REQUIRE(edges.edges.size() == 42);

  long long expected_confident = 0;
  for (const auto& [ax, ay, bx, by] : oracle::edge_pairs(4, 4, 3, 1)) {
    double d2_lab = 0, d2_lbp = 0;
    for (const Plane& c : lab.components) {
      const double d = c(ay, ax) - c(by, bx);
      d2_lab += d * d;
    }
    for (const Plane& c : lbp.components) {
      const double d = c(ay, ax) - c(by, bx);
      d2_lbp += d * d;
    }
    const double fused = 0.9 * std::exp(-std::sqrt(d2_lab) / 2.0) +
                         0.1 * std::exp(-std::sqrt(d2_lbp) / 2.0);
    if (fused >= 0.2) ++expected_confident;
  }
  long long confident = 0;
  for (const Edge& e : edges.edges)
    if (e.confident) ++confident;
  CHECK(confident == expected_confident);
  CHECK(confident < 42);  // the tone boundary must cut something
  CHECK(confident > 0);
}

TEST_CASE("edge flags are consistent with tau and the box") {
  const ImageGrid grid = two_tone_4x4();
  const BoxAnnotation box{0, 0, 2, 2};
  Rng rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const double tau = rng.uniform(0.05, 0.95);
    const EdgeSet edges = annotate_edges(build_edges(4, 4, 3, 1), lab_features_of(grid),
                                         lbp_features_of(grid), 0.9, 0.1, tau, box);
    for (const Edge& e : edges.edges) {
      CHECK(e.confident == (e.s_fused >= tau));
      CHECK(e.in_box == (box.contains(e.ax, e.ay) || box.contains(e.bx, e.by)));
      CHECK(e.s_fused >= std::min(e.s_lab, e.s_lbp) - 1e-12);
      CHECK(e.s_fused <= std::max(e.s_lab, e.s_lbp) + 1e-12);
    }
  }
}

TEST_CASE("full-image box marks every edge in_box") {
  ImageGrid grid(4, 3, 3, 0.5);
  const EdgeSet edges = annotate_edges(build_edges(4, 3, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2,
                                       BoxAnnotation{0, 0, 4, 3});
  for (const Edge& e : edges.edges) CHECK(e.in_box);
}

TEST_CASE("annotate_edges validates inputs") {
  ImageGrid grid(4, 4, 3, 0.5);
  ImageGrid small(3, 3, 3, 0.5);
  const BoxAnnotation box{0, 0, 4, 4};
  CHECK_THROWS(annotate_edges(build_edges(4, 4, 3, 1), lab_features_of(small),
                              lbp_features_of(grid), 0.9, 0.1, 0.2, box));
  CHECK_THROWS(annotate_edges(build_edges(4, 4, 3, 1), lab_features_of(grid),
                              lbp_features_of(grid), 0.9, 0.3, 0.2, box));
  CHECK_THROWS(annotate_edges(build_edges(4, 4, 3, 1), lab_features_of(grid),
                              lbp_features_of(grid), 0.9, 0.1, 1.5, box));
}

TEST_CASE("heatmap of a constant image is all ones") {
  ImageGrid grid(6, 5, 3, 0.3);
  const EdgeSet edges = annotate_edges(build_edges(6, 5, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2,
                                       BoxAnnotation{0, 0, 6, 5});
  for (auto mode : {SimilarityMode::kLab, SimilarityMode::kLbp, SimilarityMode::kFused}) {
    const ImageGrid heat = similarity_heatmap(edges, mode);
    CHECK(heat.width == 6);
    CHECK(heat.height == 5);
    CHECK((heat.planes[0] - 1.0).abs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS(similarity_heatmap(EdgeSet{}, SimilarityMode::kLab));
}

TEST_CASE("heatmap values stay within incident similarity bounds") {
  const ImageGrid grid = two_tone_4x4();
  const EdgeSet edges = annotate_edges(build_edges(4, 4, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2,
                                       BoxAnnotation{0, 0, 4, 4});
  const ImageGrid heat = similarity_heatmap(edges, SimilarityMode::kFused);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      double lo = 1.0, hi = 0.0;
      for (const Edge& e : edges.edges) {
        if ((e.ax == x && e.ay == y) || (e.bx == x && e.by == y)) {
          lo = std::min(lo, e.s_fused);
          hi = std::max(hi, e.s_fused);
        }
      }
      CHECK(heat.planes[0](y, x) >= lo - 1e-12);
      CHECK(heat.planes[0](y, x) <= hi + 1e-12);
    }
}

TEST_CASE("two-region heatmap dips at the boundary") {
  ImageGrid grid(8, 8, 3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const double v = x < 4 ? 0.1 : 0.9;
      for (int c = 0; c < 3; ++c) grid.planes[c](y, x) = v;
    }
  const EdgeSet edges = annotate_edges(build_edges(8, 8, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2,
                                       BoxAnnotation{0, 0, 8, 8});
  const ImageGrid heat = similarity_heatmap(edges, SimilarityMode::kFused);
  const double boundary = heat.planes[0](4, 3);
  const double interior = heat.planes[0](4, 1);
  CHECK(boundary < interior);
}

TEST_CASE("edge CSV dump has one row per edge") {
  ImageGrid grid(3, 3, 3, 0.5);
  const EdgeSet edges = annotate_edges(build_edges(3, 3, 3, 1), lab_features_of(grid),
                                       lbp_features_of(grid), 0.9, 0.1, 0.2,
                                       BoxAnnotation{0, 0, 3, 3});
  const std::string path =
      (std::filesystem::temp_directory_path() / "boxmask_edges.csv").string();
  write_edges_csv(edges, path);
  std::ifstream in(path);
  std::string line;
  size_t rows = 0;
  std::getline(in, line);
  CHECK(line == "a_x,a_y,b_x,b_y,s_lab,s_lbp,s_fused,confident,in_box");
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == edges.edges.size());
}
