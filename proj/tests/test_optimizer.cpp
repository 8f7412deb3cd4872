#include "boxmask/optimizer.hpp"

#include "boxmask/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

using namespace boxmask;

TEST_CASE("init_logits splits the grid at the box") {
  const MaskState full = init_logits({0, 0, 5, 4}, 5, 4);
  CHECK((full.logits == 0.0).all());
  CHECK((full.probs == 0.5).all());

  const MaskState one = init_logits({2, 1, 3, 2}, 5, 4);
  CHECK((one.logits == 0.0).count() == 1);
  CHECK(one.logits(1, 2) == 0.0);
  CHECK(one.logits(0, 0) == -6.0);
  CHECK(one.probs(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(6.0))).epsilon(1e-12));

  CHECK_THROWS(init_logits({0, 0, 6, 4}, 5, 4));
}

TEST_CASE("threshold_mask uses the >= convention") {
  MaskState mask = make_mask_state(Plane::Zero(2, 2));  // probs exactly 0.5
  const GroundTruthMask half = threshold_mask(mask, 0.5);
  CHECK((half.data == 1).all());

  mask.logits.setConstant(std::log(0.9 / 0.1));
  refresh_probs(mask);
  CHECK((threshold_mask(mask, 0.5).data == 1).all());
  mask.logits.setConstant(std::log(0.1 / 0.9));
  refresh_probs(mask);
  CHECK((threshold_mask(mask, 0.5).data == 0).all());

  CHECK_THROWS(threshold_mask(mask, 0.0));
  CHECK_THROWS(threshold_mask(mask, 1.0));
}

TEST_CASE("config validation") {
  ImageGrid image(8, 8, 3, 0.5);
  const BoxAnnotation box{1, 1, 7, 7};
  OptimizerConfig config;
  config.step_size = 0.0;
  CHECK_THROWS(recover_mask(image, box, config));
  config = {};
  config.momentum = 1.0;
  CHECK_THROWS(recover_mask(image, box, config));
  config = {};
  config.theta1 = 0.8;
  CHECK_THROWS(recover_mask(image, box, config));
  config = {};
  config.tau = 0.0;
  CHECK_THROWS(recover_mask(image, box, config));
}

TEST_CASE("feature kind names round trip") {
  CHECK(feature_kind_from_name("lab") == FeatureKind::kLab);
  CHECK(feature_kind_from_name("lbp") == FeatureKind::kLbp);
  CHECK(feature_kind_from_name("fused") == FeatureKind::kFused);
  CHECK(std::string(feature_kind_name(FeatureKind::kFused)) == "fused");
  CHECK_THROWS(feature_kind_from_name("hog"));
}

TEST_CASE("uniform image with a full-image box saturates to foreground") {
  ImageGrid image(24, 24, 3, 0.5);
  const BoxAnnotation box{0, 0, 24, 24};
  OptimizerConfig config;
  config.max_iters = 300;
  const RecoveryResult result = recover_mask(image, box, config);
  double min_prob = 1.0;
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) min_prob = std::min(min_prob, result.mask.probs(y, x));
  CHECK(min_prob > 0.9);
}

TEST_CASE("recovery is deterministic and respects the box prior") {
  const Scene scene = generate_scene(high_contrast_scene(2, 48, 48));
  const auto& instance = scene.instances[0];
  OptimizerConfig config;
  config.max_iters = 200;

  const RecoveryResult a = recover_mask(scene.image, instance.box, config);
  const RecoveryResult b = recover_mask(scene.image, instance.box, config);
  REQUIRE(a.loss_trace.size() == b.loss_trace.size());
  for (size_t i = 0; i < a.loss_trace.size(); ++i) {
    CHECK(std::memcmp(&a.loss_trace[i].l_mask, &b.loss_trace[i].l_mask, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.loss_trace[i].l_proj, &b.loss_trace[i].l_proj, sizeof(double)) == 0);
  }
  CHECK((a.mask.logits == b.mask.logits).all());

  // No foreground outside the box, and frozen pixels never moved.
  const GroundTruthMask pred = threshold_mask(a.mask, 0.5);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      if (!instance.box.contains(x, y)) {
        CHECK(pred.data(y, x) == 0);
        CHECK(a.mask.logits(y, x) == -6.0);
      }
    }

  // Monotone endpoint.
  CHECK(a.loss_trace.back().l_mask <= a.loss_trace.front().l_mask);
  CHECK(a.iterations_run + 1 == static_cast<int>(a.loss_trace.size()));
}

TEST_CASE("high-contrast disk recovery clears 0.85 IoU") {
  const Scene scene = generate_scene(high_contrast_scene(4, 48, 48));
  const auto& instance = scene.instances[0];
  const RecoveryResult result = recover_mask(scene.image, instance.box, OptimizerConfig{});
  CHECK(iou(threshold_mask(result.mask, 0.5), instance.mask) >= 0.85);
}

TEST_CASE("loss trace CSV has one row per entry") {
  std::vector<LossReport> trace(3);
  trace[1].l_proj = 0.5;
  const std::string path =
      (std::filesystem::temp_directory_path() / "boxmask_trace.csv").string();
  write_loss_trace_csv(trace, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "iter,l_proj,l_pair,l_mask");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}
