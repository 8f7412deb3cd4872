#include "boxmask/affinity.hpp"
#include "boxmask/costmodel.hpp"
#include "boxmask/features.hpp"
#include "boxmask/image.hpp"
#include "boxmask/loss.hpp"
#include "boxmask/optimizer.hpp"
#include "boxmask/rng.hpp"
#include "boxmask/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;   // I/O or configuration failure
constexpr int kExitCheck = 2;   // verification failure

struct SegmentArgs {
  std::string image_path, boxes_path, out_dir;
  std::string feature = "fused";
  boxmask::OptimizerConfig config;
  double threshold = 0.5;
};

int thread_cap() {
  if (const char* env = std::getenv("BOXMASK_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

int cmd_segment(const SegmentArgs& args) {
  const boxmask::ImageGrid image = boxmask::load_image(args.image_path);
  const std::vector<boxmask::BoxAnnotation> boxes = boxmask::load_boxes_json(args.boxes_path);
  if (boxes.empty()) throw std::invalid_argument("no boxes in " + args.boxes_path);
  for (const auto& box : boxes) boxmask::validate_box(box, image.width, image.height);

  boxmask::OptimizerConfig config = args.config;
  config.feature = boxmask::feature_kind_from_name(args.feature);

  fs::create_directories(args.out_dir);
  std::vector<boxmask::RecoveryResult> results(boxes.size());

  const int workers = std::min<int>(thread_cap(), static_cast<int>(boxes.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < boxes.size(); ++i)
      results[i] = boxmask::recover_mask(image, boxes[i], config);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mutex;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (size_t i = next++; i < boxes.size(); i = next++) {
          try {
            results[i] = boxmask::recover_mask(image, boxes[i], config);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(error_mutex);
            error = e.what();
            failed = true;
            return;
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failed) throw std::runtime_error(error);
  }

  json summary = json::array();
  for (size_t i = 0; i < boxes.size(); ++i) {
    const auto& r = results[i];
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%03zu", i);
    const std::string mask_path = args.out_dir + "/mask_" + stem + ".png";
    const std::string probs_path = args.out_dir + "/probs_" + stem + ".pgm";
    const std::string trace_path = args.out_dir + "/trace_" + stem + ".csv";

    const boxmask::GroundTruthMask binary = boxmask::threshold_mask(r.mask, args.threshold);
    boxmask::ImageGrid mask_img(r.mask.width, r.mask.height, 1);
    mask_img.planes[0] = binary.data.cast<double>();
    boxmask::save_image(mask_img, mask_path);

    boxmask::ImageGrid probs_img(r.mask.width, r.mask.height, 1);
    probs_img.planes[0] = r.mask.probs;
    boxmask::save_image(probs_img, probs_path);

    boxmask::write_loss_trace_csv(r.loss_trace, trace_path);

    const boxmask::LossReport& last = r.loss_trace.back();
    summary.push_back({{"box",
                        {{"x_min", boxes[i].x_min},
                         {"y_min", boxes[i].y_min},
                         {"x_max", boxes[i].x_max},
                         {"y_max", boxes[i].y_max}}},
                       {"feature", args.feature},
                       {"l_proj", last.l_proj},
                       {"l_pair", last.l_pair},
                       {"l_mask", last.l_mask},
                       {"n_edges", last.confident_in_box_edges},
                       {"iterations", r.iterations_run},
                       {"converged", r.converged},
                       {"mask", "mask_" + std::string(stem) + ".png"},
                       {"probs", "probs_" + std::string(stem) + ".pgm"},
                       {"trace", "trace_" + std::string(stem) + ".csv"}});
  }
  std::ofstream out(args.out_dir + "/summary.json");
  out << summary.dump(2) << "\n";
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

struct HeatmapArgs {
  std::string image_path, out_dir;
  std::string mode = "all";
  std::string edges_csv;
  double theta1 = 0.9, theta2 = 0.1, tau = 0.2;
  int k = 3, dilation = 2;
};

int cmd_heatmap(const HeatmapArgs& args) {
  boxmask::ImageGrid image = boxmask::load_image(args.image_path);
  if (image.channels() == 1) {
    boxmask::ImageGrid rgb(image.width, image.height, 3);
    rgb.planes[0] = rgb.planes[1] = rgb.planes[2] = image.planes[0];
    image = rgb;
  }
  const boxmask::FeatureImage lab = boxmask::lab_feature(boxmask::srgb_to_lab(image));
  const boxmask::FeatureImage lbp =
      boxmask::lbp_feature(boxmask::compute_lbp(boxmask::grayscale(image)));
  const boxmask::BoxAnnotation whole{0, 0, image.width, image.height};
  const boxmask::EdgeSet edges = boxmask::annotate_edges(
      boxmask::build_edges(image.width, image.height, args.k, args.dilation), lab, lbp,
      args.theta1, args.theta2, args.tau, whole);

  fs::create_directories(args.out_dir);
  const std::vector<std::pair<std::string, boxmask::SimilarityMode>> modes = {
      {"lab", boxmask::SimilarityMode::kLab},
      {"lbp", boxmask::SimilarityMode::kLbp},
      {"fused", boxmask::SimilarityMode::kFused}};
  for (const auto& [name, mode] : modes) {
    if (args.mode != "all" && args.mode != name) continue;
    boxmask::save_image(boxmask::similarity_heatmap(edges, mode),
                        args.out_dir + "/heatmap_" + name + ".pgm");
  }
  if (!args.edges_csv.empty()) boxmask::write_edges_csv(edges, args.edges_csv);
  return kExitOk;
}

struct GradcheckArgs {
  std::uint64_t seed = 1;
  int size = 12;
  int trials = 20;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  if (args.size < 4) throw std::invalid_argument("gradcheck size must be >= 4");
  constexpr double kStep = 1e-5;
  constexpr double kTolerance = 1e-4;
  bool all_ok = true;

  for (int trial = 0; trial < args.trials; ++trial) {
    boxmask::Rng rng(args.seed + static_cast<std::uint64_t>(trial) * 7919ULL);
    const int n = args.size;
    boxmask::ImageGrid image(n, n, 3);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) image.planes[c](y, x) = rng.uniform();

    boxmask::BoxAnnotation box;
    box.x_min = rng.uniform_int(0, n / 2 - 1);
    box.y_min = rng.uniform_int(0, n / 2 - 1);
    box.x_max = rng.uniform_int(box.x_min + 2, n);
    box.y_max = rng.uniform_int(box.y_min + 2, n);

    boxmask::Plane logits(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) logits(y, x) = rng.uniform(-2.0, 2.0);
    boxmask::MaskState mask = boxmask::make_mask_state(std::move(logits));

    const boxmask::FeatureImage lab = boxmask::lab_feature(boxmask::srgb_to_lab(image));
    const boxmask::FeatureImage lbp =
        boxmask::lbp_feature(boxmask::compute_lbp(boxmask::grayscale(image)));
    const boxmask::EdgeSet edges = boxmask::annotate_edges(
        boxmask::build_edges(n, n, 3, 2), lab, lbp, 0.9, 0.1, 0.2, box);

    boxmask::Plane analytic = boxmask::mask_loss_gradient(mask, box, edges);
    if (args.corrupt) analytic(0, 0) += 1e-3;

    double max_rel = 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        boxmask::MaskState plus = mask, minus = mask;
        plus.logits(y, x) += kStep;
        minus.logits(y, x) -= kStep;
        boxmask::refresh_probs(plus);
        boxmask::refresh_probs(minus);
        const double fd = (boxmask::mask_loss(plus, box, edges).l_mask -
                           boxmask::mask_loss(minus, box, edges).l_mask) /
                          (2.0 * kStep);
        const double a = analytic(y, x);
        const double denom = std::max(std::abs(a), std::abs(fd));
        if (denom > 1e-8) max_rel = std::max(max_rel, std::abs(a - fd) / denom);
      }
    std::printf("trial %2d max_rel_err %.12e\n", trial, max_rel);
    if (!(max_rel < kTolerance)) all_ok = false;
  }
  return all_ok ? kExitOk : kExitCheck;
}

json cost_report_json(const boxmask::CostReport& report) {
  json layers = json::array();
  for (const auto& layer : report.layers)
    layers.push_back({{"label", layer.label}, {"mults", layer.mults}, {"params", layer.params}});
  return {{"mults", report.mults}, {"params", report.params}, {"layers", std::move(layers)}};
}

void print_cost_table(const boxmask::CostReport& report) {
  std::printf("%-58s %16s %14s\n", "layer", "mults", "params");
  for (const auto& layer : report.layers)
    std::printf("%-58s %16lld %14lld\n", layer.label.c_str(), layer.mults, layer.params);
  std::printf("%-58s %16lld %14lld\n", "total", report.mults, report.params);
}

std::vector<boxmask::ConvSpec> load_conv_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::invalid_argument("cannot open spec file: " + path);
  json doc;
  in >> doc;
  if (!doc.is_array()) throw std::invalid_argument("conv spec JSON must be a list");
  std::vector<boxmask::ConvSpec> specs;
  for (const auto& item : doc) {
    boxmask::ConvSpec spec;
    const std::string kind = item.at("kind").get<std::string>();
    if (kind == "standard")
      spec.kind = boxmask::ConvKind::kStandard;
    else if (kind == "depthwise_separable")
      spec.kind = boxmask::ConvKind::kDepthwiseSeparable;
    else
      throw std::invalid_argument("unknown conv kind: " + kind);
    spec.k = item.at("k").get<long long>();
    spec.c_in = item.at("c_in").get<long long>();
    spec.c_out = item.at("c_out").get<long long>();
    spec.w_out = item.at("w_out").get<long long>();
    spec.h_out = item.at("h_out").get<long long>();
    spec.label = item.value("label", std::string());
    specs.push_back(std::move(spec));
  }
  return specs;
}

int cmd_cost(const std::string& specs_path, const std::string& preset_name) {
  if (!preset_name.empty()) {
    const boxmask::ReductionPreset preset =
        preset_name == "fpn" ? boxmask::fpn_preset() : boxmask::head_preset();
    const double r = boxmask::ratio(preset.before, preset.after);
    const double factor = r / preset.claimed_ratio;

    std::printf("preset: %s\n\nassumptions:\n", preset.name.c_str());
    for (const auto& line : preset.assumptions) std::printf("  - %s\n", line.c_str());
    std::printf("\nbefore:\n");
    print_cost_table(boxmask::conv_cost(preset.before));
    std::printf("\nafter:\n");
    print_cost_table(boxmask::conv_cost(preset.after));
    std::printf("\nratio %.6g, claimed %.6g, ratio/claimed %.4f\n", r, preset.claimed_ratio,
                factor);

    json doc{{"preset", preset.name},
             {"ratio", r},
             {"claimed_ratio", preset.claimed_ratio},
             {"factor_vs_claim", factor},
             {"assumptions", preset.assumptions},
             {"before", cost_report_json(boxmask::conv_cost(preset.before))},
             {"after", cost_report_json(boxmask::conv_cost(preset.after))}};
    std::cout << doc.dump(2) << "\n";
    // CI treats a drift beyond 2x of the published claim as a failure.
    return (factor <= 2.0 && factor >= 0.5) ? kExitOk : kExitCheck;
  }
  const auto specs = load_conv_specs(specs_path);
  const boxmask::CostReport report = boxmask::conv_cost(specs);
  print_cost_table(report);
  std::cout << cost_report_json(report).dump(2) << "\n";
  return kExitOk;
}

int cmd_synth(const std::string& scene_path, const std::string& out_dir) {
  const boxmask::SceneSpec spec = boxmask::load_scene_json(scene_path);
  const boxmask::Scene scene = boxmask::generate_scene(spec);
  fs::create_directories(out_dir);
  boxmask::save_image(scene.image, out_dir + "/image.png");
  std::vector<boxmask::BoxAnnotation> boxes;
  for (size_t i = 0; i < scene.instances.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%03zu", i);
    boxmask::ImageGrid gt(spec.width, spec.height, 1);
    gt.planes[0] = scene.instances[i].mask.data.cast<double>();
    boxmask::save_image(gt, out_dir + "/gt_" + stem + ".png");
    boxes.push_back(scene.instances[i].box);
  }
  boxmask::save_boxes_json(boxes, out_dir + "/boxes.json");
  std::printf("wrote %zu instance(s) to %s\n", scene.instances.size(), out_dir.c_str());
  return kExitOk;
}

boxmask::GroundTruthMask load_binary_mask(const std::string& path) {
  const boxmask::ImageGrid img = boxmask::load_image(path);
  if (img.channels() != 1)
    throw std::invalid_argument("expected a 1-channel mask image: " + path);
  boxmask::GroundTruthMask mask(img.width, img.height);
  mask.data = (img.planes[0] >= 0.5).cast<int>();
  return mask;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir) {
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    const std::string ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm") names.insert(entry.path().filename().string());
  }
  double iou_sum = 0.0, dice_sum = 0.0;
  long long count = 0;
  for (const std::string& name : names) {
    const fs::path gt_path = fs::path(gt_dir) / name;
    if (!fs::exists(gt_path)) continue;
    const auto pred = load_binary_mask((fs::path(pred_dir) / name).string());
    const auto gt = load_binary_mask(gt_path.string());
    const boxmask::EvalReport report = boxmask::evaluate_mask(pred, gt);
    iou_sum += report.iou;
    dice_sum += report.dice;
    ++count;
  }
  if (count == 0) throw std::invalid_argument("no matching mask files between directories");
  json doc{{"count", count},
           {"mean_iou", iou_sum / static_cast<double>(count)},
           {"mean_dice", dice_sum / static_cast<double>(count)}};
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-supervised mask recovery with projection + pairwise-affinity losses"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Recover one mask per annotated box");
  segment->add_option("--image", seg.image_path, "input image (PNG/PPM/PGM)")->required();
  segment->add_option("--boxes", seg.boxes_path, "box annotations JSON")->required();
  segment->add_option("--out", seg.out_dir, "output directory")->required();
  segment->add_option("--feature", seg.feature, "similarity driving confidence: lab|lbp|fused")
      ->check(CLI::IsMember({"lab", "lbp", "fused"}));
  segment->add_option("--theta1", seg.config.theta1, "Lab weight in the fusion");
  segment->add_option("--theta2", seg.config.theta2, "LBP weight in the fusion");
  segment->add_option("--tau", seg.config.tau, "confidence threshold");
  segment->add_option("--k", seg.config.k, "neighborhood size K");
  segment->add_option("--dilation", seg.config.dilation, "neighborhood dilation");
  segment->add_option("--steps", seg.config.max_iters, "max descent iterations");
  segment->add_option("--lr", seg.config.step_size, "descent step size");
  segment->add_option("--momentum", seg.config.momentum, "descent momentum");
  segment->add_option("--stop-delta", seg.config.stop_delta, "stop when |dL| drops below");
  segment->add_option("--seed", seg.config.seed, "seed recorded in the config");
  segment->add_option("--threshold", seg.threshold, "binarization threshold");

  HeatmapArgs heat;
  auto* heatmap = app.add_subcommand("heatmap", "Dump per-pixel similarity heatmaps");
  heatmap->add_option("--image", heat.image_path, "input image")->required();
  heatmap->add_option("--out", heat.out_dir, "output directory")->required();
  heatmap->add_option("--mode", heat.mode, "lab|lbp|fused|all")
      ->check(CLI::IsMember({"lab", "lbp", "fused", "all"}));
  heatmap->add_option("--theta1", heat.theta1, "Lab weight");
  heatmap->add_option("--theta2", heat.theta2, "LBP weight");
  heatmap->add_option("--tau", heat.tau, "confidence threshold");
  heatmap->add_option("--k", heat.k, "neighborhood size K");
  heatmap->add_option("--dilation", heat.dilation, "neighborhood dilation");
  heatmap->add_option("--edges-csv", heat.edges_csv, "also dump the edge table as CSV");

  GradcheckArgs grad;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradient");
  gradcheck->add_option("--seed", grad.seed, "base seed");
  gradcheck->add_option("--size", grad.size, "instance side length");
  gradcheck->add_option("--trials", grad.trials, "number of random instances");
  gradcheck->add_flag("--corrupt", grad.corrupt, "perturb the gradient (negative control)")
      ->group("");  // test hook, hidden from help

  std::string cost_specs, cost_preset;
  auto* cost = app.add_subcommand("cost", "Convolution multiplication/parameter counts");
  cost->add_option("--specs", cost_specs, "JSON list of conv layer specs");
  cost->add_option("--preset", cost_preset, "published reduction scenario: fpn|head")
      ->check(CLI::IsMember({"fpn", "head"}));

  std::string synth_scene, synth_out;
  auto* synth = app.add_subcommand("synth", "Render a synthetic scene with ground truth");
  synth->add_option("--scene", synth_scene, "SceneSpec JSON")->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  std::string eval_pred, eval_gt;
  auto* eval = app.add_subcommand("eval", "Mean IoU/Dice between mask directories");
  eval->add_option("--pred", eval_pred, "predicted masks directory")->required();
  eval->add_option("--gt", eval_gt, "ground-truth masks directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (segment->parsed()) return cmd_segment(seg);
    if (heatmap->parsed()) return cmd_heatmap(heat);
    if (gradcheck->parsed()) return cmd_gradcheck(grad);
    if (cost->parsed()) {
      if (cost_preset.empty() && cost_specs.empty())
        throw std::invalid_argument("cost: provide --specs or --preset");
      return cmd_cost(cost_specs, cost_preset);
    }
    if (synth->parsed()) return cmd_synth(synth_scene, synth_out);
    if (eval->parsed()) return cmd_eval(eval_pred, eval_gt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
