#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "fastmap/config.h"
#include "fastmap/io.h"
#include "fastmap/metrics.h"
#include "fastmap/parallel.h"
#include "fastmap/pipeline.h"
#include "fastmap/synth.h"

namespace {

using namespace fastmap;

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int Run(const std::string& matches_path, const std::string& out_dir,
        const std::string& config_path, std::uint64_t seed, int threads,
        bool no_focal_refine) {
  PipelineConfig config;
  if (!config_path.empty()) config = LoadConfig(config_path);
  if (no_focal_refine) config.focal_refine = false;
  SetNumThreads(threads);
  std::filesystem::create_directories(out_dir);
  const auto report_path = std::filesystem::path(out_dir) / "report.txt";

  MatchSet matches;
  try {
    matches = ReadMatches(matches_path);
  } catch (const Error& e) {
    WriteText(report_path, std::string("FAILED ingest.read_matches: ") +
                               e.what() + "\n");
    std::cerr << "ingest.read_matches: " << e.what() << '\n';
    return 2;
  }
  try {
    PipelineResult result = RunPipeline(matches, config, seed);
    WriteModel(result.model, out_dir);
    WriteText(report_path, FormatReport(result.stages));
  } catch (const StageError& e) {
    WriteText(report_path, FormatReport(e.completed()) + "FAILED " + e.stage() +
                               ": " + e.what() + "\n");
    std::cerr << e.what() << '\n';
    return 2;
  }
  return 0;
}

// Orders the estimate by the ground-truth image names; missing images stay
// unregistered.
int Eval(const std::string& est_dir, const std::string& gt_dir) {
  const SceneModel est = ReadModel(est_dir);
  const SceneModel gt = ReadModel(gt_dir);
  std::map<std::string, std::size_t> est_index;
  for (std::size_t k = 0; k < est.images.size(); ++k) {
    if (est.poses[k].registered) est_index[est.images[k].name] = k;
  }
  PoseState est_poses, gt_poses;
  std::size_t missing = 0;
  for (std::size_t k = 0; k < gt.images.size(); ++k) {
    if (!gt.poses[k].registered) continue;
    gt_poses.push_back(gt.poses[k]);
    const auto it = est_index.find(gt.images[k].name);
    if (it == est_index.end()) {
      gt_poses.back().registered = false;
      est_poses.emplace_back();
      ++missing;
    } else {
      est_poses.push_back(est.poses[it->second]);
      est_index.erase(it);
    }
  }
  if (missing > 0 || !est_index.empty()) {
    std::cerr << "warning: image sets differ (" << missing
              << " missing from estimate, " << est_index.size()
              << " not in ground truth); using the intersection\n";
  }
  const MetricSummary s = Summarize(est_poses, gt_poses);
  std::printf("ATE %.6f\nRRA@1 %.2f\nRRA@3 %.2f\nRTA@1 %.2f\nRTA@3 %.2f\n"
              "AUC@1 %.2f\nAUC@3 %.2f\n",
              s.ate, s.rra1, s.rra3, s.rta1, s.rta3, s.auc1, s.auc3);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global structure-from-motion from verified matches"};
  app.require_subcommand(1);

  std::string matches_path, out_dir, config_path;
  std::uint64_t seed = 0;
  int threads = 0;
  bool no_focal_refine = false;
  auto* run = app.add_subcommand("run", "Reconstruct a match file");
  run->add_option("matches", matches_path, "Match file")->required();
  run->add_option("-o,--output", out_dir, "Output model directory")->required();
  run->add_option("-c,--config", config_path, "Config file (key = value)");
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--threads", threads, "Worker threads, 0 = all cores");
  run->add_flag("--no-focal-refine", no_focal_refine,
                "Keep focal lengths fixed during epipolar adjustment");

  SynthSpec spec;
  std::string layout = "ring", synth_dir;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene");
  synth->add_option("-o,--output", synth_dir, "Output directory")->required();
  synth->add_option("--images", spec.num_images);
  synth->add_option("--points", spec.num_points);
  synth->add_option("--layout", layout)->check(
      CLI::IsMember({"ring", "grid", "random"}));
  synth->add_option("--fov", spec.fov_deg, "Horizontal FoV, degrees");
  synth->add_option("--alpha", spec.alpha, "Division distortion");
  synth->add_option("--noise", spec.noise_px, "Pixel noise sigma");
  synth->add_option("--outliers", spec.outlier_frac, "Swapped match fraction");
  synth->add_option("--seed", spec.seed);
  synth->add_option("--width", spec.width);
  synth->add_option("--height", spec.height);
  synth->add_flag("--planar", spec.planar, "Points on a plane");

  std::string est_dir, gt_dir;
  auto* eval = app.add_subcommand("eval", "Compare a model with ground truth");
  eval->add_option("estimate", est_dir)->required();
  eval->add_option("ground_truth", gt_dir)->required();

  std::string export_in, export_out;
  auto* exp = app.add_subcommand("export", "Rewrite a model directory");
  exp->add_option("model", export_in)->required();
  exp->add_option("-o,--output", export_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      return Run(matches_path, out_dir, config_path, seed, threads,
                 no_focal_refine);
    }
    if (*synth) {
      spec.layout = ParseLayout(layout);
      const SynthScene scene = Generate(spec);
      std::filesystem::create_directories(synth_dir);
      WriteMatches(scene.matches,
                   (std::filesystem::path(synth_dir) / "matches.txt").string());
      WriteModel(scene.gt, (std::filesystem::path(synth_dir) / "gt").string());
      return 0;
    }
    if (*eval) return Eval(est_dir, gt_dir);
    if (*exp) {
      WriteModel(ReadModel(export_in), export_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
