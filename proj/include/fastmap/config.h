#pragma once

#include <string>

namespace fastmap {

// Every tunable of the pipeline. Defaults reproduce the reference settings.
struct PipelineConfig {
  // Distortion: hierarchical interval search.
  int distortion_levels = 3;
  int distortion_samples_per_level = 10;
  double distortion_min = -1.0;
  double distortion_max = 1.0;
  bool estimate_distortion = true;

  // Focal: FoV voting.
  double fov_min_deg = 20.0;
  double fov_max_deg = 160.0;
  int focal_samples = 100;
  double tau = 0.01;
  double fallback_fov_deg = 60.0;

  // Rotation.
  double rotation_lr = 1e-4;
  int rotation_steps = 2000;  // cap, same stall rule
  int pair_inlier_threshold_start = 100;
  int pair_inlier_threshold_min = 15;

  // Translation.
  double translation_lr = 1e-3;
  int translation_steps = 10000;  // cap; stops once a 100-step window stalls
  int translation_inits = 3;
  int sphere_samples = 1024;
  int sphere_refine_levels = 2;
  int sphere_refine_grid = 15;

  // Track completion.
  int max_completion_track_size = 200;
  // A match joins tracks only if its residual under the pair's fitted model
  // is below both the absolute threshold and factor x the pair's median.
  double track_filter_threshold = 0.01;
  double track_filter_median_factor = 3.0;

  // Epipolar adjustment.
  bool epipolar_adjustment = true;
  double epipolar_lr = 1e-4;
  double lr_decay = 2.0;
  int prune_rounds = 3;
  double prune_threshold_start = 0.01;
  double prune_threshold_end = 0.005;
  int irls_iters_between_prunes = 3;
  int epipolar_steps_per_iter = 300;
  bool focal_refine = true;
  double irls_residual_floor = 1e-6;

  // Adam.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Sparse reconstruction.
  int triangulation_min_track_inliers = 3;
  double triangulation_min_angle_deg = 1.5;
  double reproj_outlier_px = 4.0;
  int triangulation_max_pairs = 50;

  friend bool operator==(const PipelineConfig&,
                         const PipelineConfig&) = default;
};

// Throws Error when a value is out of range.
void CheckConfig(const PipelineConfig& config);

// Parses `key = value` lines, `#` starts a comment. Unknown keys, malformed
// lines and out-of-range values throw Error. Missing keys keep defaults.
PipelineConfig ParseConfig(const std::string& text);
PipelineConfig LoadConfig(const std::string& path);

std::string SerializeConfig(const PipelineConfig& config);

}  // namespace fastmap
