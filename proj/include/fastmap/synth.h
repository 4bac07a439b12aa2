#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fastmap/model.h"

namespace fastmap {

enum class Layout { kRing, kGrid, kRandom };

Layout ParseLayout(const std::string& name);

struct SynthSpec {
  int num_images = 30;
  int num_points = 500;
  Layout layout = Layout::kRing;
  double fov_deg = 60.0;
  double alpha = 0.0;
  double noise_px = 0.0;
  double outlier_frac = 0.0;  // fraction of each pair's matches swapped
  std::uint64_t seed = 1;
  int width = 640;
  int height = 480;
  // Per-camera overrides; image k uses camera k % num_cameras.
  int num_cameras = 1;
  std::vector<double> camera_fov_deg;
  std::vector<double> camera_alpha;
  bool planar = false;       // points on the plane z = 0
  double match_recall = 1.0; // fraction of co-visible points matched
  int min_pair_matches = 30;
  double camera_distance = 4.0;
};

struct SynthScene {
  MatchSet matches;
  SceneModel gt;  // every image registered; points carry full tracks
  std::vector<Eigen::Vector3d> points;
};

// Deterministic for a given spec. Throws Error when an image sees fewer than
// 50 points or the view graph is disconnected.
SynthScene Generate(const SynthSpec& spec);

// World-to-camera rotation looking from `center` at `target`, with +z
// forward and the world z axis as the up hint.
Rotation3 LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target);

}  // namespace fastmap
