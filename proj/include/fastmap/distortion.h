#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

// Center-normalized coordinates: (p - principal point) / half diagonal.
// The division model operates in these units so α does not depend on the
// image resolution.
Eigen::Vector2d PixelToCentered(const CameraModel& camera,
                                const Eigen::Vector2d& pixel);
Eigen::Vector2d CenteredToPixel(const CameraModel& camera,
                                const Eigen::Vector2d& centered);

// x_u = x_d / (1 + α r_d²). Empty when the denominator is ≤ eps.
std::optional<Eigen::Vector2d> Undistort(const Eigen::Vector2d& distorted,
                                         double alpha, double eps = 1e-8);

// Closed-form inverse of Undistort. Empty when no real preimage exists.
std::optional<Eigen::Vector2d> Distort(const Eigen::Vector2d& undistorted,
                                       double alpha);

// Correspondences of one image pair in center-normalized coordinates. A side
// with an empty alpha takes the candidate value being scored; a side with a
// value is held fixed.
struct DistortionPair {
  std::vector<Eigen::Vector2d> u1;
  std::vector<Eigen::Vector2d> u2;
  std::optional<double> alpha1;
  std::optional<double> alpha2;
};

// Mean |x2ᵀ F x1| after undistorting with `alpha` and refitting F per pair
// (trimmed refit; residuals above 5x the pair's median are left out of the
// mean). Throws Error when no pair can be fitted.
double ScoreAlpha(double alpha, std::span<const DistortionPair> pairs);

struct AlphaSearchResult {
  double alpha = 0.0;
  std::vector<double> level_best_score;
  std::vector<double> level_spacing;
};

// Hierarchical interval search: each level samples the interval uniformly
// (endpoints included) and the samples adjacent to the argmin bound the next
// level's interval.
AlphaSearchResult SearchAlpha(std::span<const DistortionPair> pairs,
                              const PipelineConfig& config);

struct DistortionSchedule {
  std::vector<CameraId> order;   // cameras in estimation order
  std::vector<double> alpha;     // per camera
  std::vector<bool> estimated;   // false: fell back to α = 0
  std::vector<int> ready_pairs;  // pairs used per camera
};

// Estimates cameras one at a time, always picking the camera with the most
// ready fundamental pairs (both images from it, or the other side already
// estimated). Homography pairs are ignored.
DistortionSchedule ScheduleCameras(const MatchSet& match_set,
                                   const PipelineConfig& config);

}  // namespace fastmap
