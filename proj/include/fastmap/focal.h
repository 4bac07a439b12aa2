#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

// exp((1 - λ1/λ2) / τ) for the singular values of E = K2ᵀ F K1, where
// K = diag(f, f, 1). F must be expressed in principal-point-centered pixel
// coordinates. Returns a value in [0, 1].
double EssentialValidity(const Eigen::Matrix3d& F, double focal1,
                         double focal2, double tau);

// Focal length for a horizontal field of view and image width.
double FocalFromFov(double fov_deg, int width);

struct FocalVote {
  double focal = 0.0;
  double fov_deg = 0.0;
  std::vector<double> fov_samples;
  std::vector<double> scores;
};

// Uniform FoV candidates over [fov_min, fov_max]; returns the argmax of the
// summed validity. Throws Error("focal underdetermined") on an empty set.
FocalVote VoteFocal(std::span<const Eigen::Matrix3d> fundamentals, int width,
                    const PipelineConfig& config);

// Fundamental matrix of one pair, centered pixel coordinates, undistorted.
struct FocalPair {
  Eigen::Matrix3d F;
  CameraId camera1 = 0;
  CameraId camera2 = 0;
};

struct FocalSchedule {
  std::vector<CameraId> order;
  std::vector<double> focal;
  std::vector<bool> estimated;  // false: fell back to the default FoV
};

// Multi-camera voting with the same ready-pair schedule as distortion
// estimation; for a cross-camera pair the candidate enters only the unknown
// side.
FocalSchedule VoteFocalMulti(std::span<const FocalPair> pairs,
                             std::span<const CameraModel> cameras,
                             const PipelineConfig& config);

// Fundamental pairs of the set after undistortion with each camera's α.
std::vector<FocalPair> BuildFocalPairs(const MatchSet& match_set,
                                       std::span<const CameraModel> cameras);

// Undistorted, K⁻¹-normalized keypoint (z = 1 implied). NaN when the
// undistortion is invalid.
Eigen::Vector2d NormalizeKeypoint(const CameraModel& camera,
                                  const Eigen::Vector2d& pixel);

struct CalibratedPair {
  ImageId i = 0;
  ImageId j = 0;
  GeometryClass geometry = GeometryClass::kFundamental;
  std::vector<Correspondence> correspondences;  // valid ones only
  std::vector<Eigen::Vector3d> x1;
  std::vector<Eigen::Vector3d> x2;
  Eigen::Matrix3d model = Eigen::Matrix3d::Zero();  // E or H, refit
  bool fitted = false;
};

struct CalibratedMatches {
  std::vector<std::vector<Eigen::Vector2d>> keypoints;  // normalized
  std::vector<CalibratedPair> pairs;
};

// Undistorts and normalizes all keypoints and refits each pair's geometry in
// normalized coordinates.
CalibratedMatches ApplyCalibration(const MatchSet& match_set,
                                   std::span<const CameraModel> cameras);

}  // namespace fastmap
