#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

struct TriangulatedPoint {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  bool positive_depth = false;  // in front of both cameras
};

// Linear two-view DLT on normalized homogeneous observations. Throws Error
// when the rays are parallel or the centers coincide.
TriangulatedPoint TriangulatePair(const ImagePose& pose_i,
                                  const ImagePose& pose_j,
                                  const Eigen::Vector3d& x_i,
                                  const Eigen::Vector3d& x_j);

// World point to pixel through pinhole and division distortion. Empty when
// the point is behind the camera or has no distorted image.
std::optional<Eigen::Vector2d> ProjectToPixel(const CameraModel& camera,
                                              const ImagePose& pose,
                                              const Eigen::Vector3d& xyz);

// One point per track: average of pairwise triangulations (at most
// triangulation_max_pairs random pairs), reprojection outlier marking, then
// the minimum-inlier and maximum-angle rules.
std::vector<ScenePoint> BuildPoints(const TrackSet& tracks,
                                    const MatchSet& match_set,
                                    std::span<const CameraModel> cameras,
                                    const PoseState& poses,
                                    const PipelineConfig& config,
                                    std::uint64_t seed);

}  // namespace fastmap
