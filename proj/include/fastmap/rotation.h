#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

struct RelPoseEdge {
  ImageId i = 0;
  ImageId j = 0;
  Rotation3 rotation;  // R^{i->j}: R_j ≈ R^{i->j} R_i
  int inliers = 0;
  bool tie = false;
};

struct RelPoseGraph {
  int num_images = 0;
  std::vector<RelPoseEdge> edges;
  std::vector<bool> in_largest;  // membership in the largest component
};

// Connected-component label per image (smallest member id).
std::vector<int> ComponentLabels(int num_images,
                                 std::span<const RelPoseEdge> edges);

struct FilterResult {
  RelPoseGraph graph;
  std::vector<int> thresholds;  // every threshold tried, in order
};

// Keeps edges with at least `threshold` inliers, halving the threshold from
// its start value while the graph is disconnected and the minimum has not
// been reached. Images outside the largest component are dropped. Throws
// Error("scene disconnected") when fewer than 3 images remain.
FilterResult FilterPairs(const RelPoseGraph& graph,
                         const PipelineConfig& config);

// Column-wise least-squares initialization. Returns a rotation for every
// image; only members of the largest component are meaningful. The result is
// defined up to a global rotation.
std::vector<Rotation3> InitRotations(const RelPoseGraph& graph);

// Mean geodesic residual d(R_j, R^{i->j} R_i) over the edges.
double RotationLoss(std::span<const Rotation3> rotations,
                    const RelPoseGraph& graph);

// Rotations are parameterized as R_i = R_i^init · Rot6d(θ_i). Returns the
// smooth loss at θ and writes its gradient when `grad` is set.
double RotationObjective(std::span<const Rotation3> init,
                         const RelPoseGraph& graph,
                         const Eigen::VectorXd& params,
                         Eigen::VectorXd* grad);

std::vector<Rotation3> RotationsFromParams(std::span<const Rotation3> init,
                                           const Eigen::VectorXd& params);

struct RotationRefineResult {
  std::vector<Rotation3> rotations;
  std::vector<double> loss_history;  // one entry per evaluated step
  int steps = 0;
  // Stopped because a 100-step window made no relative progress (< 1e-9).
  // The returned rotations are the best iterate seen.
  bool converged = false;
};

RotationRefineResult RefineRotations(std::span<const Rotation3> init,
                                     const RelPoseGraph& graph,
                                     const PipelineConfig& config);

}  // namespace fastmap
