#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

// Quasi-uniform unit vectors on the sphere (Fibonacci lattice).
std::vector<Eigen::Vector3d> FibonacciSphere(int n);

// Mean |x2ᵀ E x1| for E = [t]x R / ‖[t]x R‖_F.
double MeanTranslationError(const Eigen::Matrix3d& rel_rotation,
                            const Eigen::Vector3d& t,
                            std::span<const Eigen::Vector3d> x1,
                            std::span<const Eigen::Vector3d> x2);

enum class RelTranslationStatus { kOk, kNoInliers, kFlat, kCheiralityTie };

struct RelTranslationResult {
  RelTranslationStatus status = RelTranslationStatus::kNoInliers;
  Eigen::Vector3d t = Eigen::Vector3d::UnitX();
  double min_error = 0.0;     // coarse lattice
  double median_error = 0.0;  // coarse lattice
};

// Grid search for the unit t^{i->j} with the relative rotation held fixed:
// Fibonacci lattice, then tangent-plane refinement around the argmin. The
// sign comes from a positive-depth majority vote.
RelTranslationResult ReestimateRelative(const Eigen::Matrix3d& rel_rotation,
                                        std::span<const Eigen::Vector3d> x1,
                                        std::span<const Eigen::Vector3d> x2,
                                        const PipelineConfig& config);

// o^{i->j} = -R_jᵀ t^{i->j}.
inline Eigen::Vector3d WorldDirection(const Eigen::Matrix3d& rotation_j,
                                      const Eigen::Vector3d& t) {
  return (-rotation_j.transpose() * t).normalized();
}

struct DirectionEdge {
  ImageId i = 0;
  ImageId j = 0;
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();  // o^{i->j}
};

// L_t = 1/|P| Σ ‖(o_j - o_i)/max(‖o_j - o_i‖, ε) - o^{i->j}‖₁ over stacked
// centers; writes the (sub)gradient when `grad` is set.
double TranslationObjective(std::span<const DirectionEdge> edges,
                            const Eigen::VectorXd& centers,
                            Eigen::VectorXd* grad);

// Mean L1 residual of the edges incident to each image (0 if none).
std::vector<double> PerImageResidual(std::span<const DirectionEdge> edges,
                                     const std::vector<Eigen::Vector3d>& centers);

// Moves the centroid of the active centers to the origin and scales to unit
// mean norm.
void Canonicalize(std::vector<Eigen::Vector3d>& centers,
                  const std::vector<bool>& active);

struct AlignResult {
  std::vector<Eigen::Vector3d> centers;
  std::vector<bool> active;  // image appears in at least one edge
  double final_loss = 0.0;
  std::vector<double> loss_history;
};

// Adam from i.i.d. standard-normal centers drawn with `seed`, or from `init`
// when given.
AlignResult AlignCenters(int num_images, std::span<const DirectionEdge> edges,
                         const PipelineConfig& config, std::uint64_t seed,
                         const std::vector<Eigen::Vector3d>* init = nullptr);

struct MultiAlignResult {
  AlignResult result;
  std::vector<AlignResult> runs;  // canonicalized independent runs
};

// translation_inits independent runs, merged per image by the lowest mean
// incident residual, then a final descent from the merged centers. One init
// is exactly AlignCenters.
MultiAlignResult MultiInitAlign(int num_images,
                                std::span<const DirectionEdge> edges,
                                const PipelineConfig& config,
                                std::uint64_t seed);

}  // namespace fastmap
