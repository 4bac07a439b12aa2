#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/model.h"

namespace fastmap {

struct FundamentalEstimate {
  Eigen::Matrix3d F = Eigen::Matrix3d::Zero();
  // Null space of the design matrix is more than one-dimensional (e.g. all
  // points on a plane or pure rotation); F is then not unique.
  bool degenerate = false;
};

// Normalized 8-point least squares with rank-2 enforcement. Output has unit
// Frobenius norm. Needs at least 8 pairs; throws on rank-deficient input.
FundamentalEstimate EstimateFundamental(std::span<const Eigen::Vector2d> x1,
                                        std::span<const Eigen::Vector2d> x2);

// `iterations` refits on the 80% of pairs with the smallest Sampson
// distance, then one refit on the pairs within `factor` times the median.
FundamentalEstimate EstimateFundamentalTrimmed(
    std::span<const Eigen::Vector2d> x1, std::span<const Eigen::Vector2d> x2,
    int iterations = 6, double factor = 5.0);

// Normalized 4-point DLT; unit Frobenius norm. Maps x1 to x2.
Eigen::Matrix3d EstimateHomography(std::span<const Eigen::Vector2d> x1,
                                   std::span<const Eigen::Vector2d> x2);

// |x2ᵀ F x1| for homogeneous points.
inline double EpipolarError(const Eigen::Matrix3d& F, const Eigen::Vector3d& x1,
                            const Eigen::Vector3d& x2) {
  return std::abs(x2.dot(F * x1));
}

// Mean |x2ᵀ F x1| over the pairs (inhomogeneous input, z = 1).
double MeanEpipolarError(const Eigen::Matrix3d& F,
                         std::span<const Eigen::Vector2d> x1,
                         std::span<const Eigen::Vector2d> x2);

// Euclidean transfer error ‖π(H x1) - x2‖.
double TransferError(const Eigen::Matrix3d& H, const Eigen::Vector2d& x1,
                     const Eigen::Vector2d& x2);

struct RelativePose {
  Rotation3 rotation;
  std::optional<Eigen::Vector3d> translation;  // unit, none for pure rotation
  int support = 0;       // pairs passing the positive-depth check
  bool tie = false;      // another candidate had the same support
  int candidate = 0;     // index of the chosen candidate
};

// True if the pair triangulates with positive depth in both views for
// x2 ~ R x1 + t.
bool PositiveDepth(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t,
                   const Eigen::Vector3d& x1, const Eigen::Vector3d& x2);

// Four (R, ±t) candidates from an essential matrix, in the order
// (Ra, t), (Ra, -t), (Rb, t), (Rb, -t). Throws if E is not essential.
std::array<std::pair<Eigen::Matrix3d, Eigen::Vector3d>, 4> EssentialCandidates(
    const Eigen::Matrix3d& E);

// Picks the candidate with the most positive-depth pairs; ties go to the
// lowest index. Points are normalized homogeneous (z = 1).
RelativePose DecomposeEssential(const Eigen::Matrix3d& E,
                                std::span<const Eigen::Vector3d> x1,
                                std::span<const Eigen::Vector3d> x2);

struct HomographyCandidate {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;  // t / d, not normalized
  Eigen::Vector3d normal;       // plane normal in the first camera
  int support = 0;
};

// Analytic decomposition of a calibrated homography. Returns an empty vector
// when H is a pure rotation (within `rotation_tolerance` on singular values).
std::vector<HomographyCandidate> HomographyCandidates(
    const Eigen::Matrix3d& H, std::span<const Eigen::Vector3d> x1,
    std::span<const Eigen::Vector3d> x2, double rotation_tolerance = 1e-3);

RelativePose DecomposeHomography(const Eigen::Matrix3d& H,
                                 std::span<const Eigen::Vector3d> x1,
                                 std::span<const Eigen::Vector3d> x2,
                                 double rotation_tolerance = 1e-3);

}  // namespace fastmap
