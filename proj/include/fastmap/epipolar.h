#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/config.h"
#include "fastmap/model.h"

namespace fastmap {

// W = Σ ω_m w_m w_mᵀ with w_m = flatten(x2_m x1_mᵀ); unit weights when
// `weights` is empty. Inactive points (mask false) are skipped.
Matrix9d PrecomputeWeights(std::span<const Eigen::Vector3d> x1,
                           std::span<const Eigen::Vector3d> x2,
                           std::span<const double> weights = {},
                           const std::vector<bool>* active = nullptr);

struct EpipolarPair {
  ImageId i = 0;
  ImageId j = 0;
  std::vector<Eigen::Vector3d> x1;  // normalized with the initial focal
  std::vector<Eigen::Vector3d> x2;
  std::vector<bool> active;
  Matrix9d weight = Matrix9d::Zero();

  int NumActive() const;
};

// Poses plus per-camera focal scale. Rotations act as corrections on top of
// fixed initial rotations: R_i = R_i^0 · Rot6d(θ_i).
struct EpipolarProblem {
  std::vector<Rotation3> init_rotations;
  std::vector<CameraId> camera_of_image;
  int num_cameras = 0;
  std::vector<EpipolarPair> pairs;
  bool refine_focal = false;

  int NumImages() const { return static_cast<int>(init_rotations.size()); }
  // [6n rotation | 3n centers | num_cameras log-focal]
  int NumParams() const { return 9 * NumImages() + num_cameras; }
  int TotalActive() const;
};

// Initial parameter vector: identity corrections, the given centers and zero
// log-focal offsets.
Eigen::VectorXd InitialParams(const EpipolarProblem& problem,
                              std::span<const Eigen::Vector3d> centers);

// Matrix acting on the initially normalized points of pair n:
// D_j E D_i / ‖D_j E D_i‖_F, with E = [t]x R_j R_iᵀ, t = R_j (o_i - o_j) / ‖.‖
// and D = diag(e^{-s}, e^{-s}, 1).
Eigen::Matrix3d PairMatrix(const EpipolarProblem& problem,
                           const EpipolarPair& pair,
                           const Eigen::VectorXd& params);

// (1/Z) Σ eₙᵀ Wₙ eₙ using each pair's stored weight matrix. Pass Z when it
// is known; counting it touches every point.
double EpipolarLossForm(const EpipolarProblem& problem,
                        const Eigen::VectorXd& params,
                        Eigen::VectorXd* grad = nullptr, int num_active = -1);

// (1/Z) Σ |x2ᵀ G x1| over active points.
double EpipolarLossDirect(const EpipolarProblem& problem,
                          const Eigen::VectorXd& params);

// Per-point |x2ᵀ G x1| for one pair, inactive points included.
std::vector<double> PairResiduals(const EpipolarProblem& problem,
                                  const EpipolarPair& pair,
                                  const Eigen::VectorXd& params);

// Reweights every pair with 1/max(|ε|, floor) from the current state.
void Reweight(EpipolarProblem& problem, const Eigen::VectorXd& params,
              double floor);

struct IrlsResult {
  std::vector<Rotation3> rotations;
  std::vector<Eigen::Vector3d> centers;
  std::vector<double> focal_scale;  // multiplies each camera's focal
  std::vector<bool> registered;     // image kept at least one pair
  std::size_t pairs_kept = 0;       // pairs with an active point at the end
  std::vector<double> direct_loss;  // checkpoint after each round
  int rollbacks = 0;  // rounds undone for raising the direct loss > 1%
  std::vector<double> thresholds;
  int steps = 0;
  double seconds_per_step = 0.0;
};

// Scheduled prune / reweight / Adam loop.
IrlsResult IrlsRefine(EpipolarProblem problem,
                      std::span<const Eigen::Vector3d> centers,
                      const PipelineConfig& config);

}  // namespace fastmap
