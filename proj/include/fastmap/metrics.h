#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "fastmap/model.h"

namespace fastmap {

// y ≈ scale · R x + translation
struct Similarity {
  double scale = 1.0;
  Rotation3 rotation;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d operator()(const Eigen::Vector3d& x) const {
    return scale * (rotation * x) + translation;
  }
};

// Least-squares similarity from src to dst. Throws Error for fewer than 3
// points or a (near) collinear configuration.
Similarity UmeyamaAlign(std::span<const Eigen::Vector3d> src,
                        std::span<const Eigen::Vector3d> dst);

// RMSE of camera centers after aligning est to gt, with gt scaled to unit mean
// distance from its centroid. Images unregistered in either are excluded.
double Ate(const PoseState& est, const PoseState& gt);

struct PairErrors {
  std::vector<double> rotation_deg;
  std::vector<double> translation_deg;
  std::vector<double> combined_deg;  // max(rotation, translation)
};

// Relative errors over every pair of gt-registered images. A pair with an
// unregistered estimate counts as +inf; pairs with coincident centers skip
// the translation error.
PairErrors RelativeErrors(const PoseState& est, const PoseState& gt);

// Percentage of errors strictly below δ.
double RecallAt(std::span<const double> errors, double delta);

// Area under the recall curve on [0, δ] divided by δ, in percent.
double AucAt(std::span<const double> errors, double delta);

struct MetricSummary {
  double ate = 0.0;
  double rra1 = 0.0, rra3 = 0.0;
  double rta1 = 0.0, rta3 = 0.0;
  double auc1 = 0.0, auc3 = 0.0;
};

MetricSummary Summarize(const PoseState& est, const PoseState& gt);

}  // namespace fastmap
