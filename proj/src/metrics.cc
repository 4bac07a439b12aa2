#include "fastmap/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "fastmap/error.h"
#include "fastmap/geometry.h"

namespace fastmap {

Similarity UmeyamaAlign(std::span<const Eigen::Vector3d> src,
                        std::span<const Eigen::Vector3d> dst) {
  const std::size_t n = src.size();
  if (n < 3 || dst.size() != n) throw Error("umeyama: need 3 or more points");
  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero(), mu_d = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    mu_s += src[k];
    mu_d += dst[k];
  }
  mu_s /= n;
  mu_d /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    cov += (dst[k] - mu_d) * (src[k] - mu_s).transpose();
    var_s += (src[k] - mu_s).squaredNorm();
  }
  cov /= n;
  var_s /= n;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv = svd.singularValues();
  if (var_s <= 0.0 || sv(1) <= 1e-12 * std::max(sv(0), 1e-300)) {
    throw Error("umeyama: degenerate (collinear) configuration");
  }
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) {
    d(2) = -1.0;
  }
  Similarity out;
  out.rotation = Rotation3::Project(svd.matrixU() * d.asDiagonal() *
                                    svd.matrixV().transpose());
  out.scale = sv.dot(d) / var_s;
  out.translation = mu_d - out.scale * (out.rotation * mu_s);
  return out;
}

double Ate(const PoseState& est, const PoseState& gt) {
  std::vector<Eigen::Vector3d> src, dst;
  for (std::size_t k = 0; k < std::min(est.size(), gt.size()); ++k) {
    if (!est[k].registered || !gt[k].registered) continue;
    src.push_back(est[k].center);
    dst.push_back(gt[k].center);
  }
  if (src.size() < 3) throw Error("ate: fewer than 3 common images");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : dst) centroid += p;
  centroid /= dst.size();
  double mean_dist = 0.0;
  for (const auto& p : dst) mean_dist += (p - centroid).norm();
  mean_dist /= dst.size();
  if (mean_dist <= 0.0) throw Error("ate: degenerate ground truth");
  for (auto& p : dst) p = (p - centroid) / mean_dist;
  const Similarity sim = UmeyamaAlign(src, dst);
  double sum = 0.0;
  for (std::size_t k = 0; k < src.size(); ++k) {
    sum += (sim(src[k]) - dst[k]).squaredNorm();
  }
  return std::sqrt(sum / src.size());
}

PairErrors RelativeErrors(const PoseState& est, const PoseState& gt) {
  PairErrors out;
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t n = std::min(est.size(), gt.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!gt[i].registered) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!gt[j].registered) continue;
      if (!est[i].registered || !est[j].registered) {
        out.rotation_deg.push_back(inf);
        out.translation_deg.push_back(inf);
        out.combined_deg.push_back(inf);
        continue;
      }
      const Eigen::Matrix3d rel_est =
          est[j].rotation.matrix() * est[i].rotation.matrix().transpose();
      const Eigen::Matrix3d rel_gt =
          gt[j].rotation.matrix() * gt[i].rotation.matrix().transpose();
      const double rot = RadToDeg(GeodesicDistance(rel_est, rel_gt));
      out.rotation_deg.push_back(rot);
      // Direction from i to j expressed in camera i.
      const Eigen::Vector3d d_est = est[i].rotation * (est[j].center - est[i].center);
      const Eigen::Vector3d d_gt = gt[i].rotation * (gt[j].center - gt[i].center);
      if (d_est.norm() <= 1e-12 || d_gt.norm() <= 1e-12) {
        out.combined_deg.push_back(rot);
        continue;
      }
      const double trans = RadToDeg(AngleBetween(d_est, d_gt));
      out.translation_deg.push_back(trans);
      out.combined_deg.push_back(std::max(rot, trans));
    }
  }
  return out;
}

double RecallAt(std::span<const double> errors, double delta) {
  if (errors.empty()) throw Error("metrics: empty error list");
  if (!(delta > 0.0)) throw Error("metrics: threshold must be positive");
  const auto below = std::count_if(errors.begin(), errors.end(),
                                   [&](double e) { return e < delta; });
  return 100.0 * static_cast<double>(below) / errors.size();
}

double AucAt(std::span<const double> errors, double delta) {
  if (errors.empty()) throw Error("metrics: empty error list");
  if (!(delta > 0.0)) throw Error("metrics: threshold must be positive");
  // recall(x) is a step function; each error contributes (δ - e)+ to the
  // integral.
  double area = 0.0;
  for (double e : errors) area += std::max(0.0, delta - e);
  return 100.0 * area / (delta * errors.size());
}

MetricSummary Summarize(const PoseState& est, const PoseState& gt) {
  MetricSummary s;
  s.ate = Ate(est, gt);
  const PairErrors e = RelativeErrors(est, gt);
  s.rra1 = RecallAt(e.rotation_deg, 1.0);
  s.rra3 = RecallAt(e.rotation_deg, 3.0);
  s.rta1 = RecallAt(e.translation_deg, 1.0);
  s.rta3 = RecallAt(e.translation_deg, 3.0);
  s.auc1 = AucAt(e.combined_deg, 1.0);
  s.auc3 = AucAt(e.combined_deg, 3.0);
  return s;
}

}  // namespace fastmap
