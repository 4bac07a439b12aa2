#include "fastmap/twoview.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "fastmap/error.h"
#include "fastmap/geometry.h"

namespace fastmap {
namespace {

// Similarity moving the centroid to the origin with mean distance √2.
Eigen::Matrix3d HartleyTransform(std::span<const Eigen::Vector2d> points) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  double mean_dist = 0.0;
  for (const auto& p : points) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(points.size());
  const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * centroid.x(),  //
      0, s, -s * centroid.y(),   //
      0, 0, 1;
  return t;
}

// Canonical sign: the largest-magnitude entry is positive.
Eigen::Matrix3d CanonicalSign(const Eigen::Matrix3d& m) {
  Eigen::Index r, c;
  m.cwiseAbs().maxCoeff(&r, &c);
  return m(r, c) < 0.0 ? Eigen::Matrix3d(-m) : m;
}

Vector9d SmallestEigenvector(const Matrix9d& ata, Vector9d* eigenvalues) {
  Eigen::SelfAdjointEigenSolver<Matrix9d> eig(ata);
  if (eig.info() != Eigen::Success) throw Error("eigen decomposition failed");
  if (eigenvalues != nullptr) *eigenvalues = eig.eigenvalues();
  return eig.eigenvectors().col(0);
}

}  // namespace

namespace {

// Weighted normalized 8-point; empty weights mean all ones.
FundamentalEstimate FitFundamental(std::span<const Eigen::Vector2d> x1,
                                   std::span<const Eigen::Vector2d> x2,
                                   std::span<const double> weights) {
  if (x1.size() != x2.size()) throw Error("fundamental: size mismatch");
  if (x1.size() < 8) throw Error("fundamental: needs at least 8 pairs");
  const Eigen::Matrix3d t1 = HartleyTransform(x1);
  const Eigen::Matrix3d t2 = HartleyTransform(x2);

  Matrix9d ata = Matrix9d::Zero();
  for (std::size_t k = 0; k < x1.size(); ++k) {
    const Eigen::Vector3d a = t1 * Homogeneous(x1[k]);
    const Eigen::Vector3d b = t2 * Homogeneous(x2[k]);
    const Vector9d row = FlattenRowMajor<double>(b * a.transpose());
    ata.selfadjointView<Eigen::Lower>().rankUpdate(
        row, weights.empty() ? 1.0 : weights[k]);
  }
  ata = ata.selfadjointView<Eigen::Lower>();

  Vector9d lambda;
  const Vector9d f = SmallestEigenvector(ata, &lambda);
  const double top = std::max(lambda(8), 1e-300);
  if (lambda(3) <= 1e-12 * top) {
    throw Error("fundamental: rank-deficient design matrix");
  }

  Eigen::Matrix3d fn;
  fn << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s(2) = 0.0;
  fn = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();

  FundamentalEstimate out;
  out.F = CanonicalSign((t2.transpose() * fn * t1).normalized());
  out.degenerate = lambda(1) <= 1e-9 * top;
  return out;
}

}  // namespace

FundamentalEstimate EstimateFundamental(std::span<const Eigen::Vector2d> x1,
                                        std::span<const Eigen::Vector2d> x2) {
  return FitFundamental(x1, x2, {});
}

FundamentalEstimate EstimateFundamentalTrimmed(
    std::span<const Eigen::Vector2d> x1, std::span<const Eigen::Vector2d> x2,
    int iterations, double factor) {
  FundamentalEstimate est = EstimateFundamental(x1, x2);
  const std::size_t n = x1.size();
  std::vector<double> residuals(n), weights(n);
  auto update_residuals = [&] {
    for (std::size_t k = 0; k < n; ++k) {
      // Sampson distance ranks mismatches more reliably than the algebraic
      // residual while the estimate is still contaminated.
      const Eigen::Vector3d a = Homogeneous(x1[k]), b = Homogeneous(x2[k]);
      const Eigen::Vector3d fa = est.F * a, fb = est.F.transpose() * b;
      const double denom = fa.head<2>().squaredNorm() + fb.head<2>().squaredNorm();
      residuals[k] = std::abs(b.dot(fa)) / std::sqrt(std::max(denom, 1e-300));
    }
  };
  auto quantile = [&](double q) {
    std::vector<double> sorted = residuals;
    const auto at = static_cast<std::size_t>(q * (n - 1));
    std::nth_element(sorted.begin(), sorted.begin() + at, sorted.end());
    return sorted[at];
  };
  // Concentration steps: refit on the best 80%, so gross mismatches leave
  // the fit before any residual scale is trusted.
  const std::size_t keep = std::max<std::size_t>(8, (n * 4) / 5);
  for (int it = 0; it < iterations; ++it) {
    update_residuals();
    const double cut = quantile(static_cast<double>(keep - 1) / (n - 1));
    for (std::size_t k = 0; k < n; ++k) weights[k] = residuals[k] <= cut;
    est = FitFundamental(x1, x2, weights);
  }
  // Final fit on everything within `factor` times the median residual.
  update_residuals();
  const double cut = factor * quantile(0.5);
  int kept = 0;
  for (std::size_t k = 0; k < n; ++k) {
    weights[k] = residuals[k] <= cut;
    kept += residuals[k] <= cut;
  }
  if (kept >= 8 && cut > 0.0) est = FitFundamental(x1, x2, weights);
  return est;
}

Eigen::Matrix3d EstimateHomography(std::span<const Eigen::Vector2d> x1,
                                   std::span<const Eigen::Vector2d> x2) {
  if (x1.size() != x2.size()) throw Error("homography: size mismatch");
  if (x1.size() < 4) throw Error("homography: needs at least 4 pairs");
  const Eigen::Matrix3d t1 = HartleyTransform(x1);
  const Eigen::Matrix3d t2 = HartleyTransform(x2);

  Matrix9d ata = Matrix9d::Zero();
  for (std::size_t k = 0; k < x1.size(); ++k) {
    const Eigen::Vector3d a = t1 * Homogeneous(x1[k]);
    const Eigen::Vector3d b = t2 * Homogeneous(x2[k]);
    Vector9d r1, r2;
    r1 << 0, 0, 0, -b.z() * a, b.y() * a;
    r2 << b.z() * a, 0, 0, 0, -b.x() * a;
    ata.selfadjointView<Eigen::Lower>().rankUpdate(r1);
    ata.selfadjointView<Eigen::Lower>().rankUpdate(r2);
  }
  ata = ata.selfadjointView<Eigen::Lower>();

  Vector9d lambda;
  const Vector9d h = SmallestEigenvector(ata, &lambda);
  if (lambda(1) <= 1e-12 * std::max(lambda(8), 1e-300)) {
    throw Error("homography: degenerate configuration");
  }
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return CanonicalSign((t2.inverse() * hn * t1).normalized());
}

double MeanEpipolarError(const Eigen::Matrix3d& F,
                         std::span<const Eigen::Vector2d> x1,
                         std::span<const Eigen::Vector2d> x2) {
  if (x1.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    sum += EpipolarError(F, Homogeneous(x1[k]), Homogeneous(x2[k]));
  }
  return sum / static_cast<double>(x1.size());
}

double TransferError(const Eigen::Matrix3d& H, const Eigen::Vector2d& x1,
                     const Eigen::Vector2d& x2) {
  const Eigen::Vector3d p = H * Homogeneous(x1);
  return (p.hnormalized() - x2).norm();
}

bool PositiveDepth(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& t,
                   const Eigen::Vector3d& x1, const Eigen::Vector3d& x2) {
  // Solve l1 R x1 - l2 x2 = -t in the least-squares sense.
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = rotation * x1;
  a.col(1) = -x2;
  const Eigen::Matrix2d ata = a.transpose() * a;
  const double det = ata.determinant();
  if (std::abs(det) <= 1e-14 * ata.trace() * ata.trace()) return false;
  const Eigen::Vector2d depths = ata.inverse() * (a.transpose() * (-t));
  return depths(0) > 0.0 && depths(1) > 0.0;
}

std::array<std::pair<Eigen::Matrix3d, Eigen::Vector3d>, 4> EssentialCandidates(
    const Eigen::Matrix3d& E) {
  if (!E.allFinite()) throw Error("essential: non-finite matrix");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  if (s(0) <= 1e-12) throw Error("essential: no translation support");
  if (s(1) < 0.1 * s(0) || s(2) > 0.5 * s(1)) {
    throw Error("essential: matrix is not essential");
  }
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d ra = u * w * v.transpose();
  const Eigen::Matrix3d rb = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);
  return {{{ra, t}, {ra, -t}, {rb, t}, {rb, -t}}};
}

RelativePose DecomposeEssential(const Eigen::Matrix3d& E,
                                std::span<const Eigen::Vector3d> x1,
                                std::span<const Eigen::Vector3d> x2) {
  if (x1.empty() || x1.size() != x2.size()) {
    throw Error("essential: needs point pairs");
  }
  const auto candidates = EssentialCandidates(E);
  std::array<int, 4> support{};
  for (int c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < x1.size(); ++k) {
      if (PositiveDepth(candidates[c].first, candidates[c].second, x1[k],
                        x2[k])) {
        ++support[c];
      }
    }
  }
  const int best = static_cast<int>(
      std::max_element(support.begin(), support.end()) - support.begin());
  if (support[best] == 0) {
    throw Error("essential: no candidate with positive depth");
  }
  RelativePose pose;
  pose.rotation = Rotation3::Project(candidates[best].first);
  pose.translation = candidates[best].second.normalized();
  pose.support = support[best];
  pose.candidate = best;
  pose.tie = std::count(support.begin(), support.end(), support[best]) > 1;
  return pose;
}

std::vector<HomographyCandidate> HomographyCandidates(
    const Eigen::Matrix3d& H, std::span<const Eigen::Vector3d> x1,
    std::span<const Eigen::Vector3d> x2, double rotation_tolerance) {
  if (!H.allFinite()) throw Error("homography: non-finite matrix");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd0(H);
  const Eigen::Vector3d s0 = svd0.singularValues();
  if (s0(1) <= 1e-12 * s0(0)) throw Error("homography: degenerate matrix");
  Eigen::Matrix3d h = H / s0(1);
  int votes = 0;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    votes += x2[k].dot(h * x1[k]) > 0.0 ? 1 : -1;
  }
  if (votes < 0) h = -h;

  const Eigen::Vector3d s = s0 / s0(1);
  if (s(0) - s(2) <= rotation_tolerance) return {};

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h.transpose() * h);
  // Ascending eigenvalues: reorder to σ1² ≥ σ2² ≥ σ3².
  const Eigen::Vector3d v1 = eig.eigenvectors().col(2);
  const Eigen::Vector3d v2 = eig.eigenvectors().col(1);
  const Eigen::Vector3d v3 = eig.eigenvectors().col(0);
  const double l1 = eig.eigenvalues()(2);
  const double l3 = eig.eigenvalues()(0);
  const double denom = std::sqrt(std::max(l1 - l3, 1e-300));
  const double a = std::sqrt(std::max(1.0 - l3, 0.0));
  const double b = std::sqrt(std::max(l1 - 1.0, 0.0));
  const Eigen::Vector3d u1 = (a * v1 + b * v3) / denom;
  const Eigen::Vector3d u2 = (a * v1 - b * v3) / denom;

  std::vector<HomographyCandidate> out;
  for (const Eigen::Vector3d& u : {u1, u2}) {
    Eigen::Matrix3d uu, ww;
    uu << v2, u, v2.cross(u);
    const Eigen::Vector3d hv2 = h * v2;
    const Eigen::Vector3d hu = h * u;
    ww << hv2, hu, hv2.cross(hu);
    const Eigen::Matrix3d r = ww * uu.transpose();
    const Eigen::Vector3d n = v2.cross(u);
    const Eigen::Vector3d t = (h - r) * n;
    out.push_back({r, t, n, 0});
    out.push_back({r, -t, -n, 0});
  }
  for (HomographyCandidate& c : out) {
    const Eigen::Vector3d n2 = c.rotation * c.normal;
    const double d2 = 1.0 + n2.dot(c.translation);
    for (std::size_t k = 0; k < x1.size(); ++k) {
      if (c.normal.dot(x1[k]) > 0.0 && n2.dot(x2[k]) * d2 > 0.0) {
        ++c.support;
      }
    }
  }
  return out;
}

RelativePose DecomposeHomography(const Eigen::Matrix3d& H,
                                 std::span<const Eigen::Vector3d> x1,
                                 std::span<const Eigen::Vector3d> x2,
                                 double rotation_tolerance) {
  const auto candidates = HomographyCandidates(H, x1, x2, rotation_tolerance);
  RelativePose pose;
  if (candidates.empty()) {
    Eigen::Matrix3d h = H;
    if (h.determinant() < 0.0) h = -h;
    pose.rotation = Rotation3::Project(h);
    pose.support = static_cast<int>(x1.size());
    return pose;
  }
  int best = 0;
  for (int c = 1; c < static_cast<int>(candidates.size()); ++c) {
    if (candidates[c].support > candidates[best].support) best = c;
  }
  int ties = 0;
  for (const auto& c : candidates) {
    if (c.support == candidates[best].support) ++ties;
  }
  pose.rotation = Rotation3::Project(candidates[best].rotation);
  const double tn = candidates[best].translation.norm();
  if (tn > 0.0) pose.translation = candidates[best].translation / tn;
  pose.support = candidates[best].support;
  pose.candidate = best;
  pose.tie = ties > 1;
  return pose;
}

}  // namespace fastmap
