#include "fastmap/model.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "fastmap/error.h"

namespace fastmap {

Rotation3::Rotation3(const Eigen::Matrix3d& matrix) {
  if (!matrix.allFinite()) {
    throw Error("Rotation3: non-finite matrix");
  }
  const double ortho_error =
      (matrix.transpose() * matrix - Eigen::Matrix3d::Identity()).norm();
  if (ortho_error > 1e-6) {
    throw Error("Rotation3: matrix is not orthonormal");
  }
  if (matrix.determinant() < 0.0) {
    throw Error("Rotation3: determinant is negative");
  }
  matrix_ = Project(matrix).matrix_;
}

Rotation3 Rotation3::Project(const Eigen::Matrix3d& matrix) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Rotation3(u * v.transpose(), Unchecked{});
}

Rotation3 Rotation3::AngleAxis(double angle, const Eigen::Vector3d& axis) {
  return Rotation3(
      Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(),
      Unchecked{});
}

Rotation3 Rotation3::transpose() const {
  return Rotation3(matrix_.transpose(), Unchecked{});
}

Rotation3 Rotation3::operator*(const Rotation3& other) const {
  return Rotation3(matrix_ * other.matrix_, Unchecked{});
}

int MatchSet::NumCameras() const {
  int n = 0;
  for (const Image& image : images) n = std::max(n, image.camera_id + 1);
  return n;
}

std::vector<ImageId> MatchSet::ImagesOfCamera(CameraId camera) const {
  std::vector<ImageId> ids;
  for (const Image& image : images) {
    if (image.camera_id == camera) ids.push_back(image.id);
  }
  return ids;
}

double CameraModel::HalfDiagonal() const {
  return 0.5 * std::hypot(static_cast<double>(width),
                          static_cast<double>(height));
}

Eigen::Matrix3d CameraModel::K() const {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = focal;
  k(1, 1) = focal;
  k(0, 2) = cx();
  k(1, 2) = cy();
  return k;
}

double CameraModel::FovDegrees() const {
  return 2.0 * std::atan(0.5 * width / focal) * 180.0 / M_PI;
}

namespace {

std::string Describe(const ImagePairMatches& pair) {
  std::ostringstream os;
  os << "pair (" << pair.i << "," << pair.j << ")";
  return os.str();
}

}  // namespace

std::vector<Diagnostic> Validate(const MatchSet& match_set) {
  std::vector<Diagnostic> out;
  const int num_images = static_cast<int>(match_set.images.size());

  std::vector<std::pair<int, int>> camera_size(match_set.NumCameras(),
                                               {-1, -1});
  std::vector<bool> camera_seen(match_set.NumCameras(), false);
  for (int k = 0; k < num_images; ++k) {
    const Image& image = match_set.images[k];
    const std::string tag = "image " + std::to_string(k);
    if (image.id != k) {
      out.push_back({"non-contiguous id", tag + " has id " +
                                              std::to_string(image.id)});
    }
    if (image.camera_id < 0) {
      out.push_back({"bad camera", tag + " has negative camera id"});
      continue;
    }
    if (image.width <= 0 || image.height <= 0) {
      out.push_back({"bad size", tag + " has non-positive size"});
    }
    auto& size = camera_size[image.camera_id];
    if (camera_seen[image.camera_id] &&
        size != std::make_pair(image.width, image.height)) {
      out.push_back(
          {"camera size mismatch",
           tag + " differs in size from other images of its camera"});
    }
    camera_seen[image.camera_id] = true;
    size = {image.width, image.height};
    for (std::size_t p = 0; p < image.keypoints.size(); ++p) {
      const Eigen::Vector2d& kp = image.keypoints[p];
      if (!kp.allFinite()) {
        out.push_back({"non-finite keypoint",
                       tag + " keypoint " + std::to_string(p)});
      } else if (kp.x() < 0.0 || kp.y() < 0.0 || kp.x() > image.width ||
                 kp.y() > image.height) {
        out.push_back({"out of bounds",
                       tag + " keypoint " + std::to_string(p)});
      }
    }
  }
  for (int c = 0; c < match_set.NumCameras(); ++c) {
    if (!camera_seen[c]) {
      out.push_back({"non-contiguous id",
                     "camera " + std::to_string(c) + " has no images"});
    }
  }

  std::set<std::pair<int, int>> seen_pairs;
  for (const ImagePairMatches& pair : match_set.pairs) {
    if (pair.i == pair.j) {
      out.push_back({"self-pair", Describe(pair)});
      continue;
    }
    if (pair.i < 0 || pair.j < 0 || pair.i >= num_images ||
        pair.j >= num_images) {
      out.push_back({"dangling image id", Describe(pair)});
      continue;
    }
    if (pair.i > pair.j) {
      out.push_back({"pair order", Describe(pair) + " must have i < j"});
    }
    if (!seen_pairs.insert({pair.i, pair.j}).second) {
      out.push_back({"duplicate pair", Describe(pair)});
    }
    const auto n1 = match_set.images[pair.i].keypoints.size();
    const auto n2 = match_set.images[pair.j].keypoints.size();
    std::set<std::pair<int, int>> seen;
    for (const Correspondence& c : pair.correspondences) {
      if (c.kp1 < 0 || c.kp2 < 0 || static_cast<std::size_t>(c.kp1) >= n1 ||
          static_cast<std::size_t>(c.kp2) >= n2) {
        out.push_back({"dangling keypoint", Describe(pair)});
        continue;
      }
      if (!seen.insert({c.kp1, c.kp2}).second) {
        out.push_back({"duplicate correspondence", Describe(pair)});
      }
    }
    if (pair.num_original > pair.correspondences.size()) {
      out.push_back({"bad original count", Describe(pair)});
    }
  }
  return out;
}

PairIndex::PairIndex(const MatchSet& match_set)
    : num_images_(static_cast<int>(match_set.images.size())) {
  sorted_.reserve(match_set.pairs.size());
  for (std::size_t k = 0; k < match_set.pairs.size(); ++k) {
    const auto& p = match_set.pairs[k];
    sorted_.emplace_back(
        static_cast<std::int64_t>(p.i) * num_images_ + p.j,
        static_cast<int>(k));
  }
  std::sort(sorted_.begin(), sorted_.end());
}

int PairIndex::Find(ImageId i, ImageId j) const {
  if (i > j) std::swap(i, j);
  const std::int64_t key = static_cast<std::int64_t>(i) * num_images_ + j;
  auto it = std::lower_bound(
      sorted_.begin(), sorted_.end(), key,
      [](const auto& entry, std::int64_t k) { return entry.first < k; });
  if (it == sorted_.end() || it->first != key) return -1;
  return it->second;
}

}  // namespace fastmap
