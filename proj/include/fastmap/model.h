#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fastmap {

using ImageId = int;
using CameraId = int;
using PairId = int;

using Matrix9d = Eigen::Matrix<double, 9, 9>;
using Vector9d = Eigen::Matrix<double, 9, 1>;

enum class GeometryClass { kFundamental, kHomography };

// Rotation matrix with RᵀR = I and det = +1. Construction from an arbitrary
// matrix is checked, then projected back onto SO(3) to remove drift.
class Rotation3 {
 public:
  Rotation3() : matrix_(Eigen::Matrix3d::Identity()) {}
  explicit Rotation3(const Eigen::Matrix3d& matrix);

  // Nearest rotation in the Frobenius sense; never throws for finite input.
  static Rotation3 Project(const Eigen::Matrix3d& matrix);
  static Rotation3 AngleAxis(double angle, const Eigen::Vector3d& axis);

  const Eigen::Matrix3d& matrix() const { return matrix_; }
  Rotation3 transpose() const;
  Rotation3 operator*(const Rotation3& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& v) const {
    return matrix_ * v;
  }

 private:
  struct Unchecked {};
  Rotation3(const Eigen::Matrix3d& matrix, Unchecked) : matrix_(matrix) {}

  Eigen::Matrix3d matrix_;
};

struct Correspondence {
  int kp1 = 0;  // keypoint index in image i
  int kp2 = 0;  // keypoint index in image j
  friend bool operator==(const Correspondence&, const Correspondence&) =
      default;
};

struct ImagePairMatches {
  ImageId i = 0;
  ImageId j = 0;
  GeometryClass geometry = GeometryClass::kFundamental;
  std::vector<Correspondence> correspondences;
  // Correspondences [0, num_original) were ingested; the rest came from track
  // completion.
  std::size_t num_original = 0;
  // The whole record was created by track completion.
  bool synthetic_from_tracks = false;

  friend bool operator==(const ImagePairMatches&,
                         const ImagePairMatches&) = default;
};

struct Image {
  ImageId id = 0;
  CameraId camera_id = 0;
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector2d> keypoints;  // pixels, origin top-left

  friend bool operator==(const Image&, const Image&) = default;
};

// Matches ingested from the front-end. Read-only after ingest.
struct MatchSet {
  std::vector<Image> images;
  std::vector<ImagePairMatches> pairs;

  int NumCameras() const;
  std::vector<ImageId> ImagesOfCamera(CameraId camera) const;
  friend bool operator==(const MatchSet&, const MatchSet&) = default;
};

struct CameraModel {
  CameraId id = 0;
  int width = 0;
  int height = 0;
  double focal = 1.0;
  double alpha = 0.0;  // division model, radius in half-diagonal units

  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
  double HalfDiagonal() const;
  Eigen::Matrix3d K() const;
  double FovDegrees() const;

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct ImagePose {
  Rotation3 rotation;  // world -> camera
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // in world frame
  bool registered = false;

  Eigen::Vector3d Translation() const { return -(rotation * center); }
};

using PoseState = std::vector<ImagePose>;

struct PairGeometry {
  ImageId i = 0;
  ImageId j = 0;
  Rotation3 rel_rotation;                    // R^{i->j}
  std::optional<Eigen::Vector3d> rel_translation;  // unit t^{i->j}
  Eigen::Vector3d rel_direction_world = Eigen::Vector3d::UnitX();
  std::vector<Eigen::Vector3d> x1;  // normalized homogeneous, z = 1
  std::vector<Eigen::Vector3d> x2;
  Matrix9d weight_matrix = Matrix9d::Zero();
  std::vector<double> residuals;  // |ε̂| cache
};

struct Observation {
  ImageId image = 0;
  int keypoint = 0;
  friend bool operator==(const Observation&, const Observation&) = default;
  friend auto operator<=>(const Observation&, const Observation&) = default;
};

struct TrackSet {
  std::vector<std::vector<Observation>> tracks;
  // keypoint_track[image][keypoint] -> track index or -1.
  std::vector<std::vector<int>> keypoint_track;

  int TrackOf(const Observation& obs) const {
    return keypoint_track[obs.image][obs.keypoint];
  }
};

struct ScenePoint {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  int track = -1;
  std::vector<Observation> observations;
  std::vector<bool> inlier;
  double error = 0.0;  // mean inlier reprojection error, px
  std::array<std::uint8_t, 3> rgb{128, 128, 128};
};

struct SceneModel {
  std::vector<CameraModel> cameras;
  std::vector<Image> images;
  PoseState poses;
  TrackSet tracks;
  std::vector<ScenePoint> points;
};

struct Diagnostic {
  std::string code;
  std::string message;
};

// One diagnostic per violated invariant; empty iff the set is well formed.
std::vector<Diagnostic> Validate(const MatchSet& match_set);

// Index of the pair (i, j) with i < j, or -1.
class PairIndex {
 public:
  explicit PairIndex(const MatchSet& match_set);
  int Find(ImageId i, ImageId j) const;

 private:
  int num_images_;
  std::vector<std::pair<std::int64_t, int>> sorted_;
};

}  // namespace fastmap
