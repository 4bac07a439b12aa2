#pragma once

#include <iosfwd>
#include <string>

#include "fastmap/model.h"

namespace fastmap {

// Line-oriented match file (format in README). Reading validates the result
// and throws Error with the first diagnostics on failure.
MatchSet ReadMatches(const std::string& path);
MatchSet ParseMatches(std::istream& in);
void WriteMatches(const MatchSet& match_set, const std::string& path);
void WriteMatches(const MatchSet& match_set, std::ostream& out);

// COLMAP text model: cameras.txt, images.txt, points3D.txt. Only registered
// images are written; ids are 1-based on disk.
void WriteModel(const SceneModel& scene, const std::string& dir);

// Inverse of WriteModel. images.txt and cameras.txt are required;
// points3D.txt is optional.
SceneModel ReadModel(const std::string& dir);

// Unit scalar-first quaternion with qw ≥ 0.
Eigen::Vector4d RotationToQuaternion(const Rotation3& rotation);
Rotation3 QuaternionToRotation(const Eigen::Vector4d& q);

}  // namespace fastmap
