#include "fastmap/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include <Eigen/Dense>

#include "fastmap/distortion.h"
#include "fastmap/epipolar.h"
#include "fastmap/focal.h"
#include "fastmap/geometry.h"
#include "fastmap/parallel.h"
#include "fastmap/reconstruct.h"
#include "fastmap/rotation.h"
#include "fastmap/tracks.h"
#include "fastmap/translation.h"
#include "fastmap/twoview.h"
#include "fastmap/union_find.h"

namespace fastmap {

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

class StageRunner {
 public:
  explicit StageRunner(std::vector<StageRecord>& records) : records_(records) {}

  template <typename Fn>
  void Run(const std::string& name, Fn&& fn) {
    StageRecord record;
    record.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      fn(record);
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what(), records_);
    }
    record.seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    records_.push_back(std::move(record));
  }

 private:
  std::vector<StageRecord>& records_;
};

// Normalized homogeneous points of a pair, skipping invalid keypoints.
void PairPoints(const CalibratedMatches& calib, const ImagePairMatches& pair,
                std::vector<Eigen::Vector3d>& x1,
                std::vector<Eigen::Vector3d>& x2) {
  x1.clear();
  x2.clear();
  for (const auto& c : pair.correspondences) {
    const Eigen::Vector2d& p = calib.keypoints[pair.i][c.kp1];
    const Eigen::Vector2d& q = calib.keypoints[pair.j][c.kp2];
    if (!p.allFinite() || !q.allFinite()) continue;
    x1.push_back(Homogeneous(p));
    x2.push_back(Homogeneous(q));
  }
}

double Median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

PipelineResult RunPipeline(const MatchSet& match_set,
                           const PipelineConfig& config, std::uint64_t seed) {
  PipelineResult result;
  StageRunner stages(result.stages);
  const int n = static_cast<int>(match_set.images.size());
  std::vector<CameraModel> cameras;

  stages.Run("ingest.validate", [&](StageRecord& r) {
    const auto diagnostics = Validate(match_set);
    if (!diagnostics.empty()) {
      throw Error(diagnostics.front().code + ": " + diagnostics.front().message);
    }
    CheckConfig(config);
    cameras.resize(match_set.NumCameras());
    for (const Image& image : match_set.images) {
      CameraModel& c = cameras[image.camera_id];
      c.id = image.camera_id;
      c.width = image.width;
      c.height = image.height;
    }
    r.values = {{"images", std::to_string(n)},
                {"pairs", std::to_string(match_set.pairs.size())},
                {"cameras", std::to_string(cameras.size())}};
  });

  stages.Run("distortion", [&](StageRecord& r) {
    if (!config.estimate_distortion) {
      r.values.emplace_back("estimated", "off");
      return;
    }
    const DistortionSchedule schedule = ScheduleCameras(match_set, config);
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      cameras[c].alpha = schedule.alpha[c];
      r.values.emplace_back("alpha" + std::to_string(c), Num(schedule.alpha[c]));
    }
  });

  stages.Run("focal", [&](StageRecord& r) {
    const auto pairs = BuildFocalPairs(match_set, cameras);
    const FocalSchedule schedule = VoteFocalMulti(pairs, cameras, config);
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      cameras[c].focal = schedule.focal[c];
      r.values.emplace_back("fov" + std::to_string(c),
                            Num(cameras[c].FovDegrees()));
    }
  });

  CalibratedMatches calib;
  stages.Run("calibrate", [&](StageRecord& r) {
    calib = ApplyCalibration(match_set, cameras);
    const auto fitted = std::count_if(calib.pairs.begin(), calib.pairs.end(),
                                      [](const auto& p) { return p.fitted; });
    r.values.emplace_back("fitted", std::to_string(fitted));
  });

  RelPoseGraph graph;
  std::vector<int> edge_pair;  // calibrated pair index per edge
  stages.Run("rotation.decompose", [&](StageRecord& r) {
    std::vector<std::optional<RelPoseEdge>> slots(calib.pairs.size());
    ParallelFor(calib.pairs.size(), [&](std::size_t k) {
      const CalibratedPair& cp = calib.pairs[k];
      if (!cp.fitted) return;
      try {
        const RelativePose pose =
            cp.geometry == GeometryClass::kFundamental
                ? DecomposeEssential(cp.model, cp.x1, cp.x2)
                : DecomposeHomography(cp.model, cp.x1, cp.x2);
        RelPoseEdge e;
        e.i = cp.i;
        e.j = cp.j;
        e.rotation = pose.rotation;
        e.inliers = static_cast<int>(cp.correspondences.size());
        e.tie = pose.tie;
        slots[k] = e;
      } catch (const Error&) {
      }
    });
    graph.num_images = n;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (!slots[k]) continue;
      graph.edges.push_back(*slots[k]);
      edge_pair.push_back(static_cast<int>(k));
    }
    r.values.emplace_back("edges", std::to_string(graph.edges.size()));
  });

  FilterResult filtered;
  stages.Run("rotation.filter_pairs", [&](StageRecord& r) {
    filtered = FilterPairs(graph, config);
    r.values.emplace_back("edges", std::to_string(filtered.graph.edges.size()));
    r.values.emplace_back("threshold", std::to_string(filtered.thresholds.back()));
    const auto kept = std::count(filtered.graph.in_largest.begin(),
                                 filtered.graph.in_largest.end(), true);
    r.values.emplace_back("images", std::to_string(kept));
  });
  const std::vector<bool>& in_largest = filtered.graph.in_largest;

  std::vector<Rotation3> rotations;
  stages.Run("rotation.init", [&](StageRecord& r) {
    rotations = InitRotations(filtered.graph);
    r.values.emplace_back("loss", Num(RotationLoss(rotations, filtered.graph)));
  });

  stages.Run("rotation.refine", [&](StageRecord& r) {
    const RotationRefineResult refined =
        RefineRotations(rotations, filtered.graph, config);
    rotations = refined.rotations;
    r.values.emplace_back("loss", Num(RotationLoss(rotations, filtered.graph)));
    r.values.emplace_back("steps", std::to_string(refined.steps));
  });

  TrackSet tracks;
  MatchSet completed;
  stages.Run("tracks", [&](StageRecord& r) {
    // Tracks are built from matches consistent with each kept pair's fitted
    // geometry; swapped keypoints would otherwise merge unrelated tracks.
    std::map<std::pair<int, int>, int> calib_of;
    for (std::size_t k = 0; k < calib.pairs.size(); ++k) {
      calib_of[{calib.pairs[k].i, calib.pairs[k].j}] = static_cast<int>(k);
    }
    MatchSet kept;
    kept.images = match_set.images;
    std::size_t removed = 0;
    for (const RelPoseEdge& e : filtered.graph.edges) {
      const CalibratedPair& cp = calib.pairs[calib_of.at({e.i, e.j})];
      ImagePairMatches pair;
      pair.i = cp.i;
      pair.j = cp.j;
      pair.geometry = cp.geometry;
      std::vector<double> err(cp.correspondences.size());
      for (std::size_t m = 0; m < err.size(); ++m) {
        err[m] = cp.geometry == GeometryClass::kFundamental
                     ? EpipolarError(cp.model, cp.x1[m], cp.x2[m])
                     : TransferError(cp.model, cp.x1[m].head<2>(),
                                     cp.x2[m].head<2>());
      }
      const double cut = std::min(
          config.track_filter_threshold,
          config.track_filter_median_factor * Median(err));
      for (std::size_t m = 0; m < err.size(); ++m) {
        if (err[m] <= cut) {
          pair.correspondences.push_back(cp.correspondences[m]);
        } else {
          ++removed;
        }
      }
      pair.num_original = pair.correspondences.size();
      kept.pairs.push_back(std::move(pair));
    }
    tracks = BuildTracks(kept);
    completed = CompleteMatches(tracks, kept, config.max_completion_track_size);
    result.num_tracks = static_cast<int>(tracks.tracks.size());
    r.values = {{"tracks", std::to_string(tracks.tracks.size())},
                {"prefiltered", std::to_string(removed)},
                {"pairs", std::to_string(completed.pairs.size())}};
  });

  std::vector<DirectionEdge> directions;
  stages.Run("translation.relative", [&](StageRecord& r) {
    std::vector<std::optional<DirectionEdge>> slots(completed.pairs.size());
    ParallelFor(completed.pairs.size(), [&](std::size_t k) {
      const ImagePairMatches& pair = completed.pairs[k];
      if (!in_largest[pair.i] || !in_largest[pair.j]) return;
      std::vector<Eigen::Vector3d> x1, x2;
      PairPoints(calib, pair, x1, x2);
      if (static_cast<int>(x1.size()) < config.pair_inlier_threshold_min) return;
      const Eigen::Matrix3d& rj = rotations[pair.j].matrix();
      const Eigen::Matrix3d rel = rj * rotations[pair.i].matrix().transpose();
      const RelTranslationResult t = ReestimateRelative(rel, x1, x2, config);
      if (t.status != RelTranslationStatus::kOk) return;
      slots[k] = DirectionEdge{pair.i, pair.j, WorldDirection(rj, t.t)};
    });
    std::size_t rejected = 0;
    for (const auto& s : slots) {
      if (s) {
        directions.push_back(*s);
      } else {
        ++rejected;
      }
    }
    if (directions.empty()) throw Error("no usable translation directions");
    r.values = {{"edges", std::to_string(directions.size())},
                {"rejected", std::to_string(rejected)}};
  });

  PoseState poses(n);
  stages.Run("translation.global", [&](StageRecord& r) {
    // Keep the largest connected component of the direction graph.
    UnionFind uf(n);
    for (const auto& d : directions) uf.Union(d.i, d.j);
    std::map<std::size_t, int> sizes;
    std::vector<bool> touched(n, false);
    for (const auto& d : directions) touched[d.i] = touched[d.j] = true;
    for (int k = 0; k < n; ++k) {
      if (touched[k]) ++sizes[uf.Find(k)];
    }
    std::size_t root = 0;
    int best = 0;
    for (const auto& [label, size] : sizes) {
      if (size > best) {
        best = size;
        root = label;
      }
    }
    if (best < 3) throw Error("direction graph has fewer than 3 images");
    std::erase_if(directions, [&](const DirectionEdge& d) {
      return uf.Find(d.i) != root;
    });

    const MultiAlignResult aligned = MultiInitAlign(n, directions, config, seed);
    std::vector<Eigen::Vector3d> centers = aligned.result.centers;
    Canonicalize(centers, aligned.result.active);
    int registered = 0;
    for (int k = 0; k < n; ++k) {
      poses[k].rotation = rotations[k];
      poses[k].center = centers[k];
      poses[k].registered = aligned.result.active[k];
      registered += poses[k].registered;
    }
    // Report (not repair) near-collinear camera centers.
    Eigen::MatrixXd pts(registered, 3);
    for (int k = 0, row = 0; k < n; ++k) {
      if (poses[k].registered) pts.row(row++) = centers[k].transpose();
    }
    const Eigen::VectorXd sv =
        Eigen::JacobiSVD<Eigen::MatrixXd>(pts).singularValues();
    const bool collinear = sv.size() < 2 || sv(1) < 1e-3 * sv(0);
    r.values = {{"loss", Num(aligned.result.final_loss)},
                {"registered", std::to_string(registered)},
                {"collinear", collinear ? "yes" : "no"}};
  });

  stages.Run("epipolar", [&](StageRecord& r) {
    if (!config.epipolar_adjustment) {
      r.values.emplace_back("enabled", "no");
      return;
    }
    EpipolarProblem problem;
    problem.init_rotations.resize(n);
    std::vector<Eigen::Vector3d> centers(n);
    for (int k = 0; k < n; ++k) {
      problem.init_rotations[k] = poses[k].rotation;
      centers[k] = poses[k].center;
      problem.camera_of_image.push_back(match_set.images[k].camera_id);
    }
    problem.num_cameras = static_cast<int>(cameras.size());
    problem.refine_focal = config.focal_refine;
    for (const ImagePairMatches& pair : completed.pairs) {
      if (!poses[pair.i].registered || !poses[pair.j].registered) continue;
      EpipolarPair ep;
      ep.i = pair.i;
      ep.j = pair.j;
      PairPoints(calib, pair, ep.x1, ep.x2);
      if (static_cast<int>(ep.x1.size()) < config.pair_inlier_threshold_min) {
        continue;
      }
      ep.active.assign(ep.x1.size(), true);
      problem.pairs.push_back(std::move(ep));
    }
    const EpipolarProblem snapshot = problem;
    const Eigen::VectorXd init = InitialParams(snapshot, centers);
    const double before = EpipolarLossDirect(snapshot, init);
    const IrlsResult refined = IrlsRefine(std::move(problem), centers, config);
    for (int k = 0; k < n; ++k) {
      if (!poses[k].registered) continue;
      poses[k].rotation = refined.rotations[k];
      poses[k].center = refined.centers[k];
      poses[k].registered = refined.registered[k];
    }
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      cameras[c].focal *= refined.focal_scale[c];
    }
    result.epipolar_seconds_per_step = refined.seconds_per_step;
    r.values.emplace_back("pairs", std::to_string(snapshot.pairs.size()));
    r.values.emplace_back("pairs_kept", std::to_string(refined.pairs_kept));
    r.values.emplace_back("loss_before", Num(before));
    for (std::size_t k = 0; k < refined.direct_loss.size(); ++k) {
      r.values.emplace_back("loss_round" + std::to_string(k),
                            Num(refined.direct_loss[k]));
    }
    r.values.emplace_back("seconds_per_step", Num(refined.seconds_per_step));
    r.values.emplace_back("rollbacks", std::to_string(refined.rollbacks));
  });

  stages.Run("reconstruct", [&](StageRecord& r) {
    result.model.points =
        BuildPoints(tracks, match_set, cameras, poses, config, seed);
    std::vector<double> errors;
    for (const auto& p : result.model.points) errors.push_back(p.error);
    r.values = {{"points", std::to_string(result.model.points.size())},
                {"tracks", std::to_string(tracks.tracks.size())},
                {"median_error_px", Num(Median(errors))}};
  });

  result.model.cameras = cameras;
  result.model.images = match_set.images;
  result.model.poses = poses;
  result.model.tracks = tracks;
  return result;
}

std::string FormatReport(const std::vector<StageRecord>& stages) {
  std::ostringstream out;
  double total = 0.0;
  for (const auto& s : stages) {
    out << s.name << " seconds=" << Num(s.seconds);
    for (const auto& [k, v] : s.values) out << ' ' << k << '=' << v;
    out << '\n';
    total += s.seconds;
  }
  out << "total seconds=" << Num(total) << '\n';
  return out.str();
}

}  // namespace fastmap
