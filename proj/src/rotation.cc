#include "fastmap/rotation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "fastmap/error.h"
#include "fastmap/geometry.h"
#include "fastmap/optim.h"
#include "fastmap/union_find.h"

namespace fastmap {

std::vector<int> ComponentLabels(int num_images,
                                 std::span<const RelPoseEdge> edges) {
  UnionFind uf(num_images);
  for (const auto& e : edges) uf.Union(e.i, e.j);
  std::vector<int> labels(num_images);
  for (int k = 0; k < num_images; ++k) labels[k] = static_cast<int>(uf.Find(k));
  return labels;
}

namespace {

// Members of the largest component (ties: smallest label).
std::vector<bool> LargestComponent(int num_images,
                                   std::span<const RelPoseEdge> edges,
                                   int* num_components) {
  const std::vector<int> labels = ComponentLabels(num_images, edges);
  std::map<int, int> sizes;
  for (int label : labels) ++sizes[label];
  *num_components = static_cast<int>(sizes.size());
  int best_label = -1;
  int best_size = 0;
  for (const auto& [label, size] : sizes) {
    if (size > best_size) {
      best_label = label;
      best_size = size;
    }
  }
  std::vector<bool> members(num_images);
  for (int k = 0; k < num_images; ++k) members[k] = labels[k] == best_label;
  return members;
}

}  // namespace

FilterResult FilterPairs(const RelPoseGraph& graph,
                         const PipelineConfig& config) {
  if (graph.num_images == 0 || graph.edges.empty()) {
    throw Error("scene disconnected: empty pair graph");
  }
  FilterResult result;
  int threshold = config.pair_inlier_threshold_start;
  std::vector<RelPoseEdge> kept;
  int num_components = 0;
  while (true) {
    result.thresholds.push_back(threshold);
    kept.clear();
    for (const auto& e : graph.edges) {
      if (e.inliers >= threshold) kept.push_back(e);
    }
    LargestComponent(graph.num_images, kept, &num_components);
    if (num_components == 1 || threshold <= config.pair_inlier_threshold_min) {
      break;
    }
    threshold = std::max(threshold / 2, config.pair_inlier_threshold_min);
  }
  std::vector<bool> members =
      LargestComponent(graph.num_images, kept, &num_components);
  const auto size = std::count(members.begin(), members.end(), true);
  if (size < 3) {
    throw Error("scene disconnected: largest component has " +
                std::to_string(size) + " images");
  }
  result.graph.num_images = graph.num_images;
  result.graph.in_largest = members;
  for (const auto& e : kept) {
    if (members[e.i] && members[e.j]) result.graph.edges.push_back(e);
  }
  return result;
}

std::vector<Rotation3> InitRotations(const RelPoseGraph& graph) {
  const int n = graph.num_images;
  std::vector<int> index(n, -1);
  int m = 0;
  for (int k = 0; k < n; ++k) {
    const bool member = graph.in_largest.empty() || graph.in_largest[k];
    if (member) index[k] = m++;
  }
  if (m == 0 || graph.edges.empty()) throw Error("rotation init: empty graph");

  // AᵀA of the stacked residuals Y_j - R^{i->j} Y_i, scaled by 1/|P|.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(3 * m, 3 * m);
  for (const auto& e : graph.edges) {
    const int a = index[e.i];
    const int b = index[e.j];
    if (a < 0 || b < 0) continue;
    const Eigen::Matrix3d& r = e.rotation.matrix();
    ata.block<3, 3>(3 * a, 3 * a) += Eigen::Matrix3d::Identity();
    ata.block<3, 3>(3 * b, 3 * b) += Eigen::Matrix3d::Identity();
    ata.block<3, 3>(3 * b, 3 * a) -= r;
    ata.block<3, 3>(3 * a, 3 * b) -= r.transpose();
  }
  ata /= static_cast<double>(graph.edges.size());

  auto smallest = [](const Eigen::MatrixXd& mat) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mat);
    if (eig.info() != Eigen::Success) {
      throw Error("rotation init: eigen decomposition failed");
    }
    return Eigen::VectorXd(eig.eigenvectors().col(0));
  };

  const Eigen::VectorXd first = smallest(ata);
  std::vector<Eigen::Vector3d> c1(m);
  Eigen::MatrixXd ortho = Eigen::MatrixXd::Zero(3 * m, 3 * m);
  for (int k = 0; k < m; ++k) {
    c1[k] = first.segment<3>(3 * k).normalized();
    ortho.block<3, 3>(3 * k, 3 * k) = c1[k] * c1[k].transpose();
  }
  const Eigen::VectorXd second =
      smallest(ata + ortho / static_cast<double>(m));

  std::vector<Rotation3> out(n);
  for (int k = 0; k < n; ++k) {
    if (index[k] < 0) continue;
    const Eigen::Vector3d& a = c1[index[k]];
    Eigen::Vector3d b = second.segment<3>(3 * index[k]);
    b = (b - a.dot(b) * a).normalized();
    Eigen::Matrix3d r;
    r << a, b, a.cross(b);
    out[k] = Rotation3::Project(r);
  }
  return out;
}

double RotationLoss(std::span<const Rotation3> rotations,
                    const RelPoseGraph& graph) {
  if (graph.edges.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& e : graph.edges) {
    sum += GeodesicDistance(rotations[e.j].matrix(),
                            e.rotation.matrix() * rotations[e.i].matrix());
  }
  return sum / static_cast<double>(graph.edges.size());
}

double RotationObjective(std::span<const Rotation3> init,
                         const RelPoseGraph& graph,
                         const Eigen::VectorXd& params,
                         Eigen::VectorXd* grad) {
  using AD = AutoDiff<12>;
  if (grad != nullptr) grad->setZero(params.size());
  if (graph.edges.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(graph.edges.size());
  double loss = 0.0;
  for (const auto& e : graph.edges) {
    const Eigen::Matrix<double, 6, 1> pi = params.segment<6>(6 * e.i);
    const Eigen::Matrix<double, 6, 1> pj = params.segment<6>(6 * e.j);
    if (grad == nullptr) {
      const Eigen::Matrix3d ri = init[e.i].matrix() * Rot6dToMatrix(pi);
      const Eigen::Matrix3d rj = init[e.j].matrix() * Rot6dToMatrix(pj);
      loss += SmoothGeodesicDistance<double>(rj, e.rotation.matrix() * ri);
      continue;
    }
    const auto vi = MakeVariables<12, 6>(pi, 0);
    const auto vj = MakeVariables<12, 6>(pj, 6);
    const Mat3<AD> ri = init[e.i].matrix().cast<AD>() * Rot6dToMatrix(vi);
    const Mat3<AD> rj = init[e.j].matrix().cast<AD>() * Rot6dToMatrix(vj);
    const Mat3<AD> rel = e.rotation.matrix().cast<AD>();
    const AD d = SmoothGeodesicDistance<AD>(rj, rel * ri);
    loss += d.value();
    grad->segment<6>(6 * e.i) += scale * d.derivatives().head<6>();
    grad->segment<6>(6 * e.j) += scale * d.derivatives().tail<6>();
  }
  return loss * scale;
}

std::vector<Rotation3> RotationsFromParams(std::span<const Rotation3> init,
                                           const Eigen::VectorXd& params) {
  std::vector<Rotation3> out(init.size());
  for (std::size_t k = 0; k < init.size(); ++k) {
    const Eigen::Matrix<double, 6, 1> p = params.segment<6>(6 * k);
    out[k] = Rotation3::Project(init[k].matrix() * Rot6dToMatrix(p));
  }
  return out;
}

RotationRefineResult RefineRotations(std::span<const Rotation3> init,
                                     const RelPoseGraph& graph,
                                     const PipelineConfig& config) {
  const int n = static_cast<int>(init.size());
  Eigen::VectorXd params(6 * n);
  for (int k = 0; k < n; ++k) params.segment<6>(6 * k) = IdentityRot6d();

  Adam adam(params.size(), {config.rotation_lr, config.adam_beta1,
                            config.adam_beta2, config.adam_eps});
  RotationRefineResult result;
  Eigen::VectorXd grad;
  Eigen::VectorXd best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  constexpr int kWindow = 100;
  for (int step = 0; step < config.rotation_steps; ++step) {
    const double loss = RotationObjective(init, graph, params, &grad);
    if (!std::isfinite(loss)) throw Error("rotation refine: non-finite loss");
    result.loss_history.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
    const int h = static_cast<int>(result.loss_history.size());
    if (h > kWindow) {
      // Near the kinked minimum Adam oscillates at the step size; a window
      // without relative progress counts as converged.
      const double before = result.loss_history[h - 1 - kWindow];
      if (loss >= before * (1.0 - 1e-9)) {
        result.converged = true;
        break;
      }
    }
    adam.Step(params, grad);
    ++result.steps;
  }
  params = best;
  result.rotations = RotationsFromParams(init, params);
  return result;
}

}  // namespace fastmap
