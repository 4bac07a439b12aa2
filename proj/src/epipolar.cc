#include "fastmap/epipolar.h"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fastmap/error.h"
#include "fastmap/geometry.h"
#include "fastmap/optim.h"
#include "fastmap/parallel.h"

namespace fastmap {

Matrix9d PrecomputeWeights(std::span<const Eigen::Vector3d> x1,
                           std::span<const Eigen::Vector3d> x2,
                           std::span<const double> weights,
                           const std::vector<bool>* active) {
  Matrix9d w = Matrix9d::Zero();
  for (std::size_t m = 0; m < x1.size(); ++m) {
    if (active != nullptr && !(*active)[m]) continue;
    const Vector9d v =
        FlattenRowMajor<double>(x2[m] * x1[m].transpose());
    const double omega = weights.empty() ? 1.0 : weights[m];
    w.selfadjointView<Eigen::Lower>().rankUpdate(v, omega);
  }
  return w.selfadjointView<Eigen::Lower>();
}

int EpipolarPair::NumActive() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

int EpipolarProblem::TotalActive() const {
  int z = 0;
  for (const auto& p : pairs) z += p.NumActive();
  return z;
}

Eigen::VectorXd InitialParams(const EpipolarProblem& problem,
                              std::span<const Eigen::Vector3d> centers) {
  const int n = problem.NumImages();
  Eigen::VectorXd params = Eigen::VectorXd::Zero(problem.NumParams());
  for (int k = 0; k < n; ++k) {
    params.segment<6>(6 * k) = IdentityRot6d();
    params.segment<3>(6 * n + 3 * k) = centers[k];
  }
  return params;
}

namespace {

constexpr int kVars = 20;
using AD = AutoDiff<kVars>;

template <typename T>
Mat3<T> PairMatrixT(const Eigen::Matrix3d& init_i,
                    const Eigen::Matrix3d& init_j,
                    const Eigen::Matrix<T, 6, 1>& ti,
                    const Eigen::Matrix<T, 6, 1>& tj, const Vec3<T>& oi,
                    const Vec3<T>& oj, const T& si, const T& sj) {
  using std::exp;
  using std::sqrt;
  const Mat3<T> ri = init_i.cast<T>() * Rot6dToMatrix(ti);
  const Mat3<T> rj = init_j.cast<T>() * Rot6dToMatrix(tj);
  Vec3<T> t = rj * (oi - oj);
  t = t / (sqrt(t.squaredNorm()) + T(1e-12));
  Mat3<T> g = Skew(t) * rj * ri.transpose();
  const T di = exp(-si);
  const T dj = exp(-sj);
  g.row(0) *= dj;
  g.row(1) *= dj;
  g.col(0) *= di;
  g.col(1) *= di;
  return g / sqrt(g.squaredNorm());
}

struct PairSlots {
  int rot_i, rot_j, center_i, center_j, focal_i, focal_j;
};

PairSlots Slots(const EpipolarProblem& problem, const EpipolarPair& pair) {
  const int n = problem.NumImages();
  return {6 * pair.i,
          6 * pair.j,
          6 * n + 3 * pair.i,
          6 * n + 3 * pair.j,
          9 * n + problem.camera_of_image[pair.i],
          9 * n + problem.camera_of_image[pair.j]};
}

double FocalParam(const EpipolarProblem& problem,
                  const Eigen::VectorXd& params, int slot) {
  return problem.refine_focal ? params(slot) : 0.0;
}

}  // namespace

Eigen::Matrix3d PairMatrix(const EpipolarProblem& problem,
                           const EpipolarPair& pair,
                           const Eigen::VectorXd& params) {
  const PairSlots s = Slots(problem, pair);
  return PairMatrixT<double>(
      problem.init_rotations[pair.i].matrix(),
      problem.init_rotations[pair.j].matrix(), params.segment<6>(s.rot_i),
      params.segment<6>(s.rot_j), params.segment<3>(s.center_i),
      params.segment<3>(s.center_j), FocalParam(problem, params, s.focal_i),
      FocalParam(problem, params, s.focal_j));
}

double EpipolarLossForm(const EpipolarProblem& problem,
                        const Eigen::VectorXd& params, Eigen::VectorXd* grad,
                        int num_active) {
  const int z = num_active >= 0 ? num_active : problem.TotalActive();
  if (z == 0) throw Error("epipolar: no active point pairs");
  const std::size_t num_pairs = problem.pairs.size();
  std::vector<double> values(num_pairs, 0.0);
  std::vector<Eigen::Matrix<double, kVars, 1>> derivs(
      grad != nullptr ? num_pairs : 0);

  ParallelFor(num_pairs, [&](std::size_t n) {
    const EpipolarPair& pair = problem.pairs[n];
    const Eigen::Matrix3d& init_i = problem.init_rotations[pair.i].matrix();
    const Eigen::Matrix3d& init_j = problem.init_rotations[pair.j].matrix();
    const PairSlots s = Slots(problem, pair);
    if (grad == nullptr) {
      const Vector9d e = FlattenRowMajor<double>(PairMatrix(problem, pair, params));
      values[n] = e.dot(pair.weight * e);
      return;
    }
    const Eigen::Matrix<double, 6, 1> ti = params.segment<6>(s.rot_i);
    const Eigen::Matrix<double, 6, 1> tj = params.segment<6>(s.rot_j);
    const Eigen::Vector3d oi = params.segment<3>(s.center_i);
    const Eigen::Vector3d oj = params.segment<3>(s.center_j);
    const Mat3<AD> g = PairMatrixT<AD>(
        init_i, init_j, MakeVariables<kVars, 6>(ti, 0),
        MakeVariables<kVars, 6>(tj, 6), MakeVariables<kVars, 3>(oi, 12),
        MakeVariables<kVars, 3>(oj, 15),
        AD(FocalParam(problem, params, s.focal_i), kVars, 18),
        AD(FocalParam(problem, params, s.focal_j), kVars, 19));
    const Eigen::Matrix<AD, 9, 1> e = FlattenRowMajor<AD>(g);
    // eᵀWe and its gradient 2 Jᵀ W e without forming AD products of W.
    Vector9d ev;
    Eigen::Matrix<double, 9, kVars> jac;
    for (int k = 0; k < 9; ++k) {
      ev(k) = e(k).value();
      jac.row(k) = e(k).derivatives().transpose();
    }
    const Vector9d we = pair.weight * ev;
    values[n] = ev.dot(we);
    derivs[n] = 2.0 * jac.transpose() * we;
  });

  const double scale = 1.0 / static_cast<double>(z);
  double loss = 0.0;
  for (double v : values) loss += v;
  if (grad != nullptr) {
    grad->setZero(params.size());
    for (std::size_t n = 0; n < num_pairs; ++n) {
      const PairSlots s = Slots(problem, problem.pairs[n]);
      const auto& d = derivs[n];
      grad->segment<6>(s.rot_i) += scale * d.segment<6>(0);
      grad->segment<6>(s.rot_j) += scale * d.segment<6>(6);
      grad->segment<3>(s.center_i) += scale * d.segment<3>(12);
      grad->segment<3>(s.center_j) += scale * d.segment<3>(15);
      if (problem.refine_focal) {
        (*grad)(s.focal_i) += scale * d(18);
        (*grad)(s.focal_j) += scale * d(19);
      }
    }
  }
  return loss * scale;
}

std::vector<double> PairResiduals(const EpipolarProblem& problem,
                                  const EpipolarPair& pair,
                                  const Eigen::VectorXd& params) {
  const Eigen::Matrix3d g = PairMatrix(problem, pair, params);
  std::vector<double> out(pair.x1.size());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m] = std::abs(pair.x2[m].dot(g * pair.x1[m]));
  }
  return out;
}

double EpipolarLossDirect(const EpipolarProblem& problem,
                          const Eigen::VectorXd& params) {
  const int z = problem.TotalActive();
  if (z == 0) throw Error("epipolar: no active point pairs");
  std::vector<double> sums(problem.pairs.size(), 0.0);
  ParallelFor(problem.pairs.size(), [&](std::size_t n) {
    const EpipolarPair& pair = problem.pairs[n];
    const auto r = PairResiduals(problem, pair, params);
    for (std::size_t m = 0; m < r.size(); ++m) {
      if (pair.active[m]) sums[n] += r[m];
    }
  });
  double total = 0.0;
  for (double s : sums) total += s;
  return total / z;
}

void Reweight(EpipolarProblem& problem, const Eigen::VectorXd& params,
              double floor) {
  ParallelFor(problem.pairs.size(), [&](std::size_t n) {
    EpipolarPair& pair = problem.pairs[n];
    std::vector<double> w = PairResiduals(problem, pair, params);
    for (double& v : w) v = 1.0 / std::max(v, floor);
    pair.weight = PrecomputeWeights(pair.x1, pair.x2, w, &pair.active);
  });
}

IrlsResult IrlsRefine(EpipolarProblem problem,
                      std::span<const Eigen::Vector3d> centers,
                      const PipelineConfig& config) {
  const int n = problem.NumImages();
  Eigen::VectorXd params = InitialParams(problem, centers);
  IrlsResult result;
  Eigen::VectorXd grad;
  double step_seconds = 0.0;

  for (int round = 0; round < config.prune_rounds; ++round) {
    const double frac =
        config.prune_rounds > 1
            ? static_cast<double>(round) / (config.prune_rounds - 1)
            : 0.0;
    const double threshold =
        config.prune_threshold_start +
        frac * (config.prune_threshold_end - config.prune_threshold_start);
    result.thresholds.push_back(threshold);

    ParallelFor(problem.pairs.size(), [&](std::size_t k) {
      EpipolarPair& pair = problem.pairs[k];
      const auto r = PairResiduals(problem, pair, params);
      for (std::size_t m = 0; m < r.size(); ++m) {
        if (r[m] > threshold) pair.active[m] = false;
      }
    });
    std::erase_if(problem.pairs,
                  [](const EpipolarPair& p) { return p.NumActive() == 0; });
    if (problem.pairs.empty()) throw Error("epipolar: every pair pruned");

    // A round that worsens the direct loss on its own active set is undone.
    const int z = problem.TotalActive();
    const Eigen::VectorXd saved = params;
    const double before = EpipolarLossDirect(problem, params);
    Adam adam(params.size(),
              {config.epipolar_lr / std::pow(config.lr_decay, round),
               config.adam_beta1, config.adam_beta2, config.adam_eps});
    for (int it = 0; it < config.irls_iters_between_prunes; ++it) {
      Reweight(problem, params, config.irls_residual_floor);
      const auto start = std::chrono::steady_clock::now();
      for (int step = 0; step < config.epipolar_steps_per_iter; ++step) {
        const double loss = EpipolarLossForm(problem, params, &grad, z);
        if (!std::isfinite(loss)) throw Error("epipolar: non-finite loss");
        adam.Step(params, grad);
        ++result.steps;
      }
      step_seconds += std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
    }
    double after = EpipolarLossDirect(problem, params);
    if (after > 1.01 * before) {
      params = saved;
      after = before;
      ++result.rollbacks;
    }
    result.direct_loss.push_back(after);
  }

  result.pairs_kept = problem.pairs.size();
  result.registered.assign(n, false);
  for (const auto& p : problem.pairs) {
    result.registered[p.i] = true;
    result.registered[p.j] = true;
  }
  result.rotations.resize(n);
  result.centers.resize(n);
  for (int k = 0; k < n; ++k) {
    const Eigen::Matrix<double, 6, 1> theta = params.segment<6>(6 * k);
    result.rotations[k] = Rotation3::Project(
        problem.init_rotations[k].matrix() * Rot6dToMatrix(theta));
    result.centers[k] = params.segment<3>(6 * n + 3 * k);
  }
  result.focal_scale.assign(problem.num_cameras, 1.0);
  if (problem.refine_focal) {
    for (int c = 0; c < problem.num_cameras; ++c) {
      result.focal_scale[c] = std::exp(params(9 * n + c));
    }
  }
  if (result.steps > 0) result.seconds_per_step = step_seconds / result.steps;
  return result;
}

}  // namespace fastmap
