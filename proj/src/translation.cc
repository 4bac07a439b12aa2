#include "fastmap/translation.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastmap/error.h"
#include "fastmap/geometry.h"
#include "fastmap/optim.h"
#include "fastmap/twoview.h"

namespace fastmap {

std::vector<Eigen::Vector3d> FibonacciSphere(int n) {
  std::vector<Eigen::Vector3d> out(n);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < n; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * k;
    out[k] = Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

namespace {

// x2ᵀ [t]x R x1 = t · ((R x1) x x2); the √2 is ‖[t]x R‖_F for unit t.
std::vector<Eigen::Vector3d> TripleProductTerms(
    const Eigen::Matrix3d& rel_rotation, std::span<const Eigen::Vector3d> x1,
    std::span<const Eigen::Vector3d> x2) {
  std::vector<Eigen::Vector3d> c(x1.size());
  for (std::size_t k = 0; k < x1.size(); ++k) {
    c[k] = (rel_rotation * x1[k]).cross(x2[k]) / std::sqrt(2.0);
  }
  return c;
}

double MeanAbsDot(const std::vector<Eigen::Vector3d>& terms,
                  const Eigen::Vector3d& t) {
  double sum = 0.0;
  for (const auto& c : terms) sum += std::abs(c.dot(t));
  return sum / static_cast<double>(terms.size());
}

}  // namespace

double MeanTranslationError(const Eigen::Matrix3d& rel_rotation,
                            const Eigen::Vector3d& t,
                            std::span<const Eigen::Vector3d> x1,
                            std::span<const Eigen::Vector3d> x2) {
  if (x1.empty()) return 0.0;
  const Eigen::Matrix3d e = EssentialFromPose<double>(rel_rotation, t);
  double sum = 0.0;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    sum += EpipolarError(e, x1[k], x2[k]);
  }
  return sum / static_cast<double>(x1.size());
}

RelTranslationResult ReestimateRelative(const Eigen::Matrix3d& rel_rotation,
                                        std::span<const Eigen::Vector3d> x1,
                                        std::span<const Eigen::Vector3d> x2,
                                        const PipelineConfig& config) {
  RelTranslationResult result;
  if (x1.empty()) return result;
  const auto terms = TripleProductTerms(rel_rotation, x1, x2);

  const auto lattice = FibonacciSphere(config.sphere_samples);
  std::vector<double> errors(lattice.size());
  for (std::size_t k = 0; k < lattice.size(); ++k) {
    errors[k] = MeanAbsDot(terms, lattice[k]);
  }
  const auto best_it = std::min_element(errors.begin(), errors.end());
  Eigen::Vector3d best = lattice[best_it - errors.begin()];
  double best_error = *best_it;
  std::vector<double> sorted = errors;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  result.min_error = best_error;
  result.median_error = sorted[sorted.size() / 2];
  // Rounding-level errors everywhere mean the data carry no translation.
  if (result.median_error <= 1e-12 ||
      result.min_error / result.median_error > 0.9) {
    result.status = RelTranslationStatus::kFlat;
    return result;
  }

  // Tangent-plane grids around the current best, shrinking each level.
  double radius = std::sqrt(4.0 * M_PI / config.sphere_samples);
  const int g = config.sphere_refine_grid;
  for (int level = 0; level < config.sphere_refine_levels; ++level) {
    const Eigen::Vector3d center = best;
    Eigen::Vector3d u = center.unitOrthogonal();
    Eigen::Vector3d v = center.cross(u);
    const double step = 2.0 * radius / (g - 1);
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        const Eigen::Vector3d cand =
            (center + (-radius + a * step) * u + (-radius + b * step) * v)
                .normalized();
        const double err = MeanAbsDot(terms, cand);
        if (err < best_error) {
          best_error = err;
          best = cand;
        }
      }
    }
    radius = step;
  }

  int plus = 0, minus = 0;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    plus += PositiveDepth(rel_rotation, best, x1[k], x2[k]);
    minus += PositiveDepth(rel_rotation, -best, x1[k], x2[k]);
  }
  if (plus == minus) {
    result.status = RelTranslationStatus::kCheiralityTie;
    return result;
  }
  result.t = plus > minus ? best : Eigen::Vector3d(-best);
  result.status = RelTranslationStatus::kOk;
  return result;
}

namespace {

constexpr double kCenterEps = 1e-8;

template <typename T>
T EdgeResidual(const Vec3<T>& oi, const Vec3<T>& oj,
               const Eigen::Vector3d& direction) {
  using std::abs;
  using std::sqrt;
  const Vec3<T> d = oj - oi;
  // max rather than a sum keeps the loss exactly scale invariant
  const T sq = d.squaredNorm();
  const T norm = sq < T(kCenterEps * kCenterEps) ? T(sq * T(0) + T(kCenterEps))
                                                 : T(sqrt(sq));
  const Vec3<T> u = d / norm;
  return abs(u(0) - T(direction(0))) + abs(u(1) - T(direction(1))) +
         abs(u(2) - T(direction(2)));
}

}  // namespace

double TranslationObjective(std::span<const DirectionEdge> edges,
                            const Eigen::VectorXd& centers,
                            Eigen::VectorXd* grad) {
  using AD = AutoDiff<6>;
  if (grad != nullptr) grad->setZero(centers.size());
  if (edges.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(edges.size());
  double loss = 0.0;
  for (const auto& e : edges) {
    const Eigen::Vector3d oi = centers.segment<3>(3 * e.i);
    const Eigen::Vector3d oj = centers.segment<3>(3 * e.j);
    if (grad == nullptr) {
      loss += EdgeResidual<double>(oi, oj, e.direction);
      continue;
    }
    const AD r = EdgeResidual<AD>(MakeVariables<6, 3>(oi, 0),
                                  MakeVariables<6, 3>(oj, 3), e.direction);
    loss += r.value();
    grad->segment<3>(3 * e.i) += scale * r.derivatives().head<3>();
    grad->segment<3>(3 * e.j) += scale * r.derivatives().tail<3>();
  }
  return loss * scale;
}

std::vector<double> PerImageResidual(
    std::span<const DirectionEdge> edges,
    const std::vector<Eigen::Vector3d>& centers) {
  std::vector<double> sum(centers.size(), 0.0);
  std::vector<int> count(centers.size(), 0);
  for (const auto& e : edges) {
    const double r = EdgeResidual<double>(centers[e.i], centers[e.j],
                                          e.direction);
    sum[e.i] += r;
    sum[e.j] += r;
    ++count[e.i];
    ++count[e.j];
  }
  for (std::size_t k = 0; k < sum.size(); ++k) {
    if (count[k] > 0) sum[k] /= count[k];
  }
  return sum;
}

void Canonicalize(std::vector<Eigen::Vector3d>& centers,
                  const std::vector<bool>& active) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  int n = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (!active[k]) continue;
    centroid += centers[k];
    ++n;
  }
  if (n == 0) return;
  centroid /= n;
  double mean_norm = 0.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (active[k]) mean_norm += (centers[k] - centroid).norm();
  }
  mean_norm /= n;
  if (mean_norm <= 0.0) mean_norm = 1.0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    if (active[k]) centers[k] = (centers[k] - centroid) / mean_norm;
  }
}

AlignResult AlignCenters(int num_images, std::span<const DirectionEdge> edges,
                         const PipelineConfig& config, std::uint64_t seed,
                         const std::vector<Eigen::Vector3d>* init) {
  AlignResult result;
  result.active.assign(num_images, false);
  for (const auto& e : edges) {
    result.active[e.i] = true;
    result.active[e.j] = true;
  }
  Eigen::VectorXd params = Eigen::VectorXd::Zero(3 * num_images);
  if (init != nullptr) {
    for (int k = 0; k < num_images; ++k) params.segment<3>(3 * k) = (*init)[k];
  } else {
    Rng rng(seed);
    for (int k = 0; k < num_images; ++k) {
      for (int d = 0; d < 3; ++d) params(3 * k + d) = rng.Normal();
    }
  }

  Adam adam(params.size(), {config.translation_lr, config.adam_beta1,
                            config.adam_beta2, config.adam_eps});
  Eigen::VectorXd grad;
  Eigen::VectorXd best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  constexpr int kWindow = 100;
  for (int step = 0; step < config.translation_steps; ++step) {
    const double loss = TranslationObjective(edges, params, &grad);
    if (!std::isfinite(loss)) throw Error("translation: non-finite loss");
    result.loss_history.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best = params;
    }
    const std::size_t h = result.loss_history.size();
    if (h > kWindow &&
        loss >= result.loss_history[h - 1 - kWindow] * (1.0 - 1e-9)) {
      break;  // L1 floor: Adam only oscillates from here
    }
    adam.Step(params, grad);
  }
  params = best;
  result.final_loss = TranslationObjective(edges, params, nullptr);
  result.centers.resize(num_images);
  for (int k = 0; k < num_images; ++k) {
    result.centers[k] = params.segment<3>(3 * k);
  }
  return result;
}

MultiAlignResult MultiInitAlign(int num_images,
                                std::span<const DirectionEdge> edges,
                                const PipelineConfig& config,
                                std::uint64_t seed) {
  MultiAlignResult out;
  if (config.translation_inits == 1) {
    out.result = AlignCenters(num_images, edges, config, seed);
    out.runs.push_back(out.result);
    return out;
  }
  Rng seeds(seed);
  for (int r = 0; r < config.translation_inits; ++r) {
    AlignResult run = AlignCenters(num_images, edges, config, seeds.Next());
    Canonicalize(run.centers, run.active);
    out.runs.push_back(std::move(run));
  }
  std::vector<std::vector<double>> residual;
  for (const auto& run : out.runs) {
    residual.push_back(PerImageResidual(edges, run.centers));
  }
  std::vector<Eigen::Vector3d> merged(num_images, Eigen::Vector3d::Zero());
  for (int k = 0; k < num_images; ++k) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < out.runs.size(); ++r) {
      if (residual[r][k] < residual[best][k]) best = r;
    }
    merged[k] = out.runs[best].centers[k];
  }
  out.result = AlignCenters(num_images, edges, config, seed, &merged);
  return out;
}

}  // namespace fastmap
