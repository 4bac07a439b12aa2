#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>
#include <unsupported/Eigen/AutoDiff>

namespace fastmap {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector. Owns the moment
// estimates; the caller owns the parameters.
class Adam {
 public:
  Adam(Eigen::Index size, const AdamOptions& options);

  // Throws Error on non-finite gradients.
  void Step(Eigen::Ref<Eigen::VectorXd> params,
            const Eigen::Ref<const Eigen::VectorXd>& grad);

  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  int steps() const { return step_; }

 private:
  AdamOptions options_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  int step_ = 0;
};

// SplitMix64. Identical streams on every platform for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t Next();
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t Index(std::uint64_t n) { return Next() % n; }
  double Normal();

 private:
  std::uint64_t state_;
};

// Max componentwise relative discrepancy between `grad` and central
// differences of `f` at `theta`.
double FdCheck(const std::function<double(const Eigen::VectorXd&)>& f,
               const Eigen::VectorXd& grad, const Eigen::VectorXd& theta,
               double h = 1e-6);

template <int N>
using AutoDiff = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;

// Seeds a fixed-size vector of autodiff variables with unit derivatives at
// offsets [first, first + size).
template <int N, int M>
Eigen::Matrix<AutoDiff<N>, M, 1> MakeVariables(
    const Eigen::Matrix<double, M, 1>& values, int first) {
  Eigen::Matrix<AutoDiff<N>, M, 1> out;
  for (int k = 0; k < M; ++k) {
    out(k) = AutoDiff<N>(values(k), N, first + k);
  }
  return out;
}

template <int N, int M>
Eigen::Matrix<AutoDiff<N>, M, 1> MakeConstants(
    const Eigen::Matrix<double, M, 1>& values) {
  Eigen::Matrix<AutoDiff<N>, M, 1> out;
  for (int k = 0; k < M; ++k) {
    out(k) = AutoDiff<N>(values(k), Eigen::Matrix<double, N, 1>::Zero());
  }
  return out;
}

}  // namespace fastmap
