#include "fastmap/optim.h"

#include <algorithm>
#include <cmath>

#include "fastmap/error.h"

namespace fastmap {

Adam::Adam(Eigen::Index size, const AdamOptions& options)
    : options_(options),
      m_(Eigen::VectorXd::Zero(size)),
      v_(Eigen::VectorXd::Zero(size)) {}

void Adam::Step(Eigen::Ref<Eigen::VectorXd> params,
                const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error("Adam: shape mismatch");
  }
  if (!grad.allFinite()) throw Error("Adam: non-finite gradient");
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_ + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, step_);
  const double c2 = 1.0 - std::pow(b2, step_);
  params.array() -= options_.lr * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + options_.eps);
}

std::uint64_t Rng::Next() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::Uniform() {
  return static_cast<double>(Next() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  // Box-Muller; one variate per call keeps the stream position simple.
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double FdCheck(const std::function<double(const Eigen::VectorXd&)>& f,
               const Eigen::VectorXd& grad, const Eigen::VectorXd& theta,
               double h) {
  Eigen::VectorXd numeric(theta.size());
  Eigen::VectorXd probe = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    probe(k) = theta(k) + h;
    const double fp = f(probe);
    probe(k) = theta(k) - h;
    const double fm = f(probe);
    probe(k) = theta(k);
    numeric(k) = (fp - fm) / (2.0 * h);
  }
  const double scale =
      std::max(numeric.lpNorm<Eigen::Infinity>(), grad.lpNorm<Eigen::Infinity>());
  if (scale == 0.0) return 0.0;
  // Components far below the gradient's magnitude are compared against it.
  const double floor = 1e-3 * scale;
  double worst = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double denom =
        std::max({std::abs(numeric(k)), std::abs(grad(k)), floor});
    worst = std::max(worst, std::abs(numeric(k) - grad(k)) / denom);
  }
  return worst;
}

}  // namespace fastmap
