#include "asyncnet/stepsize.hpp"

#include <algorithm>
#include <cmath>

namespace asyncnet {

StepSizeProcess StepSizeProcess::constant(double mu) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("constant step-size: mu must be finite and >= 0");
  StepSizeProcess s;
  s.kind_ = Kind::constant;
  s.mu_ = mu;
  return s;
}

StepSizeProcess StepSizeProcess::bernoulli(double mu, double p) {
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("bernoulli step-size: mu must be finite and >= 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bernoulli step-size: p must lie in [0, 1]");
  StepSizeProcess s;
  s.kind_ = Kind::bernoulli;
  s.mu_ = mu;
  s.p_ = p;
  return s;
}

StepSizeProcess StepSizeProcess::beta_scaled(double mu_ub, double xi, double zeta) {
  if (!(mu_ub >= 0.0) || !std::isfinite(mu_ub)) throw std::invalid_argument("beta step-size: mu_ub must be finite and >= 0");
  if (!(xi > 0.0) || !(zeta > 0.0)) throw std::invalid_argument("beta step-size: xi and zeta must be > 0");
  StepSizeProcess s;
  s.kind_ = Kind::beta_scaled;
  s.mu_ = mu_ub;
  s.xi_ = xi;
  s.zeta_ = zeta;
  return s;
}

std::string StepSizeProcess::kind_name() const {
  switch (kind_) {
    case Kind::constant: return "constant";
    case Kind::bernoulli: return "bernoulli";
    case Kind::beta_scaled: return "beta";
  }
  return "?";
}

double StepSizeProcess::mean() const {
  switch (kind_) {
    case Kind::constant: return mu_;
    case Kind::bernoulli: return p_ * mu_;
    case Kind::beta_scaled: return xi_ / (xi_ + zeta_) * mu_;
  }
  return 0.0;
}

double StepSizeProcess::variance() const {
  switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::bernoulli: return p_ * (1.0 - p_) * mu_ * mu_;
    case Kind::beta_scaled: {
      const double s = xi_ + zeta_;
      return xi_ * zeta_ / (s * s * (s + 1.0)) * mu_ * mu_;
    }
  }
  return 0.0;
}

StepSizeMoments StepSizeProcess::moments() const {
  const double m = mean();
  if (!(m > 0.0)) throw std::invalid_argument("step-size moments: mean is zero, mu_x undefined");
  const double v = variance();
  return {m, v, m + v / m};
}

double StepSizeProcess::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::constant:
      return mu_;
    case Kind::bernoulli: {
      std::bernoulli_distribution b(p_);
      return b(rng) ? mu_ : 0.0;
    }
    case Kind::beta_scaled: {
      // Beta(xi, zeta) = X / (X + Y) with X ~ Gamma(xi), Y ~ Gamma(zeta).
      std::gamma_distribution<double> gx(xi_, 1.0), gy(zeta_, 1.0);
      const double x = gx(rng), y = gy(rng);
      const double t = (x + y) > 0.0 ? x / (x + y) : 0.0;
      return mu_ * std::clamp(t, 0.0, 1.0);
    }
  }
  return 0.0;
}

}  // namespace asyncnet
