#pragma once

#include "asyncnet/types.hpp"

#include <string>

namespace asyncnet {

struct StepSizeMoments {
  double mean = 0.0;      // mu_bar
  double variance = 0.0;  // sigma_mu^2
  double mu_x = 0.0;      // mean + variance / mean
};

// Random step-size mu(i), i.i.d. over time and bounded by upper_bound().
class StepSizeProcess {
 public:
  enum class Kind { constant, bernoulli, beta_scaled };

  static StepSizeProcess constant(double mu);
  static StepSizeProcess bernoulli(double mu, double p);
  // mu(i) = mu_ub * Beta(xi, zeta)
  static StepSizeProcess beta_scaled(double mu_ub, double xi, double zeta);

  Kind kind() const { return kind_; }
  std::string kind_name() const;
  double mu() const { return mu_; }  // mu for constant/bernoulli, mu_ub for beta
  double p() const { return p_; }
  double xi() const { return xi_; }
  double zeta() const { return zeta_; }
  double upper_bound() const { return mu_; }

  double mean() const;
  double variance() const;
  // Throws if the mean is zero, since mu_x is then undefined.
  StepSizeMoments moments() const;

  double sample(Rng& rng) const;

 private:
  StepSizeProcess() = default;
  Kind kind_ = Kind::constant;
  double mu_ = 0.0;
  double p_ = 1.0;
  double xi_ = 1.0;
  double zeta_ = 1.0;
};

}  // namespace asyncnet
