#pragma once

#include "asyncnet/types.hpp"

#include <variant>
#include <vector>

namespace asyncnet {

struct MseSample {
  double d = 0.0;
  Vector u;  // regressor row, stored as a column
};

struct LogisticSample {
  double gamma = 1.0;  // label, +1 or -1
  Vector h;
};

using DataSample = std::variant<MseSample, LogisticSample>;

// J(w) = sigma_d2 - 2 r_du' w + w' R_u w + (rho/2)|w|^2
class MseCost {
 public:
  MseCost(Matrix R_u, Vector r_du, double sigma_d2, double rho = 0.0);

  Index dim() const { return r_du_.size(); }
  const Matrix& R_u() const { return R_u_; }
  const Vector& r_du() const { return r_du_; }
  double sigma_d2() const { return sigma_d2_; }
  double rho() const { return rho_; }

  double evaluate(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  Matrix hessian() const;
  Vector minimizer() const;

  Vector stochastic_gradient(const Vector& w, const MseSample& s) const;
  // Allocation-free version for the inner simulation loop.
  void stochastic_gradient_into(const Vector& w, const MseSample& s, Vector& out) const;

 private:
  Matrix R_u_;
  Vector r_du_;
  double sigma_d2_;
  double rho_;
};

// h | gamma ~ N(gamma * mean, cov), P(gamma = +1) = P(gamma = -1) = 1/2.
struct LogisticFeatureModel {
  Vector mean;
  Matrix cov;
};

struct MonteCarloOptions {
  long samples = 100000;
  std::uint64_t seed = 1;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

class LogisticCost {
 public:
  LogisticCost(double rho, LogisticFeatureModel model);

  Index dim() const { return model_.mean.size(); }
  double rho() const { return rho_; }
  const LogisticFeatureModel& feature_model() const { return model_; }
  // Second moment E[h h'] = cov + mean mean'.
  const Matrix& R_h() const { return R_h_; }

  LogisticSample sample(Rng& rng) const;
  std::vector<LogisticSample> draw(long n, Rng& rng) const;

  double loss(const Vector& w, const LogisticSample& s) const;
  Vector stochastic_gradient(const Vector& w, const LogisticSample& s) const;
  void stochastic_gradient_into(const Vector& w, const LogisticSample& s, Vector& out) const;

  // Sample-average risk and its exact derivatives over a fixed sample set.
  double empirical_risk(const Vector& w, const std::vector<LogisticSample>& xs) const;
  Vector empirical_gradient(const Vector& w, const std::vector<LogisticSample>& xs) const;
  Matrix empirical_hessian(const Vector& w, const std::vector<LogisticSample>& xs) const;

  // Distribution-level quantities, estimated with seeded Monte Carlo.
  Estimate estimate_risk(const Vector& w, const MonteCarloOptions& mc = {}) const;
  Vector estimate_gradient(const Vector& w, const MonteCarloOptions& mc = {}) const;
  Matrix estimate_hessian(const Vector& w, const MonteCarloOptions& mc = {}) const;
  // Newton iterations on the Monte Carlo risk.
  Vector estimate_minimizer(const MonteCarloOptions& mc = {}) const;

 private:
  double rho_;
  LogisticFeatureModel model_;
  Matrix chol_;
  Matrix R_h_;
};

using CostModel = std::variant<MseCost, LogisticCost>;

Index dim(const CostModel& c);
// Logistic values are Monte Carlo estimates driven by `mc`.
double evaluate(const CostModel& c, const Vector& w, const MonteCarloOptions& mc = {});
Vector gradient(const CostModel& c, const Vector& w, const MonteCarloOptions& mc = {});
Matrix hessian(const CostModel& c, const Vector& w, const MonteCarloOptions& mc = {});
Vector stochastic_gradient(const CostModel& c, const Vector& w, const DataSample& s);

// d = u w_o + v, u ~ N(0, R_u), v ~ N(0, sigma_v2) independent.
class LinearRegressionModel {
 public:
  LinearRegressionModel(Vector w_o, Matrix R_u, double sigma_v2);

  Index dim() const { return w_o_.size(); }
  const Vector& w_o() const { return w_o_; }
  const Matrix& R_u() const { return R_u_; }
  double sigma_v2() const { return sigma_v2_; }

  MseSample sample(Rng& rng) const;
  void sample_into(Rng& rng, MseSample& out) const;
  // r_du = R_u w_o, sigma_d2 = w_o' R_u w_o + sigma_v2.
  MseCost cost(double rho = 0.0) const;

 private:
  Vector w_o_;
  Matrix R_u_;
  Matrix chol_;
  double sigma_v2_;
};

struct GradientNoiseProfile {
  Matrix H;
  Matrix R_s;
  double beta2 = 0.0;
  double sigma_s2 = 0.0;
};

GradientNoiseProfile noise_profile(const LinearRegressionModel& model);

struct Beta2Options {
  int directions = 16;
  std::vector<double> radii{0.25, 0.5, 1.0, 2.0};
  long samples_per_point = 20000;
  std::uint64_t seed = 7;
};

// Least-squares slope of E|s(w)|^2 against |w_o - w|^2, maximized over
// random directions. Empirical stand-in for the unspecified constant 4c.
double estimate_beta2(const LinearRegressionModel& model, const Beta2Options& opt = {});

}  // namespace asyncnet
