#include "asyncnet/costs.hpp"

#include <cmath>
#include <string>

namespace asyncnet {

namespace {

void require_dim(Index expected, Index got, const char* what) {
  if (expected != got)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (expected " +
                                std::to_string(expected) + ", got " + std::to_string(got) + ")");
}

void require_finite(const Vector& w, const char* what) {
  if (!w.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

Matrix lower_cholesky(const Matrix& R, const char* what) {
  if (R.rows() != R.cols() || R.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": covariance must be square and non-empty");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + R.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(std::string(what) + ": covariance must be symmetric");
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(what) + ": covariance must be positive-definite");
  return llt.matrixL();
}

void fill_normal(Rng& rng, Vector& z) {
  std::normal_distribution<double> n01(0.0, 1.0);
  for (Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
}

// log(1 + exp(-z)) without overflow.
double softplus_neg(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

// exp(-z) / (1 + exp(-z)) = 1 / (1 + exp(z))
double sigmoid_neg(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

}  // namespace

// ---------------------------------------------------------------- MseCost

MseCost::MseCost(Matrix R_u, Vector r_du, double sigma_d2, double rho)
    : R_u_(std::move(R_u)), r_du_(std::move(r_du)), sigma_d2_(sigma_d2), rho_(rho) {
  require_dim(R_u_.rows(), r_du_.size(), "MseCost");
  lower_cholesky(R_u_, "MseCost");
  if (!(sigma_d2_ >= 0.0)) throw std::invalid_argument("MseCost: sigma_d2 must be >= 0");
  if (!(rho_ >= 0.0)) throw std::invalid_argument("MseCost: rho must be >= 0");
}

double MseCost::evaluate(const Vector& w) const {
  require_dim(dim(), w.size(), "evaluate");
  require_finite(w, "evaluate");
  return sigma_d2_ - 2.0 * r_du_.dot(w) + w.dot(R_u_ * w) + 0.5 * rho_ * w.squaredNorm();
}

Vector MseCost::gradient(const Vector& w) const {
  require_dim(dim(), w.size(), "gradient");
  require_finite(w, "gradient");
  return 2.0 * (R_u_ * w - r_du_) + rho_ * w;
}

Matrix MseCost::hessian() const {
  Matrix H = 2.0 * R_u_;
  H.diagonal().array() += rho_;
  return 0.5 * (H + H.transpose());
}

Vector MseCost::minimizer() const { return hessian().llt().solve(2.0 * r_du_); }

Vector MseCost::stochastic_gradient(const Vector& w, const MseSample& s) const {
  Vector out(dim());
  stochastic_gradient_into(w, s, out);
  return out;
}

void MseCost::stochastic_gradient_into(const Vector& w, const MseSample& s, Vector& out) const {
  require_dim(dim(), w.size(), "stochastic_gradient");
  require_dim(dim(), s.u.size(), "stochastic_gradient");
  const double e = s.u.dot(w) - s.d;
  out.noalias() = (2.0 * e) * s.u;
  if (rho_ != 0.0) out.noalias() += rho_ * w;
}

// ------------------------------------------------------------ LogisticCost

LogisticCost::LogisticCost(double rho, LogisticFeatureModel model) : rho_(rho), model_(std::move(model)) {
  if (!(rho_ > 0.0)) throw std::invalid_argument("LogisticCost: rho must be > 0");
  require_dim(model_.cov.rows(), model_.mean.size(), "LogisticCost");
  chol_ = lower_cholesky(model_.cov, "LogisticCost");
  R_h_ = model_.cov + model_.mean * model_.mean.transpose();
}

LogisticSample LogisticCost::sample(Rng& rng) const {
  std::bernoulli_distribution coin(0.5);
  LogisticSample s;
  s.gamma = coin(rng) ? 1.0 : -1.0;
  Vector z(dim());
  fill_normal(rng, z);
  s.h = s.gamma * model_.mean + chol_ * z;
  return s;
}

std::vector<LogisticSample> LogisticCost::draw(long n, Rng& rng) const {
  std::vector<LogisticSample> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) xs.push_back(sample(rng));
  return xs;
}

double LogisticCost::loss(const Vector& w, const LogisticSample& s) const {
  require_dim(dim(), w.size(), "loss");
  return 0.5 * rho_ * w.squaredNorm() + softplus_neg(s.gamma * s.h.dot(w));
}

Vector LogisticCost::stochastic_gradient(const Vector& w, const LogisticSample& s) const {
  Vector out(dim());
  stochastic_gradient_into(w, s, out);
  return out;
}

void LogisticCost::stochastic_gradient_into(const Vector& w, const LogisticSample& s, Vector& out) const {
  require_dim(dim(), w.size(), "stochastic_gradient");
  require_dim(dim(), s.h.size(), "stochastic_gradient");
  if (s.gamma != 1.0 && s.gamma != -1.0)
    throw std::invalid_argument("stochastic_gradient: label must be +1 or -1");
  const double g = s.gamma * sigmoid_neg(s.gamma * s.h.dot(w));
  out.noalias() = rho_ * w - g * s.h;
}

double LogisticCost::empirical_risk(const Vector& w, const std::vector<LogisticSample>& xs) const {
  require_dim(dim(), w.size(), "empirical_risk");
  require_finite(w, "empirical_risk");
  if (xs.empty()) throw std::invalid_argument("empirical_risk: empty sample set");
  double acc = 0.0;
  for (const auto& s : xs) acc += softplus_neg(s.gamma * s.h.dot(w));
  return 0.5 * rho_ * w.squaredNorm() + acc / static_cast<double>(xs.size());
}

Vector LogisticCost::empirical_gradient(const Vector& w, const std::vector<LogisticSample>& xs) const {
  require_dim(dim(), w.size(), "empirical_gradient");
  require_finite(w, "empirical_gradient");
  if (xs.empty()) throw std::invalid_argument("empirical_gradient: empty sample set");
  Vector acc = Vector::Zero(dim());
  for (const auto& s : xs) acc.noalias() += (s.gamma * sigmoid_neg(s.gamma * s.h.dot(w))) * s.h;
  return rho_ * w - acc / static_cast<double>(xs.size());
}

Matrix LogisticCost::empirical_hessian(const Vector& w, const std::vector<LogisticSample>& xs) const {
  require_dim(dim(), w.size(), "empirical_hessian");
  require_finite(w, "empirical_hessian");
  if (xs.empty()) throw std::invalid_argument("empirical_hessian: empty sample set");
  Matrix acc = Matrix::Zero(dim(), dim());
  for (const auto& s : xs) {
    const double p = sigmoid_neg(s.gamma * s.h.dot(w));
    acc.selfadjointView<Eigen::Lower>().rankUpdate(s.h, p * (1.0 - p));
  }
  Matrix H = acc.selfadjointView<Eigen::Lower>();
  H /= static_cast<double>(xs.size());
  H.diagonal().array() += rho_;
  return 0.5 * (H + H.transpose());
}

Estimate LogisticCost::estimate_risk(const Vector& w, const MonteCarloOptions& mc) const {
  require_dim(dim(), w.size(), "estimate_risk");
  require_finite(w, "estimate_risk");
  if (mc.samples < 2) throw std::invalid_argument("estimate_risk: need at least 2 samples");
  Rng rng(mc.seed);
  double mean = 0.0, m2 = 0.0;
  for (long i = 0; i < mc.samples; ++i) {
    const double x = loss(w, sample(rng));
    const double delta = x - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (x - mean);
  }
  const double var = m2 / static_cast<double>(mc.samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(mc.samples))};
}

Vector LogisticCost::estimate_gradient(const Vector& w, const MonteCarloOptions& mc) const {
  Rng rng(mc.seed);
  return empirical_gradient(w, draw(mc.samples, rng));
}

Matrix LogisticCost::estimate_hessian(const Vector& w, const MonteCarloOptions& mc) const {
  Rng rng(mc.seed);
  return empirical_hessian(w, draw(mc.samples, rng));
}

Vector LogisticCost::estimate_minimizer(const MonteCarloOptions& mc) const {
  Rng rng(mc.seed);
  const auto xs = draw(mc.samples, rng);
  Vector w = Vector::Zero(dim());
  for (int it = 0; it < 100; ++it) {
    const Vector g = empirical_gradient(w, xs);
    const Vector step = empirical_hessian(w, xs).llt().solve(g);
    w -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>())) break;
  }
  return w;
}

// ------------------------------------------------------- variant dispatch

Index dim(const CostModel& c) {
  return std::visit([](const auto& x) { return x.dim(); }, c);
}

double evaluate(const CostModel& c, const Vector& w, const MonteCarloOptions& mc) {
  if (const auto* m = std::get_if<MseCost>(&c)) return m->evaluate(w);
  return std::get<LogisticCost>(c).estimate_risk(w, mc).value;
}

Vector gradient(const CostModel& c, const Vector& w, const MonteCarloOptions& mc) {
  if (const auto* m = std::get_if<MseCost>(&c)) return m->gradient(w);
  return std::get<LogisticCost>(c).estimate_gradient(w, mc);
}

Matrix hessian(const CostModel& c, const Vector& w, const MonteCarloOptions& mc) {
  if (const auto* m = std::get_if<MseCost>(&c)) {
    require_dim(m->dim(), w.size(), "hessian");
    return m->hessian();
  }
  return std::get<LogisticCost>(c).estimate_hessian(w, mc);
}

Vector stochastic_gradient(const CostModel& c, const Vector& w, const DataSample& s) {
  if (const auto* m = std::get_if<MseCost>(&c)) {
    const auto* x = std::get_if<MseSample>(&s);
    if (!x) throw std::invalid_argument("stochastic_gradient: logistic sample passed to MSE cost");
    return m->stochastic_gradient(w, *x);
  }
  const auto* x = std::get_if<LogisticSample>(&s);
  if (!x) throw std::invalid_argument("stochastic_gradient: MSE sample passed to logistic cost");
  return std::get<LogisticCost>(c).stochastic_gradient(w, *x);
}

// -------------------------------------------------- LinearRegressionModel

LinearRegressionModel::LinearRegressionModel(Vector w_o, Matrix R_u, double sigma_v2)
    : w_o_(std::move(w_o)), R_u_(std::move(R_u)), sigma_v2_(sigma_v2) {
  require_dim(R_u_.rows(), w_o_.size(), "LinearRegressionModel");
  require_finite(w_o_, "LinearRegressionModel");
  chol_ = lower_cholesky(R_u_, "LinearRegressionModel");
  if (!(sigma_v2_ >= 0.0) || !std::isfinite(sigma_v2_))
    throw std::invalid_argument("LinearRegressionModel: sigma_v2 must be finite and >= 0");
}

MseSample LinearRegressionModel::sample(Rng& rng) const {
  MseSample s;
  s.u.resize(dim());
  sample_into(rng, s);
  return s;
}

void LinearRegressionModel::sample_into(Rng& rng, MseSample& out) const {
  std::normal_distribution<double> n01(0.0, 1.0);
  thread_local Vector z;
  z.resize(dim());
  fill_normal(rng, z);
  out.u.noalias() = chol_.triangularView<Eigen::Lower>() * z;
  out.d = out.u.dot(w_o_) + std::sqrt(sigma_v2_) * n01(rng);
}

MseCost LinearRegressionModel::cost(double rho) const {
  return MseCost(R_u_, R_u_ * w_o_, w_o_.dot(R_u_ * w_o_) + sigma_v2_, rho);
}

GradientNoiseProfile noise_profile(const LinearRegressionModel& model) {
  GradientNoiseProfile p;
  p.H = 2.0 * model.R_u();
  p.R_s = 4.0 * model.sigma_v2() * model.R_u();
  p.sigma_s2 = 4.0 * model.sigma_v2() * model.R_u().trace();
  p.beta2 = estimate_beta2(model);
  return p;
}

double estimate_beta2(const LinearRegressionModel& model, const Beta2Options& opt) {
  if (opt.directions < 1 || opt.radii.size() < 2 || opt.samples_per_point < 2)
    throw std::invalid_argument("estimate_beta2: need >= 1 direction, >= 2 radii, >= 2 samples");
  const MseCost cost = model.cost();
  Rng rng(opt.seed);
  MseSample s;
  s.u.resize(model.dim());
  Vector dir(model.dim()), w(model.dim()), g(model.dim());
  double best = 0.0;
  for (int d = 0; d < opt.directions; ++d) {
    fill_normal(rng, dir);
    dir.normalize();
    // Fit y = a + b x with x = |w~|^2, y = mean |s|^2.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double r : opt.radii) {
      w = model.w_o() + r * dir;
      const Vector true_grad = cost.gradient(w);
      double acc = 0.0;
      for (long i = 0; i < opt.samples_per_point; ++i) {
        model.sample_into(rng, s);
        cost.stochastic_gradient_into(w, s, g);
        acc += (g - true_grad).squaredNorm();
      }
      const double x = r * r, y = acc / static_cast<double>(opt.samples_per_point);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(opt.radii.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    best = std::max(best, slope);
  }
  return best;
}

}  // namespace asyncnet
