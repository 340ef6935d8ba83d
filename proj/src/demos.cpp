#include "asyncnet/demos.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdarg>
#include <cstdio>

namespace asyncnet {

namespace {

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

const char* verdict(bool ok) { return ok ? "PASS" : "FAIL"; }

DemoResult consensus_instability(std::uint64_t seed, int threads) {
  DemoResult d{"consensus-instability", false, {}};
  Matrix A(2, 2);
  A << 0.05, 0.95, 0.95, 0.05;
  const int M = 2;
  const double mu = 0.15;
  const std::vector<Matrix> R_u(2, Matrix::Identity(M, M));
  const Vector mu_bar = Vector::Constant(2, mu);

  const double rc = mean_stability_matrix(StrategyKind::consensus, A, mu_bar, R_u).spectral_radius;
  const double ra = mean_stability_matrix(StrategyKind::atc, A, mu_bar, R_u).spectral_radius;
  const double rn = mean_stability_matrix(StrategyKind::ncop, A, mu_bar, R_u).spectral_radius;
  d.lines.push_back(fmt("rho(B_cons) = %.6f  (predicted 1.2)", rc));
  d.lines.push_back(fmt("rho(B_atc)  = %.6f  (predicted 0.7)", ra));
  d.lines.push_back(fmt("rho(B_ncop) = %.6f  (predicted 0.7)", rn));

  bool ok = std::abs(rc - 1.2) < 1e-9 && std::abs(ra - 0.7) < 1e-9 && std::abs(rn - 0.7) < 1e-9;
  const RandomCombinationPolicy policy(A);
  for (StrategyKind k : {StrategyKind::consensus, StrategyKind::atc, StrategyKind::ncop}) {
    ExperimentSpec s = lms_spec(k, M, {0.01, 0.01}, StepSizeProcess::constant(mu),
                                k == StrategyKind::ncop ? std::nullopt : std::optional(policy), 20, 3000, seed);
    s.threads = threads;
    const auto r = run_experiment(s).report;
    const bool expect_div = k == StrategyKind::consensus;
    const bool good = expect_div ? r.diverged : (!r.diverged && r.converged);
    ok = ok && good;
    if (r.diverged)
      d.lines.push_back(fmt("%-9s diverged at iteration %ld (run %ld)  [%s]", to_string(k).c_str(), r.diverged_iteration,
                            r.diverged_run, verdict(good)));
    else
      d.lines.push_back(fmt("%-9s converged, MSD = %.4e  [%s]", to_string(k).c_str(), r.msd, verdict(good)));
  }
  d.pass = ok;
  return d;
}

DemoResult nfold(std::uint64_t seed, int threads) {
  DemoResult d{"nfold", false, {}};
  const int N = 5, M = 5;
  const std::vector<double> s2(N, 0.01);
  ExperimentSpec c = lms_spec(StrategyKind::centralized_sync, M, s2, StepSizeProcess::constant(0.002), std::nullopt, 40,
                              12000, seed);
  ExperimentSpec n = lms_spec(StrategyKind::ncop, M, s2, StepSizeProcess::constant(0.002), std::nullopt, 40, 12000, seed + 1);
  c.threads = n.threads = threads;
  const auto rc = run_experiment(c).report;
  const auto rn = run_experiment(n).report;
  const double ratio = rc.msd / rn.msd;
  d.pass = std::abs(ratio / (1.0 / N) - 1.0) <= 0.2;
  d.lines.push_back(fmt("MSD_cent    = %.4e (theory %.4e)", rc.msd, predict(c).msd));
  d.lines.push_back(fmt("MSD_ncop,av = %.4e (theory %.4e)", rn.msd, predict(n).msd));
  d.lines.push_back(fmt("ratio = %.4f, expected 1/N = %.4f (+-20%%)  [%s]", ratio, 1.0 / N, verdict(d.pass)));
  return d;
}

DemoResult async_vs_sync(std::uint64_t seed, int threads) {
  DemoResult d{"async-vs-sync", false, {}};
  const double mu = 0.002, p = 0.5;
  ExperimentSpec s = lms_spec(StrategyKind::ncop, 5, {0.01}, StepSizeProcess::constant(mu), std::nullopt, 100, 20000, seed);
  ExperimentSpec a = lms_spec(StrategyKind::ncop, 5, {0.01}, StepSizeProcess::bernoulli(mu, p), std::nullopt, 100, 20000,
                              seed + 1);
  s.threads = a.threads = threads;
  const auto rs = run_experiment(s).report;
  const auto ra = run_experiment(a).report;
  const double msd_ratio = ra.msd / rs.msd;
  const double t_ratio = static_cast<double>(ra.time_to_2x) / static_cast<double>(rs.time_to_2x);
  const bool ok_msd = std::abs(msd_ratio - 1.0) <= 0.15;
  const bool ok_t = std::abs(t_ratio / (1.0 / p) - 1.0) <= 0.25;
  d.pass = ok_msd && ok_t;
  d.lines.push_back(fmt("sync  MSD = %.4e, iterations to 2x MSD = %ld", rs.msd, rs.time_to_2x));
  d.lines.push_back(fmt("async MSD = %.4e, iterations to 2x MSD = %ld", ra.msd, ra.time_to_2x));
  d.lines.push_back(fmt("MSD ratio = %.4f (expected 1 +-15%%)  [%s]", msd_ratio, verdict(ok_msd)));
  d.lines.push_back(fmt("time ratio = %.4f (expected 1/p = %.1f +-25%%)  [%s]", t_ratio, 1.0 / p, verdict(ok_t)));
  return d;
}

DemoResult equalization(std::uint64_t seed, int threads) {
  DemoResult d{"equalization", false, {}};
  const int N = 5, M = 5;
  const std::vector<double> s2{0.01, 0.02, 0.03, 0.04, 0.05};
  const RandomCombinationPolicy policy(metropolis_weights(ring_adjacency(N)));
  ExperimentSpec a = lms_spec(StrategyKind::atc, M, s2, StepSizeProcess::constant(0.002), policy, 40, 15000, seed);
  ExperimentSpec n = lms_spec(StrategyKind::ncop, M, s2, StepSizeProcess::constant(0.002), std::nullopt, 40, 15000, seed + 1);
  a.threads = n.threads = threads;
  const auto ra = run_experiment(a).report;
  const auto rn = run_experiment(n).report;
  const double sa = equalization_check(ra), sn = equalization_check(rn);
  const bool ok_a = sa < 0.15, ok_n = sn > 0.5;
  d.pass = ok_a && ok_n;
  std::string per;
  for (double m : ra.msd_agent) per += fmt(" %.3e", m);
  d.lines.push_back("ATC per-agent MSD:" + per);
  per.clear();
  for (double m : rn.msd_agent) per += fmt(" %.3e", m);
  d.lines.push_back("ncop per-agent MSD:" + per);
  d.lines.push_back(fmt("ATC spread  = %.4f (expected < 0.15)  [%s]", sa, verdict(ok_a)));
  d.lines.push_back(fmt("ncop spread = %.4f (expected > 0.5)  [%s]", sn, verdict(ok_n)));
  return d;
}

}  // namespace

ExperimentSpec lms_spec(StrategyKind kind, int M, const std::vector<double>& sigma_v2, const StepSizeProcess& step,
                        std::optional<RandomCombinationPolicy> policy, long runs, long iterations, std::uint64_t seed,
                        const Matrix& R_u) {
  if (sigma_v2.empty()) throw std::invalid_argument("lms_spec: need at least one agent");
  ExperimentSpec s;
  const Vector w_o = Vector::Constant(M, 1.0 / std::sqrt(static_cast<double>(M)));
  const Matrix R = R_u.size() ? R_u : Matrix(Matrix::Identity(M, M));
  for (double v : sigma_v2) {
    s.agents.emplace_back(LinearRegressionModel(w_o, R, v));
    s.strategy.step_sizes.push_back(step);
  }
  s.strategy.kind = kind;
  s.strategy.policy = std::move(policy);
  s.w_o = w_o;
  s.runs = runs;
  s.iterations = iterations;
  s.seed = seed;
  return s;
}

const std::vector<std::string>& demo_names() {
  static const std::vector<std::string> names{"consensus-instability", "nfold", "async-vs-sync", "equalization"};
  return names;
}

DemoResult run_demo(const std::string& name, std::uint64_t seed, int threads) {
  if (name == "consensus-instability") return consensus_instability(seed, threads);
  if (name == "nfold") return nfold(seed, threads);
  if (name == "async-vs-sync") return async_vs_sync(seed, threads);
  if (name == "equalization") return equalization(seed, threads);
  throw std::invalid_argument("unknown demo '" + name + "'");
}

}  // namespace asyncnet
