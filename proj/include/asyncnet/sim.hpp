#pragma once

#include "asyncnet/strategies.hpp"
#include "asyncnet/theory.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace asyncnet {

struct ExperimentSpec {
  std::vector<AgentModel> agents;
  StrategyConfig strategy;
  std::optional<Vector> w_o;     // defaults to the aggregate minimizer
  std::optional<Vector> w_init;  // defaults to 0
  long runs = 1;
  long iterations = 1000;
  long window = 0;  // 0 selects iterations / 4
  std::uint64_t seed = 1;
  int threads = 0;  // 0 selects hardware concurrency
  GradientMode gradient_mode = GradientMode::stochastic;
  std::string digest;
};

struct LearningCurve {
  Matrix msd;      // iterations x estimates, run-averaged |w_o - w_k,i|^2
  Vector network;  // mean over estimates
  Vector emse;     // network-average w~' (H/2) w~
};

struct SteadyStateReport {
  std::string digest;
  std::string strategy;
  long runs = 0, iterations = 0, window = 0;
  std::vector<double> msd_agent, msd_agent_se;
  double msd = 0.0, msd_se = 0.0;
  double emse = 0.0, emse_se = 0.0;
  double alpha_hat = 0.0;  // NaN when the transient is too short to fit
  long time_to_2x = -1;    // first iteration with network MSD <= 2 x steady state
  bool converged = false;
  bool diverged = false;
  long diverged_iteration = -1;
  long diverged_run = -1;
  int diverged_agent = -1;
};

struct ExperimentResult {
  LearningCurve curve;
  SteadyStateReport report;
};

Vector resolve_w_o(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------- theory

struct AgentMoments {
  Matrix H;
  Matrix R_s;
};

// H = Hessian at w_o and R_s = gradient-noise covariance at w_o.
// Exact for MSE agents, Monte Carlo for logistic agents.
AgentMoments agent_moments(const AgentModel& m, const Vector& w_o, const MonteCarloOptions& mc = {});

struct TheoryRecord {
  std::string digest;
  std::string strategy;
  bool available = true;
  std::string note;
  double msd = 0.0;
  std::optional<double> er;
  std::optional<double> alpha;
  std::optional<double> spectral_radius;
  std::map<std::string, double> inputs;
};

TheoryRecord predict(const ExperimentSpec& spec);

struct ComparisonRow {
  std::string quantity;
  double empirical = 0.0, theory = 0.0, rel_error = 0.0, tolerance = 0.0;
  bool pass = false;
};

struct Comparison {
  bool comparable = true;
  std::string reason;
  std::vector<ComparisonRow> rows;
  bool pass = false;
};

// Rejects mismatched digests; flags diverged reports as not comparable.
// Tolerance keys: "msd", "emse", "rate" (rate compares 1 - alpha).
Comparison compare_theory(const SteadyStateReport& report, const TheoryRecord& theory,
                          const std::map<std::string, double>& tolerance = {});

// max_k |MSD_k - MSD_av| / MSD_av
double equalization_check(const SteadyStateReport& report);

}  // namespace asyncnet
