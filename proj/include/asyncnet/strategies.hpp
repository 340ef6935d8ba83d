#pragma once

#include "asyncnet/costs.hpp"
#include "asyncnet/stepsize.hpp"
#include "asyncnet/topology.hpp"

#include <optional>
#include <string>
#include <vector>

namespace asyncnet {

enum class StrategyKind {
  ncop,
  centralized_sync,
  centralized_random_mu,
  centralized_random_fusion,
  consensus,
  cta,
  atc,
  unified,
  atc_enlarged,
};

std::string to_string(StrategyKind k);
StrategyKind strategy_from_string(const std::string& s);
bool is_centralized(StrategyKind k);
bool is_distributed(StrategyKind k);

enum class GradientMode { stochastic, exact };

struct AgentState {
  Vector w, psi, phi, grad;
  AgentState() = default;
  explicit AgentState(Index M) : w(Vector::Zero(M)), psi(Vector::Zero(M)), phi(Vector::Zero(M)), grad(Vector::Zero(M)) {}
};

// Gradient oracle for one iteration: agent k's cost and this iteration's sample.
struct GradientContext {
  const std::vector<CostModel>* costs = nullptr;
  const std::vector<DataSample>* samples = nullptr;
  GradientMode mode = GradientMode::stochastic;

  void eval(std::size_t k, const Vector& w, Vector& out) const;
};

// Fusion weights pi(i) on the simplex for the centralized recursion.
class FusionSampler {
 public:
  enum class Scheme { fixed, on_off };

  static FusionSampler uniform(int N);
  static FusionSampler fixed(Vector pi);
  // b_k ~ Bernoulli(q) independently, pi_k = b_k / sum(b); redrawn if all zero.
  static FusionSampler on_off(int N, double q);

  Scheme scheme() const { return scheme_; }
  int size() const { return static_cast<int>(pi_.size()); }
  double q() const { return q_; }
  const Vector& fixed_weights() const { return pi_; }

  void sample(Rng& rng, Vector& out) const;

  struct Moments {
    Vector mean;
    Vector variance;
    Matrix covariance;  // c_{pi,kl}
  };
  // Empirical moments from `samples` draws.
  Moments measure(long samples, std::uint64_t seed) const;

 private:
  Scheme scheme_ = Scheme::fixed;
  Vector pi_;
  double q_ = 1.0;
};

// ------------------------------------------------ deterministic primitives
// Each applies one iteration given realized step-sizes, matrices and samples.

// w <- w - mu * g(w)
void apply_single(const GradientContext& g, std::size_t k, AgentState& s, double mu);

// w <- w - mu * sum_k pi_k g_k(w)
void apply_centralized(const GradientContext& g, AgentState& s, double mu, const Vector& pi);

// kind in {ncop, consensus, cta, atc}; A is this iteration's realization.
void apply_network(StrategyKind kind, const GradientContext& g, std::vector<AgentState>& st, const Matrix& A,
                   const Vector& mu);

void apply_unified(const GradientContext& g, std::vector<AgentState>& st, const Matrix& A_o, const Matrix& A_1,
                   const Matrix& A_2, const Vector& mu);

// psi_k = w_k - mu_k sum_l c_lk g_l(w_k); w_k = sum_l a_lk psi_l
void apply_atc_enlarged(const GradientContext& g, std::vector<AgentState>& st, const Matrix& A, const Matrix& C,
                        const Vector& mu);

// Repeated convex averaging; A must be doubly stochastic with slem < 1.
std::vector<Vector> consensus_average(const std::vector<Vector>& values, const Matrix& A, int iters);

// ------------------------------------------------------------- runner

using AgentModel = std::variant<LinearRegressionModel, LogisticCost>;

CostModel cost_of(const AgentModel& m);
Index dim(const AgentModel& m);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::ncop;
  std::vector<StepSizeProcess> step_sizes;  // one per agent
  // consensus / cta / atc / atc_enlarged
  std::optional<RandomCombinationPolicy> policy;
  // unified
  std::optional<RandomCombinationPolicy> A_o, A_1, A_2;
  // atc_enlarged, right-stochastic
  std::optional<Matrix> C;
  // centralized; defaults to step_sizes[0] and uniform fusion
  std::optional<StepSizeProcess> central_step;
  std::optional<FusionSampler> fusion;
};

inline constexpr double kDivergenceGuard = 1e12;

// Owns the per-iteration loop: sample mu_k(i) for all k, then A_i, then the
// data, then apply the recursion.
class StrategyRunner {
 public:
  StrategyRunner(StrategyConfig cfg, std::vector<AgentModel> agents, GradientMode mode = GradientMode::stochastic);

  const StrategyConfig& config() const { return cfg_; }
  std::size_t agents() const { return models_.size(); }
  Index dim() const { return M_; }
  // Number of tracked estimates: 1 for centralized kinds, N otherwise.
  std::size_t estimates() const { return states_.size(); }

  void reset(const Vector& w0);
  void reset(const std::vector<Vector>& w0);

  // Throws DivergenceError once |w| exceeds the guard or turns non-finite.
  void step(Rng& rng);
  long iteration() const { return iter_; }

  const std::vector<AgentState>& states() const { return states_; }
  const std::vector<CostModel>& costs() const { return costs_; }

 private:
  void draw_samples(Rng& rng);

  StrategyConfig cfg_;
  std::vector<AgentModel> models_;
  std::vector<CostModel> costs_;
  GradientMode mode_;
  Index M_ = 0;
  std::vector<AgentState> states_;
  std::vector<DataSample> samples_;
  GradientContext ctx_;
  Vector mu_, pi_;
  Matrix A_, A1_, A2_;
  long iter_ = 0;
};

}  // namespace asyncnet
