#include "asyncnet/strategies.hpp"

#include <cmath>
#include <map>

namespace asyncnet {

namespace {

using Member = Vector AgentState::*;

// dst_k = sum_l a_lk src_l, skipping exact zeros so identity combines copy.
void combine(std::vector<AgentState>& st, Member src, Member dst, const Matrix& A) {
  const std::size_t N = st.size();
  for (std::size_t k = 0; k < N; ++k) {
    Vector& out = st[k].*dst;
    bool first = true;
    for (std::size_t l = 0; l < N; ++l) {
      const double a = A(static_cast<Index>(l), static_cast<Index>(k));
      if (a == 0.0) continue;
      if (first) {
        out.noalias() = a * (st[l].*src);
        first = false;
      } else {
        out.noalias() += a * (st[l].*src);
      }
    }
    if (first) out.setZero();
  }
}

void require_square_n(const Matrix& A, std::size_t N, const char* what) {
  if (A.rows() != static_cast<Index>(N) || A.cols() != static_cast<Index>(N))
    throw std::invalid_argument(std::string(what) + ": matrix must be N x N");
}

void require_mu(const Vector& mu, std::size_t N) {
  if (mu.size() != static_cast<Index>(N)) throw std::invalid_argument("step-size vector must have one entry per agent");
}

}  // namespace

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::ncop: return "ncop";
    case StrategyKind::centralized_sync: return "centralized_sync";
    case StrategyKind::centralized_random_mu: return "centralized_random_mu";
    case StrategyKind::centralized_random_fusion: return "centralized_random_fusion";
    case StrategyKind::consensus: return "consensus";
    case StrategyKind::cta: return "cta";
    case StrategyKind::atc: return "atc";
    case StrategyKind::unified: return "unified";
    case StrategyKind::atc_enlarged: return "atc_enlarged";
  }
  return "?";
}

StrategyKind strategy_from_string(const std::string& s) {
  static const std::map<std::string, StrategyKind> table{
      {"ncop", StrategyKind::ncop},
      {"centralized_sync", StrategyKind::centralized_sync},
      {"centralized_random_mu", StrategyKind::centralized_random_mu},
      {"centralized_random_fusion", StrategyKind::centralized_random_fusion},
      {"consensus", StrategyKind::consensus},
      {"cta", StrategyKind::cta},
      {"atc", StrategyKind::atc},
      {"unified", StrategyKind::unified},
      {"atc_enlarged", StrategyKind::atc_enlarged},
  };
  auto it = table.find(s);
  if (it == table.end()) throw std::invalid_argument("unknown strategy kind '" + s + "'");
  return it->second;
}

bool is_centralized(StrategyKind k) {
  return k == StrategyKind::centralized_sync || k == StrategyKind::centralized_random_mu ||
         k == StrategyKind::centralized_random_fusion;
}

bool is_distributed(StrategyKind k) {
  return k == StrategyKind::consensus || k == StrategyKind::cta || k == StrategyKind::atc ||
         k == StrategyKind::atc_enlarged;
}

void GradientContext::eval(std::size_t k, const Vector& w, Vector& out) const {
  const CostModel& c = (*costs)[k];
  if (mode == GradientMode::exact) {
    const auto* m = std::get_if<MseCost>(&c);
    if (!m) throw std::invalid_argument("exact gradients are only available for MSE costs");
    out.noalias() = m->gradient(w);
    return;
  }
  const DataSample& s = (*samples)[k];
  if (const auto* m = std::get_if<MseCost>(&c)) {
    const auto* x = std::get_if<MseSample>(&s);
    if (!x) throw std::invalid_argument("logistic sample passed to MSE cost");
    m->stochastic_gradient_into(w, *x, out);
  } else {
    const auto* x = std::get_if<LogisticSample>(&s);
    if (!x) throw std::invalid_argument("MSE sample passed to logistic cost");
    std::get<LogisticCost>(c).stochastic_gradient_into(w, *x, out);
  }
}

// ----------------------------------------------------------- FusionSampler

FusionSampler FusionSampler::uniform(int N) {
  if (N < 1) throw std::invalid_argument("fusion sampler: N must be >= 1");
  return fixed(Vector::Constant(N, 1.0 / N));
}

FusionSampler FusionSampler::fixed(Vector pi) {
  if (pi.size() < 1 || pi.minCoeff() < 0.0 || std::abs(pi.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("fusion weights must be nonnegative and sum to 1");
  FusionSampler f;
  f.scheme_ = Scheme::fixed;
  f.pi_ = std::move(pi);
  return f;
}

FusionSampler FusionSampler::on_off(int N, double q) {
  if (N < 1) throw std::invalid_argument("fusion sampler: N must be >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("fusion sampler: q must lie in (0, 1]");
  FusionSampler f;
  f.scheme_ = Scheme::on_off;
  f.pi_ = Vector::Constant(N, 1.0 / N);
  f.q_ = q;
  return f;
}

void FusionSampler::sample(Rng& rng, Vector& out) const {
  out.resize(pi_.size());
  if (scheme_ == Scheme::fixed) {
    out = pi_;
    return;
  }
  std::bernoulli_distribution on(q_);
  for (;;) {
    int count = 0;
    for (Index k = 0; k < out.size(); ++k) {
      out[k] = on(rng) ? 1.0 : 0.0;
      count += out[k] != 0.0;
    }
    if (count > 0) {
      out /= static_cast<double>(count);
      return;
    }
  }
}

FusionSampler::Moments FusionSampler::measure(long samples, std::uint64_t seed) const {
  if (samples < 2) throw std::invalid_argument("fusion moments need at least 2 samples");
  Rng rng(seed);
  const Index N = pi_.size();
  Vector sum = Vector::Zero(N), x(N);
  Matrix sq = Matrix::Zero(N, N);
  for (long i = 0; i < samples; ++i) {
    sample(rng, x);
    sum += x;
    sq.noalias() += x * x.transpose();
  }
  const double n = static_cast<double>(samples);
  Moments m;
  m.mean = sum / n;
  m.covariance = sq / n - m.mean * m.mean.transpose();
  m.variance = m.covariance.diagonal().cwiseMax(0.0);
  return m;
}

// --------------------------------------------------------------- updates

void apply_single(const GradientContext& g, std::size_t k, AgentState& s, double mu) {
  g.eval(k, s.w, s.grad);
  s.w -= mu * s.grad;
}

void apply_centralized(const GradientContext& g, AgentState& s, double mu, const Vector& pi) {
  const std::size_t N = g.costs->size();
  if (pi.size() != static_cast<Index>(N)) throw std::invalid_argument("fusion weights must have one entry per agent");
  if (pi.minCoeff() < 0.0 || std::abs(pi.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("fusion weights must lie on the simplex");
  thread_local Vector gk;
  gk.resize(s.w.size());
  bool first = true;
  for (std::size_t k = 0; k < N; ++k) {
    const double p = pi[static_cast<Index>(k)];
    if (p == 0.0) continue;
    g.eval(k, s.w, gk);
    if (first) {
      s.grad.noalias() = p * gk;
      first = false;
    } else {
      s.grad.noalias() += p * gk;
    }
  }
  s.w -= mu * s.grad;
}

void apply_network(StrategyKind kind, const GradientContext& g, std::vector<AgentState>& st, const Matrix& A,
                   const Vector& mu) {
  const std::size_t N = st.size();
  require_mu(mu, N);
  switch (kind) {
    case StrategyKind::ncop:
      for (std::size_t k = 0; k < N; ++k) apply_single(g, k, st[k], mu[static_cast<Index>(k)]);
      return;
    case StrategyKind::consensus:
      require_square_n(A, N, "consensus");
      combine(st, &AgentState::w, &AgentState::psi, A);
      for (std::size_t k = 0; k < N; ++k) {
        g.eval(k, st[k].w, st[k].grad);
        st[k].psi -= mu[static_cast<Index>(k)] * st[k].grad;
      }
      for (auto& s : st) s.w = s.psi;
      return;
    case StrategyKind::cta:
      require_square_n(A, N, "cta");
      combine(st, &AgentState::w, &AgentState::psi, A);
      for (std::size_t k = 0; k < N; ++k) {
        g.eval(k, st[k].psi, st[k].grad);
        st[k].psi -= mu[static_cast<Index>(k)] * st[k].grad;
      }
      for (auto& s : st) s.w = s.psi;
      return;
    case StrategyKind::atc:
      require_square_n(A, N, "atc");
      for (std::size_t k = 0; k < N; ++k) {
        g.eval(k, st[k].w, st[k].grad);
        st[k].psi = st[k].w;
        st[k].psi -= mu[static_cast<Index>(k)] * st[k].grad;
      }
      combine(st, &AgentState::psi, &AgentState::w, A);
      return;
    default:
      throw std::invalid_argument("apply_network: unsupported kind " + to_string(kind));
  }
}

void apply_unified(const GradientContext& g, std::vector<AgentState>& st, const Matrix& A_o, const Matrix& A_1,
                   const Matrix& A_2, const Vector& mu) {
  const std::size_t N = st.size();
  require_mu(mu, N);
  require_square_n(A_o, N, "unified A_o");
  require_square_n(A_1, N, "unified A_1");
  require_square_n(A_2, N, "unified A_2");
  combine(st, &AgentState::w, &AgentState::phi, A_1);
  for (std::size_t k = 0; k < N; ++k) g.eval(k, st[k].phi, st[k].grad);
  combine(st, &AgentState::phi, &AgentState::psi, A_o);
  for (std::size_t k = 0; k < N; ++k) st[k].psi -= mu[static_cast<Index>(k)] * st[k].grad;
  combine(st, &AgentState::psi, &AgentState::w, A_2);
}

void apply_atc_enlarged(const GradientContext& g, std::vector<AgentState>& st, const Matrix& A, const Matrix& C,
                        const Vector& mu) {
  const std::size_t N = st.size();
  require_mu(mu, N);
  require_square_n(A, N, "atc_enlarged A");
  require_square_n(C, N, "atc_enlarged C");
  thread_local Vector gl;
  for (std::size_t k = 0; k < N; ++k) {
    AgentState& s = st[k];
    gl.resize(s.w.size());
    bool first = true;
    for (std::size_t l = 0; l < N; ++l) {
      const double c = C(static_cast<Index>(l), static_cast<Index>(k));
      if (c == 0.0) continue;
      g.eval(l, s.w, gl);
      if (first) {
        s.grad.noalias() = c * gl;
        first = false;
      } else {
        s.grad.noalias() += c * gl;
      }
    }
    if (first) s.grad.setZero();
    s.psi = s.w;
    s.psi -= mu[static_cast<Index>(k)] * s.grad;
  }
  combine(st, &AgentState::psi, &AgentState::w, A);
}

std::vector<Vector> consensus_average(const std::vector<Vector>& values, const Matrix& A, int iters) {
  const std::size_t N = values.size();
  if (N == 0) throw std::invalid_argument("consensus_average: no values");
  require_square_n(A, N, "consensus_average");
  if (!is_doubly_stochastic(A, 1e-10)) throw std::invalid_argument("consensus_average: A must be doubly stochastic");
  if (N > 1 && !(slem(A) < 1.0 - 1e-12)) throw std::invalid_argument("consensus_average: |lambda_2(A)| must be < 1");
  if (iters < 0) throw std::invalid_argument("consensus_average: iters must be >= 0");
  std::vector<AgentState> st(N);
  for (std::size_t k = 0; k < N; ++k) {
    if (values[k].size() != values[0].size()) throw std::invalid_argument("consensus_average: dimension mismatch");
    st[k].w = values[k];
  }
  for (int i = 0; i < iters; ++i) {
    combine(st, &AgentState::w, &AgentState::psi, A);
    for (auto& s : st) s.w.swap(s.psi);
  }
  std::vector<Vector> out;
  out.reserve(N);
  for (auto& s : st) out.push_back(std::move(s.w));
  return out;
}

// ---------------------------------------------------------------- runner

CostModel cost_of(const AgentModel& m) {
  if (const auto* lr = std::get_if<LinearRegressionModel>(&m)) return lr->cost();
  return std::get<LogisticCost>(m);
}

Index dim(const AgentModel& m) {
  return std::visit([](const auto& x) { return x.dim(); }, m);
}

StrategyRunner::StrategyRunner(StrategyConfig cfg, std::vector<AgentModel> agents, GradientMode mode)
    : cfg_(std::move(cfg)), models_(std::move(agents)), mode_(mode) {
  const std::size_t N = models_.size();
  if (N == 0) throw std::invalid_argument("strategy needs at least one agent");
  M_ = asyncnet::dim(models_[0]);
  for (const auto& m : models_) {
    if (asyncnet::dim(m) != M_) throw std::invalid_argument("all agents must share the parameter dimension");
    costs_.push_back(cost_of(m));
    if (mode_ == GradientMode::exact && !std::holds_alternative<LinearRegressionModel>(m))
      throw std::invalid_argument("exact gradient mode requires MSE agents");
  }
  if (cfg_.step_sizes.size() != N) throw std::invalid_argument("need one step-size process per agent");

  const Index n = static_cast<Index>(N);
  auto check_policy = [&](const std::optional<RandomCombinationPolicy>& p, const char* name) {
    if (p && p->size() != n) throw std::invalid_argument(std::string(name) + " has the wrong size");
  };
  check_policy(cfg_.policy, "combination policy");
  check_policy(cfg_.A_o, "A_o");
  check_policy(cfg_.A_1, "A_1");
  check_policy(cfg_.A_2, "A_2");

  const StrategyKind kind = cfg_.kind;
  if (is_distributed(kind)) {
    if (!cfg_.policy) throw std::invalid_argument(to_string(kind) + " requires a combination policy");
    require_connected_mean_graph(cfg_.policy->mean());
  }
  if (kind == StrategyKind::atc_enlarged) {
    if (!cfg_.C) cfg_.C = Matrix::Identity(n, n);
    require_square_n(*cfg_.C, N, "C");
    const auto rep = validate_right_stochastic(*cfg_.C);
    if (!rep.ok) throw std::invalid_argument("C is not right-stochastic: " + rep.summary());
    const Matrix Abar = cfg_.policy->mean();
    for (Index l = 0; l < n; ++l)
      for (Index k = 0; k < n; ++k)
        if ((*cfg_.C)(l, k) > 0.0 && Abar(l, k) == 0.0)
          throw std::invalid_argument("C entry (" + std::to_string(l) + ", " + std::to_string(k) +
                                      ") lies outside the neighborhood of agent " + std::to_string(k));
  }
  if (is_centralized(kind)) {
    if (!cfg_.central_step) cfg_.central_step = cfg_.step_sizes[0];
    if (!cfg_.fusion) cfg_.fusion = FusionSampler::uniform(static_cast<int>(N));
    if (cfg_.fusion->size() != static_cast<int>(N)) throw std::invalid_argument("fusion sampler has the wrong size");
    if (kind != StrategyKind::centralized_random_fusion && cfg_.fusion->scheme() != FusionSampler::Scheme::fixed)
      throw std::invalid_argument(to_string(kind) + " requires deterministic fusion weights");
    if (kind == StrategyKind::centralized_sync && cfg_.central_step->kind() != StepSizeProcess::Kind::constant)
      throw std::invalid_argument("centralized_sync requires a constant step-size");
  }

  states_.assign(is_centralized(kind) ? 1 : N, AgentState(M_));
  samples_.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    if (std::holds_alternative<LinearRegressionModel>(models_[k])) {
      MseSample s;
      s.u = Vector::Zero(M_);
      samples_[k] = s;
    } else {
      samples_[k] = LogisticSample{};
    }
  }
  ctx_.costs = &costs_;
  ctx_.samples = &samples_;
  ctx_.mode = mode_;
  mu_ = Vector::Zero(n);
  A_ = Matrix::Identity(n, n);
  A1_ = Matrix::Identity(n, n);
  A2_ = Matrix::Identity(n, n);
}

void StrategyRunner::reset(const Vector& w0) {
  if (w0.size() != M_) throw std::invalid_argument("initial state has the wrong dimension");
  for (auto& s : states_) {
    s.w = w0;
    s.psi.setZero();
    s.phi.setZero();
    s.grad.setZero();
  }
  iter_ = 0;
}

void StrategyRunner::reset(const std::vector<Vector>& w0) {
  if (w0.size() != states_.size()) throw std::invalid_argument("need one initial state per tracked estimate");
  for (std::size_t k = 0; k < w0.size(); ++k) {
    if (w0[k].size() != M_) throw std::invalid_argument("initial state has the wrong dimension");
    states_[k].w = w0[k];
    states_[k].psi.setZero();
    states_[k].phi.setZero();
    states_[k].grad.setZero();
  }
  iter_ = 0;
}

void StrategyRunner::draw_samples(Rng& rng) {
  if (mode_ == GradientMode::exact) return;
  for (std::size_t k = 0; k < models_.size(); ++k) {
    if (const auto* lr = std::get_if<LinearRegressionModel>(&models_[k])) {
      lr->sample_into(rng, std::get<MseSample>(samples_[k]));
    } else {
      samples_[k] = std::get<LogisticCost>(models_[k]).sample(rng);
    }
  }
}

void StrategyRunner::step(Rng& rng) {
  const StrategyKind kind = cfg_.kind;
  const std::size_t N = models_.size();
  double mu_c = 0.0;
  if (is_centralized(kind)) {
    mu_c = cfg_.central_step->sample(rng);
    cfg_.fusion->sample(rng, pi_);
  } else {
    for (std::size_t k = 0; k < N; ++k) mu_[static_cast<Index>(k)] = cfg_.step_sizes[k].sample(rng);
    if (kind == StrategyKind::unified) {
      if (cfg_.A_o) cfg_.A_o->sample(rng, A_);
      if (cfg_.A_1) cfg_.A_1->sample(rng, A1_);
      if (cfg_.A_2) cfg_.A_2->sample(rng, A2_);
    } else if (cfg_.policy && kind != StrategyKind::ncop) {
      cfg_.policy->sample(rng, A_);
    }
  }
  draw_samples(rng);

  ctx_.costs = &costs_;
  ctx_.samples = &samples_;
  switch (kind) {
    case StrategyKind::centralized_sync:
    case StrategyKind::centralized_random_mu:
    case StrategyKind::centralized_random_fusion:
      apply_centralized(ctx_, states_[0], mu_c, pi_);
      break;
    case StrategyKind::unified:
      apply_unified(ctx_, states_, A_, A1_, A2_, mu_);
      break;
    case StrategyKind::atc_enlarged:
      apply_atc_enlarged(ctx_, states_, A_, *cfg_.C, mu_);
      break;
    default:
      apply_network(kind, ctx_, states_, A_, mu_);
  }

  for (std::size_t k = 0; k < states_.size(); ++k) {
    const Vector& w = states_[k].w;
    if (!w.allFinite() || w.norm() > kDivergenceGuard)
      throw DivergenceError(iter_, static_cast<int>(k),
                            "iterate of agent " + std::to_string(k) + " diverged at iteration " + std::to_string(iter_));
  }
  ++iter_;
}

}  // namespace asyncnet
