#include "asyncnet/sim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace asyncnet {

namespace {

constexpr long kBlock = 16;  // runs per deterministic reduction block
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunOutput {
  Matrix curve;  // T x K
  Vector emse;   // T
  bool diverged = false;
  long div_iter = -1;
  int div_agent = -1;
};

double mean_of(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double se_of(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

// Standard error of the mean of a single correlated series via batch means.
double batch_se(const Eigen::Ref<const Vector>& x, int batches = 10) {
  const Index n = x.size();
  if (n < 2 * batches) return 0.0;
  const Index len = n / batches;
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) means.push_back(x.segment(n - (b + 1) * len, len).mean());
  return se_of(means);
}

double lambda_min_sym(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

std::uint64_t aux_seed(const ExperimentSpec& spec, std::uint64_t tag) { return derive_seed(spec.seed ^ 0xa5a5a5a5ULL, tag); }

Matrix half_hessian(const AgentModel& m, const Vector& w_o, std::uint64_t seed) {
  if (const auto* lr = std::get_if<LinearRegressionModel>(&m)) return 0.5 * lr->cost().hessian();
  return 0.5 * std::get<LogisticCost>(m).estimate_hessian(w_o, {100000, seed});
}

RunOutput simulate_run(const StrategyRunner& proto, const Vector& w0, const Vector& w_o,
                       const std::vector<Matrix>& halfH, long T, std::uint64_t seed) {
  StrategyRunner runner = proto;
  runner.reset(w0);
  Rng rng(seed);
  const std::size_t K = runner.estimates();
  RunOutput out;
  out.curve = Matrix::Zero(T, static_cast<Index>(K));
  out.emse = Vector::Zero(T);
  Vector e(w_o.size());
  for (long i = 0; i < T; ++i) {
    try {
      runner.step(rng);
    } catch (const DivergenceError& d) {
      out.diverged = true;
      out.div_iter = d.iteration();
      out.div_agent = d.agent();
      return out;
    }
    double em = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      e = w_o - runner.states()[k].w;
      out.curve(i, static_cast<Index>(k)) = e.squaredNorm();
      em += e.dot(halfH[k] * e);
    }
    out.emse[i] = em / static_cast<double>(K);
  }
  return out;
}

// log-linear fit of (curve - floor) over 10%..50% of the transient, where the
// transient ends once the curve first drops below 3 x floor.
double fit_rate(const Vector& c, double floor) {
  if (!(floor > 0.0) || !std::isfinite(floor)) return kNaN;
  Index end = c.size();
  for (Index i = 0; i < c.size(); ++i)
    if (c[i] <= 3.0 * floor) {
      end = i;
      break;
    }
  const Index lo = end / 10, hi = end / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (Index i = lo; i < hi; ++i) {
    const double y = c[i] - floor;
    if (!(y > 0.0)) continue;
    const double x = static_cast<double>(i), ly = std::log(y);
    sx += x;
    sy += ly;
    sxx += x * x;
    sxy += x * ly;
    n += 1;
  }
  if (n < 5) return kNaN;
  const double den = n * sxx - sx * sx;
  if (den <= 0.0) return kNaN;
  return std::exp((n * sxy - sx * sy) / den);
}

}  // namespace

Vector resolve_w_o(const ExperimentSpec& spec) {
  if (spec.agents.empty()) throw std::invalid_argument("experiment has no agents");
  const Index M = dim(spec.agents[0]);
  if (spec.w_o) {
    if (spec.w_o->size() != M) throw std::invalid_argument("w_o has the wrong dimension");
    return *spec.w_o;
  }
  bool all_mse = true;
  for (const auto& a : spec.agents) all_mse = all_mse && std::holds_alternative<LinearRegressionModel>(a);
  if (all_mse) {
    Matrix H = Matrix::Zero(M, M);
    Vector b = Vector::Zero(M);
    for (const auto& a : spec.agents) {
      const MseCost c = std::get<LinearRegressionModel>(a).cost();
      H += c.hessian();
      b += 2.0 * c.r_du();
    }
    return H.ldlt().solve(b);
  }
  // Newton on the aggregate risk; logistic terms use fixed Monte Carlo sets.
  std::vector<std::vector<LogisticSample>> sets(spec.agents.size());
  for (std::size_t k = 0; k < spec.agents.size(); ++k)
    if (const auto* lc = std::get_if<LogisticCost>(&spec.agents[k])) {
      Rng rng(aux_seed(spec, 100 + k));
      sets[k] = lc->draw(100000, rng);
    }
  Vector w = Vector::Zero(M);
  for (int it = 0; it < 100; ++it) {
    Vector g = Vector::Zero(M);
    Matrix H = Matrix::Zero(M, M);
    for (std::size_t k = 0; k < spec.agents.size(); ++k) {
      if (const auto* lr = std::get_if<LinearRegressionModel>(&spec.agents[k])) {
        const MseCost c = lr->cost();
        g += c.gradient(w);
        H += c.hessian();
      } else {
        const auto& lc = std::get<LogisticCost>(spec.agents[k]);
        g += lc.empirical_gradient(w, sets[k]);
        H += lc.empirical_hessian(w, sets[k]);
      }
    }
    const Vector step = H.ldlt().solve(g);
    w -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-12 * (1.0 + w.lpNorm<Eigen::Infinity>())) break;
  }
  return w;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (spec.iterations < 2) throw std::invalid_argument("iterations must be >= 2");
  const long T = spec.iterations;
  const long W = spec.window > 0 ? spec.window : std::max<long>(2, T / 4);
  if (W >= T) throw std::invalid_argument("steady-state window must be smaller than the iteration count");
  if (W < 2) throw std::invalid_argument("steady-state window must be >= 2");

  const StrategyRunner proto(spec.strategy, spec.agents, spec.gradient_mode);
  const Vector w_o = resolve_w_o(spec);
  const Vector w0 = spec.w_init ? *spec.w_init : Vector::Zero(w_o.size());
  if (w0.size() != w_o.size()) throw std::invalid_argument("initial state has the wrong dimension");

  const std::size_t N = spec.agents.size(), K = proto.estimates();
  std::vector<Matrix> halfH_agent;
  for (std::size_t k = 0; k < N; ++k) halfH_agent.push_back(half_hessian(spec.agents[k], w_o, aux_seed(spec, 200 + k)));
  std::vector<Matrix> halfH;
  if (K == N) {
    halfH = halfH_agent;
  } else {
    Matrix avg = Matrix::Zero(w_o.size(), w_o.size());
    for (const auto& h : halfH_agent) avg += h;
    halfH.push_back(avg / static_cast<double>(N));
  }

  unsigned threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads) : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(kBlock)));

  ExperimentResult res;
  SteadyStateReport& rep = res.report;
  rep.digest = spec.digest;
  rep.strategy = to_string(spec.strategy.kind);
  rep.runs = spec.runs;
  rep.iterations = T;
  rep.window = W;

  Matrix sum_curve = Matrix::Zero(T, static_cast<Index>(K));
  Vector sum_emse = Vector::Zero(T);
  // Per-run window means: [estimate][run], plus network and emse.
  std::vector<std::vector<double>> wm(K), wm_half(K);
  std::vector<double> net_w, net_half, emse_w;

  std::vector<RunOutput> block(static_cast<std::size_t>(kBlock));
  RunOutput last;
  for (long base = 0; base < spec.runs && !rep.diverged; base += kBlock) {
    const long count = std::min(kBlock, spec.runs - base);
    auto work = [&](unsigned t) {
      for (long j = t; j < count; j += threads)
        block[static_cast<std::size_t>(j)] =
            simulate_run(proto, w0, w_o, halfH, T, derive_seed(spec.seed, static_cast<std::uint64_t>(base + j)));
    };
    if (threads == 1 || count == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
      for (auto& th : pool) th.join();
    }
    for (long j = 0; j < count; ++j) {
      RunOutput& r = block[static_cast<std::size_t>(j)];
      if (r.diverged) {
        rep.diverged = true;
        rep.diverged_run = base + j;
        rep.diverged_iteration = r.div_iter;
        rep.diverged_agent = r.div_agent;
        break;
      }
      sum_curve += r.curve;
      sum_emse += r.emse;
      const Vector net = r.curve.rowwise().mean();
      for (std::size_t k = 0; k < K; ++k) {
        wm[k].push_back(r.curve.col(static_cast<Index>(k)).tail(W).mean());
        wm_half[k].push_back(r.curve.col(static_cast<Index>(k)).tail(W / 2).mean());
      }
      net_w.push_back(net.tail(W).mean());
      net_half.push_back(net.tail(W / 2).mean());
      emse_w.push_back(r.emse.tail(W).mean());
      if (spec.runs == 1) last = std::move(r);
    }
  }

  if (rep.diverged) {
    const long done = static_cast<long>(net_w.size());
    res.curve.msd = done > 0 ? Matrix(sum_curve / static_cast<double>(done)) : Matrix(Matrix::Zero(0, static_cast<Index>(K)));
    res.curve.network = res.curve.msd.rowwise().mean();
    res.curve.emse = done > 0 ? Vector(sum_emse / static_cast<double>(done)) : Vector();
    rep.msd = rep.msd_se = rep.emse = rep.emse_se = rep.alpha_hat = kNaN;
    rep.msd_agent.assign(K, kNaN);
    rep.msd_agent_se.assign(K, kNaN);
    rep.converged = false;
    return res;
  }

  const double R = static_cast<double>(spec.runs);
  res.curve.msd = sum_curve / R;
  res.curve.network = res.curve.msd.rowwise().mean();
  res.curve.emse = sum_emse / R;

  double msd_half = 0.0, msd_half_se = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    rep.msd_agent.push_back(mean_of(wm[k]));
    rep.msd_agent_se.push_back(spec.runs > 1 ? se_of(wm[k]) : batch_se(last.curve.col(static_cast<Index>(k)).tail(W)));
  }
  rep.msd = mean_of(net_w);
  rep.emse = mean_of(emse_w);
  msd_half = mean_of(net_half);
  if (spec.runs > 1) {
    rep.msd_se = se_of(net_w);
    rep.emse_se = se_of(emse_w);
    msd_half_se = se_of(net_half);
  } else {
    const Vector net = last.curve.rowwise().mean();
    rep.msd_se = batch_se(net.tail(W));
    rep.emse_se = batch_se(last.emse.tail(W));
    msd_half_se = batch_se(net.tail(W / 2));
  }
  const double combined = std::sqrt(rep.msd_se * rep.msd_se + msd_half_se * msd_half_se);
  rep.converged = std::abs(rep.msd - msd_half) < 2.0 * combined || rep.msd == msd_half;

  rep.alpha_hat = fit_rate(res.curve.network, rep.msd);
  for (Index i = 0; i < res.curve.network.size(); ++i)
    if (res.curve.network[i] <= 2.0 * rep.msd) {
      rep.time_to_2x = static_cast<long>(i);
      break;
    }
  return res;
}

// ---------------------------------------------------------------- theory

AgentMoments agent_moments(const AgentModel& m, const Vector& w_o, const MonteCarloOptions& mc) {
  AgentMoments am;
  if (const auto* lr = std::get_if<LinearRegressionModel>(&m)) {
    const MseCost c = lr->cost();
    am.H = c.hessian();
    // s(w_o) = -2 u v; assumes every agent shares w_o.
    am.R_s = 4.0 * lr->sigma_v2() * lr->R_u();
    return am;
  }
  const auto& lc = std::get<LogisticCost>(m);
  Rng rng(mc.seed);
  const auto xs = lc.draw(mc.samples, rng);
  am.H = lc.empirical_hessian(w_o, xs);
  const Index M = lc.dim();
  Vector mean = Vector::Zero(M), g(M);
  Matrix sq = Matrix::Zero(M, M);
  for (const auto& s : xs) {
    lc.stochastic_gradient_into(w_o, s, g);
    mean += g;
    sq.noalias() += g * g.transpose();
  }
  const double n = static_cast<double>(xs.size());
  mean /= n;
  am.R_s = sq / n - mean * mean.transpose();
  am.R_s = 0.5 * (am.R_s + am.R_s.transpose()).eval();
  return am;
}

namespace {

bool all_mse(const ExperimentSpec& spec) {
  for (const auto& a : spec.agents)
    if (!std::holds_alternative<LinearRegressionModel>(a)) return false;
  return true;
}

std::vector<Matrix> regressor_covariances(const ExperimentSpec& spec) {
  std::vector<Matrix> R;
  for (const auto& a : spec.agents) R.push_back(std::get<LinearRegressionModel>(a).R_u());
  return R;
}

bool is_identity(const std::optional<RandomCombinationPolicy>& p) {
  if (!p) return true;
  const Index N = p->size();
  return p->nominal().isApprox(Matrix::Identity(N, N), 0.0) || (p->nominal() - Matrix::Identity(N, N)).isZero(0.0);
}

void fill_network(TheoryRecord& t, const ExperimentSpec& spec, StrategyKind eff, const RandomCombinationPolicy& policy,
                  const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, const Vector& mu_bar,
                  const Vector& s2) {
  const Matrix A_bar = policy.mean();
  const PerronData pd = perron_data(A_bar, policy.kron_covariance());
  const NetworkTheory nt = network_theory(H, R_s, mu_bar, s2, pd);
  t.msd = nt.msd;
  t.alpha = nt.alpha;
  for (Index k = 0; k < pd.p_bar.size(); ++k) {
    t.inputs["p_bar_" + std::to_string(k)] = pd.p_bar[k];
    t.inputs["p_c_kk_" + std::to_string(k)] = pd.P_c(k, k);
  }
  if (all_mse(spec)) {
    const MeanStability ms = mean_stability_matrix(eff, A_bar, mu_bar, regressor_covariances(spec));
    t.spectral_radius = ms.spectral_radius;
    if (ms.spectral_radius >= 1.0) t.note = "mean-error recursion is unstable; MSD prediction does not apply";
  }
  if (eff == StrategyKind::consensus || eff == StrategyKind::cta)
    t.note += std::string(t.note.empty() ? "" : "; ") + "network MSD formula shared with ATC diffusion";
}

}  // namespace

TheoryRecord predict(const ExperimentSpec& spec) {
  const StrategyRunner proto(spec.strategy, spec.agents, spec.gradient_mode);  // validates
  const Vector w_o = resolve_w_o(spec);
  const std::size_t N = spec.agents.size();
  const Index n = static_cast<Index>(N);

  std::vector<Matrix> H, R_s;
  for (std::size_t k = 0; k < N; ++k) {
    const AgentMoments am = agent_moments(spec.agents[k], w_o, {100000, aux_seed(spec, 300 + k)});
    H.push_back(am.H);
    R_s.push_back(am.R_s);
  }
  Vector mu_bar(n), s2(n);
  for (Index k = 0; k < n; ++k) {
    mu_bar[k] = spec.strategy.step_sizes[static_cast<std::size_t>(k)].mean();
    s2[k] = spec.strategy.step_sizes[static_cast<std::size_t>(k)].variance();
  }

  TheoryRecord t;
  t.digest = spec.digest;
  t.strategy = to_string(spec.strategy.kind);
  t.inputs["N"] = static_cast<double>(N);
  t.inputs["M"] = static_cast<double>(w_o.size());

  StrategyKind eff = spec.strategy.kind;
  const RandomCombinationPolicy* policy = spec.strategy.policy ? &*spec.strategy.policy : nullptr;
  if (eff == StrategyKind::unified) {
    const bool o = !is_identity(spec.strategy.A_o), a1 = !is_identity(spec.strategy.A_1),
               a2 = !is_identity(spec.strategy.A_2);
    const int count = int(o) + int(a1) + int(a2);
    if (count == 0) {
      eff = StrategyKind::ncop;
    } else if (count == 1) {
      eff = o ? StrategyKind::consensus : a1 ? StrategyKind::cta : StrategyKind::atc;
      policy = o ? &*spec.strategy.A_o : a1 ? &*spec.strategy.A_1 : &*spec.strategy.A_2;
    } else {
      t.available = false;
      t.note = "no closed form for this unified configuration";
      t.msd = kNaN;
      return t;
    }
  }
  if (eff == StrategyKind::atc_enlarged) {
    const Matrix& C = *proto.config().C;
    if (!C.isApprox(Matrix::Identity(n, n)) && !(C - Matrix::Identity(n, n)).isZero(0.0)) {
      t.available = false;
      t.note = "no closed form for enlarged cooperation with C != I";
      t.msd = kNaN;
      return t;
    }
    eff = StrategyKind::atc;
  }

  switch (eff) {
    case StrategyKind::ncop: {
      t.msd = ncop_average_msd(H, R_s, mu_bar, s2);
      double er = 0.0, alpha = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const Index i = static_cast<Index>(k);
        const SingleAgentTheory sa = single_agent_theory(H[k], R_s[k], mu_bar[i], s2[i]);
        er += sa.er / static_cast<double>(N);
        alpha = std::max(alpha, sa.alpha);
        t.inputs["msd_" + std::to_string(k)] = sa.msd;
      }
      t.er = er;
      t.alpha = alpha;
      if (all_mse(spec))
        t.spectral_radius =
            mean_stability_matrix(StrategyKind::ncop, Matrix::Identity(n, n), mu_bar, regressor_covariances(spec))
                .spectral_radius;
      break;
    }
    case StrategyKind::centralized_sync:
    case StrategyKind::centralized_random_mu:
    case StrategyKind::centralized_random_fusion: {
      const StepSizeProcess& cs = *proto.config().central_step;
      const FusionSampler& fs = *proto.config().fusion;
      Vector pi_bar, pi_var;
      if (fs.scheme() == FusionSampler::Scheme::fixed) {
        pi_bar = fs.fixed_weights();
        pi_var = Vector::Zero(n);
      } else {
        const auto m = fs.measure(1000000, aux_seed(spec, 400));
        pi_bar = m.mean;
        pi_var = m.variance;
        // Renormalize the measured mean onto the simplex.
        pi_bar /= pi_bar.sum();
        if (((pi_bar.array() - 1.0 / static_cast<double>(n)).abs() < 5e-3).all())
          pi_bar = Vector::Constant(n, 1.0 / static_cast<double>(n));
        t.inputs["sigma_pi2_mean"] = pi_var.mean();
      }
      Matrix Hsum = Matrix::Zero(H[0].rows(), H[0].cols());
      for (const auto& h : H) Hsum += h;
      const CentralizedTheory ct = centralized_theory(H, R_s, cs.mean(), cs.variance(), pi_bar, pi_var, lambda_min_sym(Hsum));
      t.msd = ct.msd;
      t.alpha = ct.alpha;
      t.inputs["mu_x"] = ct.mu_x;
      t.inputs["msd_ncop_av"] = ncop_average_msd(H, R_s, Vector::Constant(n, cs.mean()), Vector::Constant(n, cs.variance()));
      break;
    }
    case StrategyKind::consensus:
    case StrategyKind::cta:
    case StrategyKind::atc:
      if (!policy) throw std::invalid_argument("network theory needs a combination policy");
      fill_network(t, spec, eff, *policy, H, R_s, mu_bar, s2);
      break;
    default:
      throw std::invalid_argument("no theory for strategy " + to_string(eff));
  }
  return t;
}

Comparison compare_theory(const SteadyStateReport& report, const TheoryRecord& theory,
                          const std::map<std::string, double>& tolerance) {
  if (report.digest != theory.digest)
    throw std::invalid_argument("config digest mismatch: report " + report.digest + " vs theory " + theory.digest);
  auto tol = [&](const char* key, double def) {
    auto it = tolerance.find(key);
    return it == tolerance.end() ? def : it->second;
  };
  Comparison c;
  if (report.diverged) {
    c.comparable = false;
    c.reason = "not comparable: simulation diverged at iteration " + std::to_string(report.diverged_iteration);
    return c;
  }
  if (!theory.available || !std::isfinite(theory.msd)) {
    c.comparable = false;
    c.reason = "not comparable: " + (theory.note.empty() ? std::string("no theory prediction") : theory.note);
    return c;
  }
  auto add = [&](const std::string& q, double emp, double th, double tl) {
    ComparisonRow r;
    r.quantity = q;
    r.empirical = emp;
    r.theory = th;
    r.rel_error = th != 0.0 ? (emp - th) / th : (emp == 0.0 ? 0.0 : kNaN);
    r.tolerance = tl;
    r.pass = std::isfinite(r.rel_error) && std::abs(r.rel_error) <= tl;
    c.rows.push_back(r);
  };
  add("msd", report.msd, theory.msd, tol("msd", 0.2));
  if (theory.er) add("emse", report.emse, *theory.er, tol("emse", 0.2));
  if (theory.alpha && std::isfinite(report.alpha_hat)) add("rate", 1.0 - report.alpha_hat, 1.0 - *theory.alpha, tol("rate", 0.5));
  c.pass = std::all_of(c.rows.begin(), c.rows.end(), [](const ComparisonRow& r) { return r.pass; });
  return c;
}

double equalization_check(const SteadyStateReport& report) {
  if (report.diverged) throw std::invalid_argument("equalization_check: report diverged");
  if (report.msd_agent.empty()) throw std::invalid_argument("equalization_check: no agents");
  if (report.msd_agent.size() == 1) return 0.0;
  const double av = mean_of(report.msd_agent);
  double worst = 0.0;
  for (double m : report.msd_agent) worst = std::max(worst, std::abs(m - av) / av);
  return worst;
}

}  // namespace asyncnet
