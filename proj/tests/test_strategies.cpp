#include "asyncnet/strategies.hpp"
#include "asyncnet/theory.hpp"

#include <doctest.h>

#include <cmath>

using namespace asyncnet;

namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix A(2, 2);
  A << a, b, c, d;
  return A;
}

// Fixed costs and one sample per agent for single-step checks.
struct Fixture {
  std::vector<LinearRegressionModel> models;
  std::vector<CostModel> costs;
  std::vector<DataSample> samples;
  GradientContext ctx;

  Fixture(int N, int M, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n01;
    for (int k = 0; k < N; ++k) {
      Vector w_o(M);
      for (int i = 0; i < M; ++i) w_o(i) = n01(rng);
      Matrix R = Matrix::Identity(M, M) * (1.0 + 0.2 * k);
      models.emplace_back(w_o, R, 0.01 * (k + 1));
      costs.push_back(models.back().cost());
      samples.push_back(models.back().sample(rng));
    }
    ctx.costs = &costs;
    ctx.samples = &samples;
  }

  const MseSample& s(int k) const { return std::get<MseSample>(samples[static_cast<std::size_t>(k)]); }
};

std::vector<AgentState> random_states(int N, int M, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> n01;
  std::vector<AgentState> st(static_cast<std::size_t>(N), AgentState(M));
  for (auto& s : st)
    for (int i = 0; i < M; ++i) s.w(i) = n01(rng);
  return st;
}

// Scalar LMS gradient 2 u (u.w - d), written out entry by entry.
std::vector<double> lms_grad(const MseSample& s, const std::vector<double>& w) {
  double e = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) e += s.u(static_cast<Index>(i)) * w[i];
  e -= s.d;
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = 2.0 * e * s.u(static_cast<Index>(i));
  return g;
}

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::vector<AgentModel> lms_agents(int N, int M, const std::vector<double>& s2) {
  std::vector<AgentModel> a;
  const Vector w_o = Vector::Constant(M, 1.0 / std::sqrt(double(M)));
  for (int k = 0; k < N; ++k) a.emplace_back(LinearRegressionModel(w_o, Matrix::Identity(M, M), s2[std::size_t(k)]));
  return a;
}

StrategyConfig make_cfg(StrategyKind kind, int N, const StepSizeProcess& mu,
                        std::optional<RandomCombinationPolicy> pol = std::nullopt) {
  StrategyConfig c;
  c.kind = kind;
  c.step_sizes.assign(static_cast<std::size_t>(N), mu);
  c.policy = std::move(pol);
  return c;
}

bool same_states(const std::vector<AgentState>& a, const std::vector<AgentState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (!(a[k].w.array() == b[k].w.array()).all()) return false;
  return true;
}

}  // namespace

TEST_CASE("strategy names round-trip") {
  for (auto k : {StrategyKind::ncop, StrategyKind::centralized_sync, StrategyKind::centralized_random_mu,
                 StrategyKind::centralized_random_fusion, StrategyKind::consensus, StrategyKind::cta, StrategyKind::atc,
                 StrategyKind::unified, StrategyKind::atc_enlarged})
    CHECK(strategy_from_string(to_string(k)) == k);
  CHECK_THROWS(strategy_from_string("gossip"));
}

TEST_CASE("single step: sleeping agent and LMS form") {
  Fixture f(1, 3, 1);
  AgentState s(3);
  s.w << 0.1, -0.2, 0.3;
  const Vector w0 = s.w;
  apply_single(f.ctx, 0, s, 0.0);
  CHECK((s.w.array() == w0.array()).all());

  const double mu = 0.05;
  apply_single(f.ctx, 0, s, mu);
  const MseSample& x = f.s(0);
  const double err = x.d - x.u.dot(w0);
  for (Index i = 0; i < 3; ++i) CHECK(s.w(i) == w0(i) + mu * (2.0 * err * x.u(i)));
}

TEST_CASE("single step with exact gradients contracts for mu < 1/delta") {
  Fixture f(1, 3, 2);
  GradientContext g = f.ctx;
  g.mode = GradientMode::exact;
  const Vector w_o = std::get<MseCost>(f.costs[0]).minimizer();
  AgentState s(3);
  double prev = (s.w - w_o).norm();
  for (int i = 0; i < 10; ++i) {
    apply_single(g, 0, s, 0.9 / 2.0);
    const double now = (s.w - w_o).norm();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("centralized step: N = 1 degeneracy and straight-line oracle") {
  Fixture one(1, 2, 3);
  AgentState a(2), b(2);
  a.w << 0.5, -0.5;
  b.w = a.w;
  apply_single(one.ctx, 0, a, 0.1);
  apply_centralized(one.ctx, b, 0.1, Vector::Ones(1));
  CHECK((a.w.array() == b.w.array()).all());

  const int N = 4;
  Fixture f(N, 3, 4);
  AgentState s(3);
  s.w << 0.2, 0.1, -0.1;
  const std::vector<double> w0 = to_std(s.w);
  const double mu = 0.03;
  apply_centralized(f.ctx, s, mu, Vector::Constant(N, 1.0 / N));
  std::vector<double> sum(3, 0.0);
  for (int k = 0; k < N; ++k) {
    const auto g = lms_grad(f.s(k), w0);
    for (int i = 0; i < 3; ++i) sum[std::size_t(i)] += g[std::size_t(i)] / N;
  }
  for (int i = 0; i < 3; ++i) CHECK(s.w(i) == doctest::Approx(w0[std::size_t(i)] - mu * sum[std::size_t(i)]).epsilon(1e-14));

  CHECK_THROWS(apply_centralized(f.ctx, s, mu, Vector::Constant(N, 0.3)));
  Vector bad = Vector::Constant(N, 0.5);
  bad(0) = -0.5;
  CHECK_THROWS(apply_centralized(f.ctx, s, mu, bad));
}

TEST_CASE("fusion sampler: simplex, mean and zero row sums of the covariance") {
  const int N = 5;
  const FusionSampler f = FusionSampler::on_off(N, 0.6);
  Rng rng(10);
  Vector pi;
  for (int i = 0; i < 10000; ++i) {
    f.sample(rng, pi);
    REQUIRE(pi.minCoeff() >= 0.0);
    REQUIRE(std::abs(pi.sum() - 1.0) < 1e-15);
  }
  const long n = 1000000;
  const auto m = f.measure(n, 77);
  for (Index k = 0; k < N; ++k) {
    const double se = std::sqrt(m.variance(k) / n);
    CHECK(std::abs(m.mean(k) - 1.0 / N) < 4 * se);
  }
  CHECK((m.covariance * Vector::Ones(N)).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(m.variance.minCoeff() > 0.0);
  const auto u = FusionSampler::uniform(N).measure(100, 1);
  CHECK(u.variance.norm() < 1e-15);
}

TEST_CASE("identity combination collapses every kind to ncop") {
  const int N = 3, M = 2;
  Fixture f(N, M, 5);
  const Vector mu = Vector::Constant(N, 0.07);
  const Matrix I = Matrix::Identity(N, N);
  auto ref = random_states(N, M, 6);
  apply_network(StrategyKind::ncop, f.ctx, ref, I, mu);
  for (auto kind : {StrategyKind::consensus, StrategyKind::cta, StrategyKind::atc}) {
    auto st = random_states(N, M, 6);
    apply_network(kind, f.ctx, st, I, mu);
    CHECK(same_states(st, ref));
  }
  auto st = random_states(N, M, 6);
  apply_unified(f.ctx, st, I, I, I, mu);
  CHECK(same_states(st, ref));
}

TEST_CASE("ATC with zero step-sizes is pure averaging") {
  const int N = 3, M = 2;
  Fixture f(N, M, 7);
  const Matrix A = metropolis_weights(ring_adjacency(N));
  auto st = random_states(N, M, 8);
  const auto before = st;
  apply_network(StrategyKind::atc, f.ctx, st, A, Vector::Zero(N));
  for (int k = 0; k < N; ++k) {
    Vector avg = Vector::Zero(M);
    for (int l = 0; l < N; ++l) avg += A(l, k) * before[std::size_t(l)].w;
    CHECK((st[std::size_t(k)].w - avg).norm() < 1e-15);
  }
}

TEST_CASE("N = 2 network steps match a scalar oracle") {
  const int M = 2;
  Fixture f(2, M, 9);
  const Matrix A = mat2(0.7, 0.2, 0.3, 0.8);
  Vector mu(2);
  mu << 0.05, 0.08;
  const auto init = random_states(2, M, 10);
  std::vector<std::vector<double>> w0{to_std(init[0].w), to_std(init[1].w)};
  auto mix = [&](const std::vector<std::vector<double>>& v, int k) {
    std::vector<double> out(M, 0.0);
    for (int l = 0; l < 2; ++l)
      for (int i = 0; i < M; ++i) out[std::size_t(i)] += A(l, k) * v[std::size_t(l)][std::size_t(i)];
    return out;
  };

  SUBCASE("consensus: gradient at w, not psi") {
    auto st = init;
    apply_network(StrategyKind::consensus, f.ctx, st, A, mu);
    for (int k = 0; k < 2; ++k) {
      const auto psi = mix(w0, k);
      const auto g = lms_grad(f.s(k), w0[std::size_t(k)]);
      for (int i = 0; i < M; ++i)
        CHECK(std::abs(st[std::size_t(k)].w(i) - (psi[std::size_t(i)] - mu(k) * g[std::size_t(i)])) < 1e-14);
    }
  }
  SUBCASE("cta: gradient at psi") {
    auto st = init;
    apply_network(StrategyKind::cta, f.ctx, st, A, mu);
    for (int k = 0; k < 2; ++k) {
      const auto psi = mix(w0, k);
      const auto g = lms_grad(f.s(k), psi);
      for (int i = 0; i < M; ++i)
        CHECK(std::abs(st[std::size_t(k)].w(i) - (psi[std::size_t(i)] - mu(k) * g[std::size_t(i)])) < 1e-14);
    }
  }
  SUBCASE("atc: adapt then combine") {
    auto st = init;
    apply_network(StrategyKind::atc, f.ctx, st, A, mu);
    std::vector<std::vector<double>> psi(2, std::vector<double>(M));
    for (int k = 0; k < 2; ++k) {
      const auto g = lms_grad(f.s(k), w0[std::size_t(k)]);
      for (int i = 0; i < M; ++i) psi[std::size_t(k)][std::size_t(i)] = w0[std::size_t(k)][std::size_t(i)] - mu(k) * g[std::size_t(i)];
    }
    for (int k = 0; k < 2; ++k) {
      const auto w = mix(psi, k);
      for (int i = 0; i < M; ++i) CHECK(std::abs(st[std::size_t(k)].w(i) - w[std::size_t(i)]) < 1e-14);
    }
  }
  SUBCASE("atc_enlarged with a gradient-sharing matrix") {
    const Matrix C = mat2(0.6, 0.4, 0.25, 0.75);
    auto st = init;
    apply_atc_enlarged(f.ctx, st, A, C, mu);
    std::vector<std::vector<double>> psi(2, std::vector<double>(M));
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < M; ++i) psi[std::size_t(k)][std::size_t(i)] = w0[std::size_t(k)][std::size_t(i)];
      for (int l = 0; l < 2; ++l) {
        const auto g = lms_grad(f.s(l), w0[std::size_t(k)]);
        for (int i = 0; i < M; ++i) psi[std::size_t(k)][std::size_t(i)] -= mu(k) * C(l, k) * g[std::size_t(i)];
      }
    }
    for (int k = 0; k < 2; ++k) {
      const auto w = mix(psi, k);
      for (int i = 0; i < M; ++i) CHECK(std::abs(st[std::size_t(k)].w(i) - w[std::size_t(i)]) < 1e-14);
    }
  }
}

TEST_CASE("atc_enlarged: C = I is ATC, full uniform C is centralized per agent") {
  const int N = 4, M = 3;
  Fixture f(N, M, 11);
  const Vector mu = Vector::Constant(N, 0.04);
  const Matrix A = metropolis_weights(ring_adjacency(N));
  auto a = random_states(N, M, 12), b = a;
  apply_network(StrategyKind::atc, f.ctx, a, A, mu);
  apply_atc_enlarged(f.ctx, b, A, Matrix::Identity(N, N), mu);
  CHECK(same_states(a, b));

  const Matrix U = Matrix::Constant(N, N, 1.0 / N);
  std::vector<AgentState> st(N, AgentState(M));
  for (auto& s : st) s.w << 0.3, -0.1, 0.2;
  AgentState c = st[0];
  apply_atc_enlarged(f.ctx, st, U, U, mu);
  apply_centralized(f.ctx, c, mu(0), Vector::Constant(N, 1.0 / N));
  for (const auto& s : st) CHECK((s.w - c.w).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("unified form reproduces named strategies bit-for-bit") {
  const int N = 4, M = 2;
  const Matrix A = metropolis_weights(ring_adjacency(N));
  const Matrix I = Matrix::Identity(N, N);
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.01, 0.1);
  auto st_named = random_states(N, M, 14);
  auto st_c = st_named, st_a = st_named, st_t = st_named;
  auto ref_c = st_named, ref_a = st_named, ref_t = st_named;
  for (int i = 0; i < 100; ++i) {
    Fixture f(N, M, 1000 + std::uint64_t(i));
    Vector mu(N);
    for (int k = 0; k < N; ++k) mu(k) = u(rng);
    apply_network(StrategyKind::consensus, f.ctx, ref_c, A, mu);
    apply_unified(f.ctx, st_c, A, I, I, mu);
    apply_network(StrategyKind::atc, f.ctx, ref_a, A, mu);
    apply_unified(f.ctx, st_a, I, I, A, mu);
    apply_network(StrategyKind::cta, f.ctx, ref_t, A, mu);
    apply_unified(f.ctx, st_t, I, A, I, mu);
  }
  CHECK(same_states(st_c, ref_c));
  CHECK(same_states(st_a, ref_a));
  CHECK(same_states(st_t, ref_t));
}

TEST_CASE("unified runner matches named runners under random policies") {
  const int N = 4, M = 3;
  const auto agents = lms_agents(N, M, {0.01, 0.02, 0.03, 0.04});
  const RandomCombinationPolicy pol(metropolis_weights(ring_adjacency(N)), 0.6);
  const auto mu = StepSizeProcess::bernoulli(0.05, 0.7);
  struct Case {
    StrategyKind named;
    int slot;  // 0 = A_o, 1 = A_1, 2 = A_2
  };
  for (Case c : {Case{StrategyKind::consensus, 0}, Case{StrategyKind::cta, 1}, Case{StrategyKind::atc, 2}}) {
    StrategyRunner named(make_cfg(c.named, N, mu, pol), agents);
    StrategyConfig uc = make_cfg(StrategyKind::unified, N, mu);
    (c.slot == 0 ? uc.A_o : c.slot == 1 ? uc.A_1 : uc.A_2) = pol;
    StrategyRunner unified(uc, agents);
    named.reset(Vector::Zero(M));
    unified.reset(Vector::Zero(M));
    Rng r1(99), r2(99);
    for (int i = 0; i < 100; ++i) {
      named.step(r1);
      unified.step(r2);
    }
    CHECK(same_states(named.states(), unified.states()));
  }
}

TEST_CASE("runner determinism for every kind") {
  const int N = 3, M = 2;
  const auto agents = lms_agents(N, M, {0.01, 0.02, 0.03});
  const RandomCombinationPolicy pol(metropolis_weights(full_adjacency(N)), 0.7);
  for (auto kind : {StrategyKind::ncop, StrategyKind::centralized_sync, StrategyKind::centralized_random_mu,
                    StrategyKind::centralized_random_fusion, StrategyKind::consensus, StrategyKind::cta,
                    StrategyKind::atc, StrategyKind::unified, StrategyKind::atc_enlarged}) {
    StrategyConfig cfg = make_cfg(kind, N, StepSizeProcess::constant(0.02), pol);
    if (kind == StrategyKind::centralized_random_mu) cfg.central_step = StepSizeProcess::bernoulli(0.02, 0.5);
    if (kind == StrategyKind::centralized_random_fusion) cfg.fusion = FusionSampler::on_off(N, 0.5);
    if (kind == StrategyKind::unified) cfg.A_2 = pol;
    if (kind == StrategyKind::atc_enlarged) cfg.C = Matrix::Constant(N, N, 1.0 / N);
    StrategyRunner a(cfg, agents), b(cfg, agents);
    a.reset(Vector::Zero(M));
    b.reset(Vector::Zero(M));
    Rng r1(5), r2(5);
    for (int i = 0; i < 200; ++i) {
      a.step(r1);
      b.step(r2);
    }
    CHECK_MESSAGE(same_states(a.states(), b.states()), to_string(kind));
    CHECK(a.estimates() == (is_centralized(kind) ? 1u : std::size_t(N)));
  }
}

TEST_CASE("noiseless exact-gradient runs converge to w_o") {
  const int N = 3, M = 2;
  const auto agents = lms_agents(N, M, {0.0, 0.0, 0.0});
  const Vector w_o = Vector::Constant(M, 1.0 / std::sqrt(double(M)));
  const RandomCombinationPolicy pol(metropolis_weights(ring_adjacency(N)), 0.8);
  for (auto kind : {StrategyKind::ncop, StrategyKind::centralized_sync, StrategyKind::consensus, StrategyKind::cta,
                    StrategyKind::atc, StrategyKind::atc_enlarged}) {
    StrategyConfig cfg = make_cfg(kind, N, StepSizeProcess::bernoulli(0.1, 0.8), pol);
    if (kind == StrategyKind::centralized_sync) cfg.central_step = StepSizeProcess::constant(0.1);
    StrategyRunner r(cfg, agents, GradientMode::exact);
    r.reset(Vector::Zero(M));
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) r.step(rng);
    for (const auto& s : r.states()) CHECK_MESSAGE((s.w - w_o).norm() < 1e-8, to_string(kind));
  }
}

TEST_CASE("sleeping network reaches a bounded consensus of the initial states") {
  const int N = 5, M = 2;
  const auto agents = lms_agents(N, M, std::vector<double>(N, 0.01));
  const RandomCombinationPolicy pol(metropolis_weights(ring_adjacency(N)), 0.7);
  for (auto kind : {StrategyKind::atc, StrategyKind::cta}) {
    StrategyRunner r(make_cfg(kind, N, StepSizeProcess::constant(0.0), pol), agents);
    std::vector<Vector> w0;
    for (int k = 0; k < N; ++k) w0.push_back(Vector::Constant(M, double(k)));
    r.reset(w0);
    Rng rng(4);
    for (int i = 0; i < 2000; ++i) {
      r.step(rng);
      for (const auto& s : r.states()) REQUIRE(s.w.lpNorm<Eigen::Infinity>() <= double(N - 1) + 1e-12);
    }
    for (const auto& s : r.states()) CHECK((s.w - r.states()[0].w).norm() < 1e-8);
  }
}

TEST_CASE("mean-error vectors follow the mean stability matrix") {
  const int N = 2, M = 2, runs = 10000, T = 15;
  const auto agents = lms_agents(N, M, {0.01, 0.05});
  const Vector w_o = Vector::Constant(M, 1.0 / std::sqrt(double(M)));
  const RandomCombinationPolicy pol(mat2(0.6, 0.3, 0.4, 0.7), 0.5);
  const auto step = StepSizeProcess::bernoulli(0.1, 0.6);
  for (auto kind : {StrategyKind::atc, StrategyKind::cta, StrategyKind::consensus, StrategyKind::ncop}) {
    Matrix sum = Matrix::Zero(N * M, T), sq = Matrix::Zero(N * M, T);
    StrategyRunner r(make_cfg(kind, N, step, pol), agents);
    for (int run = 0; run < runs; ++run) {
      r.reset(Vector::Zero(M));
      Rng rng(derive_seed(42, std::uint64_t(run)));
      for (int i = 0; i < T; ++i) {
        r.step(rng);
        for (int k = 0; k < N; ++k) {
          const Vector e = w_o - r.states()[std::size_t(k)].w;
          sum.block(k * M, i, M, 1) += e;
          sq.block(k * M, i, M, 1) += e.cwiseProduct(e);
        }
      }
    }
    const Vector mu_bar = Vector::Constant(N, step.mean());
    const Matrix B = mean_stability_matrix(kind, pol.mean(), mu_bar, {Matrix::Identity(M, M), Matrix::Identity(M, M)}).B;
    Vector pred(N * M);
    for (int k = 0; k < N; ++k) pred.segment(k * M, M) = w_o;
    for (int i = 0; i < T; ++i) {
      pred = B * pred;
      for (int j = 0; j < N * M; ++j) {
        const double m = sum(j, i) / runs;
        const double se = std::sqrt((sq(j, i) / runs - m * m) / runs);
        CHECK_MESSAGE(std::abs(m - pred(j)) < 4 * se, to_string(kind));
      }
    }
  }
}

TEST_CASE("runner validation") {
  const int N = 3, M = 2;
  const auto agents = lms_agents(N, M, {0.01, 0.01, 0.01});
  const auto mu = StepSizeProcess::constant(0.01);
  CHECK_THROWS(StrategyRunner(make_cfg(StrategyKind::atc, N, mu), agents));
  CHECK_THROWS_AS(StrategyRunner(make_cfg(StrategyKind::atc, N, mu, RandomCombinationPolicy(Matrix::Identity(N, N))), agents),
                  PreconditionError);
  StrategyConfig c = make_cfg(StrategyKind::atc_enlarged, N, mu, RandomCombinationPolicy(metropolis_weights(ring_adjacency(N))));
  c.C = Matrix::Constant(N, N, 0.5);
  CHECK_THROWS(StrategyRunner(c, agents));
  StrategyConfig s = make_cfg(StrategyKind::centralized_sync, N, StepSizeProcess::bernoulli(0.01, 0.5));
  CHECK_THROWS(StrategyRunner(s, agents));
  StrategyConfig f = make_cfg(StrategyKind::centralized_sync, N, mu);
  f.fusion = FusionSampler::on_off(N, 0.5);
  CHECK_THROWS(StrategyRunner(f, agents));
  StrategyConfig bad = make_cfg(StrategyKind::ncop, 2, mu);
  CHECK_THROWS(StrategyRunner(bad, agents));
}

TEST_CASE("divergence guard") {
  const int N = 2, M = 2;
  const auto agents = lms_agents(N, M, {0.01, 0.01});
  const RandomCombinationPolicy pol(mat2(0.05, 0.95, 0.95, 0.05));
  StrategyRunner r(make_cfg(StrategyKind::consensus, N, StepSizeProcess::constant(0.15), pol), agents,
                   GradientMode::exact);
  r.reset(std::vector<Vector>{Vector::Zero(M), Vector::Ones(M)});
  Rng rng(1);
  bool thrown = false;
  try {
    for (int i = 0; i < 100000; ++i) r.step(rng);
  } catch (const DivergenceError& e) {
    thrown = true;
    CHECK(e.iteration() > 0);
  }
  CHECK(thrown);
}

TEST_CASE("consensus averaging") {
  const std::vector<Vector> same(3, Vector::Constant(2, 1.5));
  for (const auto& v : consensus_average(same, metropolis_weights(ring_adjacency(3)), 10))
    CHECK((v - Vector::Constant(2, 1.5)).norm() == 0.0);

  std::vector<Vector> two{Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)};
  for (const auto& v : consensus_average(two, Matrix::Constant(2, 2, 0.5), 1)) CHECK(v(0) == 2.0);

  const int N = 5;
  const Matrix A = metropolis_weights(ring_adjacency(N));
  Rng rng(6);
  std::normal_distribution<double> n01;
  std::vector<Vector> vals;
  Vector mean = Vector::Zero(3);
  for (int k = 0; k < N; ++k) {
    Vector v(3);
    for (int i = 0; i < 3; ++i) v(i) = n01(rng);
    mean += v / N;
    vals.push_back(v);
  }
  double spread = 0.0;
  for (const auto& v : vals) spread = std::max(spread, (v - mean).lpNorm<Eigen::Infinity>());
  const auto out = consensus_average(vals, A, 200);
  const double bound = std::pow(slem(A), 200) * spread * std::sqrt(double(N));
  for (const auto& v : out) CHECK((v - mean).lpNorm<Eigen::Infinity>() <= bound + 1e-15);

  CHECK_THROWS(consensus_average(two, mat2(0.5, 0.25, 0.5, 0.75), 1));
  CHECK_THROWS(consensus_average(two, mat2(0, 1, 1, 0), 1));
}
