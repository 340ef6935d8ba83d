#include "asyncnet/stepsize.hpp"

#include <doctest.h>

#include <cmath>

using namespace asyncnet;

namespace {

// Moments of mu_ub * Beta(a, b) by the midpoint rule on the pdf.
std::pair<double, double> beta_moments_numeric(double mu_ub, double a, double b) {
  const int n = 200000;
  const double h = 1.0 / n;
  const double logB = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto pdf = [&](double x) {
    return std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - logB);
  };
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * h;
    m1 += x * pdf(x);
    m2 += x * x * pdf(x);
  }
  m1 *= h;
  m2 *= h;
  return {mu_ub * m1, mu_ub * mu_ub * (m2 - m1 * m1)};
}

struct SampleStats {
  double mean, var, se_mean, se_var, lo, hi;
};

SampleStats draw_stats(const StepSizeProcess& p, long n, std::uint64_t seed) {
  Rng rng(seed);
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, lo = INFINITY, hi = -INFINITY;
  for (long i = 0; i < n; ++i) {
    const double x = p.sample(rng);
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double m = s1 / n;
  const double var = std::max(s2 / n - m * m, 0.0);
  const double m4 = s4 / n - 4 * m * s3 / n + 6 * m * m * s2 / n - 3 * m * m * m * m;
  return {m, var, std::sqrt(var / n), std::sqrt(std::max(m4 - var * var, 0.0) / n), lo, hi};
}

}  // namespace

TEST_CASE("constant process") {
  const auto p = StepSizeProcess::constant(0.01);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(p.sample(rng) == 0.01);
  const auto m = p.moments();
  CHECK(m.mean == 0.01);
  CHECK(m.variance == 0.0);
  CHECK(m.mu_x == 0.01);
}

TEST_CASE("bernoulli moments") {
  const auto m = StepSizeProcess::bernoulli(0.1, 0.5).moments();
  CHECK(m.mean == doctest::Approx(0.05));
  CHECK(m.variance == doctest::Approx(0.0025));
  CHECK(m.mu_x == doctest::Approx(0.1));
  const auto one = StepSizeProcess::bernoulli(0.1, 1.0);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) CHECK(one.sample(rng) == 0.1);
}

TEST_CASE("beta moments against numerical integration") {
  const auto m = StepSizeProcess::beta_scaled(0.1, 1.0, 1.0).moments();
  CHECK(m.mean == doctest::Approx(0.05));
  CHECK(m.variance == doctest::Approx(0.01 / 12.0).epsilon(1e-12));
  CHECK(m.mu_x == doctest::Approx(0.05 + (0.01 / 12.0) / 0.05).epsilon(1e-12));
  for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 3.0}, {5.0, 1.5}}) {
    const auto [mean, var] = beta_moments_numeric(0.2, a, b);
    const auto p = StepSizeProcess::beta_scaled(0.2, a, b);
    CHECK(p.mean() == doctest::Approx(mean).epsilon(1e-7));
    CHECK(p.variance() == doctest::Approx(var).epsilon(1e-6));
  }
}

TEST_CASE("empirical moments of 1e6 samples within 4 standard errors") {
  const StepSizeProcess procs[] = {StepSizeProcess::constant(0.02), StepSizeProcess::bernoulli(0.1, 0.5),
                                   StepSizeProcess::bernoulli(0.05, 0.2), StepSizeProcess::beta_scaled(0.1, 1.0, 1.0),
                                   StepSizeProcess::beta_scaled(0.08, 2.0, 5.0)};
  std::uint64_t seed = 100;
  for (const auto& p : procs) {
    const SampleStats s = draw_stats(p, 1000000, seed++);
    CHECK(std::abs(s.mean - p.mean()) <= 4 * s.se_mean + 1e-9 * p.mean());
    CHECK(std::abs(s.var - p.variance()) <= 4 * s.se_var + 1e-9 * p.mean() * p.mean());
    CHECK(s.lo >= 0.0);
    CHECK(s.hi <= p.upper_bound());
  }
}

TEST_CASE("bernoulli sample mean") {
  const SampleStats s = draw_stats(StepSizeProcess::bernoulli(0.1, 0.5), 1000000, 7);
  CHECK(std::abs(s.mean - 0.05) <= 3 * s.se_mean);
}

TEST_CASE("mu_x inequalities") {
  const StepSizeProcess procs[] = {StepSizeProcess::constant(0.3), StepSizeProcess::bernoulli(0.1, 0.3),
                                   StepSizeProcess::beta_scaled(0.1, 0.5, 2.0)};
  for (const auto& p : procs) {
    const auto m = p.moments();
    CHECK(m.mu_x >= m.mean);
    CHECK((m.mu_x == m.mean) == (m.variance == 0.0));
    CHECK(m.mean * m.mean + m.variance == doctest::Approx(m.mean * m.mu_x).epsilon(1e-14));
    CHECK(m.mean * m.mu_x <= m.mu_x * m.mu_x);
  }
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS(StepSizeProcess::beta_scaled(0.1, 0.0, 1.0));
  CHECK_THROWS(StepSizeProcess::beta_scaled(0.1, 1.0, -1.0));
  CHECK_THROWS(StepSizeProcess::bernoulli(0.1, 1.5));
  CHECK_THROWS(StepSizeProcess::bernoulli(0.1, -0.1));
  CHECK_THROWS(StepSizeProcess::constant(-0.1));
  CHECK_THROWS(StepSizeProcess::bernoulli(0.1, 0.0).moments());
  CHECK_THROWS(StepSizeProcess::constant(0.0).moments());
}

TEST_CASE("sampling is reproducible per seed") {
  const auto p = StepSizeProcess::beta_scaled(0.1, 2.0, 2.0);
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) CHECK(p.sample(a) == p.sample(b));
}
