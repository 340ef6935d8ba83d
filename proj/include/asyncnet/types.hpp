#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace asyncnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Per-worker random stream. One instance is never shared between threads.
using Rng = std::mt19937_64;

/// A mathematical precondition failed (non-primitive policy, singular Hessian
/// sum, ...). `invariant()` names the violated condition.
class PreconditionError : public std::domain_error {
 public:
  PreconditionError(std::string invariant, const std::string& what)
      : std::domain_error(invariant + ": " + what), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// An iterate left the finite range (or crossed the divergence guard).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long iteration, int agent, const std::string& what)
      : std::runtime_error(what), iteration_(iteration), agent_(agent) {}
  long iteration() const noexcept { return iteration_; }
  int agent() const noexcept { return agent_; }

 private:
  long iteration_;
  int agent_;
};

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` under `master`. Distinct indices give unrelated streams.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(index + 0x632be59bd9b4e019ULL));
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace asyncnet
