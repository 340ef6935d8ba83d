#pragma once

#include "asyncnet/types.hpp"

#include <string>
#include <vector>

namespace asyncnet {

struct StochasticityReport {
  bool ok = true;
  std::vector<int> offending;  // columns (left) or rows (right), 0-based
  std::vector<std::string> messages;
  explicit operator bool() const { return ok; }
  std::string summary() const;
};

// Nonnegative with unit column sums.
StochasticityReport validate_left_stochastic(const Matrix& A, double tol = 1e-12);
// Nonnegative with unit row sums.
StochasticityReport validate_right_stochastic(const Matrix& C, double tol = 1e-12);
bool is_doubly_stochastic(const Matrix& A, double tol = 1e-12);

// Strongly connected and aperiodic on the pattern {B_ij > zero_tol}.
bool is_primitive(const Matrix& B, double zero_tol = 0.0);
bool is_strongly_connected(const Matrix& B, double zero_tol = 0.0);

// Positive unit-sum p with B p = p, by power iteration from 1/N.
Vector perron_vector(const Matrix& B, double tol = 1e-12, long max_iter = 1000000);

// Second largest eigenvalue modulus.
double slem(const Matrix& A);

// Independent on-off links with diagonal absorption: link (l, k), l != k,
// keeps its nominal weight with probability q_lk and is zero otherwise;
// a_kk takes up whatever the dropped links lose.
class RandomCombinationPolicy {
 public:
  explicit RandomCombinationPolicy(Matrix nominal);
  RandomCombinationPolicy(Matrix nominal, double q);
  RandomCombinationPolicy(Matrix nominal, Matrix link_prob);

  Index size() const { return nominal_.rows(); }
  const Matrix& nominal() const { return nominal_; }
  const Matrix& link_prob() const { return q_; }
  bool deterministic() const;

  void sample(Rng& rng, Matrix& out) const;
  Matrix sample(Rng& rng) const;

  Matrix mean() const;
  // E[(A - Abar) kron (A - Abar)], row (l*N + n), column (k*N + m).
  Matrix kron_covariance() const;
  // N_k = { l : abar_lk > 0 }.
  std::vector<std::vector<int>> mean_graph() const;

 private:
  Matrix nominal_;
  Matrix q_;
};

Matrix kron(const Matrix& A, const Matrix& B);

std::vector<std::vector<int>> neighborhoods(const Matrix& A, double zero_tol = 0.0);

// Adjacency patterns include self-loops.
Matrix ring_adjacency(int N);
Matrix full_adjacency(int N);
// a_lk = 1 / |N_k| on the pattern.
Matrix uniform_weights(const Matrix& adjacency);
// Symmetric, doubly stochastic: a_lk = 1 / max(n_l, n_k) off the diagonal.
Matrix metropolis_weights(const Matrix& adjacency);

struct PerronData {
  Vector p_bar;    // N
  Vector p_c;      // N^2
  Matrix P_c;      // N x N, column k is the k-th block of p_c
  Matrix C_c;      // P_c - p_bar p_bar'
  Vector c_c_diag;
};

// Throws PreconditionError if Abar kron Abar + C_A is not primitive.
PerronData perron_data(const Matrix& A_bar, const Matrix& C_A, double tol = 1e-12);

// Rejects mean graphs that are disconnected or periodic.
void require_connected_mean_graph(const Matrix& A_bar);

}  // namespace asyncnet
