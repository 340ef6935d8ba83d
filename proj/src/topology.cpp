#include "asyncnet/topology.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace asyncnet {

namespace {

void require_square(const Matrix& A, const char* what) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw std::invalid_argument(std::string(what) + ": matrix must be square and non-empty");
}

using Adjacency = std::vector<std::vector<int>>;

Adjacency pattern(const Matrix& B, double zero_tol, bool transpose) {
  const Index n = B.rows();
  Adjacency adj(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (B(i, j) > zero_tol) {
        if (transpose) adj[static_cast<std::size_t>(j)].push_back(static_cast<int>(i));
        else adj[static_cast<std::size_t>(i)].push_back(static_cast<int>(j));
      }
  return adj;
}

std::vector<int> bfs_levels(const Adjacency& adj) {
  std::vector<int> level(adj.size(), -1);
  std::queue<int> q;
  level[0] = 0;
  q.push(0);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[static_cast<std::size_t>(u)])
      if (level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        q.push(v);
      }
  }
  return level;
}

bool all_reached(const std::vector<int>& level) {
  return std::all_of(level.begin(), level.end(), [](int l) { return l >= 0; });
}

StochasticityReport validate_sums(const Matrix& A, double tol, bool columns) {
  require_square(A, "validate_stochastic");
  StochasticityReport r;
  const char* what = columns ? "column" : "row";
  for (Index k = 0; k < A.rows(); ++k) {
    const auto line = columns ? Vector(A.col(k)) : Vector(A.row(k).transpose());
    std::ostringstream msg;
    bool bad = false;
    if (!line.allFinite()) {
      msg << what << ' ' << k << " has non-finite entries";
      bad = true;
    } else if (line.minCoeff() < -tol) {
      msg << what << ' ' << k << " has a negative entry (" << line.minCoeff() << ")";
      bad = true;
    } else if (std::abs(line.sum() - 1.0) > tol) {
      msg.precision(12);
      msg << what << ' ' << k << " sums to " << line.sum();
      bad = true;
    }
    if (bad) {
      r.ok = false;
      r.offending.push_back(static_cast<int>(k));
      r.messages.push_back(msg.str());
    }
  }
  return r;
}

}  // namespace

std::string StochasticityReport::summary() const {
  if (ok) return "ok";
  std::string s;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i) s += "; ";
    s += messages[i];
  }
  return s;
}

StochasticityReport validate_left_stochastic(const Matrix& A, double tol) { return validate_sums(A, tol, true); }

StochasticityReport validate_right_stochastic(const Matrix& C, double tol) { return validate_sums(C, tol, false); }

bool is_doubly_stochastic(const Matrix& A, double tol) {
  return validate_left_stochastic(A, tol).ok && validate_right_stochastic(A, tol).ok;
}

bool is_strongly_connected(const Matrix& B, double zero_tol) {
  require_square(B, "is_strongly_connected");
  return all_reached(bfs_levels(pattern(B, zero_tol, false))) &&
         all_reached(bfs_levels(pattern(B, zero_tol, true)));
}

bool is_primitive(const Matrix& B, double zero_tol) {
  require_square(B, "is_primitive");
  if (!is_strongly_connected(B, zero_tol)) return false;
  // An irreducible matrix is primitive iff the gcd of its cycle lengths is 1;
  // with BFS levels that gcd equals gcd over edges of level(u) + 1 - level(v).
  const Adjacency adj = pattern(B, zero_tol, false);
  const std::vector<int> level = bfs_levels(adj);
  int g = 0;
  for (std::size_t u = 0; u < adj.size(); ++u)
    for (int v : adj[u]) g = std::gcd(g, std::abs(level[u] + 1 - level[static_cast<std::size_t>(v)]));
  return g == 1;
}

Vector perron_vector(const Matrix& B, double tol, long max_iter) {
  require_square(B, "perron_vector");
  if (!is_primitive(B)) throw PreconditionError("primitive", "perron_vector requires a primitive matrix");
  const Index n = B.rows();
  Vector p = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector next(n);
  for (long it = 0; it < max_iter; ++it) {
    next.noalias() = B * p;
    next /= next.sum();
    const double diff = (next - p).lpNorm<Eigen::Infinity>();
    p.swap(next);
    if (diff < tol) {
      if (p.minCoeff() <= 0.0) throw PreconditionError("primitive", "Perron vector has non-positive entries");
      return p;
    }
  }
  throw PreconditionError("perron convergence", "power iteration did not converge");
}

double slem(const Matrix& A) {
  require_square(A, "slem");
  Eigen::EigenSolver<Matrix> es(A, false);
  std::vector<double> mod;
  for (Index i = 0; i < A.rows(); ++i) mod.push_back(std::abs(es.eigenvalues()[i]));
  std::sort(mod.begin(), mod.end(), std::greater<>());
  return mod.size() > 1 ? mod[1] : 0.0;
}

Matrix kron(const Matrix& A, const Matrix& B) {
  Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Index i = 0; i < A.rows(); ++i)
    for (Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

// ----------------------------------------------------- random policies

RandomCombinationPolicy::RandomCombinationPolicy(Matrix nominal)
    : RandomCombinationPolicy(nominal, Matrix::Ones(nominal.rows(), nominal.cols())) {}

RandomCombinationPolicy::RandomCombinationPolicy(Matrix nominal, double q)
    : RandomCombinationPolicy(nominal, Matrix::Constant(nominal.rows(), nominal.cols(), q)) {}

RandomCombinationPolicy::RandomCombinationPolicy(Matrix nominal, Matrix link_prob)
    : nominal_(std::move(nominal)), q_(std::move(link_prob)) {
  require_square(nominal_, "RandomCombinationPolicy");
  const auto rep = validate_left_stochastic(nominal_);
  if (!rep.ok) throw std::invalid_argument("combination matrix is not left-stochastic: " + rep.summary());
  if (q_.rows() != nominal_.rows() || q_.cols() != nominal_.cols())
    throw std::invalid_argument("link probability matrix has the wrong shape");
  for (Index l = 0; l < q_.rows(); ++l)
    for (Index k = 0; k < q_.cols(); ++k)
      if (!(q_(l, k) >= 0.0 && q_(l, k) <= 1.0))
        throw std::invalid_argument("link probability (" + std::to_string(l) + ", " + std::to_string(k) +
                                    ") outside [0, 1]");
  for (Index k = 0; k < q_.rows(); ++k) q_(k, k) = 1.0;
}

bool RandomCombinationPolicy::deterministic() const {
  for (Index l = 0; l < size(); ++l)
    for (Index k = 0; k < size(); ++k)
      if (l != k && nominal_(l, k) > 0.0 && q_(l, k) < 1.0) return false;
  return true;
}

void RandomCombinationPolicy::sample(Rng& rng, Matrix& out) const {
  const Index N = size();
  out.resize(N, N);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (Index k = 0; k < N; ++k) {
    double dropped = 0.0;
    for (Index l = 0; l < N; ++l) {
      if (l == k) continue;
      const double a = nominal_(l, k);
      if (a > 0.0 && unif(rng) >= q_(l, k)) {
        out(l, k) = 0.0;
        dropped += a;
      } else {
        out(l, k) = a;
      }
    }
    out(k, k) = nominal_(k, k) + dropped;
  }
}

Matrix RandomCombinationPolicy::sample(Rng& rng) const {
  Matrix out;
  sample(rng, out);
  return out;
}

Matrix RandomCombinationPolicy::mean() const {
  const Index N = size();
  Matrix A(N, N);
  for (Index k = 0; k < N; ++k) {
    double dropped = 0.0;
    for (Index l = 0; l < N; ++l) {
      if (l == k) continue;
      A(l, k) = q_(l, k) * nominal_(l, k);
      dropped += (1.0 - q_(l, k)) * nominal_(l, k);
    }
    A(k, k) = nominal_(k, k) + dropped;
  }
  return A;
}

Matrix RandomCombinationPolicy::kron_covariance() const {
  const Index N = size();
  Matrix C = Matrix::Zero(N * N, N * N);
  for (Index k = 0; k < N; ++k) {
    Vector var = Vector::Zero(N);
    for (Index l = 0; l < N; ++l)
      if (l != k) var[l] = nominal_(l, k) * nominal_(l, k) * q_(l, k) * (1.0 - q_(l, k));
    const Index col = k * N + k;
    for (Index l = 0; l < N; ++l) {
      if (l == k) continue;
      C(l * N + l, col) = var[l];    // l = n != k
      C(k * N + l, col) = -var[l];   // l = k, n != k
      C(l * N + k, col) = -var[l];   // n = k, l != k
    }
    C(k * N + k, col) = var.sum();   // l = n = k
  }
  return C;
}

std::vector<std::vector<int>> RandomCombinationPolicy::mean_graph() const { return neighborhoods(mean()); }

std::vector<std::vector<int>> neighborhoods(const Matrix& A, double zero_tol) {
  require_square(A, "neighborhoods");
  std::vector<std::vector<int>> nk(static_cast<std::size_t>(A.cols()));
  for (Index k = 0; k < A.cols(); ++k)
    for (Index l = 0; l < A.rows(); ++l)
      if (A(l, k) > zero_tol) nk[static_cast<std::size_t>(k)].push_back(static_cast<int>(l));
  return nk;
}

// ------------------------------------------------------------ builders

Matrix ring_adjacency(int N) {
  if (N < 1) throw std::invalid_argument("ring_adjacency: N must be >= 1");
  Matrix A = Matrix::Identity(N, N);
  for (int k = 0; k < N; ++k) {
    A((k + 1) % N, k) = 1.0;
    A((k + N - 1) % N, k) = 1.0;
  }
  return A;
}

Matrix full_adjacency(int N) {
  if (N < 1) throw std::invalid_argument("full_adjacency: N must be >= 1");
  return Matrix::Ones(N, N);
}

Matrix uniform_weights(const Matrix& adjacency) {
  require_square(adjacency, "uniform_weights");
  Matrix A = Matrix::Zero(adjacency.rows(), adjacency.cols());
  for (Index k = 0; k < A.cols(); ++k) {
    double deg = 0.0;
    for (Index l = 0; l < A.rows(); ++l) deg += (adjacency(l, k) != 0.0 || l == k) ? 1.0 : 0.0;
    for (Index l = 0; l < A.rows(); ++l)
      if (adjacency(l, k) != 0.0 || l == k) A(l, k) = 1.0 / deg;
  }
  return A;
}

Matrix metropolis_weights(const Matrix& adjacency) {
  require_square(adjacency, "metropolis_weights");
  const Index N = adjacency.rows();
  std::vector<double> deg(static_cast<std::size_t>(N), 0.0);
  for (Index k = 0; k < N; ++k)
    for (Index l = 0; l < N; ++l)
      if (l == k || adjacency(l, k) != 0.0 || adjacency(k, l) != 0.0) deg[static_cast<std::size_t>(k)] += 1.0;
  Matrix A = Matrix::Zero(N, N);
  for (Index k = 0; k < N; ++k) {
    double off = 0.0;
    for (Index l = 0; l < N; ++l) {
      if (l == k || (adjacency(l, k) == 0.0 && adjacency(k, l) == 0.0)) continue;
      A(l, k) = 1.0 / std::max(deg[static_cast<std::size_t>(l)], deg[static_cast<std::size_t>(k)]);
      off += A(l, k);
    }
    A(k, k) = 1.0 - off;
  }
  return A;
}

// --------------------------------------------------------- Perron data

PerronData perron_data(const Matrix& A_bar, const Matrix& C_A, double tol) {
  require_square(A_bar, "perron_data");
  const Index N = A_bar.rows();
  if (C_A.rows() != N * N || C_A.cols() != N * N)
    throw std::invalid_argument("perron_data: C_A must be N^2 x N^2");
  const auto rep = validate_left_stochastic(A_bar, 1e-10);
  if (!rep.ok) throw std::invalid_argument("perron_data: mean matrix is not left-stochastic: " + rep.summary());
  const Matrix K = kron(A_bar, A_bar) + C_A;
  if (K.minCoeff() < -1e-12)
    throw PreconditionError("nonnegative second-moment matrix", "Abar kron Abar + C_A has negative entries");
  if (!is_primitive(K, 1e-15))
    throw PreconditionError("strongly-connected asynchronous model", "Abar kron Abar + C_A is not primitive");
  if (!is_primitive(A_bar))
    throw PreconditionError("primitive mean matrix", "Abar is not primitive");

  PerronData d;
  d.p_bar = perron_vector(A_bar, tol);
  d.p_c = perron_vector(K, tol);
  d.P_c.resize(N, N);
  for (Index k = 0; k < N; ++k) d.P_c.col(k) = d.p_c.segment(k * N, N);
  d.P_c = 0.5 * (d.P_c + d.P_c.transpose()).eval();
  d.C_c = d.P_c - d.p_bar * d.p_bar.transpose();
  d.c_c_diag = d.C_c.diagonal();
  return d;
}

void require_connected_mean_graph(const Matrix& A_bar) {
  if (!is_primitive(A_bar))
    throw PreconditionError("connected mean graph",
                            "the mean combination matrix must be strongly connected with a self-loop");
}

}  // namespace asyncnet
