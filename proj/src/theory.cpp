#include "asyncnet/theory.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace asyncnet {

namespace {

Matrix sym(const Matrix& A) { return 0.5 * (A + A.transpose()); }

double lambda_min(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(H), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Tr(H^-1 R) via a symmetric solve.
double trace_solve(const Matrix& H, const Matrix& R) {
  return sym(H).ldlt().solve(R).trace();
}

void check_lists(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s) {
  if (H.empty() || H.size() != R_s.size()) throw std::invalid_argument("need matching, non-empty H and R_s lists");
  const Index M = H[0].rows();
  for (std::size_t k = 0; k < H.size(); ++k) {
    if (H[k].rows() != M || H[k].cols() != M || R_s[k].rows() != M || R_s[k].cols() != M)
      throw std::invalid_argument("H and R_s blocks must all be M x M");
  }
}

}  // namespace

void require_spd(const Matrix& H, const char* what) {
  if (H.rows() != H.cols() || H.rows() == 0) throw std::invalid_argument(std::string(what) + ": not square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(H), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(H.rows() - 1);
  if (!(hi > 0.0) || !(lo > 1e-12 * hi)) throw PreconditionError(what, "matrix is singular or not positive-definite");
}

SingleAgentTheory single_agent_theory(const Matrix& H, const Matrix& R_s, double mu_bar, double sigma_mu2, double nu) {
  require_spd(H, "single-agent Hessian");
  if (R_s.rows() != H.rows() || R_s.cols() != H.cols()) throw std::invalid_argument("R_s must match H");
  if (!(mu_bar > 0.0)) throw std::invalid_argument("mean step-size must be > 0");
  if (!(sigma_mu2 >= 0.0)) throw std::invalid_argument("step-size variance must be >= 0");
  SingleAgentTheory t;
  t.mu_x = mu_bar + sigma_mu2 / mu_bar;
  t.msd = 0.5 * t.mu_x * trace_solve(H, R_s);
  t.er = 0.25 * t.mu_x * R_s.trace();
  t.alpha = 1.0 - 2.0 * nu * mu_bar;
  return t;
}

SingleAgentTheory single_agent_theory(const Matrix& H, const Matrix& R_s, double mu_bar, double sigma_mu2) {
  return single_agent_theory(H, R_s, mu_bar, sigma_mu2, lambda_min(H));
}

CentralizedTheory centralized_theory(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, double mu_bar,
                                     double sigma_mu2, const Vector& pi_bar, const Vector& sigma_pi2, double nu_c) {
  check_lists(H, R_s);
  const std::size_t N = H.size();
  const double n = static_cast<double>(N);
  if (pi_bar.size() != static_cast<Index>(N) || sigma_pi2.size() != static_cast<Index>(N))
    throw std::invalid_argument("fusion moments must have one entry per agent");
  if (pi_bar.minCoeff() < 0.0 || std::abs(pi_bar.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("mean fusion weights must lie on the simplex");
  if (sigma_pi2.minCoeff() < 0.0) throw std::invalid_argument("fusion variances must be >= 0");
  if (!(mu_bar > 0.0)) throw std::invalid_argument("mean step-size must be > 0");

  Matrix Hsum = Matrix::Zero(H[0].rows(), H[0].cols());
  for (const auto& h : H) Hsum += h;
  require_spd(Hsum, "aggregate Hessian");

  CentralizedTheory t;
  t.mu_x = mu_bar + sigma_mu2 / mu_bar;
  t.uniform_means = ((pi_bar.array() - 1.0 / n).abs() < 1e-12).all();
  Matrix S = Matrix::Zero(H[0].rows(), H[0].cols());
  if (t.uniform_means) {
    for (std::size_t k = 0; k < N; ++k) S += (1.0 + n * n * sigma_pi2[static_cast<Index>(k)]) * R_s[k];
    t.msd = t.mu_x / (2.0 * n) * trace_solve(Hsum, S);
  } else {
    for (std::size_t k = 0; k < N; ++k) {
      const Index i = static_cast<Index>(k);
      S += (pi_bar[i] * pi_bar[i] + sigma_pi2[i]) * R_s[k];
    }
    t.msd = t.mu_x * n / 2.0 * trace_solve(Hsum, S);
  }
  t.alpha = 1.0 - 2.0 * nu_c * t.mu_x / n;
  return t;
}

double ncop_average_msd(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, const Vector& mu_bar,
                        const Vector& sigma_mu2) {
  check_lists(H, R_s);
  const std::size_t N = H.size();
  if (mu_bar.size() != static_cast<Index>(N) || sigma_mu2.size() != static_cast<Index>(N))
    throw std::invalid_argument("step-size moments must have one entry per agent");
  double acc = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const Index i = static_cast<Index>(k);
    acc += single_agent_theory(H[k], R_s[k], mu_bar[i], sigma_mu2[i]).msd;
  }
  return acc / static_cast<double>(N);
}

NetworkTheory network_theory(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, const Vector& mu_bar,
                             const Vector& sigma_mu2, const PerronData& perron) {
  check_lists(H, R_s);
  const std::size_t N = H.size();
  const Index n = static_cast<Index>(N);
  if (mu_bar.size() != n || sigma_mu2.size() != n) throw std::invalid_argument("step-size moments must have one entry per agent");
  if (perron.p_bar.size() != n || perron.P_c.rows() != n) throw std::invalid_argument("Perron data has the wrong size");

  const Index M = H[0].rows();
  Matrix G = Matrix::Zero(M, M), S = Matrix::Zero(M, M);
  for (Index k = 0; k < n; ++k) {
    const std::size_t kk = static_cast<std::size_t>(k);
    G += mu_bar[k] * perron.p_bar[k] * H[kk];
    S += (mu_bar[k] * mu_bar[k] + sigma_mu2[k]) * perron.P_c(k, k) * R_s[kk];
  }
  require_spd(G, "weighted Hessian sum");
  NetworkTheory t;
  t.msd = 0.5 * trace_solve(G, S);
  t.alpha = 1.0 - 2.0 * lambda_min(G);
  t.p_bar = perron.p_bar;
  t.p_c_diag = perron.P_c.diagonal();
  return t;
}

double spectral_radius(const Matrix& B) {
  if (B.rows() != B.cols() || B.rows() == 0) throw std::invalid_argument("spectral_radius: matrix must be square");
  Eigen::EigenSolver<Matrix> es(B, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

MeanStability mean_stability_matrix(StrategyKind kind, const Matrix& A_bar, const Vector& mu_bar,
                                    const std::vector<Matrix>& R_u) {
  const Index N = A_bar.rows();
  if (A_bar.cols() != N || mu_bar.size() != N || R_u.size() != static_cast<std::size_t>(N) || N == 0)
    throw std::invalid_argument("mean_stability_matrix: inconsistent sizes");
  const Index M = R_u[0].rows();
  Matrix MR = Matrix::Zero(N * M, N * M);
  for (Index k = 0; k < N; ++k) {
    const Matrix& R = R_u[static_cast<std::size_t>(k)];
    if (R.rows() != M || R.cols() != M) throw std::invalid_argument("mean_stability_matrix: R_u blocks must be M x M");
    MR.block(k * M, k * M, M, M) = mu_bar[k] * 2.0 * R;
  }
  const Matrix I = Matrix::Identity(N * M, N * M);
  const Matrix At = kron(A_bar.transpose(), Matrix::Identity(M, M));
  MeanStability out;
  switch (kind) {
    case StrategyKind::ncop: out.B = I - MR; break;
    case StrategyKind::consensus: out.B = At - MR; break;
    case StrategyKind::atc: out.B = At * (I - MR); break;
    case StrategyKind::cta: out.B = (I - MR) * At; break;
    default: throw std::invalid_argument("mean_stability_matrix: unsupported kind " + to_string(kind));
  }
  out.spectral_radius = spectral_radius(out.B);
  return out;
}

double stability_bound(double nu, double delta, double beta2) {
  if (!(nu > 0.0) || !(delta >= nu) || !(beta2 >= 0.0))
    throw std::invalid_argument("stability_bound: need 0 < nu <= delta and beta2 >= 0");
  return 2.0 * nu / (delta * delta + beta2);
}

double alpha_bound(double nu, double delta, double beta2, double mu_bar, double sigma_mu2) {
  return 1.0 - 2.0 * nu * mu_bar + (delta * delta + beta2) * (mu_bar * mu_bar + sigma_mu2);
}

}  // namespace asyncnet
