#pragma once

#include "asyncnet/strategies.hpp"
#include "asyncnet/topology.hpp"

#include <vector>

namespace asyncnet {

// All predictors are first order in mu_x; higher-order remainders are dropped.

struct SingleAgentTheory {
  double msd = 0.0;
  double er = 0.0;  // equals EMSE for MSE costs
  double alpha = 0.0;
  double mu_x = 0.0;
};

SingleAgentTheory single_agent_theory(const Matrix& H, const Matrix& R_s, double mu_bar, double sigma_mu2, double nu);
// nu taken as lambda_min(H).
SingleAgentTheory single_agent_theory(const Matrix& H, const Matrix& R_s, double mu_bar, double sigma_mu2);

struct CentralizedTheory {
  double msd = 0.0;
  double alpha = 0.0;
  double mu_x = 0.0;
  bool uniform_means = true;
};

CentralizedTheory centralized_theory(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, double mu_bar,
                                     double sigma_mu2, const Vector& pi_bar, const Vector& sigma_pi2, double nu_c);

// (1/N) sum_k (mu_x,k / 2) Tr(H_k^-1 R_s,k)
double ncop_average_msd(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, const Vector& mu_bar,
                        const Vector& sigma_mu2);

struct NetworkTheory {
  double msd = 0.0;
  double alpha = 0.0;
  Vector p_bar;
  Vector p_c_diag;
};

NetworkTheory network_theory(const std::vector<Matrix>& H, const std::vector<Matrix>& R_s, const Vector& mu_bar,
                             const Vector& sigma_mu2, const PerronData& perron);

struct MeanStability {
  Matrix B;
  double spectral_radius = 0.0;
};

// kind in {ncop, consensus, atc, cta}; blocks are M x M, R = blockdiag(2 R_u,k).
MeanStability mean_stability_matrix(StrategyKind kind, const Matrix& A_bar, const Vector& mu_bar,
                                    const std::vector<Matrix>& R_u);

double spectral_radius(const Matrix& B);

// mu_o = 2 nu / (delta^2 + beta^2)
double stability_bound(double nu, double delta, double beta2);
// 1 - 2 nu mu_bar + (delta^2 + beta^2)(mu_bar^2 + sigma_mu^2)
double alpha_bound(double nu, double delta, double beta2, double mu_bar, double sigma_mu2);

// Throws PreconditionError unless lambda_min > 1e-12 lambda_max.
void require_spd(const Matrix& H, const char* what);

}  // namespace asyncnet
