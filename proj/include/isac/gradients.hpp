// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "isac/comm.hpp"
#include "isac/radar.hpp"

namespace isac {

// Gradient convention used throughout: G = 2 df/dW^* (Wirtinger), so that
// f(W + D) = f(W) + Re<G, D> + o(|D|). Ascent is W <- W + alpha G.

// --- radar KLD pieces ---------------------------------------------------

// B = R2^-1 - sigma^2 R2^-2, the kernel shared by all radar-KLD gradients.
CMat radar_kernel(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp);
// d KLD_r,t w.r.t. W_{r,t}: (2 a^2 / (L ln2)) H^H B H W_{r,t}.
CMat grad_radar_kld_wrt_wr(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp);
// d KLD_r,t w.r.t. W_c: (2 a^2 / ln2) H^H B H W_c.
CMat grad_radar_kld_wrt_wc(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp);

// f = (1/T) sum_t KLD_r,t.
double radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr, const CMat& W_c,
                       const TargetSet& tg, double sigma_n2);
RadarTensor grad_radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                 const CMat& W_c, const TargetSet& tg, double sigma_n2);

// --- comm KLD through the radar interference ----------------------------

// Closed-form ZF KLD per UE with sigma_eta^2 driven by the radar tensor power.
std::vector<double> comm_klds_closed(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                     double sigma_n2);
RadarTensor grad_comm_kld_wrt_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                    double sigma_n2, int k);

// --- penalty --------------------------------------------------------------

double penalty_value(const std::vector<double>& kld_r, const std::vector<double>& kld_c,
                     const std::vector<double>& A, const std::vector<double>& B);

// K-ROP penalty: radar KLDs plus closed-form comm KLDs, as a function of Wr.
double penalty_radar(const ScenarioConfig& cfg, const RadarTensor& Wr, const CMat& W_c,
                     const TargetSet& tg, double sigma_n2);
RadarTensor grad_penalty_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                               const CMat& W_c, const TargetSet& tg, double sigma_n2);

// --- comm objective over W_c ----------------------------------------------

// Gradient of kld_conditional(k) w.r.t. W_c with sigma_eta^2 held fixed.
CMat grad_kld_conditional(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H, int k,
                          double sigma_eta2);
// (1/K) sum_k kld_conditional(k).
double comm_objective(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                      const std::vector<double>& sigma_eta2);
CMat grad_comm_objective(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                         const std::vector<double>& sigma_eta2);

struct ConstraintGradients {
  CMat g_power;                // of ||W_c||_F^2
  std::vector<CMat> g_radar;   // of KLD_r,t
};
ConstraintGradients grad_constraints_wrt_wc(const ScenarioConfig& cfg, const CMat& W_c,
                                            const RadarTensor& Wr, const TargetSet& tg,
                                            double sigma_n2);

// --- joint (K-IOP) objective ----------------------------------------------

struct IsacValue {
  std::vector<double> kld_r;
  std::vector<double> kld_c;
  double radar_mean = 0.0;
  double comm_mean = 0.0;
  double total() const { return radar_mean + comm_mean; }
};

// KLD_ISAC = mean_t KLD_r,t + mean_k KLD_c,k with conditional comm KLDs and
// sigma_eta^2 driven by the radar power of Zr.
IsacValue isac_value(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                     const CMat& H, const TargetSet& tg, double sigma_n2);

struct JointGradient {
  RadarTensor g_r;
  CMat g_c;
};

JointGradient grad_isac(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                        const CMat& H, const TargetSet& tg, double sigma_n2);

// Joint penalty over both variables (radar and conditional comm constraints).
double penalty_joint(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                     const CMat& H, const TargetSet& tg, double sigma_n2);
JointGradient grad_penalty_joint(const ScenarioConfig& cfg, const RadarTensor& Zr,
                                 const CMat& Zc, const CMat& H, const TargetSet& tg,
                                 double sigma_n2);

// Ascent direction of the ADMM Z-subproblem
//   F(Z) - rho_pen p(Z) - (rho/2) ||Z - V||^2
// i.e. grad F - rho_pen grad p - rho (Z - V).
JointGradient grad_admm_z(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                          const RadarTensor& Vr, const CMat& Vc, double rho, double rho_pen,
                          const CMat& H, const TargetSet& tg, double sigma_n2);
double admm_z_objective(const ScenarioConfig& cfg, const RadarTensor& Zr, const CMat& Zc,
                        const RadarTensor& Vr, const CMat& Vc, double rho, double rho_pen,
                        const CMat& H, const TargetSet& tg, double sigma_n2);

// --- projections ------------------------------------------------------------

// Rescale onto {(1/normalizer)||W||_F^2 <= budget}; identity when feasible.
CMat project_power(const CMat& W, double budget, double normalizer = 1.0);
RadarTensor project_power(const RadarTensor& W, double budget, double normalizer);
// Joint budget ||Zc||_F^2 + (1/L) ||Zr||_F^2 <= P_T, common scale factor.
void project_joint(RadarTensor& Zr, CMat& Zc, double P_T, int L);

// --- finite-difference oracle -----------------------------------------------

// Central differences on real and imaginary parts of every entry independently.
// Returns G = df/dRe + i df/dIm, the same convention as the analytic gradients.
// Truncation error is O(eps^2). Throws NonFiniteObjective.
CMat fd_oracle(const std::function<double(const CMat&)>& f, const CMat& X, double eps = 1e-6);
RadarTensor fd_oracle(const std::function<double(const RadarTensor&)>& f, const RadarTensor& X,
                      double eps = 1e-6);

// Relative error |a - b|_F / max(|b|_F, floor).
double rel_error(const CMat& a, const CMat& b, double abs_floor = 1e-7);
double rel_error(const RadarTensor& a, const RadarTensor& b, double abs_floor = 1e-7);

// The gradient variants exactly as printed in the source derivation. Kept for
// documentation; the finite-difference suite shows where they disagree.
namespace printed {
RadarTensor grad_radar_objective(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                 const CMat& W_c, const TargetSet& tg, double sigma_n2);
RadarTensor grad_comm_kld_wrt_radar(const ScenarioConfig& cfg, const RadarTensor& Wr,
                                    double sigma_n2, int k);
CMat grad_radar_kld_wrt_wc(const CMat& H_t, const CMat& Wr_t, const CMat& W_c, int L,
                           double sigma_n2, double amp);
}  // namespace printed

}  // namespace isac
