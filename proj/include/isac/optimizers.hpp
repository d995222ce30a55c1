// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "isac/gradients.hpp"

namespace isac {

struct OptimizerParams {
  int max_iter = 1000;
  double eps = 1e-6;
  double alpha0 = 0.1;
  double rho0 = 1.0;
  double gamma = 1.5;
  double beta = 0.5;
  double armijo_c = 1e-4;
  double mu0 = 1.0;
  double gamma_barrier = 0.1;
  double rho_admm = 1.0;
  int inner_iter = 10;      // J, projected-gradient steps per ADMM Z-update
  double alpha_min = 1e-12;
  double rho_max = 1e8;     // cap on the growing penalty weight
  double gamma_kiop = 1.0;  // K-IOP penalty growth; 1 keeps rho_n = rho0
  double mu_min = 1e-300;   // barrier weight floor, keeps mu a normal double
};

void validate_params(const OptimizerParams& p);

enum class ExitReason { Converged, MaxIter, LineSearchFailed, ResidualStagnation };
std::string to_string(ExitReason r);

struct TraceRow {
  int iter = 0;
  double objective = 0.0;     // f after the step
  double penalty = 0.0;       // p after the step
  double merit_before = 0.0;  // penalised / barrier merit before the step (same weights)
  double merit_after = 0.0;
  double step = 0.0;          // ||W(n+1) - W(n)||_F
  double alpha = 0.0;
  double weight = 0.0;        // rho (K-ROP, K-IOP penalty) or mu (K-COP)
  double residual_r = 0.0;    // K-IOP primal residuals
  double residual_c = 0.0;
  double dual_identity = 0.0; // K-IOP: |U(n+1) - U(n) - rho (W - Z)|_F
  double power = 0.0;
  std::vector<double> margins;  // KLD_r,t - A_t then KLD_c,k - B_k
};

struct OptimizerTrace {
  std::string technique;
  std::vector<TraceRow> rows;
  ExitReason exit = ExitReason::MaxIter;
  double seconds = 0.0;
};

struct KropResult {
  RadarTensor Wr;
  OptimizerTrace trace;
};

struct KcopResult {
  CMat W_c;
  OptimizerTrace trace;
};

struct KiopResult {
  RadarTensor Wr;
  CMat W_c;
  OptimizerTrace trace;
};

// Projected gradient with squared-hinge penalty over the radar tensor; W_c is
// held at the ZF precoder.
KropResult run_krop(const ScenarioConfig& cfg, const TargetSet& tg, const CMat& W_c,
                    const RadarTensor& init, const OptimizerParams& prm, double sigma_n2);

// Log-barrier ascent over W_c with the radar tensor held fixed. Throws
// InfeasibleStart when init violates the power budget.
KcopResult run_kcop(const ScenarioConfig& cfg, const CMat& H, const TargetSet& tg,
                    const RadarTensor& Wr, const CMat& init, const OptimizerParams& prm,
                    double sigma_n2);

struct ZSubproblem {
  RadarTensor Zr;
  CMat Zc;
  std::vector<double> objective;  // per inner iteration, ascent form
  int inner_iterations = 0;
};

// Inner projected gradient for the ADMM auxiliary update. weight scales the
// KLD objective and penalty (0 leaves the pure proximal problem).
ZSubproblem admm_z_subproblem(const ScenarioConfig& cfg, const RadarTensor& Vr, const CMat& Vc,
                              const RadarTensor& Zr0, const CMat& Zc0, double rho,
                              double rho_pen, const CMat& H, const TargetSet& tg,
                              double sigma_n2, const OptimizerParams& prm, double weight = 1.0);

KiopResult run_kiop(const ScenarioConfig& cfg, const CMat& H, const TargetSet& tg,
                    const RadarTensor& init_r, const CMat& init_c, const OptimizerParams& prm,
                    double sigma_n2);

}  // namespace isac
