// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

// R_t = (1/L) W_{r,t} W_{r,t}^H + W_c W_c^H.
CMat beam_covariance(const CMat& Wr_t, const CMat& W_c, int L);
// R2_t = a^2 H_t R_t H_t^H + sigma_n2 I.
CMat receive_covariance(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp);

// KL(H0 -> H1) between the noise-only and target-present snapshot laws, bits.
// Throws NumericalSingularity when R2_t is not numerically positive definite.
double radar_kld(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp);
// The opposite direction, KL(H1 -> H0). Diagnostic only.
double radar_kld_reverse(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp);

std::vector<double> radar_klds(const ScenarioConfig& cfg, const RadarTensor& Wr,
                               const CMat& W_c, const TargetSet& tg, double sigma_n2);

// Hermitian pseudo-inverse with eigenvalue cutoff rcond * max|eig|.
CMat hermitian_pinv(const CMat& G, double rcond = 1e-10);

// Least squares over all snapshots: (Y X^H)(X X^H)^+.
CMat estimate_response(const CMat& Y, const CMat& X);

// (1/L) sum_l y_l^H (I + R^-1) y_l with R = H_hat R_t H_hat^H + sigma_n2 I.
double glrt_statistic(const CMat& Y, const CMat& H_hat, const CMat& R_t, double sigma_n2);

struct RadarFrame {
  CMat X;  // N x L transmitted snapshots
  CMat Y;  // N x L received snapshots
};

// One frame of returns for beam t: x_l = W_{r,t}(:,l) s_r + W_c s_c,
// y_l = q * amp * H_t x_l + n_l.
RadarFrame radar_frame(const CMat& Wr_t, const CMat& W_c, const CMat& H_t, double amp,
                       double sigma_n2, bool present, int M, Rng& rng);

struct FrameOutcome {
  double statistic = 0.0;
  CMat H_hat;  // estimate of the effective response amp * H_t
};

FrameOutcome process_frame(const RadarFrame& f, const CMat& R_t, double sigma_n2);

struct Calibration {
  std::vector<double> tau;  // per target beam
  std::int64_t trials = 0;
  bool insufficient_trials = false;
};

// Neyman-Pearson threshold: empirical (1 - P_FA) quantile of H0 statistics.
double empirical_quantile_upper(std::vector<double> samples, double p_fa);

Calibration calibrate_threshold(const ScenarioConfig& cfg, const CMat& W_c,
                                const RadarTensor& Wr, std::int64_t trials, double sigma_n2,
                                std::uint64_t seed, std::uint64_t stream_id = 0);

struct TargetDetection {
  std::int64_t h1_trials = 0;
  std::int64_t detections = 0;
  std::int64_t h0_trials = 0;
  std::int64_t false_alarms = 0;
  // squared estimation errors of H_t summed per outcome class
  double sse_11 = 0.0;  // target present, declared present
  double sse_01 = 0.0;  // target present, missed (estimate forced to zero)
  double sse_10 = 0.0;  // target absent, false alarm
  double p_d() const { return h1_trials ? double(detections) / h1_trials : 0.0; }
  double p_fa() const { return h0_trials ? double(false_alarms) / h0_trials : 0.0; }
};

struct DetectionResult {
  std::vector<TargetDetection> targets;
};

// Monte Carlo over noise and symbols with the passed-in target responses.
DetectionResult run_detection(const ScenarioConfig& cfg, const CMat& W_c, const RadarTensor& Wr,
                              const TargetSet& tg, const std::vector<double>& tau,
                              std::int64_t trials, double sigma_n2, std::uint64_t seed,
                              std::uint64_t stream_id = 0);

struct MseReport {
  double mse_11 = 0.0, mse_10 = 0.0, mse_01 = 0.0;
  double p_d = 0.0, p_fa = 0.0;
  double overall = 0.0;
  double ref_mse_11 = 0.0;  // sigma_n2 N / P_r
  double ref_mse_01 = 0.0;  // N^2 sigma_n2
};

inline constexpr double kPriorH1 = 0.5;

double mse_overall(double p_d, double p_fa, double mse_11, double mse_01, double mse_10,
                   double prior_h1 = kPriorH1);

MseReport mse_report(const ScenarioConfig& cfg, const TargetDetection& d, double sigma_n2);

}  // namespace isac
