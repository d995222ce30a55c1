// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "isac/rng.hpp"
#include "isac/types.hpp"

namespace isac {

struct ScenarioConfig {
  int N = 20;
  int K = 3;
  int T = 3;
  int L = 100;
  double P_T = 1.0;
  double P_r = 0.5;
  double P_c = 0.5;
  double zeta = 3.0;
  std::vector<double> d_c{150.0, 210.0, 100.0};
  std::vector<double> d_r{100.0, 115.0, 95.0};
  double sigma_h2 = 1.0;
  // Entry variance of the target response matrices (scattering strength).
  double sigma_t2 = 1.0;
  double snr_db = 10.0;
  int M = 4;
  double P_FA = 1e-2;
  std::vector<double> A{10.0, 10.0, 10.0};
  std::vector<double> B{10.0, 10.0, 10.0};
  std::uint64_t seed = 1;
  int trials = 2000;
  int radar_pathloss_sign = -1;
  // Pathloss is (d / d_ref)^(-zeta); 1 m gives the absolute convention.
  double pathloss_ref_distance = 1.0;
  // Per-UE power weights; empty means equal split P_c / K.
  std::vector<double> p;
};

// Throws PowerSplitViolation, DegenerateGeometry, NonPositiveDistance,
// UnsupportedOrder or ConfigError. Returns cfg unchanged otherwise.
const ScenarioConfig& validate_config(const ScenarioConfig& cfg);

// sigma_n^2 derived from the sweep axis: P_r / sigma_n^2 = 10^(snr_db/10).
double noise_variance(const ScenarioConfig& cfg);
// Power pathloss (d_c[k]/d_ref)^(-zeta).
double comm_gain(const ScenarioConfig& cfg, int k);
// Amplitude factor (d_r[t]/d_ref)^(sign*zeta/2).
double radar_amp(const ScenarioConfig& cfg, int t);
std::vector<double> power_weights(const ScenarioConfig& cfg);

struct ChannelSet {
  CMat H;  // N x K, column k is h_k
  RVec pathloss_amp;
};

struct TargetSet {
  std::vector<CMat> H_t;  // N x N each
  std::vector<int> present;
  RVec radar_amp;
};

ChannelSet draw_channels(const ScenarioConfig& cfg, Rng& rng);
// presence empty means all targets present.
TargetSet draw_targets(const ScenarioConfig& cfg, Rng& rng, std::vector<int> presence = {});

struct Constellation {
  int M = 0;
  int bits = 0;
  std::vector<cd> symbols;  // indexed by Gray bit label
  double lambda = 0.0;      // sum over ordered pairs n != m of |s_n - s_m|^2
};

Constellation build_constellation(int M);

// Identity-covariance radar waveform: each slice has orthogonal rows scaled so
// that (1/L) sum_t ||W_{r,t}||_F^2 = P_r.
RadarTensor cic_waveform(const ScenarioConfig& cfg, Rng& rng);
// (1/L) * ||W||_F^2 summed over slices.
double radar_power(const RadarTensor& w, int L);

}  // namespace isac
