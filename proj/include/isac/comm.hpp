// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "isac/scenario.hpp"

namespace isac {

struct CommPrecoder {
  CMat W_c;  // N x K
  std::vector<double> p;
};

// Normalised zero-forcing: W~ = H^* (H^T H^*)^{-1} so that H^T W~ = I, then
// W_c = sqrt(P_c) * W~ diag(sqrt p) / ||W~ diag(sqrt p)||_F.
// Throws SingularChannel if H^T H^* is numerically rank deficient.
CommPrecoder zf_precoder(const CMat& H, const std::vector<double>& p, double P_c);

// d_c[k]^(-zeta) * radar_power * sigma_h2 + sigma_n2.
double interference_variance(const ScenarioConfig& cfg, int k, double sigma_n2,
                             double radar_power);
// Same with radar_power = P_r and sigma_n2 from the sweep axis.
double interference_variance(const ScenarioConfig& cfg, int k);

// Averaged-over-channel KLD of UE k under ZF, in bits.
double kld_zf_closed_form(const ScenarioConfig& cfg, int k, double sigma_eta2);

// Channel-conditional KLD of UE k for an arbitrary precoder, in bits.
double kld_conditional(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H, int k,
                       double sigma_eta2);

// Per-UE conditional KLDs with sigma_eta^2 driven by the radar tensor's power.
std::vector<double> comm_klds(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                              const RadarTensor& Wr, double sigma_n2);

struct BerResult {
  std::vector<double> ber;
  std::vector<std::int64_t> bit_errors;
  std::int64_t bits_per_ue = 0;
  std::int64_t trials = 0;
  // set when some UE saw fewer than 10 errors (estimate is a bound only)
  bool insufficient_trials = false;
};

// Monte Carlo bit error rate per UE. Symbol vectors cycle through the L
// radar snapshots; stream seeded from (seed, stream_id).
BerResult simulate_ber(const ScenarioConfig& cfg, const CMat& W_c, const RadarTensor& Wr,
                       const ChannelSet& ch, double sigma_n2, std::int64_t trials,
                       std::uint64_t seed, std::uint64_t stream_id = 0);

}  // namespace isac
