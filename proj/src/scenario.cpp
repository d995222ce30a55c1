// SPDX-License-Identifier: Apache-2.0
#include "isac/scenario.hpp"

#include <cmath>
#include <string>

namespace isac {

const ScenarioConfig& validate_config(const ScenarioConfig& cfg) {
  if (cfg.K < 1 || cfg.N <= cfg.K)
    throw DegenerateGeometry("N must exceed K >= 1 (N=" + std::to_string(cfg.N) +
                             ", K=" + std::to_string(cfg.K) + ")");
  if (cfg.T < 1) throw ConfigError("T must be >= 1");
  if (cfg.L < 1) throw ConfigError("L must be >= 1");
  if (static_cast<int>(cfg.d_c.size()) != cfg.K)
    throw ConfigError("d_c must have K entries");
  if (static_cast<int>(cfg.d_r.size()) != cfg.T)
    throw ConfigError("d_r must have T entries");
  if (static_cast<int>(cfg.A.size()) != cfg.T) throw ConfigError("A must have T entries");
  if (static_cast<int>(cfg.B.size()) != cfg.K) throw ConfigError("B must have K entries");
  for (double d : cfg.d_c)
    if (!(d > 0)) throw NonPositiveDistance("UE distance must be positive");
  for (double d : cfg.d_r)
    if (!(d > 0)) throw NonPositiveDistance("target distance must be positive");
  if (!(cfg.pathloss_ref_distance > 0))
    throw NonPositiveDistance("pathloss_ref_distance must be positive");
  if (cfg.P_r < 0 || cfg.P_c < 0) throw PowerSplitViolation("powers must be non-negative");
  if (std::abs(cfg.P_r + cfg.P_c - cfg.P_T) > 1e-12 * std::max(1.0, cfg.P_T))
    throw PowerSplitViolation("P_r + P_c != P_T (" + std::to_string(cfg.P_r) + " + " +
                              std::to_string(cfg.P_c) + " vs " + std::to_string(cfg.P_T) +
                              ")");
  if (cfg.M < 2 || (cfg.M & (cfg.M - 1)) != 0)
    throw UnsupportedOrder("M must be a power of two >= 2");
  if (cfg.radar_pathloss_sign != 1 && cfg.radar_pathloss_sign != -1)
    throw ConfigError("radar_pathloss_sign must be +1 or -1");
  if (!(cfg.P_FA > 0 && cfg.P_FA < 1)) throw ConfigError("P_FA must be in (0,1)");
  if (cfg.sigma_h2 < 0 || cfg.sigma_t2 < 0) throw ConfigError("variances must be >= 0");
  if (cfg.trials < 1) throw ConfigError("trials must be >= 1");
  if (!cfg.p.empty()) {
    if (static_cast<int>(cfg.p.size()) != cfg.K) throw ConfigError("p must have K entries");
    double s = 0;
    for (double v : cfg.p) {
      if (v < 0) throw ConfigError("p entries must be >= 0");
      s += v;
    }
    if (std::abs(s - cfg.P_c) > 1e-9 * std::max(1.0, cfg.P_c))
      throw PowerSplitViolation("sum of p must equal P_c");
  }
  return cfg;
}

double noise_variance(const ScenarioConfig& cfg) {
  if (!(cfg.P_r > 0)) throw ConfigError("noise axis is referenced to P_r, which must be > 0");
  return cfg.P_r * std::pow(10.0, -cfg.snr_db / 10.0);
}

double comm_gain(const ScenarioConfig& cfg, int k) {
  return std::pow(cfg.d_c.at(k) / cfg.pathloss_ref_distance, -cfg.zeta);
}

double radar_amp(const ScenarioConfig& cfg, int t) {
  return std::pow(cfg.d_r.at(t) / cfg.pathloss_ref_distance,
                  cfg.radar_pathloss_sign * cfg.zeta / 2.0);
}

std::vector<double> power_weights(const ScenarioConfig& cfg) {
  if (!cfg.p.empty()) return cfg.p;
  return std::vector<double>(cfg.K, cfg.P_c / cfg.K);
}

ChannelSet draw_channels(const ScenarioConfig& cfg, Rng& rng) {
  ChannelSet cs;
  cs.H = rng.cnormal(cfg.N, cfg.K, cfg.sigma_h2);
  cs.pathloss_amp.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) cs.pathloss_amp(k) = std::sqrt(comm_gain(cfg, k));
  return cs;
}

TargetSet draw_targets(const ScenarioConfig& cfg, Rng& rng, std::vector<int> presence) {
  if (presence.empty()) presence.assign(cfg.T, 1);
  if (static_cast<int>(presence.size()) != cfg.T)
    throw ConfigError("presence must have T entries");
  TargetSet ts;
  ts.present = std::move(presence);
  ts.radar_amp.resize(cfg.T);
  for (int t = 0; t < cfg.T; ++t) {
    ts.H_t.push_back(rng.cnormal(cfg.N, cfg.N, cfg.sigma_t2));
    ts.radar_amp(t) = radar_amp(cfg, t);
  }
  return ts;
}

Constellation build_constellation(int M) {
  if (M < 2 || (M & (M - 1)) != 0) throw UnsupportedOrder("unsupported order M=" + std::to_string(M));
  Constellation c;
  c.M = M;
  c.bits = 0;
  while ((1 << c.bits) < M) ++c.bits;
  c.symbols.assign(M, cd{});
  if (M == 2) {
    c.symbols = {cd(1, 0), cd(-1, 0)};
  } else if (M == 4) {
    // bit 1 -> in-phase sign, bit 0 -> quadrature sign
    const double s = 1.0 / std::sqrt(2.0);
    for (int lab = 0; lab < 4; ++lab)
      c.symbols[lab] = cd(((lab >> 1) & 1) ? -s : s, (lab & 1) ? -s : s);
  } else {
    for (int i = 0; i < M; ++i) {
      const int gray = i ^ (i >> 1);
      c.symbols[gray] = std::polar(1.0, 2.0 * std::numbers::pi * i / M);
    }
  }
  for (int n = 0; n < M; ++n)
    for (int m = 0; m < M; ++m)
      if (n != m) c.lambda += std::norm(c.symbols[n] - c.symbols[m]);
  return c;
}

RadarTensor cic_waveform(const ScenarioConfig& cfg, Rng& rng) {
  RadarTensor w;
  const int r = std::min(cfg.N, cfg.L);
  const double scale = std::sqrt(cfg.P_r * cfg.L / (static_cast<double>(cfg.T) * r));
  for (int t = 0; t < cfg.T; ++t) {
    CMat g = rng.cnormal(std::max(cfg.N, cfg.L), r);
    Eigen::HouseholderQR<CMat> qr(g);
    CMat q = qr.householderQ() * CMat::Identity(g.rows(), r);
    // q has orthonormal columns; orient so the slice is N x L
    CMat slice = (cfg.L >= cfg.N) ? CMat(q.adjoint()) : q;
    w.push_back(scale * slice);
  }
  return w;
}

double radar_power(const RadarTensor& w, int L) { return frob2(w) / L; }

}  // namespace isac
