// SPDX-License-Identifier: Apache-2.0
#include "isac/comm.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "isac/parallel.hpp"

namespace isac {

CommPrecoder zf_precoder(const CMat& H, const std::vector<double>& p, double P_c) {
  const auto K = H.cols();
  if (static_cast<Eigen::Index>(p.size()) != K) throw ConfigError("p must have K entries");
  if (H.rows() <= K) throw DegenerateGeometry("ZF needs N > K");
  CMat G = H.transpose() * H.conjugate();
  Eigen::SelfAdjointEigenSolver<CMat> es(G, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 1e-12 * ev.maxCoeff()))
    throw SingularChannel("H^T H^* is not invertible within conditioning threshold");
  CMat Wt = H.conjugate() * G.ldlt().solve(CMat::Identity(K, K));
  CMat D = CMat::Zero(K, K);
  for (Eigen::Index k = 0; k < K; ++k) D(k, k) = std::sqrt(p[k]);
  CMat Wd = Wt * D;
  const double nrm = Wd.norm();
  CommPrecoder out;
  out.p = p;
  out.W_c = nrm > 0 ? CMat(std::sqrt(P_c) * Wd / nrm) : CMat::Zero(H.rows(), K);
  return out;
}

double interference_variance(const ScenarioConfig& cfg, int k, double sigma_n2,
                             double radar_power) {
  return comm_gain(cfg, k) * radar_power * cfg.sigma_h2 + sigma_n2;
}

double interference_variance(const ScenarioConfig& cfg, int k) {
  return interference_variance(cfg, k, noise_variance(cfg), cfg.P_r);
}

double kld_zf_closed_form(const ScenarioConfig& cfg, int k, double sigma_eta2) {
  const auto c = build_constellation(cfg.M);
  const double pk = power_weights(cfg)[k];
  return c.lambda * comm_gain(cfg, k) * pk * (cfg.N - cfg.K) /
         (cfg.M * (cfg.M - 1.0) * sigma_eta2 * kLn2);
}

double kld_conditional(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H, int k,
                       double sigma_eta2) {
  const auto c = build_constellation(cfg.M);
  const double g = comm_gain(cfg, k);
  const CVec e = H.col(k).transpose() * W_c;  // h_k^T w_{c,i}
  double iui = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i)
    if (i != k) iui += std::norm(e(i));
  const double num = 2.0 * std::norm(e(k));
  const double den = g * iui + sigma_eta2;
  return c.lambda * g / (2.0 * cfg.M * (cfg.M - 1.0) * kLn2) * num / den;
}

std::vector<double> comm_klds(const ScenarioConfig& cfg, const CMat& W_c, const CMat& H,
                              const RadarTensor& Wr, double sigma_n2) {
  const double pr = radar_power(Wr, cfg.L);
  std::vector<double> out(cfg.K);
  for (int k = 0; k < cfg.K; ++k)
    out[k] = kld_conditional(cfg, W_c, H, k, interference_variance(cfg, k, sigma_n2, pr));
  return out;
}

BerResult simulate_ber(const ScenarioConfig& cfg, const CMat& W_c, const RadarTensor& Wr,
                       const ChannelSet& ch, double sigma_n2, std::int64_t trials,
                       std::uint64_t seed, std::uint64_t stream_id) {
  if (trials < 1) throw ConfigError("simulate_ber needs trials >= 1");
  const int K = cfg.K, T = static_cast<int>(Wr.size()), L = cfg.L;
  const auto cons = build_constellation(cfg.M);
  const auto qpsk = build_constellation(4);

  // effective scalar gains: E(k,i) = sqrt(g_k) h_k^T w_{c,i}
  CMat E = ch.H.transpose() * W_c;
  std::vector<CMat> F(T);  // F[t](k,l) = sqrt(g_k) h_k^T W_{r,t}(:,l)
  for (int t = 0; t < T; ++t) F[t] = ch.H.transpose() * Wr[t];
  for (int k = 0; k < K; ++k) {
    const double a = std::sqrt(comm_gain(cfg, k));
    E.row(k) *= a;
    for (int t = 0; t < T; ++t) F[t].row(k) *= a;
  }

  constexpr std::int64_t kChunk = 4096;
  const std::int64_t nchunks = (trials + kChunk - 1) / kChunk;
  std::vector<std::vector<std::int64_t>> errs(nchunks, std::vector<std::int64_t>(K, 0));
  parallel_for(static_cast<std::size_t>(nchunks), [&](std::size_t c) {
    Rng rng = Rng::stream(seed, Purpose::Ber, {stream_id, c});
    const std::int64_t begin = static_cast<std::int64_t>(c) * kChunk;
    const std::int64_t end = std::min(trials, begin + kChunk);
    std::vector<int> lab(K);
    CVec s(K);
    for (std::int64_t n = begin; n < end; ++n) {
      const int l = static_cast<int>(n % L);
      for (int k = 0; k < K; ++k) {
        lab[k] = rng.uniform_int(cons.M);
        s(k) = cons.symbols[lab[k]];
      }
      CVec y = E * s;
      for (int t = 0; t < T; ++t) {
        const cd sr = qpsk.symbols[rng.uniform_int(4)];
        y += F[t].col(l) * sr;
      }
      for (int k = 0; k < K; ++k) {
        y(k) += rng.cnormal(sigma_n2);
        const cd z = y(k) / E(k, k);
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int m = 0; m < cons.M; ++m) {
          const double d = std::norm(z - cons.symbols[m]);
          if (d < bd) {
            bd = d;
            best = m;
          }
        }
        errs[c][k] += std::popcount(static_cast<unsigned>(best ^ lab[k]));
      }
    }
  });

  BerResult r;
  r.trials = trials;
  r.bits_per_ue = trials * cons.bits;
  r.bit_errors.assign(K, 0);
  for (const auto& e : errs)
    for (int k = 0; k < K; ++k) r.bit_errors[k] += e[k];
  r.ber.resize(K);
  for (int k = 0; k < K; ++k) {
    r.ber[k] = static_cast<double>(r.bit_errors[k]) / static_cast<double>(r.bits_per_ue);
    if (r.bit_errors[k] < 10) r.insufficient_trials = true;
  }
  return r;
}

}  // namespace isac
