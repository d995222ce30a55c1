// SPDX-License-Identifier: Apache-2.0
#include "isac/radar.hpp"

#include <algorithm>
#include <cmath>

#include "isac/parallel.hpp"

namespace isac {

namespace {

Eigen::LLT<CMat> checked_llt(const CMat& R, const char* what) {
  CMat Rh = 0.5 * (R + R.adjoint());
  Eigen::LLT<CMat> llt(Rh);
  if (llt.info() != Eigen::Success)
    throw NumericalSingularity(std::string(what) + " is not positive definite");
  const auto d = llt.matrixLLT().diagonal().real();
  if (!(d.minCoeff() > 1e-150) || !d.allFinite() ||
      d.maxCoeff() / d.minCoeff() > 1e12)  // condition of R ~ ratio squared
    throw NumericalSingularity(std::string(what) + " conditioning exceeds threshold");
  return llt;
}

}  // namespace

CMat beam_covariance(const CMat& Wr_t, const CMat& W_c, int L) {
  CMat R = Wr_t * Wr_t.adjoint() / static_cast<double>(L) + W_c * W_c.adjoint();
  return 0.5 * (R + R.adjoint());
}

CMat receive_covariance(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp) {
  CMat R2 = amp * amp * H_t * R_t * H_t.adjoint();
  R2.diagonal().array() += sigma_n2;
  return 0.5 * (R2 + R2.adjoint());
}

double radar_kld(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp) {
  if (!(sigma_n2 > 0)) throw NumericalSingularity("noise variance must be positive");
  const auto N = H_t.rows();
  // work with R2 / sigma^2 = I + S, which keeps the terms O(1)
  CMat M = receive_covariance(H_t, R_t, sigma_n2, amp) / sigma_n2;
  auto llt = checked_llt(M, "R2");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  CMat Linv = llt.matrixL().solve(CMat::Identity(N, N));
  const double tr = Linv.squaredNorm();
  return (logdet + tr - static_cast<double>(N)) / kLn2;
}

double radar_kld_reverse(const CMat& H_t, const CMat& R_t, double sigma_n2, double amp) {
  const auto N = H_t.rows();
  CMat M = receive_covariance(H_t, R_t, sigma_n2, amp) / sigma_n2;
  auto llt = checked_llt(M, "R2");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  return (M.trace().real() - static_cast<double>(N) - logdet) / kLn2;
}

std::vector<double> radar_klds(const ScenarioConfig& cfg, const RadarTensor& Wr,
                               const CMat& W_c, const TargetSet& tg, double sigma_n2) {
  std::vector<double> out(cfg.T);
  for (int t = 0; t < cfg.T; ++t)
    out[t] = radar_kld(tg.H_t[t], beam_covariance(Wr[t], W_c, cfg.L), sigma_n2,
                       tg.radar_amp(t));
  return out;
}

CMat hermitian_pinv(const CMat& G, double rcond) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (G + G.adjoint()));
  const auto& ev = es.eigenvalues();
  const double cut = rcond * ev.cwiseAbs().maxCoeff();
  RVec inv = RVec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) > cut && ev(i) != 0.0) inv(i) = 1.0 / ev(i);
  const CMat& V = es.eigenvectors();
  return V * inv.asDiagonal() * V.adjoint();
}

CMat estimate_response(const CMat& Y, const CMat& X) {
  const CMat G = X * X.adjoint();
  const CMat C = Y * X.adjoint();
  // a well-conditioned Gram matrix has nothing for the pseudo-inverse to cut
  Eigen::LLT<CMat> llt(G);
  if (llt.info() == Eigen::Success && llt.rcond() > 1e-8) return llt.solve(C.adjoint()).adjoint();
  return C * hermitian_pinv(G);
}

double glrt_statistic(const CMat& Y, const CMat& H_hat, const CMat& R_t, double sigma_n2) {
  CMat R = H_hat * R_t * H_hat.adjoint();
  R.diagonal().array() += sigma_n2;
  R = 0.5 * (R + R.adjoint());
  Eigen::LLT<CMat> llt(R);
  if (llt.info() != Eigen::Success)
    throw NumericalSingularity("estimated covariance is not positive definite");
  // sum_l y_l^H R^-1 y_l = tr(R^-1 Y Y^H)
  const CMat S = Y * Y.adjoint();
  const double quad = llt.solve(S).trace().real();
  return (S.trace().real() + quad) / static_cast<double>(Y.cols());
}

RadarFrame radar_frame(const CMat& Wr_t, const CMat& W_c, const CMat& H_t, double amp,
                       double sigma_n2, bool present, int M, Rng& rng) {
  static const Constellation qpsk = build_constellation(4);
  const Constellation other = M == 4 ? Constellation{} : build_constellation(M);
  const Constellation& cons = M == 4 ? qpsk : other;
  const auto N = Wr_t.rows(), L = Wr_t.cols(), K = W_c.cols();
  RadarFrame f;
  CMat S(K, L);
  for (Eigen::Index l = 0; l < L; ++l)
    for (Eigen::Index k = 0; k < K; ++k) S(k, l) = cons.symbols[rng.uniform_int(cons.M)];
  f.X = W_c * S;
  for (Eigen::Index l = 0; l < L; ++l) f.X.col(l) += Wr_t.col(l) * qpsk.symbols[rng.uniform_int(4)];
  CMat noise = rng.cnormal(N, L, sigma_n2);
  if (present)
    f.Y = amp * (H_t * f.X) + noise;
  else
    f.Y = std::move(noise);
  return f;
}

FrameOutcome process_frame(const RadarFrame& f, const CMat& R_t, double sigma_n2) {
  FrameOutcome o;
  o.H_hat = estimate_response(f.Y, f.X);
  o.statistic = glrt_statistic(f.Y, o.H_hat, R_t, sigma_n2);
  return o;
}

double empirical_quantile_upper(std::vector<double> s, double p_fa) {
  if (s.empty()) throw EmptyInput("no samples for quantile");
  // smallest x with empirical CDF >= 1 - p_fa
  const double q = 1.0 - p_fa;
  auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(s.size()) - 1e-9));
  idx = std::clamp<std::size_t>(idx, 1, s.size()) - 1;
  std::nth_element(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(idx), s.end());
  return s[idx];
}

Calibration calibrate_threshold(const ScenarioConfig& cfg, const CMat& W_c,
                                const RadarTensor& Wr, std::int64_t trials, double sigma_n2,
                                std::uint64_t seed, std::uint64_t stream_id) {
  if (trials < 1) throw ConfigError("calibration needs trials >= 1");
  const int T = static_cast<int>(Wr.size());
  std::vector<std::vector<double>> stats(T, std::vector<double>(trials));
  std::vector<CMat> R(T);
  for (int t = 0; t < T; ++t) R[t] = beam_covariance(Wr[t], W_c, cfg.L);
  const CMat none = CMat::Zero(cfg.N, cfg.N);
  parallel_for(static_cast<std::size_t>(T) * trials, [&](std::size_t j) {
    const int t = static_cast<int>(j / trials);
    const auto i = static_cast<std::int64_t>(j % trials);
    Rng rng = Rng::stream(seed, Purpose::Calibration, {stream_id, std::uint64_t(t), std::uint64_t(i)});
    auto f = radar_frame(Wr[t], W_c, none, 0.0, sigma_n2, false, cfg.M, rng);
    stats[t][i] = process_frame(f, R[t], sigma_n2).statistic;
  });
  Calibration c;
  c.trials = trials;
  c.insufficient_trials = static_cast<double>(trials) * cfg.P_FA < 100.0;
  for (int t = 0; t < T; ++t) c.tau.push_back(empirical_quantile_upper(std::move(stats[t]), cfg.P_FA));
  return c;
}

DetectionResult run_detection(const ScenarioConfig& cfg, const CMat& W_c, const RadarTensor& Wr,
                              const TargetSet& tg, const std::vector<double>& tau,
                              std::int64_t trials, double sigma_n2, std::uint64_t seed,
                              std::uint64_t stream_id) {
  const int T = static_cast<int>(Wr.size());
  if (static_cast<int>(tau.size()) != T) throw ConfigError("one threshold per beam required");
  struct Rec {
    bool det1, det0;
    double e11, e01, e10;
  };
  std::vector<Rec> rec(static_cast<std::size_t>(T) * trials);
  std::vector<CMat> R(T);
  for (int t = 0; t < T; ++t) R[t] = beam_covariance(Wr[t], W_c, cfg.L);
  parallel_for(rec.size(), [&](std::size_t j) {
    const int t = static_cast<int>(j / trials);
    const auto i = static_cast<std::uint64_t>(j % trials);
    const double a = tg.radar_amp(t);
    Rec r{};
    {
      Rng rng = Rng::stream(seed, Purpose::Detection, {stream_id, std::uint64_t(t), i, 1});
      auto f = radar_frame(Wr[t], W_c, tg.H_t[t], a, sigma_n2, true, cfg.M, rng);
      auto o = process_frame(f, R[t], sigma_n2);
      r.det1 = o.statistic > tau[t];
      if (r.det1)
        r.e11 = (o.H_hat / a - tg.H_t[t]).squaredNorm();
      else
        r.e01 = tg.H_t[t].squaredNorm();
    }
    {
      Rng rng = Rng::stream(seed, Purpose::Detection, {stream_id, std::uint64_t(t), i, 0});
      auto f = radar_frame(Wr[t], W_c, tg.H_t[t], a, sigma_n2, false, cfg.M, rng);
      auto o = process_frame(f, R[t], sigma_n2);
      r.det0 = o.statistic > tau[t];
      if (r.det0) r.e10 = (o.H_hat / a).squaredNorm();
    }
    rec[j] = r;
  });
  DetectionResult out;
  out.targets.resize(T);
  for (int t = 0; t < T; ++t) {
    auto& d = out.targets[t];
    for (std::int64_t i = 0; i < trials; ++i) {
      const auto& r = rec[static_cast<std::size_t>(t) * trials + i];
      ++d.h1_trials;
      ++d.h0_trials;
      d.detections += r.det1;
      d.false_alarms += r.det0;
      d.sse_11 += r.e11;
      d.sse_01 += r.e01;
      d.sse_10 += r.e10;
    }
  }
  return out;
}

double mse_overall(double p_d, double p_fa, double mse_11, double mse_01, double mse_10,
                   double prior_h1) {
  return prior_h1 * ((1.0 - p_d) * mse_01 + p_d * mse_11) + (1.0 - prior_h1) * p_fa * mse_10;
}

MseReport mse_report(const ScenarioConfig& cfg, const TargetDetection& d, double sigma_n2) {
  MseReport m;
  const auto misses = d.h1_trials - d.detections;
  m.mse_11 = d.detections ? d.sse_11 / d.detections : 0.0;
  m.mse_01 = misses ? d.sse_01 / misses : 0.0;
  m.mse_10 = d.false_alarms ? d.sse_10 / d.false_alarms : 0.0;
  m.p_d = d.p_d();
  m.p_fa = d.p_fa();
  m.overall = mse_overall(m.p_d, m.p_fa, m.mse_11, m.mse_01, m.mse_10);
  m.ref_mse_11 = sigma_n2 * cfg.N / cfg.P_r;
  m.ref_mse_01 = static_cast<double>(cfg.N) * cfg.N * sigma_n2;
  return m;
}

}  // namespace isac
