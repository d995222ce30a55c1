// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "isac/comm.hpp"
#include "isac/radar.hpp"
#include "test_util.hpp"

using namespace isac;

namespace {

// KL(CN(0, s2 I) || CN(0, S)) in bits, coded directly from the Gaussian densities.
double gaussian_kl_bits(const CMat& S, double s2) {
  const Eigen::Index n = S.rows();
  Eigen::SelfAdjointEigenSolver<CMat> es(S);
  double logdet = 0.0, tr_inv = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    logdet += std::log(es.eigenvalues()(i));
    tr_inv += 1.0 / es.eigenvalues()(i);
  }
  return (logdet - n * std::log(s2) + s2 * tr_inv - n) / std::log(2.0);
}

CMat random_psd(Rng& rng, int n) {
  const CMat A = rng.cnormal(n, n);
  return A * A.adjoint() / n;
}

}  // namespace

TEST_CASE("beam covariance special cases") {
  ScenarioConfig c;
  c.T = 1;
  c.P_r = 0.5;
  Rng rng(3);
  const auto cic = cic_waveform(c, rng);
  const CMat R = beam_covariance(cic[0], CMat::Zero(c.N, c.K), c.L);
  const double expect = c.P_r / (c.N * c.T);
  CHECK((R - expect * CMat::Identity(c.N, c.N)).norm() < 1e-12);

  const CMat Wc = rng.cnormal(c.N, c.K);
  const CMat R0 = beam_covariance(CMat::Zero(c.N, c.L), Wc, c.L);
  CHECK((R0 - Wc * Wc.adjoint()).norm() < 1e-14);

  const CMat R1 = beam_covariance(rng.cnormal(c.N, c.L), Wc, c.L);
  CHECK((R1 - R1.adjoint()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<CMat> es(R1);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("radar KLD hand value and zero response") {
  const CMat H = CMat::Identity(2, 2);
  CHECK(radar_kld(H, CMat::Identity(2, 2), 1.0, 1.0) ==
        doctest::Approx((2 * std::log(2.0) - 1.0) / std::log(2.0)).epsilon(1e-14));
  CHECK(radar_kld(H, CMat::Identity(2, 2), 1.0, 1.0) == doctest::Approx(0.5574).epsilon(1e-4));
  CHECK(radar_kld(CMat::Zero(3, 3), CMat::Identity(3, 3), 0.7, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("radar KLD matches the direct Gaussian divergence") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const CMat H = rng.cnormal(4, 4);
    const CMat R = random_psd(rng, 4);
    const double s2 = 0.1 + rng.uniform();
    const double a = 0.5 + rng.uniform();
    const CMat S = a * a * H * R * H.adjoint() + s2 * CMat::Identity(4, 4);
    const double ref = gaussian_kl_bits(S, s2);
    CHECK(std::abs(radar_kld(H, R, s2, a) - ref) <= 1e-10 * std::max(1.0, ref));
  }
}

TEST_CASE("radar KLD is monotone in the covariance and unitarily invariant") {
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    const CMat H = rng.cnormal(5, 5);
    const CMat R = random_psd(rng, 5);
    const double base = radar_kld(H, R, 0.3, 1.0);
    CHECK(radar_kld(H, 1.7 * R, 0.3, 1.0) >= base);
    const CMat U = Eigen::HouseholderQR<CMat>(rng.cnormal(5, 5)).householderQ();
    CHECK(radar_kld(U * H, R, 0.3, 1.0) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("reverse divergence differs from the forward one") {
  const CMat H = CMat::Identity(2, 2);
  const double fwd = radar_kld(H, CMat::Identity(2, 2), 1.0, 1.0);
  const double rev = radar_kld_reverse(H, CMat::Identity(2, 2), 1.0, 1.0);
  CHECK(rev == doctest::Approx((2.0 - 2 * std::log(2.0)) / std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(fwd - rev) > 0.1);
}

TEST_CASE("least squares response estimate") {
  Rng rng(7);
  const int N = 6;
  const CMat H = rng.cnormal(N, N);
  const CMat X = rng.cnormal(N, 2 * N);
  CHECK((estimate_response(H * X, X) - H).norm() < 1e-8 * H.norm());

  // rank one X: H_hat X is the projection of Y onto span(X)
  const CMat x = rng.cnormal(N, 1);
  const CMat Y = rng.cnormal(N, 1);
  const CMat Hh = estimate_response(Y, x);
  const CMat proj = Y * (x.adjoint() * x).inverse() * x.adjoint() * x;
  CHECK((Hh * x - proj).norm() < 1e-10);
}

TEST_CASE("noise only estimate energy matches the fixed-design expectation") {
  // E|H_hat|_F^2 = s2 N tr((X X^H)^-1) for white noise and a fixed design X
  ScenarioConfig c;
  c.T = 1;
  Rng rng(8);
  const CMat X = cic_waveform(c, rng)[0];
  const double s2 = 0.2;
  const double expect = s2 * c.N * (X * X.adjoint()).inverse().trace().real();
  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) acc += estimate_response(rng.cnormal(c.N, c.L, s2), X).squaredNorm();
  CHECK(std::abs(acc / draws - expect) / expect < 0.05);
}

TEST_CASE("GLRT statistic basics") {
  Rng rng(9);
  const int N = 4, L = 8;
  const CMat R = random_psd(rng, N);
  const CMat Hh = rng.cnormal(N, N);
  CHECK(glrt_statistic(CMat::Zero(N, L), Hh, R, 0.5) == 0.0);
  for (int i = 0; i < 20; ++i) CHECK(glrt_statistic(rng.cnormal(N, L), Hh, R, 0.5) >= 0.0);

  // pure unit noise with a zero estimate: E stat = 2N
  double acc = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i)
    acc += glrt_statistic(rng.cnormal(N, 1), CMat::Zero(N, N), R, 1.0);
  CHECK(acc / draws == doctest::Approx(2.0 * N).epsilon(0.03));
}

TEST_CASE("empirical quantile definition and monotonicity") {
  std::vector<double> v;
  for (int i = 1; i <= 101; ++i) v.push_back(i);
  CHECK(empirical_quantile_upper(v, 0.5) == doctest::Approx(51.0).epsilon(0.02));
  double prev = 1e300;
  for (double p : {0.001, 0.01, 0.1, 0.3, 0.5, 0.9}) {
    const double q = empirical_quantile_upper(v, p);
    CHECK(q <= prev);
    prev = q;
  }
}

TEST_CASE("held-out false alarm rate within the binomial interval") {
  ScenarioConfig c;
  c.N = 6;
  c.K = 2;
  c.T = 2;
  c.L = 12;
  c.d_c = {150, 210};
  c.d_r = {100, 115};
  c.A = {1, 1};
  c.B = {1, 1};
  c.pathloss_ref_distance = 100;
  c.P_FA = 0.05;
  const double s2 = noise_variance(c);
  Rng rng(10);
  const auto ch = draw_channels(c, rng);
  const auto tg = draw_targets(c, rng);
  const auto Wc = zf_precoder(ch.H, power_weights(c), c.P_c).W_c;
  const auto Wr = cic_waveform(c, rng);
  const auto cal = calibrate_threshold(c, Wc, Wr, 20000, s2, 11, 1);
  const auto det = run_detection(c, Wc, Wr, tg, cal.tau, 20000, s2, 11, 2);
  for (const auto& d : det.targets) {
    const double n = d.h0_trials, ph = c.P_FA, z = 1.96;
    const double half = z * std::sqrt(ph * (1 - ph) / n) + 1.0 / n;
    CHECK(std::abs(d.p_fa() - ph) < 2 * half);
  }
  // thresholds shrink as the false-alarm budget grows
  ScenarioConfig loose = c;
  loose.P_FA = 0.2;
  const auto cal2 = calibrate_threshold(loose, Wc, Wr, 20000, s2, 11, 1);
  for (int t = 0; t < c.T; ++t) CHECK(cal2.tau[t] <= cal.tau[t]);
}

TEST_CASE("detection limits") {
  ScenarioConfig c;
  c.N = 4;
  c.K = 2;
  c.T = 1;
  c.L = 8;
  c.d_c = {150, 210};
  c.d_r = {100};
  c.A = {1};
  c.B = {1, 1};
  c.pathloss_ref_distance = 100;
  c.snr_db = 60;
  double s2 = noise_variance(c);
  Rng rng(12);
  const auto ch = draw_channels(c, rng);
  const auto tg = draw_targets(c, rng);
  const auto Wc = zf_precoder(ch.H, power_weights(c), c.P_c).W_c;
  const auto Wr = cic_waveform(c, rng);
  auto cal = calibrate_threshold(c, Wc, Wr, 4000, s2, 13, 1);
  auto det = run_detection(c, Wc, Wr, tg, cal.tau, 2000, s2, 13, 2);
  CHECK(det.targets[0].p_d() > 0.999);

  // the comm signal alone illuminates the target
  c.snr_db = 10;
  s2 = noise_variance(c);
  const RadarTensor none(1, CMat::Zero(c.N, c.L));
  cal = calibrate_threshold(c, Wc, none, 4000, s2, 14, 1);
  det = run_detection(c, Wc, none, tg, cal.tau, 4000, s2, 14, 2);
  CHECK(det.targets[0].p_d() > c.P_FA + 0.05);
}

TEST_CASE("detection is independent of worker count") {
  ScenarioConfig c;
  c.N = 6;
  c.K = 2;
  c.T = 2;
  c.L = 12;
  c.d_c = {150, 210};
  c.d_r = {100, 115};
  c.A = {1, 1};
  c.B = {1, 1};
  const double s2 = noise_variance(c);
  Rng rng(15);
  const auto ch = draw_channels(c, rng);
  const auto tg = draw_targets(c, rng);
  const auto Wc = zf_precoder(ch.H, power_weights(c), c.P_c).W_c;
  const auto Wr = cic_waveform(c, rng);
  auto run = [&] {
    const auto cal = calibrate_threshold(c, Wc, Wr, 3000, s2, 16, 1);
    const auto det = run_detection(c, Wc, Wr, tg, cal.tau, 3000, s2, 16, 2);
    std::vector<double> out = cal.tau;
    for (const auto& d : det.targets) {
      out.push_back(static_cast<double>(d.detections));
      out.push_back(static_cast<double>(d.false_alarms));
      out.push_back(d.sse_11);
    }
    return out;
  };
  const auto a = testutil::with_workers(1, run);
  const auto b = testutil::with_workers(4, run);
  CHECK(a == b);
}

TEST_CASE("MSE decomposition and reference values") {
  ScenarioConfig c;
  c.snr_db = 10.0 * std::log10(c.P_r);  // sigma_n2 = 1
  TargetDetection d;
  const auto r = mse_report(c, d, 1.0);
  CHECK(r.ref_mse_11 == doctest::Approx(40.0));
  CHECK(r.ref_mse_01 == doctest::Approx(400.0));
  CHECK(mse_overall(1.0, 0.0, 3.0, 7.0, 11.0) == doctest::Approx(1.5));
  CHECK(mse_overall(0.0, 1.0, 3.0, 7.0, 11.0) == doctest::Approx(0.5 * 7.0 + 0.5 * 11.0));
}
