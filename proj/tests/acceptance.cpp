// SPDX-License-Identifier: Apache-2.0
// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "isac/config_io.hpp"
#include "isac/gradcheck.hpp"
#include "isac/harness.hpp"
#include "isac/parallel.hpp"

using namespace isac;

namespace {

// Tolerances, all pinned here.
constexpr double kGradTol = 1e-5;
constexpr int kGradInstances = 20;
constexpr double kRadarKldTol = 1e-10;
constexpr double kCommMcTol = 0.02;
constexpr std::int64_t kCommMcSamples = 1000000;
constexpr int kZfDraws = 10000;
constexpr double kZfTol = 0.10;
constexpr double kZfGainLo = 17.0, kZfGainHi = 18.0;
constexpr std::int64_t kCalibTrials = 200000;
constexpr std::int64_t kHeldOutTrials = 100000;
constexpr double kMseTol = 0.10;
constexpr int kMseTrials = 1000;
constexpr double kRankCorrMin = 0.95;
constexpr double kBerFloor = 8e-3, kBerFloorFactor = 1.5;
constexpr double kKropPdGain = 0.20;
constexpr double kKropBerMax = 1e-4;
constexpr double kBaselineFloorMin = 1e-3;
constexpr double kPairedFraction = 0.80;
constexpr int kOptMaxIter = 300;
constexpr double kPowerTol = 1e-10;
constexpr double kDualTol = 1e-12;
constexpr int kProfileIter = 30;

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("%s [%d] %s | %s | %.1f s\n", v.pass ? "PASS" : "FAIL", id, name.c_str(),
              v.detail.c_str(), s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunConfig paper() { return load_config(std::string(ISAC_CONFIG_DIR) + "/paper.json"); }

// KL(CN(0, s2 I) || CN(0, S)) in bits via an LU determinant.
double kl_oracle(const CMat& S, double s2) {
  const Eigen::PartialPivLU<CMat> lu(S);
  const double n = static_cast<double>(S.rows());
  const double logdet = std::log(std::abs(lu.determinant()));
  const double tr = lu.inverse().trace().real();
  return (logdet - n * std::log(s2) + s2 * tr - n) / std::log(2.0);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / v.size();
}

// ---------------------------------------------------------------------------

Verdict gradients() {
  const auto rows = gradient_certification(kGradInstances, 2024, kGradTol);
  int n = 0, bad = 0;
  double worst = 0;
  std::string worst_name;
  for (const auto& r : rows) {
    if (!r.certified) continue;
    ++n;
    bad += !r.pass;
    if (r.rel_error > worst) {
      worst = r.rel_error;
      worst_name = r.name;
    }
  }
  return {bad == 0 && n > 0,
          fmt("%d checks on %d instances, %d failed, worst rel %.2e (%s)", n, kGradInstances, bad,
              worst, worst_name.c_str())};
}

Verdict kld_oracles() {
  Rng rng(77);
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const CMat H = rng.cnormal(4, 4);
    const CMat A = rng.cnormal(4, 4);
    const CMat R = A * A.adjoint() / 4.0;
    const double s2 = 0.05 + rng.uniform();
    const double a = 0.2 + rng.uniform();
    const CMat S = a * a * H * R * H.adjoint() + s2 * CMat::Identity(4, 4);
    const double ref = kl_oracle(S, s2);
    worst = std::max(worst, std::abs(radar_kld(H, R, s2, a) - ref) / std::max(1.0, ref));
  }
  // comm: mean pairwise log-likelihood ratio of the constellation under noise
  const auto q = build_constellation(4);
  ScenarioConfig c;
  c.N = 1;
  c.K = 1;
  c.d_c = {1.0};
  double worst_mc = 0;
  for (double s2 : {1.0, 0.25}) {
    const std::int64_t per_pair = kCommMcSamples / 12;
    double acc = 0;
    Rng r2(78);
    for (int n = 0; n < 4; ++n)
      for (int m = 0; m < 4; ++m) {
        if (n == m) continue;
        for (std::int64_t i = 0; i < per_pair; ++i) {
          const cd y = q.symbols[n] + r2.cnormal(s2);
          acc += (std::norm(y - q.symbols[m]) - std::norm(y - q.symbols[n])) / s2;
        }
      }
    const double mc = acc / (12.0 * per_pair) / std::log(2.0);
    const double v = kld_conditional(c, CMat::Ones(1, 1), CMat::Ones(1, 1), 0, s2);
    worst_mc = std::max(worst_mc, std::abs(mc - v) / v);
  }
  return {worst <= kRadarKldTol && worst_mc <= kCommMcTol,
          fmt("radar worst rel %.1e over 200 instances, comm MC worst rel %.4f", worst, worst_mc)};
}

Verdict zf_closed_form() {
  ScenarioConfig c = paper().scenario;
  c.snr_db = 10;
  const double s2 = noise_variance(c);
  Rng rng(91);
  std::vector<double> acc(c.K, 0.0);
  double gain = 0;
  for (int i = 0; i < kZfDraws; ++i) {
    const auto ch = draw_channels(c, rng);
    const CMat Wt = ch.H.conjugate() * (ch.H.transpose() * ch.H.conjugate()).inverse();
    gain += c.K / Wt.squaredNorm();
    const auto W = zf_precoder(ch.H, power_weights(c), c.P_c).W_c;
    for (int k = 0; k < c.K; ++k)
      acc[k] += kld_conditional(c, W, ch.H, k, interference_variance(c, k, s2, c.P_r));
  }
  gain /= kZfDraws;
  double worst = 0;
  std::ostringstream os;
  for (int k = 0; k < c.K; ++k) {
    const double closed = kld_zf_closed_form(c, k, interference_variance(c, k, s2, c.P_r));
    const double rel = std::abs(acc[k] / kZfDraws - closed) / closed;
    worst = std::max(worst, rel);
    os << fmt(" ue%d %.3f/%.3f", k + 1, acc[k] / kZfDraws, closed);
  }
  return {worst <= kZfTol && gain >= kZfGainLo && gain <= kZfGainHi,
          fmt("mean/closed%s, worst rel %.4f, E[K/|W~|^2] = %.3f", os.str().c_str(), worst, gain)};
}

Verdict calibration() {
  RunConfig rc = paper();
  ScenarioConfig c = rc.scenario;
  c.snr_db = 10;
  const double s2 = noise_variance(c);
  const Draw d = make_draw(c, c.seed, 0);
  const auto cal = calibrate_threshold(c, d.zf, d.cic, kCalibTrials, s2, c.seed, 11);
  const Estimate ref = wilson(std::llround(c.P_FA * kHeldOutTrials), kHeldOutTrials);
  bool ok = true;
  std::ostringstream os;
  for (int t = 0; t < c.T; ++t) {
    const CMat R = beam_covariance(d.cic[t], d.zf, c.L);
    std::vector<std::int64_t> hits(kHeldOutTrials, 0);
    parallel_for(static_cast<std::size_t>(kHeldOutTrials), [&](std::size_t i) {
      Rng rng = Rng::stream(c.seed, Purpose::Test, {std::uint64_t(t), std::uint64_t(i)});
      const auto f = radar_frame(d.cic[t], d.zf, d.tg.H_t[t], d.tg.radar_amp(t), s2, false, c.M, rng);
      hits[i] = process_frame(f, R, s2).statistic > cal.tau[t];
    });
    std::int64_t fa = 0;
    for (auto h : hits) fa += h;
    const double rate = static_cast<double>(fa) / kHeldOutTrials;
    ok = ok && rate >= ref.lo && rate <= ref.hi;
    os << fmt(" T%d %.5f", t + 1, rate);
  }
  return {ok, fmt("held-out P_FA%s, interval [%.5f, %.5f]", os.str().c_str(), ref.lo, ref.hi)};
}

Verdict estimator_mse() {
  ScenarioConfig c = paper().scenario;
  c.snr_db = 10;
  const double s2 = noise_variance(c);
  const Draw d = make_draw(c, c.seed, 0);
  const auto cal = calibrate_threshold(c, d.zf, d.cic, 20000, s2, c.seed, 21);
  const auto det = run_detection(c, d.zf, d.cic, d.tg, cal.tau, kMseTrials, s2, c.seed, 22);
  bool ok = true;
  std::ostringstream os;
  for (int t = 0; t < c.T; ++t) {
    const auto m = mse_report(c, det.targets[t], s2);
    const double r11 = m.mse_11 / m.ref_mse_11, r01 = m.mse_01 / m.ref_mse_01;
    ok = ok && std::abs(r11 - 1) <= kMseTol && std::abs(r01 - 1) <= kMseTol;
    os << fmt(" T%d mse11 %.4g (ref %.4g) mse01 %.4g (ref %.4g);", t + 1, m.mse_11, m.ref_mse_11,
              m.mse_01, m.ref_mse_01);
  }
  return {ok, os.str()};
}

std::vector<MetricsRecord> baseline_records;

Verdict baseline_trends() {
  const RunConfig rc = paper();
  baseline_records = run_baseline_sweep(rc.scenario, rc.sweep);
  const auto& R = baseline_records;
  const int T = rc.scenario.T, K = rc.scenario.K;
  bool mono = true, order = true;
  for (std::size_t i = 0; i < R.size(); ++i)
    if (R[i].failed) return {false, "sweep point failed: " + R[i].failure};
  for (std::size_t i = 1; i < R.size(); ++i)
    for (int t = 0; t < T; ++t) {
      mono = mono && R[i].targets[t].p_d.hi >= R[i - 1].targets[t].p_d.lo;
      mono = mono && R[i].targets[t].kld_r.mean >= R[i - 1].targets[t].kld_r.mean;
    }
  // T3 >= T1 >= T2
  for (const auto& r : R) {
    const auto &t1 = r.targets[0].p_d, &t2 = r.targets[1].p_d, &t3 = r.targets[2].p_d;
    order = order && t3.hi >= t1.lo && t1.hi >= t2.lo;
  }
  double floor = 0;
  for (int k = 0; k < K; ++k) floor += R.back().ues[k].ber.mean / K;
  const bool floor_ok = floor >= kBerFloor / kBerFloorFactor && floor <= kBerFloor * kBerFloorFactor;
  double rho_min = 1;
  for (int t = 0; t < T; ++t) {
    std::vector<double> kl, pd;
    for (const auto& r : R) {
      kl.push_back(r.targets[t].kld_r.mean);
      pd.push_back(r.targets[t].p_d.mean);
    }
    rho_min = std::min(rho_min, spearman(kl, pd));
  }
  for (int k = 0; k < K; ++k) {
    std::vector<double> kl, lb;
    for (const auto& r : R) {
      kl.push_back(r.ues[k].kld_c.mean);
      lb.push_back(-std::log(std::max(r.ues[k].ber.mean, 1e-300)));
    }
    rho_min = std::min(rho_min, spearman(kl, lb));
  }
  std::ostringstream pds;
  for (const auto& r : R)
    pds << fmt(" %g:%.2f/%.2f/%.2f", r.snr_db, r.targets[0].p_d.mean, r.targets[1].p_d.mean,
               r.targets[2].p_d.mean);
  return {mono && order && floor_ok && rho_min >= kRankCorrMin,
          fmt("(a) monotone %s (b) T3>=T1>=T2 %s (c) BER floor %.2e (d) min rank corr %.3f; P_D%s",
              mono ? "yes" : "no", order ? "yes" : "no", floor, rho_min, pds.str().c_str())};
}

Verdict krop_effect() {
  RunConfig rc = paper();
  rc.sweep.snr_points_db = {18, 30};
  rc.optimizer.max_iter = kOptMaxIter;
  const auto base = run_baseline_sweep(rc.scenario, rc.sweep);
  rc.sweep.technique = Technique::Krop;
  const auto opt = run_technique_sweep(rc.scenario, rc.sweep, rc.optimizer);
  if (base[0].failed || opt[0].failed || base[1].failed || opt[1].failed)
    return {false, "sweep point failed"};
  const int T = rc.scenario.T, K = rc.scenario.K;
  double gain = 0;
  std::ostringstream os;
  for (int t = 0; t < T; ++t) {
    gain += (opt[0].targets[t].p_d.mean - base[0].targets[t].p_d.mean) / T;
    os << fmt(" T%d %.3f vs %.3f", t + 1, opt[0].targets[t].p_d.mean, base[0].targets[t].p_d.mean);
  }
  bool ber_ok = true;
  double ob = 0, bb = 0;
  for (int k = 0; k < K; ++k) {
    ob = std::max(ob, opt[1].ues[k].ber.mean);
    bb = std::min(k ? bb : 1.0, base[1].ues[k].ber.mean);
  }
  ber_ok = ob < kKropBerMax && bb > kBaselineFloorMin;
  return {gain >= kKropPdGain && ber_ok,
          fmt("18 dB P_D K-ROP vs baseline%s, mean gain %+.3f; 30 dB BER max K-ROP %.2e, min baseline %.2e",
              os.str().c_str(), gain, ob, bb)};
}

// Paired per-draw designs shared by criteria 8, 9 and 10.
struct Paired {
  double snr;
  IsacValue base, krop, kcop, kiop;
  Design dk, dc, di;
  double P_r, P_c, P_T;
  int L;
};
std::vector<Paired> paired;

void run_paired() {
  if (!paired.empty()) return;
  RunConfig rc = paper();
  rc.optimizer.max_iter = kOptMaxIter;
  for (double snr : {0.0, 10.0, 20.0, 30.0}) {
    ScenarioConfig c = rc.scenario;
    c.snr_db = snr;
    const double s2 = noise_variance(c);
    for (int r = 0; r < rc.sweep.channel_redraws; ++r) {
      const Draw d = make_draw(c, c.seed, r);
      Paired p;
      p.snr = snr;
      p.P_r = c.P_r;
      p.P_c = c.P_c;
      p.P_T = c.P_T;
      p.L = c.L;
      p.base = isac_value(c, d.cic, d.zf, d.ch.H, d.tg, s2);
      p.dk = design_waveforms(c, d, Technique::Krop, rc.optimizer, s2);
      p.dc = design_waveforms(c, d, Technique::Kcop, rc.optimizer, s2);
      p.di = design_waveforms(c, d, Technique::Kiop, rc.optimizer, s2);
      p.krop = isac_value(c, p.dk.Wr, p.dk.W_c, d.ch.H, d.tg, s2);
      p.kcop = isac_value(c, p.dc.Wr, p.dc.W_c, d.ch.H, d.tg, s2);
      p.kiop = isac_value(c, p.di.Wr, p.di.W_c, d.ch.H, d.tg, s2);
      paired.push_back(std::move(p));
    }
  }
}

Verdict kcop_effect() {
  run_paired();
  int both = 0;
  std::vector<double> dr, dc;
  for (const auto& p : paired) {
    const double r = p.kcop.radar_mean - p.base.radar_mean;
    const double c = p.kcop.comm_mean - p.base.comm_mean;
    dr.push_back(r);
    dc.push_back(c);
    both += r > 0 && c > 0;
  }
  const double frac = static_cast<double>(both) / paired.size();
  return {frac >= kPairedFraction && mean_of(dc) > mean_of(dr),
          fmt("mean comm gain %.4f bits, mean radar gain %.4f bits, both positive on %d/%zu draws",
              mean_of(dc), mean_of(dr), both, paired.size())};
}

Verdict kiop_dominance() {
  run_paired();
  int wins = 0;
  for (const auto& p : paired) wins += p.kiop.total() >= std::max(p.krop.total(), p.kcop.total());
  const double frac = static_cast<double>(wins) / paired.size();

  RunConfig rc = paper();
  rc.optimizer.max_iter = kOptMaxIter;
  rc.sweep.snr_points_db = {0, 10, 20, 30};
  rc.sweep.trials_per_point = 1000;
  rc.sweep.calib_trials = 2000;
  rc.sweep.ber_symbols = 20000;
  std::map<Technique, std::vector<MetricsRecord>> recs;
  for (auto t : {Technique::Krop, Technique::Kcop, Technique::Kiop}) {
    rc.sweep.technique = t;
    recs[t] = run_technique_sweep(rc.scenario, rc.sweep, rc.optimizer);
  }
  bool mse_ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < rc.sweep.snr_points_db.size(); ++i) {
    const auto& a = recs[Technique::Kiop][i].mse_overall;
    const auto& b = recs[Technique::Krop][i].mse_overall;
    const auto& c = recs[Technique::Kcop][i].mse_overall;
    // point estimate within the rival's upper confidence bound
    mse_ok = mse_ok && a.mean <= b.hi && a.mean <= c.hi;
    os << fmt(" %g dB %.3g/%.3g/%.3g;", rc.sweep.snr_points_db[i], a.mean, b.mean, c.mean);
  }
  return {frac >= kPairedFraction && mse_ok,
          fmt("KLD_ISAC dominance on %d/%zu draws; overall MSE kiop/krop/kcop:%s", wins,
              paired.size(), os.str().c_str())};
}

Verdict optimizer_contracts() {
  run_paired();
  double worst_merit = 0, worst_power = 0, worst_dual = 0;
  for (const auto& p : paired) {
    for (const auto& row : p.dk.traces[0].rows)
      worst_merit = std::max(worst_merit, (row.merit_before - row.merit_after) /
                                              std::max(1.0, std::abs(row.merit_before)));
    worst_power = std::max(worst_power, radar_power(p.dk.Wr, p.L) / p.P_r - 1.0);
    worst_power = std::max(worst_power, p.dc.W_c.squaredNorm() / p.P_c - 1.0);
    worst_power = std::max(worst_power, (p.di.W_c.squaredNorm() + radar_power(p.di.Wr, p.L)) / p.P_T - 1.0);
    for (const auto& row : p.di.traces[0].rows) worst_dual = std::max(worst_dual, row.dual_identity);
  }
  // reproducibility across worker counts
  RunConfig rc = paper();
  rc.sweep.snr_points_db = {10};
  rc.sweep.trials_per_point = 200;
  rc.sweep.channel_redraws = 2;
  rc.sweep.ber_symbols = 4000;
  rc.sweep.calib_trials = 500;
  rc.optimizer.max_iter = 50;
  bool same = true;
  for (auto t : {Technique::Baseline, Technique::Krop, Technique::Kcop, Technique::Kiop}) {
    rc.sweep.technique = t;
    std::vector<std::vector<double>> runs;
    for (int w : {1, 3}) {
      set_worker_count(w);
      const auto R = run_sweep(rc.scenario, rc.sweep, rc.optimizer);
      std::vector<double> v;
      for (const auto& r : R) {
        v.push_back(r.kld_isac.mean);
        v.push_back(r.mse_overall.mean);
        for (const auto& x : r.targets) v.insert(v.end(), {x.p_d.mean, x.p_fa.mean, x.mse.mean});
        for (const auto& u : r.ues) v.insert(v.end(), {u.ber.mean, u.kld_c.mean});
        for (const auto& tr : r.traces)
          for (const auto& row : tr.rows) v.push_back(row.objective);
      }
      runs.push_back(v);
    }
    set_worker_count(0);
    same = same && runs[0] == runs[1];
  }
  return {worst_merit <= 0 && worst_power <= kPowerTol && worst_dual <= kDualTol && same,
          fmt("worst merit decrease %.2e, worst power excess %.2e, worst dual identity %.2e, "
              "worker-count reproducible %s",
              worst_merit, worst_power, worst_dual, same ? "yes" : "no")};
}

Verdict runtime_profile() {
  RunConfig rc = paper();
  rc.optimizer.max_iter = kProfileIter;
  rc.optimizer.eps = 1e-300;
  std::map<Technique, std::vector<ProfileRow>> rows;
  for (auto t : {Technique::Krop, Technique::Kcop, Technique::Kiop})
    rows[t] = profile_runtime(rc.scenario, {10, 20, 50}, t, rc.optimizer, 3);
  bool ok = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto &a = rows[Technique::Krop][i], &b = rows[Technique::Kcop][i],
               &c = rows[Technique::Kiop][i];
    ok = ok && a.median_seconds < b.median_seconds && b.median_seconds < c.median_seconds;
    os << fmt(" N=%d %.4f/%.4f/%.4f s (%.2e/%.2e/%.2e s/iter);", a.N, a.median_seconds,
              b.median_seconds, c.median_seconds, a.seconds_per_iter, b.seconds_per_iter,
              c.seconds_per_iter);
  }
  return {ok, "krop/kcop/kiop" + os.str()};
}

}  // namespace

int main() {
  std::printf("acceptance: workers %d\n", worker_count());
  report(1, "gradient certification", gradients);
  report(2, "KLD oracle equivalence", kld_oracles);
  report(3, "ZF closed form", zf_closed_form);
  report(4, "detector calibration", calibration);
  report(5, "estimator MSE", estimator_mse);
  report(6, "baseline figure trends", baseline_trends);
  report(7, "K-ROP effect direction", krop_effect);
  report(8, "K-COP effect direction", kcop_effect);
  report(9, "K-IOP dominance", kiop_dominance);
  report(10, "optimizer contracts", optimizer_contracts);
  report(11, "runtime profile ordering", runtime_profile);
  std::printf("acceptance: %d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
