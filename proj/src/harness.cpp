// SPDX-License-Identifier: Apache-2.0
#include "isac/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "isac/parallel.hpp"

namespace isac {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t point_stream(int point, int redraw) {
  return (static_cast<std::uint64_t>(point) << 20) | static_cast<std::uint64_t>(redraw);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string to_string(Technique t) {
  switch (t) {
    case Technique::Baseline: return "baseline";
    case Technique::Krop: return "krop";
    case Technique::Kcop: return "kcop";
    case Technique::Kiop: return "kiop";
  }
  return "unknown";
}

Technique technique_from_string(const std::string& s) {
  if (s == "baseline") return Technique::Baseline;
  if (s == "krop") return Technique::Krop;
  if (s == "kcop") return Technique::Kcop;
  if (s == "kiop") return Technique::Kiop;
  throw ConfigError("unknown technique '" + s + "'");
}

void validate_spec(const SweepSpec& s) {
  if (s.snr_points_db.empty()) throw ConfigError("snr_points_db must not be empty");
  if (!std::is_sorted(s.snr_points_db.begin(), s.snr_points_db.end()))
    throw ConfigError("snr_points_db must be sorted ascending");
  if (s.trials_per_point < 1 || s.channel_redraws < 1 || s.ber_symbols < 1 ||
      s.calib_trials < 1)
    throw ConfigError("trial counts must be >= 1");
}

Estimate wilson(std::int64_t successes, std::int64_t n, double z) {
  Estimate e;
  e.n = n;
  if (n <= 0) return e;
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double den = 1.0 + z2 / n;
  const double centre = (p + z2 / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / den;
  e.mean = p;
  e.lo = successes == 0 ? 0.0 : std::max(0.0, centre - half);
  e.hi = successes == n ? 1.0 : std::min(1.0, centre + half);
  return e;
}

Estimate mean_ci(std::vector<double> v, double z) {
  if (v.empty()) throw EmptyInput("mean_ci of empty input");
  std::sort(v.begin(), v.end());
  Estimate e;
  e.n = static_cast<std::int64_t>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double se = v.size() > 1 ? std::sqrt(ss / (v.size() - 1) / v.size()) : 0.0;
  e.mean = m;
  e.lo = m - z * se;
  e.hi = m + z * se;
  return e;
}

Draw make_draw(const ScenarioConfig& cfg, std::uint64_t seed, int redraw) {
  Draw d;
  for (int attempt = 0;; ++attempt) {
    Rng rc = Rng::stream(seed, Purpose::Channel, {std::uint64_t(redraw), std::uint64_t(attempt)});
    d.ch = draw_channels(cfg, rc);
    try {
      d.zf = zf_precoder(d.ch.H, power_weights(cfg), cfg.P_c).W_c;
      break;
    } catch (const SingularChannel&) {
      if (attempt > 100) throw;
    }
  }
  Rng rt = Rng::stream(seed, Purpose::Target, {std::uint64_t(redraw)});
  d.tg = draw_targets(cfg, rt);
  Rng rw = Rng::stream(seed, Purpose::Waveform, {std::uint64_t(redraw)});
  d.cic = cic_waveform(cfg, rw);
  return d;
}

Design design_waveforms(const ScenarioConfig& cfg, const Draw& d, Technique tech,
                        const OptimizerParams& prm, double sigma_n2) {
  Design des;
  switch (tech) {
    case Technique::Baseline:
      des.Wr = d.cic;
      des.W_c = d.zf;
      break;
    case Technique::Krop: {
      auto r = run_krop(cfg, d.tg, d.zf, d.cic, prm, sigma_n2);
      des.Wr = std::move(r.Wr);
      des.W_c = d.zf;
      des.traces.push_back(std::move(r.trace));
      break;
    }
    case Technique::Kcop: {
      auto r = run_kcop(cfg, d.ch.H, d.tg, d.cic, std::sqrt(0.9) * d.zf, prm, sigma_n2);
      des.Wr = d.cic;
      des.W_c = std::move(r.W_c);
      des.traces.push_back(std::move(r.trace));
      break;
    }
    case Technique::Kiop: {
      auto r = run_kiop(cfg, d.ch.H, d.tg, d.cic, d.zf, prm, sigma_n2);
      des.Wr = std::move(r.Wr);
      des.W_c = std::move(r.W_c);
      des.traces.push_back(std::move(r.trace));
      break;
    }
  }
  return des;
}

DrawOutcome evaluate_design(const ScenarioConfig& cfg, const Draw& d, const Design& des,
                            const SweepSpec& spec, int point, int redraw, double sigma_n2) {
  DrawOutcome o;
  const auto sid = point_stream(point, redraw);
  const std::int64_t det_trials =
      (spec.trials_per_point + spec.channel_redraws - 1) / spec.channel_redraws;
  const std::int64_t ber_trials = (spec.ber_symbols + spec.channel_redraws - 1) / spec.channel_redraws;
  o.kld_r = radar_klds(cfg, des.Wr, des.W_c, d.tg, sigma_n2);
  o.kld_c = comm_klds(cfg, des.W_c, d.ch.H, des.Wr, sigma_n2);
  const auto cal = calibrate_threshold(cfg, des.W_c, des.Wr, spec.calib_trials, sigma_n2, spec.seed, sid);
  o.detection = run_detection(cfg, des.W_c, des.Wr, d.tg, cal.tau, det_trials, sigma_n2, spec.seed, sid);
  o.ber = simulate_ber(cfg, des.W_c, des.Wr, d.ch, sigma_n2, ber_trials, spec.seed, sid);
  for (const auto& td : o.detection.targets) o.mse.push_back(mse_report(cfg, td, sigma_n2));
  o.Wr = des.Wr;
  o.W_c = des.W_c;
  o.traces = des.traces;
  return o;
}

MetricsRecord aggregate_metrics(const ScenarioConfig& cfg, double snr_db,
                                const std::vector<DrawOutcome>& draws) {
  if (draws.empty()) throw EmptyInput("no draws to aggregate");
  MetricsRecord m;
  m.snr_db = snr_db;
  for (int t = 0; t < cfg.T; ++t) {
    TargetMetrics tm;
    std::vector<double> kl, mse;
    std::int64_t det = 0, n1 = 0, fa = 0, n0 = 0;
    for (const auto& d : draws) {
      kl.push_back(d.kld_r[t]);
      mse.push_back(d.mse[t].overall);
      det += d.detection.targets[t].detections;
      n1 += d.detection.targets[t].h1_trials;
      fa += d.detection.targets[t].false_alarms;
      n0 += d.detection.targets[t].h0_trials;
    }
    tm.kld_r = mean_ci(kl);
    tm.p_d = wilson(det, n1);
    tm.p_fa = wilson(fa, n0);
    tm.mse = mean_ci(mse);
    m.targets.push_back(tm);
  }
  for (int k = 0; k < cfg.K; ++k) {
    UeMetrics um;
    std::vector<double> kl;
    std::int64_t err = 0, bits = 0;
    for (const auto& d : draws) {
      kl.push_back(d.kld_c[k]);
      err += d.ber.bit_errors[k];
      bits += d.ber.bits_per_ue;
    }
    um.kld_c = mean_ci(kl);
    um.ber = wilson(err, bits);
    m.ues.push_back(um);
  }
  std::vector<double> isac, mse_all;
  for (const auto& d : draws) {
    double r = 0, c = 0, ms = 0;
    for (double v : d.kld_r) r += v / cfg.T;
    for (double v : d.kld_c) c += v / cfg.K;
    for (const auto& x : d.mse) ms += x.overall / cfg.T;
    isac.push_back(r + c);
    mse_all.push_back(ms);
  }
  m.kld_isac = mean_ci(isac);
  m.mse_overall = mean_ci(mse_all);
  for (const auto& d : draws)
    for (const auto& tr : d.traces) m.traces.push_back(tr);
  return m;
}

std::vector<MetricsRecord> run_sweep(const ScenarioConfig& cfg0, const SweepSpec& spec,
                                     const OptimizerParams& prm) {
  validate_spec(spec);
  validate_config(cfg0);
  const int P = static_cast<int>(spec.snr_points_db.size());
  const int R = spec.channel_redraws;

  std::vector<Draw> draws(R);
  parallel_for(R, [&](std::size_t r) { draws[r] = make_draw(cfg0, spec.seed, static_cast<int>(r)); });

  // optimizer runs fan out over (point, redraw); evaluation is parallel inside
  std::vector<Design> designs(static_cast<std::size_t>(P) * R);
  std::vector<std::string> errors(designs.size());
  std::vector<double> opt_seconds(designs.size(), 0.0);
  parallel_for(designs.size(), [&](std::size_t j) {
    const int p = static_cast<int>(j / R), r = static_cast<int>(j % R);
    ScenarioConfig cfg = cfg0;
    cfg.snr_db = spec.snr_points_db[p];
    const auto t0 = Clock::now();
    try {
      designs[j] = design_waveforms(cfg, draws[r], spec.technique, prm, noise_variance(cfg));
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
    opt_seconds[j] = std::chrono::duration<double>(Clock::now() - t0).count();
  });

  std::vector<MetricsRecord> out;
  for (int p = 0; p < P; ++p) {
    ScenarioConfig cfg = cfg0;
    cfg.snr_db = spec.snr_points_db[p];
    const double s2 = noise_variance(cfg);
    MetricsRecord rec;
    rec.snr_db = cfg.snr_db;
    std::string failure;
    double opt = 0.0;
    for (int r = 0; r < R; ++r) {
      opt += opt_seconds[p * R + r];
      if (!errors[p * R + r].empty() && failure.empty()) failure = errors[p * R + r];
    }
    const auto t0 = Clock::now();
    if (failure.empty()) {
      try {
        std::vector<DrawOutcome> outs;
        for (int r = 0; r < R; ++r)
          outs.push_back(evaluate_design(cfg, draws[r], designs[p * R + r], spec, p, r, s2));
        rec = aggregate_metrics(cfg, cfg.snr_db, outs);
      } catch (const std::exception& e) {
        failure = e.what();
      }
    }
    if (!failure.empty()) {
      rec = MetricsRecord{};
      rec.snr_db = cfg.snr_db;
      rec.failed = true;
      rec.failure = failure;
    }
    rec.seconds_optimize = opt;
    rec.seconds_evaluate = std::chrono::duration<double>(Clock::now() - t0).count();
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<MetricsRecord> run_baseline_sweep(const ScenarioConfig& cfg, SweepSpec spec) {
  spec.technique = Technique::Baseline;
  return run_sweep(cfg, spec, OptimizerParams{});
}

std::vector<MetricsRecord> run_technique_sweep(const ScenarioConfig& cfg, const SweepSpec& spec,
                                               const OptimizerParams& prm) {
  if (spec.technique == Technique::Baseline)
    throw ConfigError("technique sweep needs krop, kcop or kiop");
  return run_sweep(cfg, spec, prm);
}

std::vector<ProfileRow> profile_runtime(const ScenarioConfig& cfg_template,
                                        const std::vector<int>& N_list, Technique technique,
                                        const OptimizerParams& prm, int repeats) {
  if (!std::is_sorted(N_list.begin(), N_list.end())) throw ConfigError("N_list must be ascending");
  std::vector<ProfileRow> rows;
  for (int N : N_list) {
    ScenarioConfig cfg = cfg_template;
    cfg.N = N;
    validate_config(cfg);
    const double s2 = noise_variance(cfg);
    std::vector<double> secs, iters;
    for (int rep = 0; rep < repeats; ++rep) {
      const Draw d = make_draw(cfg, cfg.seed, rep);
      const auto des = design_waveforms(cfg, d, technique, prm, s2);
      if (des.traces.empty()) {
        secs.push_back(0.0);
        iters.push_back(0.0);
      } else {
        secs.push_back(des.traces.front().seconds);
        iters.push_back(static_cast<double>(des.traces.front().rows.size()));
      }
    }
    ProfileRow row;
    row.N = N;
    row.technique = technique;
    row.median_seconds = median(secs);
    row.median_iterations = median(iters);
    row.seconds_per_iter = row.median_iterations > 0 ? row.median_seconds / row.median_iterations : 0.0;
    if (!rows.empty() && rows.back().seconds_per_iter > 0)
      row.growth_ratio = row.seconds_per_iter / rows.back().seconds_per_iter;
    rows.push_back(row);
  }
  return rows;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw EmptyInput("spearman needs paired samples");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace isac
