// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isac/optimizers.hpp"

namespace isac {

enum class Technique { Baseline, Krop, Kcop, Kiop };
std::string to_string(Technique t);
Technique technique_from_string(const std::string& s);

struct SweepSpec {
  std::vector<double> snr_points_db{0, 5, 10, 15, 20, 25, 30};
  Technique technique = Technique::Baseline;
  int trials_per_point = 2000;     // detection trials per target, split over redraws
  int channel_redraws = 10;
  std::int64_t ber_symbols = 100000;
  std::int64_t calib_trials = 5000;  // H0 trials per redraw and beam
  std::uint64_t seed = 1;
};

void validate_spec(const SweepSpec& s);

struct Estimate {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::int64_t n = 0;
};

// Wilson score interval at 95%.
Estimate wilson(std::int64_t successes, std::int64_t n, double z = 1.959963984540054);
// Mean with a normal-approximation 95% interval from the standard error. The
// reduction is order independent (values are summed in sorted order).
Estimate mean_ci(std::vector<double> values, double z = 1.959963984540054);

struct TargetMetrics {
  Estimate kld_r, p_d, p_fa, mse;
};

struct UeMetrics {
  Estimate kld_c, ber;
};

struct MetricsRecord {
  double snr_db = 0.0;
  std::vector<TargetMetrics> targets;
  std::vector<UeMetrics> ues;
  Estimate kld_isac;
  Estimate mse_overall;  // averaged over targets
  double seconds_optimize = 0.0;
  double seconds_evaluate = 0.0;
  std::vector<OptimizerTrace> traces;
  bool failed = false;
  std::string failure;
};

// One channel/target draw evaluated at one SNR point; exposed for paired tests.
struct DrawOutcome {
  std::vector<double> kld_r, kld_c;
  DetectionResult detection;
  BerResult ber;
  std::vector<MseReport> mse;
  RadarTensor Wr;
  CMat W_c;
  std::vector<OptimizerTrace> traces;
};

// Channels, targets and the CIC waveform depend only on (seed, redraw), so
// every SNR point and every technique sees the same draws.
struct Draw {
  ChannelSet ch;
  TargetSet tg;
  RadarTensor cic;
  CMat zf;
};
Draw make_draw(const ScenarioConfig& cfg, std::uint64_t seed, int redraw);

struct Design {
  RadarTensor Wr;
  CMat W_c;
  std::vector<OptimizerTrace> traces;
};
Design design_waveforms(const ScenarioConfig& cfg, const Draw& d, Technique tech,
                        const OptimizerParams& prm, double sigma_n2);

DrawOutcome evaluate_design(const ScenarioConfig& cfg, const Draw& d, const Design& des,
                            const SweepSpec& spec, int point, int redraw, double sigma_n2);

std::vector<MetricsRecord> run_sweep(const ScenarioConfig& cfg, const SweepSpec& spec,
                                     const OptimizerParams& prm);
std::vector<MetricsRecord> run_baseline_sweep(const ScenarioConfig& cfg, SweepSpec spec);
std::vector<MetricsRecord> run_technique_sweep(const ScenarioConfig& cfg, const SweepSpec& spec,
                                               const OptimizerParams& prm);

MetricsRecord aggregate_metrics(const ScenarioConfig& cfg, double snr_db,
                                const std::vector<DrawOutcome>& draws);

struct ProfileRow {
  int N = 0;
  Technique technique = Technique::Krop;
  double median_seconds = 0.0;
  double median_iterations = 0.0;
  double seconds_per_iter = 0.0;
  double growth_ratio = 0.0;  // per-iteration time relative to the previous N
};

std::vector<ProfileRow> profile_runtime(const ScenarioConfig& cfg_template,
                                        const std::vector<int>& N_list, Technique technique,
                                        const OptimizerParams& prm, int repeats = 3);

// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace isac
