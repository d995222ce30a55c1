// SPDX-License-Identifier: Apache-2.0
#include "isac/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "isac/gradcheck.hpp"
#include "isac/parallel.hpp"

namespace isac {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

const std::vector<std::string> kVerbs{"validate", "baseline", "optimize", "sweep",
                                      "gradcheck", "calibrate", "profile"};

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const PowerSplitViolation*>(&e)) return "PowerSplitViolation";
  if (dynamic_cast<const DegenerateGeometry*>(&e)) return "DegenerateGeometry";
  if (dynamic_cast<const NonPositiveDistance*>(&e)) return "NonPositiveDistance";
  if (dynamic_cast<const UnsupportedOrder*>(&e)) return "UnsupportedOrder";
  if (dynamic_cast<const ConfigParseError*>(&e)) return "ConfigParseError";
  if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
  if (dynamic_cast<const SingularChannel*>(&e)) return "SingularChannel";
  if (dynamic_cast<const NumericalSingularity*>(&e)) return "NumericalSingularity";
  if (dynamic_cast<const NonFiniteObjective*>(&e)) return "NonFiniteObjective";
  if (dynamic_cast<const InfeasibleStart*>(&e)) return "InfeasibleStart";
  if (dynamic_cast<const EmptyInput*>(&e)) return "EmptyInput";
  if (dynamic_cast<const IoError*>(&e)) return "IoError";
  if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
  return "Error";
}

struct CsvWriter {
  std::ostringstream s;
  std::size_t rows = 0;
  CsvWriter() { s << "snr_db,entity_id,metric,mean,ci_lo,ci_hi,trials\n"; }
  void row(double snr, const std::string& entity, const std::string& metric, const Estimate& e) {
    s << format_number(snr) << ',' << entity << ',' << metric << ',' << format_number(e.mean) << ','
      << format_number(e.lo) << ',' << format_number(e.hi) << ',' << e.n << '\n';
    ++rows;
  }
};

json trace_json(const OptimizerTrace& tr) {
  json j;
  j["technique"] = tr.technique;
  j["exit"] = to_string(tr.exit);
  j["seconds"] = tr.seconds;
  json rows = json::array();
  for (const auto& r : tr.rows) {
    rows.push_back({{"iter", r.iter},
                    {"objective", r.objective},
                    {"penalty", r.penalty},
                    {"merit_before", r.merit_before},
                    {"merit_after", r.merit_after},
                    {"step", r.step},
                    {"alpha", r.alpha},
                    {"weight", r.weight},
                    {"residual_r", r.residual_r},
                    {"residual_c", r.residual_c},
                    {"dual_identity", r.dual_identity},
                    {"power", r.power},
                    {"margins", r.margins}});
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string compiler_version() {
#ifdef __VERSION__
  return __VERSION__;
#else
  return "unknown";
#endif
}

ScenarioConfig point_config(const RunConfig& rc) {
  ScenarioConfig cfg = rc.scenario;
  validate_config(cfg);
  validate_params(rc.optimizer);
  validate_spec(rc.sweep);
  return cfg;
}

int run_validate(const Command& cmd, std::ostream& out) {
  point_config(cmd.config);
  out << "config ok\n";
  return kExitOk;
}

int run_records(const Command& cmd, std::ostream& out, const std::vector<MetricsRecord>& recs,
                double seconds) {
  ManifestInfo info{cmd.verb, cmd.config, seconds, {}};
  const auto files = write_outputs(recs, cmd.output_dir, info);
  int failed = 0;
  for (const auto& r : recs) failed += r.failed;
  out << "wrote " << files.size() << " files to " << cmd.output_dir << "\n";
  if (failed) out << failed << " sweep point(s) failed, see manifest.json\n";
  return kExitOk;
}

int run_gradcheck(const Command& cmd, std::ostream& out) {
  const auto rows = gradient_certification(cmd.gradcheck_instances, cmd.config.scenario.seed);
  std::ostringstream csv;
  csv << "instance,gradient,rel_error,certified,pass\n";
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : rows) {
    csv << r.instance << ',' << r.name << ',' << format_number(r.rel_error) << ','
        << (r.certified ? 1 : 0) << ',' << (r.pass ? 1 : 0) << '\n';
    if (r.certified) {
      ok &= r.pass;
      worst = std::max(worst, r.rel_error);
    }
  }
  fs::create_directories(cmd.output_dir);
  write_file_atomic((fs::path(cmd.output_dir) / "gradcheck.csv").string(), csv.str());
  write_outputs({}, cmd.output_dir, ManifestInfo{cmd.verb, cmd.config, 0.0, {"gradcheck.csv"}});
  out << "gradcheck " << (ok ? "passed" : "FAILED") << ": " << rows.size() << " checks, worst "
      << worst << "\n";
  return ok ? kExitOk : kExitCheckFailed;
}

int run_calibrate(const Command& cmd, std::ostream& out) {
  const ScenarioConfig cfg = point_config(cmd.config);
  const auto& spec = cmd.config.sweep;
  const double s2 = noise_variance(cfg);
  const Draw d = make_draw(cfg, spec.seed, 0);
  const auto cal = calibrate_threshold(cfg, d.zf, d.cic, spec.calib_trials, s2, spec.seed, 1);
  // held-out trials come from a different stream id
  const auto det = run_detection(cfg, d.zf, d.cic, d.tg, cal.tau, spec.trials_per_point, s2,
                                 spec.seed, 2);
  std::ostringstream csv;
  csv << "target,tau,held_out_trials,false_alarms,p_fa,ci_lo,ci_hi,p_d\n";
  for (int t = 0; t < cfg.T; ++t) {
    const auto& td = det.targets[t];
    const auto ci = wilson(td.false_alarms, td.h0_trials);
    csv << t << ',' << format_number(cal.tau[t]) << ',' << td.h0_trials << ',' << td.false_alarms
        << ',' << format_number(ci.mean) << ',' << format_number(ci.lo) << ','
        << format_number(ci.hi) << ',' << format_number(td.p_d()) << '\n';
  }
  fs::create_directories(cmd.output_dir);
  write_file_atomic((fs::path(cmd.output_dir) / "calibration.csv").string(), csv.str());
  write_outputs({}, cmd.output_dir, ManifestInfo{cmd.verb, cmd.config, 0.0, {"calibration.csv"}});
  out << "calibrated " << cfg.T << " beams\n";
  return kExitOk;
}

int run_profile(const Command& cmd, std::ostream& out) {
  const ScenarioConfig cfg = point_config(cmd.config);
  std::ostringstream csv;
  csv << "technique,N,median_seconds,median_iterations,seconds_per_iter,growth_ratio\n";
  for (Technique t : {Technique::Krop, Technique::Kcop, Technique::Kiop}) {
    for (const auto& r : profile_runtime(cfg, cmd.n_list, t, cmd.config.optimizer)) {
      csv << to_string(t) << ',' << r.N << ',' << format_number(r.median_seconds) << ','
          << format_number(r.median_iterations) << ',' << format_number(r.seconds_per_iter) << ','
          << format_number(r.growth_ratio) << '\n';
      out << to_string(t) << " N=" << r.N << " " << r.median_seconds << " s\n";
    }
  }
  fs::create_directories(cmd.output_dir);
  write_file_atomic((fs::path(cmd.output_dir) / "profile.csv").string(), csv.str());
  write_outputs({}, cmd.output_dir, ManifestInfo{cmd.verb, cmd.config, 0.0, {"profile.csv"}});
  return kExitOk;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.parent_path() / ("." + target.filename().string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename into '" + path + "': " + ec.message());
  }
}

std::vector<std::string> write_outputs(const std::vector<MetricsRecord>& records,
                                       const std::string& dir, const ManifestInfo& info) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> files;
  json failures = json::array();
  json timings = json::array();

  if (!records.empty()) {
    CsvWriter det, kld, ber, mse, isac;
    for (const auto& r : records) {
      timings.push_back({{"snr_db", r.snr_db},
                         {"seconds_optimize", r.seconds_optimize},
                         {"seconds_evaluate", r.seconds_evaluate}});
      if (r.failed) {
        failures.push_back({{"snr_db", r.snr_db}, {"error", r.failure}});
        continue;
      }
      for (std::size_t t = 0; t < r.targets.size(); ++t) {
        const std::string id = "target" + std::to_string(t + 1);
        det.row(r.snr_db, id, "p_d", r.targets[t].p_d);
        det.row(r.snr_db, id, "p_fa", r.targets[t].p_fa);
        kld.row(r.snr_db, id, "kld_r", r.targets[t].kld_r);
        mse.row(r.snr_db, id, "mse", r.targets[t].mse);
      }
      for (std::size_t k = 0; k < r.ues.size(); ++k) {
        const std::string id = "ue" + std::to_string(k + 1);
        kld.row(r.snr_db, id, "kld_c", r.ues[k].kld_c);
        ber.row(r.snr_db, id, "ber", r.ues[k].ber);
      }
      mse.row(r.snr_db, "all", "mse_overall", r.mse_overall);
      isac.row(r.snr_db, "all", "kld_isac", r.kld_isac);
    }
    const std::pair<const char*, CsvWriter*> csvs[] = {
        {"detection.csv", &det}, {"kld.csv", &kld}, {"ber.csv", &ber},
        {"mse.csv", &mse},       {"isac.csv", &isac}};
    for (const auto& [name, w] : csvs) {
      if (w->rows == 0) continue;
      write_file_atomic((fs::path(dir) / name).string(), w->s.str());
      files.emplace_back(name);
    }
    std::size_t n = 0;
    for (std::size_t p = 0; p < records.size(); ++p) {
      for (std::size_t i = 0; i < records[p].traces.size(); ++i) {
        if (n++ == 0) fs::create_directories(fs::path(dir) / "traces");
        const std::string name =
            "traces/point" + std::to_string(p) + "_run" + std::to_string(i) + ".json";
        write_file_atomic((fs::path(dir) / name).string(), trace_json(records[p].traces[i]).dump(1));
        files.push_back(name);
      }
    }
  }

  json m;
  m["verb"] = info.verb;
  m["version"] = kVersion;
  m["compiler"] = compiler_version();
  m["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  m["workers"] = worker_count();
  m["config"] = json::parse(serialize_config(info.config));
  m["seed"] = info.config.sweep.seed;
  m["seconds"] = info.seconds;
  m["timings"] = timings;
  m["failures"] = failures;
  json listed = files;
  for (const auto& f : info.extra_files) listed.push_back(f);
  m["files"] = listed;
  write_file_atomic((fs::path(dir) / "manifest.json").string(), m.dump(2));
  files.emplace_back("manifest.json");
  return files;
}

Command parse_invocation(const std::vector<std::string>& args) {
  Command cmd;
  CLI::App app{"KLD-based ISAC waveform design and evaluation", "isac"};
  app.require_subcommand(1);
  std::string technique;
  std::uint64_t seed = 0;
  const std::map<std::string, std::string> about{
      {"validate", "check a config and exit"},
      {"baseline", "CIC + ZF sweep over the SNR points"},
      {"optimize", "one optimizer at the config snr_db"},
      {"sweep", "SNR sweep with the chosen technique"},
      {"gradcheck", "finite-difference certification of every gradient"},
      {"calibrate", "detector threshold with a held-out false-alarm check"},
      {"profile", "optimizer runtime versus N"}};
  for (const auto& v : kVerbs) {
    auto* sub = app.add_subcommand(v, about.at(v));
    sub->add_option("--config,-c", cmd.config_path, "flat JSON config file");
    sub->add_option("--out,-o", cmd.output_dir, "output directory");
    sub->add_option("--set", cmd.overrides, "key=value override (repeatable)");
    sub->add_option("overrides", cmd.overrides, "key=value overrides");
    sub->add_option("--technique,-t", technique, "baseline | krop | kcop | kiop");
    sub->add_option("--seed,-s", seed, "root seed");
    if (v == "profile") sub->add_option("--n-list", cmd.n_list, "antenna counts");
    if (v == "gradcheck") sub->add_option("--instances", cmd.gradcheck_instances);
  }
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    cmd.help = true;
    cmd.help_text = app.help();
    return cmd;
  } catch (const CLI::CallForAllHelp&) {
    cmd.help = true;
    cmd.help_text = app.help();
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  for (auto* sub : app.get_subcommands()) cmd.verb = sub->get_name();
  auto* sub = app.get_subcommand(cmd.verb);

  if (!cmd.config_path.empty()) {
    if (!fs::exists(cmd.config_path)) throw UsageError("config file '" + cmd.config_path + "' not found");
    cmd.config = load_config(cmd.config_path);
  }
  for (const auto& o : cmd.overrides) apply_override(cmd.config, o);
  if (sub->count("--technique")) {
    try {
      cmd.technique = technique;
      cmd.config.sweep.technique = technique_from_string(technique);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (sub->count("--seed")) {
    cmd.seed = seed;
    cmd.config.scenario.seed = seed;
    cmd.config.sweep.seed = seed;
  }
  if (cmd.gradcheck_instances < 1) throw UsageError("--instances must be >= 1");
  return cmd;
}

int execute(const Command& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.help) {
    out << cmd.help_text;
    return kExitOk;
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  try {
    if (cmd.verb == "validate") return run_validate(cmd, out);
    if (cmd.verb == "gradcheck") return run_gradcheck(cmd, out);
    if (cmd.verb == "calibrate") return run_calibrate(cmd, out);
    if (cmd.verb == "profile") return run_profile(cmd, out);

    const ScenarioConfig cfg = point_config(cmd.config);
    const auto& spec = cmd.config.sweep;
    const auto& prm = cmd.config.optimizer;
    if (cmd.verb == "baseline") return run_records(cmd, out, run_baseline_sweep(cfg, spec), elapsed());
    if (cmd.verb == "sweep") return run_records(cmd, out, run_sweep(cfg, spec, prm), elapsed());
    if (cmd.verb == "optimize") {
      if (spec.technique == Technique::Baseline)
        throw ConfigError("optimize needs --technique krop, kcop or kiop");
      SweepSpec one = spec;
      one.snr_points_db = {cfg.snr_db};
      return run_records(cmd, out, run_sweep(cfg, one, prm), elapsed());
    }
    throw UsageError("unknown verb '" + cmd.verb + "'");
  } catch (const UsageError& e) {
    err << "UsageError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << error_kind(e) << ": " << e.what() << "\n";
    if (cmd.verb != "validate") {
      std::error_code ec;
      fs::create_directories(cmd.output_dir, ec);
      std::ofstream marker(fs::path(cmd.output_dir) / "FAILED");
      marker << error_kind(e) << ": " << e.what() << "\n";
    }
    return kExitRuntime;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Command cmd;
  try {
    cmd = parse_invocation(args);
  } catch (const UsageError& e) {
    err << "UsageError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigParseError& e) {
    err << "ConfigParseError: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << error_kind(e) << ": " << e.what() << "\n";
    return kExitUsage;
  }
  return execute(cmd, out, err);
}

}  // namespace isac
