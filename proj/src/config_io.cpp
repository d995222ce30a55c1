// SPDX-License-Identifier: Apache-2.0
#include "isac/config_io.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace isac {

namespace {

using nlohmann::json;

struct Field {
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <typename T, typename S>
Field bind(T S::*member, S RunConfig::*section) {
  return {[=](RunConfig& rc, const json& v) { (rc.*section).*member = v.get<T>(); },
          [=](const RunConfig& rc) { return json((rc.*section).*member); }};
}

const std::map<std::string, Field>& registry() {
  static const std::map<std::string, Field> fields = [] {
    std::map<std::string, Field> f;
    using SC = ScenarioConfig;
    using OP = OptimizerParams;
    using SW = SweepSpec;
    const auto sc = &RunConfig::scenario;
    const auto op = &RunConfig::optimizer;
    const auto sw = &RunConfig::sweep;
    f["N"] = bind(&SC::N, sc);
    f["K"] = bind(&SC::K, sc);
    f["T"] = bind(&SC::T, sc);
    f["L"] = bind(&SC::L, sc);
    f["P_T"] = bind(&SC::P_T, sc);
    f["P_r"] = bind(&SC::P_r, sc);
    f["P_c"] = bind(&SC::P_c, sc);
    f["zeta"] = bind(&SC::zeta, sc);
    f["d_c"] = bind(&SC::d_c, sc);
    f["d_r"] = bind(&SC::d_r, sc);
    f["sigma_h2"] = bind(&SC::sigma_h2, sc);
    f["sigma_t2"] = bind(&SC::sigma_t2, sc);
    f["snr_db"] = bind(&SC::snr_db, sc);
    f["M"] = bind(&SC::M, sc);
    f["P_FA"] = bind(&SC::P_FA, sc);
    f["A"] = bind(&SC::A, sc);
    f["B"] = bind(&SC::B, sc);
    f["seed"] = bind(&SC::seed, sc);
    f["trials"] = bind(&SC::trials, sc);
    f["radar_pathloss_sign"] = bind(&SC::radar_pathloss_sign, sc);
    f["pathloss_ref_distance"] = bind(&SC::pathloss_ref_distance, sc);
    f["p"] = bind(&SC::p, sc);
    f["max_iter"] = bind(&OP::max_iter, op);
    f["eps"] = bind(&OP::eps, op);
    f["alpha0"] = bind(&OP::alpha0, op);
    f["rho0"] = bind(&OP::rho0, op);
    f["gamma"] = bind(&OP::gamma, op);
    f["beta"] = bind(&OP::beta, op);
    f["armijo_c"] = bind(&OP::armijo_c, op);
    f["mu0"] = bind(&OP::mu0, op);
    f["gamma_barrier"] = bind(&OP::gamma_barrier, op);
    f["rho_admm"] = bind(&OP::rho_admm, op);
    f["inner_iter"] = bind(&OP::inner_iter, op);
    f["gamma_kiop"] = bind(&OP::gamma_kiop, op);
    f["alpha_min"] = bind(&OP::alpha_min, op);
    f["rho_max"] = bind(&OP::rho_max, op);
    f["mu_min"] = bind(&OP::mu_min, op);
    f["snr_points_db"] = bind(&SW::snr_points_db, sw);
    f["trials_per_point"] = bind(&SW::trials_per_point, sw);
    f["channel_redraws"] = bind(&SW::channel_redraws, sw);
    f["ber_symbols"] = bind(&SW::ber_symbols, sw);
    f["calib_trials"] = bind(&SW::calib_trials, sw);
    // the sweep seed follows the scenario seed unless given explicitly
    f["sweep_seed"] = bind(&SW::seed, sw);
    f["technique"] = {
        [](RunConfig& rc, const json& v) { rc.sweep.technique = technique_from_string(v.get<std::string>()); },
        [](const RunConfig& rc) { return json(to_string(rc.sweep.technique)); }};
    return f;
  }();
  return fields;
}

int line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + byte, '\n'));
}

int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of(text, pos);
}

void set_key(RunConfig& rc, const std::string& key, const json& v, const std::string& where) {
  const auto& reg = registry();
  const auto it = reg.find(key);
  if (it == reg.end()) throw ConfigParseError(where + "unknown key '" + key + "'");
  try {
    it->second.set(rc, v);
  } catch (const json::exception& e) {
    throw ConfigParseError(where + "bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : registry()) keys.push_back(k);
  return keys;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigParseError("line " + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)) +
                           ": " + e.what());
  }
  if (!j.is_object()) throw ConfigParseError("line 1: config must be a JSON object");
  RunConfig rc;
  bool sweep_seed = false;
  for (const auto& [key, v] : j.items()) {
    set_key(rc, key, v, "line " + std::to_string(line_of_key(text, key)) + ": ");
    sweep_seed |= key == "sweep_seed";
  }
  if (!sweep_seed) rc.sweep.seed = rc.scenario.seed;
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(RunConfig& rc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigParseError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) v = raw;
  set_key(rc, key, v, "override: ");
  if (key == "seed") rc.sweep.seed = rc.scenario.seed;
}

std::string serialize_config(const RunConfig& rc) {
  json j = json::object();
  for (const auto& [k, f] : registry()) j[k] = f.get(rc);
  return j.dump(2);
}

}  // namespace isac
