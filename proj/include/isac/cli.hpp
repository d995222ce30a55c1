// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "isac/config_io.hpp"

namespace isac {

// Exit codes of the isac tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 3;

struct Command {
  std::string verb;  // validate | baseline | optimize | sweep | gradcheck | calibrate | profile
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir = "isac_out";
  std::optional<std::string> technique;
  std::optional<std::uint64_t> seed;
  std::vector<int> n_list{10, 20, 50};
  int gradcheck_instances = 20;
  bool help = false;
  std::string help_text;
  RunConfig config;  // file config with overrides, technique and seed applied
};

// Throws UsageError for bad flags or verbs and ConfigParseError for bad
// config content. Nothing is written to disk.
Command parse_invocation(const std::vector<std::string>& args);

struct ManifestInfo {
  std::string verb;
  RunConfig config;
  double seconds = 0.0;
  std::vector<std::string> extra_files;
};

// Figure CSVs (skipped when records is empty), trace JSONs and the manifest,
// each written to a temporary name and renamed into place. Throws IoError.
std::vector<std::string> write_outputs(const std::vector<MetricsRecord>& records,
                                       const std::string& dir, const ManifestInfo& info);

// Atomic text write used for every output file.
void write_file_atomic(const std::string& path, const std::string& content);

// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double v);

int execute(const Command& cmd, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isac
