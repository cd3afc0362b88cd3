#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xrsched/errors.h"
#include "xrsched/scheduler.h"
#include "xrsched/sim_engine.h"

namespace xrsched {

struct ExperimentSpec {
  SimConfig base;
  int xr_ues_min = 3;
  int xr_ues_max = 8;
  std::vector<double> psdb_set_ms{10.0, 15.0, 20.0};
  std::vector<SchedulerKind> schedulers{SchedulerKind::kProposed, SchedulerKind::kWpf,
                                        SchedulerKind::kMlwdf};
  std::string output_dir = "results";
  bool trace_decisions = false;  // per-grant CSV for every drop under traces/

  std::vector<int> xr_sweep() const;
  void validate() const;  // throws ConfigError
};

/// Parse error carrying the 1-based line it refers to (0 when the problem is
/// not tied to a single line).
class ConfigParseError : public ConfigError {
 public:
  ConfigParseError(std::string origin, int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// `key = value` lines; `#` starts a comment. Values are numbers, true or
/// false, double quoted strings or bracketed lists of those. Unknown or
/// repeated keys are rejected.
ExperimentSpec parse_config_text(std::string_view text, std::string_view origin = "<config>");
ExperimentSpec parse_config(const std::filesystem::path& path);  // IoError if unreadable

/// 4 cells in a 40 m wide hall, 3 drops of 5 s.
void apply_fast_profile(ExperimentSpec& spec);

/// Every key with its default value and a one-line description, in a form
/// parse_config_text accepts.
std::string defaults_reference();

/// One `key = value` line per key, fixed order; equal specs give equal text.
std::string canonical_config(const ExperimentSpec& spec);
/// 16 hex digits of FNV-1a over canonical_config.
std::string config_hash(const ExperimentSpec& spec);

}  // namespace xrsched
