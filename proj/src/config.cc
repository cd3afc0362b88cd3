#include "xrsched/config.h"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace xrsched {

std::vector<int> ExperimentSpec::xr_sweep() const {
  std::vector<int> out;
  for (int n = xr_ues_min; n <= xr_ues_max; ++n) out.push_back(n);
  return out;
}

void ExperimentSpec::validate() const {
  base.validate();
  if (xr_ues_min < 0) throw ConfigError("xr_ues_min must be >= 0");
  if (xr_ues_max < xr_ues_min) throw ConfigError("xr_ues_max must be >= xr_ues_min");
  if (psdb_set_ms.empty()) throw ConfigError("psdb_ms must list at least one value");
  for (double p : psdb_set_ms) {
    if (!(p > 0.0)) throw ConfigError("psdb_ms must be > 0");
    if (p >= base.duration_ms - base.warmup_ms) {
      throw ConfigError("psdb_ms must be shorter than the post warm-up duration");
    }
  }
  if (schedulers.empty()) throw ConfigError("scheduler must list at least one kind");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ConfigParseError::ConfigParseError(std::string origin, int line, const std::string& what)
    : ConfigError(line > 0 ? fmt::format("{}:{}: {}", origin, line, what)
                           : fmt::format("{}: {}", origin, what)),
      line_(line) {}

namespace {

struct Value {
  enum class Kind { kNumber, kBool, kString, kList };
  Kind kind = Kind::kNumber;
  double number = 0.0;
  bool flag = false;
  std::string text;
  std::vector<Value> items;
};

// Raised while converting a value; the caller attaches origin and line.
struct ValueError {
  std::string what;
};

enum class Range { kAny, kPositive, kNonNegative, kOpenUnit };

void check_range(std::string_view key, double v, Range r) {
  switch (r) {
    case Range::kAny: return;
    case Range::kPositive:
      if (!(v > 0.0)) throw ValueError{fmt::format("{} must be > 0", key)};
      return;
    case Range::kNonNegative:
      if (!(v >= 0.0)) throw ValueError{fmt::format("{} must be >= 0", key)};
      return;
    case Range::kOpenUnit:
      if (!(v > 0.0 && v < 1.0)) throw ValueError{fmt::format("{} must be in (0,1)", key)};
      return;
  }
}

double as_number(std::string_view key, const Value& v, Range r) {
  if (v.kind != Value::Kind::kNumber) {
    throw ValueError{fmt::format("{} expects a number", key)};
  }
  check_range(key, v.number, r);
  return v.number;
}

std::int64_t as_integer(std::string_view key, const Value& v, Range r) {
  const double d = as_number(key, v, r);
  if (d != std::floor(d) || std::abs(d) > 9.007199254740992e15) {
    throw ValueError{fmt::format("{} expects an integer", key)};
  }
  return static_cast<std::int64_t>(d);
}

std::string as_string(std::string_view key, const Value& v) {
  if (v.kind != Value::Kind::kString) {
    throw ValueError{fmt::format("{} expects a quoted string", key)};
  }
  return v.text;
}

bool as_bool(std::string_view key, const Value& v) {
  if (v.kind != Value::Kind::kBool) throw ValueError{fmt::format("{} expects true or false", key)};
  return v.flag;
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

struct KeyDef {
  std::string_view name;
  std::string_view doc;
  std::function<void(ExperimentSpec&, const Value&)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

#define XR_DOUBLE(key, member, range, doc)                                                  \
  KeyDef {                                                                                 \
    key, doc, [](ExperimentSpec& s, const Value& v) { s.member = as_number(key, v, range); }, \
        [](const ExperimentSpec& s) { return fmt_num(s.member); }                          \
  }
#define XR_INT(key, member, range, doc)                                               \
  KeyDef {                                                                           \
    key, doc,                                                                        \
        [](ExperimentSpec& s, const Value& v) {                                      \
          s.member = static_cast<decltype(s.member)>(as_integer(key, v, range));     \
        },                                                                           \
        [](const ExperimentSpec& s) { return fmt::format("{}", s.member); }          \
  }

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      // Sweep
      KeyDef{"scheduler", "scheduler kinds to run: proposed, pf, wpf, mlwdf",
             [](ExperimentSpec& s, const Value& v) {
               s.schedulers.clear();
               auto add = [&](const Value& item) {
                 const auto name = as_string("scheduler", item);
                 try {
                   s.schedulers.push_back(scheduler_kind_from_string(name));
                 } catch (const ConfigError& e) {
                   throw ValueError{e.what()};
                 }
               };
               if (v.kind == Value::Kind::kList) {
                 for (const auto& item : v.items) add(item);
               } else {
                 add(v);
               }
               if (s.schedulers.empty()) throw ValueError{"scheduler list is empty"};
             },
             [](const ExperimentSpec& s) {
               std::string out = "[";
               for (std::size_t i = 0; i < s.schedulers.size(); ++i) {
                 out += fmt::format("{}\"{}\"", i ? ", " : "", to_string(s.schedulers[i]));
               }
               return out + "]";
             }},
      KeyDef{"psdb_ms", "PDU-set delay budgets to sweep, ms",
             [](ExperimentSpec& s, const Value& v) {
               s.psdb_set_ms.clear();
               if (v.kind == Value::Kind::kList) {
                 for (const auto& item : v.items) {
                   s.psdb_set_ms.push_back(as_number("psdb_ms", item, Range::kPositive));
                 }
               } else {
                 s.psdb_set_ms.push_back(as_number("psdb_ms", v, Range::kPositive));
               }
               if (s.psdb_set_ms.empty()) throw ValueError{"psdb_ms list is empty"};
             },
             [](const ExperimentSpec& s) {
               std::string out = "[";
               for (std::size_t i = 0; i < s.psdb_set_ms.size(); ++i) {
                 out += fmt::format("{}{}", i ? ", " : "", s.psdb_set_ms[i]);
               }
               return out + "]";
             }},
      XR_INT("xr_ues_min", xr_ues_min, Range::kNonNegative, "smallest XR UEs per cell in the sweep"),
      XR_INT("xr_ues_max", xr_ues_max, Range::kNonNegative, "largest XR UEs per cell in the sweep"),
      XR_INT("drops", base.drops, Range::kPositive, "independent UE placements per sweep point"),
      XR_INT("seed", base.seed, Range::kNonNegative, "base seed"),
      KeyDef{"output_dir", "where results are written",
             [](ExperimentSpec& s, const Value& v) { s.output_dir = as_string("output_dir", v); },
             [](const ExperimentSpec& s) { return fmt::format("\"{}\"", s.output_dir); }},
      KeyDef{"trace_decisions", "write every grant (slot, cell, ue, metric, prbs, retx) per drop",
             [](ExperimentSpec& s, const Value& v) {
               s.trace_decisions = as_bool("trace_decisions", v);
             },
             [](const ExperimentSpec& s) { return std::string(s.trace_decisions ? "true" : "false"); }},
      // Deployment
      XR_INT("num_cells", base.num_cells, Range::kPositive, "cells (1 or even)"),
      XR_DOUBLE("isd_m", base.isd_m, Range::kPositive, "inter-site distance, m"),
      XR_DOUBLE("world_width_m", base.world_width_m, Range::kPositive, "hall width, m"),
      XR_DOUBLE("world_height_m", base.world_height_m, Range::kPositive, "hall depth, m"),
      XR_INT("embb_ues_per_cell", base.embb_ues_per_cell, Range::kNonNegative,
             "full-buffer UEs per cell"),
      XR_DOUBLE("scs_khz", base.scs_khz, Range::kPositive, "subcarrier spacing, kHz"),
      KeyDef{"tdd_pattern", "slot pattern over D, S, U",
             [](ExperimentSpec& s, const Value& v) {
               s.base.tdd_pattern = as_string("tdd_pattern", v);
             },
             [](const ExperimentSpec& s) { return fmt::format("\"{}\"", s.base.tdd_pattern); }},
      XR_INT("prbs", base.prbs, Range::kPositive, "PRBs per cell"),
      XR_DOUBLE("duration_ms", base.duration_ms, Range::kPositive, "simulated time per drop, ms"),
      XR_DOUBLE("warmup_ms", base.warmup_ms, Range::kNonNegative, "excluded start-up time, ms"),
      // Traffic
      XR_DOUBLE("frame_rate", base.traffic.frame_rate, Range::kPositive, "XR frames per second"),
      XR_DOUBLE("frame_size_mean_kb", base.traffic.frame_size_kb.mean, Range::kPositive,
                "frame size mean, kB"),
      XR_DOUBLE("frame_size_std_kb", base.traffic.frame_size_kb.std, Range::kNonNegative,
                "frame size standard deviation, kB"),
      XR_DOUBLE("frame_size_min_kb", base.traffic.frame_size_kb.lower, Range::kPositive,
                "frame size lower truncation, kB"),
      XR_DOUBLE("frame_size_max_kb", base.traffic.frame_size_kb.upper, Range::kPositive,
                "frame size upper truncation, kB"),
      XR_DOUBLE("jitter_mean_ms", base.traffic.jitter_ms.mean, Range::kAny, "frame jitter mean, ms"),
      XR_DOUBLE("jitter_std_ms", base.traffic.jitter_ms.std, Range::kNonNegative,
                "frame jitter standard deviation, ms"),
      XR_DOUBLE("jitter_min_ms", base.traffic.jitter_ms.lower, Range::kAny,
                "frame jitter lower truncation, ms"),
      XR_DOUBLE("jitter_max_ms", base.traffic.jitter_ms.upper, Range::kAny,
                "frame jitter upper truncation, ms"),
      XR_INT("pdu_payload_bytes", base.traffic.pdu_payload_bytes, Range::kPositive,
             "bytes per PDU"),
      // Link
      XR_DOUBLE("gnb_tx_power_dbm", base.link.gnb_tx_power_dbm, Range::kAny, "gNB power, dBm"),
      XR_DOUBLE("gnb_height_m", base.link.gnb_height_m, Range::kNonNegative, "gNB height, m"),
      XR_DOUBLE("ue_height_m", base.link.ue_height_m, Range::kNonNegative, "UE height, m"),
      XR_DOUBLE("pathloss_ref_db", base.link.pathloss_ref_db, Range::kAny, "pathloss at 1 m, dB"),
      XR_DOUBLE("pathloss_exponent", base.link.pathloss_exponent, Range::kPositive,
                "log-distance exponent"),
      XR_DOUBLE("shadowing_std_db", base.link.shadowing_std_db, Range::kNonNegative,
                "per-link shadowing, dB"),
      XR_DOUBLE("noise_figure_db", base.link.noise_figure_db, Range::kAny, "UE noise figure, dB"),
      XR_DOUBLE("bandwidth_mhz", base.link.bandwidth_mhz, Range::kPositive, "carrier bandwidth, MHz"),
      XR_DOUBLE("serving_array_gain_db", base.link.serving_array_gain_db, Range::kAny,
                "beamforming gain toward the served UE, dB"),
      XR_INT("spatial_layers", base.link.spatial_layers, Range::kPositive, "MIMO layers per grant"),
      XR_INT("symbols_per_slot", base.link.symbols_per_slot, Range::kPositive, "OFDM symbols per slot"),
      XR_INT("pdcch_symbols", base.link.pdcch_symbols, Range::kNonNegative, "control symbols per slot"),
      XR_INT("cqi_period_slots", base.link.cqi_period_slots, Range::kPositive, "CQI report period"),
      XR_INT("cqi_delay_slots", base.link.cqi_delay_slots, Range::kNonNegative, "CQI report delay"),
      XR_DOUBLE("olla_step_db", base.link.olla_step_db, Range::kPositive, "OLLA down-step, dB"),
      XR_DOUBLE("olla_target", base.link.olla_target, Range::kOpenUnit,
                "target first-transmission CBG error rate"),
      XR_DOUBLE("olla_limit_db", base.link.olla_limit_db, Range::kNonNegative, "OLLA offset bound, dB"),
      XR_DOUBLE("bler_slope_db", base.link.bler_slope_db, Range::kPositive, "BLER sigmoid slope, dB"),
      XR_INT("harq_rtt_slots", base.link.harq_rtt_slots, Range::kPositive, "HARQ feedback delay"),
      XR_INT("max_harq_tx", base.link.max_harq_tx, Range::kPositive, "transmissions per TB"),
      // Scheduler
      XR_DOUBLE("beta_epsilon", base.scheduler.beta_epsilon, Range::kPositive,
                "floor on the remaining-budget term"),
      XR_DOUBLE("tracker_tau_tti", base.scheduler.tracker_tau_tti, Range::kPositive,
                "throughput average window, TTIs"),
      XR_DOUBLE("tracker_floor_bps", base.scheduler.tracker_floor_bps, Range::kPositive,
                "throughput average floor, bit/s"),
      XR_DOUBLE("wpf_weight_xr", base.scheduler.wpf_weight_xr, Range::kPositive, "WPF weight, XR"),
      XR_DOUBLE("wpf_weight_embb", base.scheduler.wpf_weight_embb, Range::kPositive,
                "WPF weight, eMBB"),
      XR_DOUBLE("mlwdf_delta_xr", base.scheduler.mlwdf_delta_xr, Range::kOpenUnit,
                "M-LWDF violation probability, XR"),
      XR_DOUBLE("mlwdf_delta_embb", base.scheduler.mlwdf_delta_embb, Range::kOpenUnit,
                "M-LWDF violation probability, eMBB"),
  };
  return table;
}

#undef XR_DOUBLE
#undef XR_INT

class LineParser {
 public:
  LineParser(std::string_view s) : s_(s) {}

  Value parse_value(bool allow_list) {
    skip_ws();
    if (at_end()) throw ValueError{"missing value"};
    const char c = s_[pos_];
    if (c == '"') return parse_string();
    if (c == '[') {
      if (!allow_list) throw ValueError{"nested lists are not supported"};
      return parse_list();
    }
    return parse_number();
  }

  void expect_end() {
    skip_ws();
    if (!at_end()) throw ValueError{fmt::format("unexpected text '{}'", s_.substr(pos_))};
  }

 private:
  bool at_end() const { return pos_ >= s_.size(); }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  Value parse_string() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::kString;
    while (!at_end() && s_[pos_] != '"') {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      v.text += s_[pos_++];
    }
    if (at_end()) throw ValueError{"unterminated string"};
    ++pos_;
    return v;
  }

  Value parse_list() {
    ++pos_;
    Value v;
    v.kind = Value::Kind::kList;
    skip_ws();
    if (!at_end() && s_[pos_] == ']') {
      ++pos_;
      return v;
    }
    for (;;) {
      v.items.push_back(parse_value(false));
      skip_ws();
      if (at_end()) throw ValueError{"unterminated list"};
      if (s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      if (s_[pos_] != ',') throw ValueError{"expected ',' or ']' in list"};
      ++pos_;
    }
  }

  Value parse_number() {
    std::size_t end = pos_;
    while (end < s_.size() && s_[end] != ',' && s_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(s_[end]))) {
      ++end;
    }
    const auto token = s_.substr(pos_, end - pos_);
    Value v;
    if (token == "true" || token == "false") {
      v.kind = Value::Kind::kBool;
      v.flag = token == "true";
      pos_ = end;
      return v;
    }
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v.number);
    if (ec != std::errc() || ptr != last || !std::isfinite(v.number)) {
      throw ValueError{fmt::format("'{}' is not a number (strings need double quotes)", token)};
    }
    pos_ = end;
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view k) {
  if (k.empty() || !(std::islower(static_cast<unsigned char>(k[0])) || k[0] == '_')) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
           c == '_';
  });
}

}  // namespace

ExperimentSpec parse_config_text(std::string_view text, std::string_view origin) {
  const std::string where(origin);
  ExperimentSpec spec;
  std::map<std::string, const KeyDef*, std::less<>> keys;
  for (const auto& k : key_table()) keys.emplace(std::string(k.name), &k);
  std::map<std::string, int, std::less<>> seen;

  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos
                                                                       : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigParseError(where, line_no, "expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (!valid_key(key)) {
      throw ConfigParseError(where, line_no, fmt::format("invalid key '{}'", key));
    }
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw ConfigParseError(where, line_no, fmt::format("unknown key '{}'", key));
    }
    if (const auto prev = seen.find(key); prev != seen.end()) {
      throw ConfigParseError(where, line_no,
                             fmt::format("key '{}' already set on line {}", key, prev->second));
    }
    seen.emplace(std::string(key), line_no);
    try {
      LineParser p(line.substr(eq + 1));
      const Value v = p.parse_value(true);
      p.expect_end();
      it->second->set(spec, v);
    } catch (const ValueError& e) {
      throw ConfigParseError(where, line_no, e.what);
    }
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigParseError(where, 0, e.what());
  }
  return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read config file '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void apply_fast_profile(ExperimentSpec& spec) {
  spec.base.num_cells = 4;
  spec.base.world_width_m = 40.0;
  spec.base.drops = 3;
  spec.base.duration_ms = 5000.0;
}

std::string defaults_reference() {
  const ExperimentSpec defaults;
  std::string out =
      "# Configuration keys and their defaults.\n"
      "# Syntax: key = value; strings in double quotes; lists as [a, b].\n";
  for (const auto& k : key_table()) {
    out += fmt::format("\n# {}\n{} = {}\n", k.doc, k.name, k.get(defaults));
  }
  return out;
}

std::string canonical_config(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& k : key_table()) {
    if (k.name == "output_dir") continue;  // location only, not content
    out += fmt::format("{} = {}\n", k.name, k.get(spec));
  }
  return out;
}

std::string config_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config(spec)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace xrsched
