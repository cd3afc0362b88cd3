#include "xrsched/link_abstraction.h"

#include <algorithm>
#include <cmath>

namespace xrsched {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

double LinkConfig::noise_dbm() const {
  return -174.0 + 10.0 * std::log10(bandwidth_mhz * 1e6) + noise_figure_db;
}

double LinkConfig::bler_bias_db() const {
  return -bler_slope_db * std::log((1.0 - olla_target) / olla_target);
}

void LinkConfig::validate() const {
  if (!(pathloss_exponent > 0.0)) throw ConfigError("pathloss_exponent must be > 0");
  if (shadowing_std_db < 0.0) throw ConfigError("shadowing_std_db must be >= 0");
  if (!(bandwidth_mhz > 0.0)) throw ConfigError("bandwidth_mhz must be > 0");
  if (spatial_layers < 1) throw ConfigError("spatial_layers must be >= 1");
  if (pdcch_symbols < 0 || pdcch_symbols >= symbols_per_slot) {
    throw ConfigError("pdcch_symbols must leave at least one data symbol");
  }
  if (cqi_period_slots < 1) throw ConfigError("cqi_period_slots must be >= 1");
  if (cqi_delay_slots < 0) throw ConfigError("cqi_delay_slots must be >= 0");
  if (!(olla_step_db > 0.0)) throw ConfigError("olla_step_db must be > 0");
  if (!(olla_target > 0.0 && olla_target < 1.0)) throw ConfigError("olla_target must be in (0,1)");
  if (!(olla_limit_db >= 0.0)) throw ConfigError("olla_limit_db must be >= 0");
  if (!(bler_slope_db > 0.0)) throw ConfigError("bler_slope_db must be > 0");
  if (harq_rtt_slots < 1) throw ConfigError("harq_rtt_slots must be >= 1");
  if (max_harq_tx < 1) throw ConfigError("max_harq_tx must be >= 1");
}

McsTable default_mcs_table() {
  constexpr int kEntries = 15;
  constexpr double kMinSe = 0.2;
  constexpr double kMaxSe = 7.4;
  McsTable table;
  table.reserve(kEntries);
  for (int i = 0; i < kEntries; ++i) {
    const double se = kMinSe + (kMaxSe - kMinSe) * i / (kEntries - 1);
    table.push_back({i, se, 10.0 * std::log10(std::pow(2.0, se) - 1.0)});
  }
  return table;
}

double pathloss_db(double distance_m, const LinkConfig& link) {
  return link.pathloss_ref_db + 10.0 * link.pathloss_exponent * std::log10(distance_m);
}

double link_distance_m(Position ue, Position gnb, const LinkConfig& link) {
  const double dx = ue.x - gnb.x;
  const double dy = ue.y - gnb.y;
  const double dz = link.gnb_height_m - link.ue_height_m;
  return std::max(1.0, std::sqrt(dx * dx + dy * dy + dz * dz));
}

double compute_avg_sinr(Position ue, std::size_t serving_cell, std::span<const Position> cells,
                        std::span<const double> shadowing_db, const LinkConfig& link) {
  if (serving_cell >= cells.size() || shadowing_db.size() != cells.size()) {
    throw ContractError("compute_avg_sinr: cell/shadowing mismatch");
  }
  double signal_mw = 0.0;
  double interference_mw = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double rx_dbm = link.gnb_tx_power_dbm -
                          pathloss_db(link_distance_m(ue, cells[c], link), link) -
                          shadowing_db[c];
    if (c == serving_cell) {
      signal_mw = db_to_linear(rx_dbm + link.serving_array_gain_db);
    } else {
      interference_mw += db_to_linear(rx_dbm);
    }
  }
  return 10.0 * std::log10(signal_mw / (interference_mw + db_to_linear(link.noise_dbm())));
}

std::int64_t bits_per_prb(const McsEntry& mcs, int data_symbols) {
  return static_cast<std::int64_t>(
      std::floor(mcs.spectral_efficiency * kSubcarriersPerPrb * data_symbols));
}

const McsEntry& select_mcs(double reported_sinr_db, double olla_offset_db,
                           const McsTable& table) {
  if (table.empty()) throw ContractError("select_mcs: empty table");
  const double effective = reported_sinr_db + olla_offset_db;
  const McsEntry* best = &table.front();
  for (const auto& entry : table) {
    if (entry.sinr_threshold_db <= effective) best = &entry;
  }
  return *best;
}

double cbg_failure_probability(double sinr_db, const McsEntry& mcs, int num_transmissions,
                               const LinkConfig& link) {
  if (num_transmissions < 1) throw ContractError("num_transmissions must be >= 1");
  const double sinr_eff = sinr_db + 10.0 * std::log10(static_cast<double>(num_transmissions));
  const double x = (sinr_eff - mcs.sinr_threshold_db - link.bler_bias_db()) / link.bler_slope_db;
  return 1.0 / (1.0 + std::exp(x));
}

CbgFlags draw_cbg_outcomes(const CbgFlags& decoded_before, double sinr_db, const McsEntry& mcs,
                           int num_transmissions, const LinkConfig& link, Rng& rng) {
  const double p_fail = cbg_failure_probability(sinr_db, mcs, num_transmissions, link);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  CbgFlags out = decoded_before;
  for (int c = 0; c < kCbgsPerTb; ++c) {
    if (out[c]) continue;
    out[c] = uniform(rng) >= p_fail;
  }
  return out;
}

double olla_update(double offset_db, std::span<const bool> first_tx_results,
                   const LinkConfig& link) {
  const double down = link.olla_step_db;
  const double up = link.olla_step_db * link.olla_target / (1.0 - link.olla_target);
  for (bool decoded : first_tx_results) {
    offset_db += decoded ? up : -down;
  }
  return std::clamp(offset_db, -link.olla_limit_db, link.olla_limit_db);
}

std::pair<std::int64_t, std::int64_t> TransportBlock::cbg_range(int c) const {
  const std::int64_t cbg_size = (size_bits + kCbgsPerTb - 1) / kCbgsPerTb;
  const std::int64_t first = std::min(size_bits, cbg_size * c);
  const std::int64_t last = std::min(size_bits, cbg_size * (c + 1));
  return {first, last};
}

int TransportBlock::failed_cbgs() const {
  return static_cast<int>(std::count(cbg_decoded.begin(), cbg_decoded.end(), false));
}

void TransportBlock::mark_empty_cbgs() {
  for (int c = 0; c < kCbgsPerTb; ++c) {
    const auto [first, last] = cbg_range(c);
    if (first == last) cbg_decoded[c] = true;
  }
}

bool TransportBlock::segment_decoded(const TbSegment& seg) const {
  const std::int64_t seg_end = seg.offset_bits + seg.bits;
  for (int c = 0; c < kCbgsPerTb; ++c) {
    const auto [first, last] = cbg_range(c);
    const bool overlaps = first < seg_end && seg.offset_bits < last;
    if (overlaps && !cbg_decoded[c]) return false;
  }
  return true;
}

int HarqProcess::retx_prbs() const {
  const int failed = tb.failed_cbgs();
  return static_cast<int>((static_cast<std::int64_t>(failed) * prb_count + kCbgsPerTb - 1) /
                          kCbgsPerTb);
}

}  // namespace xrsched
