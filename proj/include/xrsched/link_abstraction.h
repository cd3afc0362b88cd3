#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "xrsched/traffic_model.h"

namespace xrsched {

inline constexpr int kCbgsPerTb = 8;
inline constexpr int kSubcarriersPerPrb = 12;

struct LinkConfig {
  double gnb_tx_power_dbm = 31.0;
  double gnb_height_m = 3.0;
  double ue_height_m = 1.5;
  double pathloss_ref_db = 38.0;  // at 1 m
  double pathloss_exponent = 2.0;
  double shadowing_std_db = 4.0;
  double noise_figure_db = 9.0;
  double bandwidth_mhz = 100.0;
  // Array gain on the serving link only; interferers arrive through
  // side lobes and are counted at 0 dB.
  double serving_array_gain_db = 20.0;
  int spatial_layers = 2;
  int symbols_per_slot = 14;
  int pdcch_symbols = 1;
  int cqi_period_slots = 5;
  int cqi_delay_slots = 2;
  double olla_step_db = 0.5;
  double olla_target = 0.125;
  double olla_limit_db = 10.0;
  double bler_slope_db = 0.5;
  int harq_rtt_slots = 5;
  int max_harq_tx = 4;

  int data_symbols() const { return symbols_per_slot - pdcch_symbols; }
  double noise_dbm() const;
  // Sigmoid offset that puts the CBG error probability at olla_target when
  // the effective SINR equals the MCS threshold.
  double bler_bias_db() const;
  void validate() const;
};

struct Position {
  double x = 0.0;
  double y = 0.0;
};

struct UeChannelState {
  double distance_m = 0.0;
  double pathloss_db = 0.0;
  double shadowing_db = 0.0;
  double avg_sinr_db = 0.0;
  double last_cqi_sinr_db = 0.0;
  double olla_offset_db = 0.0;
  std::optional<double> pending_cqi_db;
  std::int64_t pending_cqi_apply_slot = 0;
};

struct McsEntry {
  int index = 0;
  double spectral_efficiency = 0.0;  // bits per resource element
  double sinr_threshold_db = 0.0;
};

using McsTable = std::vector<McsEntry>;

/// QPSK..256QAM ladder: 15 entries, equally spaced in spectral efficiency,
/// thresholds from the Shannon bound 10*log10(2^SE - 1).
McsTable default_mcs_table();

double pathloss_db(double distance_m, const LinkConfig& link);

/// 3D distance clamped to at least 1 m.
double link_distance_m(Position ue, Position gnb, const LinkConfig& link);

/// Wideband SINR in dB with every non-serving cell transmitting at full power.
/// shadowing_db holds one value per cell for this UE.
double compute_avg_sinr(Position ue, std::size_t serving_cell, std::span<const Position> cells,
                        std::span<const double> shadowing_db, const LinkConfig& link);

std::int64_t bits_per_prb(const McsEntry& mcs, int data_symbols = 13);

const McsEntry& select_mcs(double reported_sinr_db, double olla_offset_db, const McsTable& table);

double cbg_failure_probability(double sinr_db, const McsEntry& mcs, int num_transmissions,
                               const LinkConfig& link);

using CbgFlags = std::array<bool, kCbgsPerTb>;

/// Already decoded CBGs stay decoded; the rest fail independently.
CbgFlags draw_cbg_outcomes(const CbgFlags& decoded_before, double sinr_db, const McsEntry& mcs,
                           int num_transmissions, const LinkConfig& link, Rng& rng);

/// Classic outer loop on per-CBG first-transmission results
/// (true = decoded).
double olla_update(double offset_db, std::span<const bool> first_tx_results,
                   const LinkConfig& link);

inline constexpr std::uint64_t kNoPduSet = std::numeric_limits<std::uint64_t>::max();

struct TbSegment {
  std::uint64_t set_index = kNoPduSet;  // kNoPduSet for full-buffer payload
  std::uint32_t pdu_index = 0;
  std::int64_t offset_bits = 0;
  std::int64_t bits = 0;
  bool credited = false;
};

struct TransportBlock {
  std::uint32_t ue_id = 0;
  std::int64_t size_bits = 0;
  CbgFlags cbg_decoded{};
  std::vector<TbSegment> segments;

  // Bit range [first, second) carried by CBG c; empty CBGs exist for tiny TBs.
  std::pair<std::int64_t, std::int64_t> cbg_range(int c) const;
  int failed_cbgs() const;
  bool fully_decoded() const { return failed_cbgs() == 0; }
  // Marks CBGs that carry no bits as decoded.
  void mark_empty_cbgs();
  // True when every CBG overlapping the segment is decoded.
  bool segment_decoded(const TbSegment& seg) const;
};

struct HarqProcess {
  std::uint64_t process_id = 0;
  TransportBlock tb;
  int num_transmissions = 1;
  std::int64_t feedback_due_slot = 0;
  int prb_count = 0;  // PRBs of the first transmission
  int mcs_index = 0;
  std::int64_t bits_per_prb = 0;
  bool feedback_received = false;
  CbgFlags first_tx_decoded{};
  int first_tx_nonempty = kCbgsPerTb;

  int retx_prbs() const;
};

}  // namespace xrsched
