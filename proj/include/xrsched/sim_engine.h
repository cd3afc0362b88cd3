#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xrsched/link_abstraction.h"
#include "xrsched/scheduler.h"
#include "xrsched/traffic_model.h"
#include "xrsched/ue_context.h"

namespace xrsched {

enum class SlotType { kDownlink, kSpecial, kUplink };

struct SimConfig {
  int num_cells = 12;
  double isd_m = 20.0;
  double world_width_m = 120.0;
  double world_height_m = 50.0;
  int xr_ues_per_cell = 3;
  int embb_ues_per_cell = 3;
  double scs_khz = 30.0;
  std::string tdd_pattern = "DDDSU";
  int prbs = 272;
  double duration_ms = 10000.0;
  double warmup_ms = 500.0;
  int drops = 10;
  std::uint64_t seed = 1;
  SchedulerConfig scheduler;
  XrTrafficConfig traffic;
  LinkConfig link;

  double slot_ms() const { return 15.0 / scs_khz; }
  std::int64_t num_slots() const;
  SlotType slot_type(std::int64_t slot) const;
  void validate() const;
};

/// Cells on a grid of at most two rows, spaced by isd_m and centred in the
/// world area.
std::vector<Position> cell_layout(const SimConfig& config);

struct PduSetOutcome {
  std::uint32_t ue_id = 0;
  std::uint32_t cell = 0;
  std::uint64_t set_index = 0;
  std::int64_t size_bits = 0;
  double first_arrival_ms = 0.0;
  std::optional<double> delivered_at_ms;
  std::int64_t decoded_bits = 0;
  bool in_kpi_window = false;

  std::optional<double> delay_ms() const {
    if (!delivered_at_ms) return std::nullopt;
    return *delivered_at_ms - first_arrival_ms;
  }
};

struct UeSummary {
  std::uint32_t ue_id = 0;
  std::uint32_t cell = 0;
  TrafficType traffic_type = TrafficType::kXr;
  double avg_sinr_db = 0.0;
  std::int64_t credited_bits = 0;
};

struct KpiRecord {
  int drop_index = 0;
  std::uint64_t seed = 0;
  SchedulerKind scheduler = SchedulerKind::kProposed;
  double psdb_ms = 0.0;
  int num_cells = 0;
  int xr_ues_per_cell = 0;
  int embb_ues_per_cell = 0;
  double duration_ms = 0.0;
  double warmup_ms = 0.0;
  // Sets first arriving in [warmup_ms, kpi_window_end_ms] count for satisfaction.
  double kpi_window_end_ms = 0.0;
  std::vector<PduSetOutcome> pdu_sets;  // sorted by (ue_id, set_index)
  std::vector<UeSummary> ues;
  // queued_ues[cell][k]: UEs with pending data at the start of the k-th
  // post-warm-up downlink slot.
  std::vector<std::vector<std::uint16_t>> queued_ues;
  std::vector<std::int64_t> embb_decoded_bits;  // per cell, post warm-up

  double kpi_duration_s() const { return (duration_ms - warmup_ms) / 1000.0; }
};

/// Pre-allocation view of one UE, handed to slot observers.
struct UeSnapshot {
  std::uint32_t ue_id = 0;
  bool is_xr = false;
  std::int64_t buffered_bits = 0;
  bool hol_in_time = false;
  bool has_pending_retx = false;
  int min_retx_prbs = 0;
};

struct SlotView {
  std::int64_t slot = 0;
  double now_ms = 0.0;
  SlotType type = SlotType::kDownlink;
  std::uint32_t cell = 0;
  int available_prbs = 0;
  std::span<const UeSnapshot> before;
  std::span<const Grant> grants;
};

using SlotObserver = std::function<void(const SlotView&)>;

/// One independent drop, deterministic in (config, drop_index). The observer
/// is called for every cell on every slot (grants empty on S/U slots).
KpiRecord run_drop(const SimConfig& config, int drop_index,
                   const SlotObserver& observer = {});

}  // namespace xrsched
