#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "xrsched/link_abstraction.h"
#include "xrsched/traffic_model.h"

namespace xrsched {

enum class TrafficType { kXr, kEmbb };

struct ThroughputTracker {
  double instantaneous_rate_bps = 0.0;  // full-bandwidth rate at the current MCS
  double average_tp_bps = 1e3;
};

struct QosParams {
  double a_k = 1000.0;  // satisfaction weight, used by the exact solver
  double w_k = 1.0;     // WPF weight
  double delta = 0.01;  // M-LWDF delay-violation probability
};

struct UeContext {
  std::uint32_t ue_id = 0;
  std::uint32_t cell = 0;
  TrafficType traffic_type = TrafficType::kXr;
  Position position;
  std::deque<PduSet> pdu_set_queue;  // undelivered sets, by first arrival
  UeChannelState channel;
  std::vector<HarqProcess> harq;
  ThroughputTracker tp_tracker;
  QosParams qos;

  // Link state for the current TTI, refreshed by the simulation loop.
  int mcs_index = 0;
  std::int64_t bits_per_prb = 0;  // all spatial layers included

  bool is_xr() const { return traffic_type == TrafficType::kXr; }

  // Bits not yet placed in any transport block. Full-buffer UEs report
  // std::numeric_limits<std::int64_t>::max().
  std::int64_t buffered_bits() const;

  // First PDU-set that still has untransmitted bits, or nullptr.
  const PduSet* hol_set() const;
  PduSet* hol_set();

  // Failed CBGs reported back and waiting for a retransmission.
  bool has_pending_retx() const;
  bool has_pending_data() const { return buffered_bits() > 0 || has_pending_retx(); }
};

/// Full-buffer sources always have data. Throws ContractError for XR UEs.
bool embb_has_data(const UeContext& ue);

inline constexpr std::int64_t kFullBufferBits = std::numeric_limits<std::int64_t>::max();

}  // namespace xrsched
