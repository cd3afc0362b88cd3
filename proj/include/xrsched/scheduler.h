#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xrsched/link_abstraction.h"
#include "xrsched/ue_context.h"

namespace xrsched {

enum class SchedulerKind { kProposed, kPf, kWpf, kMlwdf };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);  // throws ConfigError

struct SchedulerConfig {
  SchedulerKind kind = SchedulerKind::kProposed;
  double beta_epsilon = 1e-6;
  double tracker_tau_tti = 100.0;
  double tracker_floor_bps = 1e3;
  double wpf_weight_xr = 1e8;
  double wpf_weight_embb = 1.0;
  double mlwdf_delta_xr = 0.01;
  double mlwdf_delta_embb = 0.01;

  void validate() const;
};

struct Grant {
  std::uint32_t ue_id = 0;
  int first_prb = 0;
  int num_prbs = 0;
  bool is_retransmission = false;
  std::uint64_t harq_process_id = 0;  // retransmissions only
  TransportBlock tb;                  // new transmissions only
  double metric = 0.0;

  std::vector<int> prb_indices() const;
};

// Ratio of transmitted bits of a PDU-set.
double alpha(const PduSet& set);
// Remaining fraction of the delay budget; negative once the deadline passed.
double beta(const PduSet& set, double now_ms);
double proposed_metric(const PduSet& set, double now_ms, double beta_epsilon = 1e-6);

double pf_metric(const ThroughputTracker& tracker, double floor_bps = 1e3);
double wpf_metric(const UeContext& ue, double floor_bps = 1e3);
/// hol may be null for full-buffer UEs; the delay term is then omitted.
double mlwdf_metric(const UeContext& ue, const PduSet* hol, double now_ms,
                    double floor_bps = 1e3);

/// Exponential moving average over tau TTIs, applied on every downlink TTI.
void update_throughput_tracker(ThroughputTracker& tracker, std::int64_t served_bits,
                               double tti_duration_s, double tau_tti);

/// One cell, one downlink TTI. HARQ retransmissions go first (XR before
/// full-buffer, oldest feedback first); remaining PRBs go to new
/// transmissions ordered according to config.kind. New-transmission
/// grants take their payload out of the UE buffers.
std::vector<Grant> allocate_tti(std::span<UeContext> ues, int available_prbs,
                                std::int64_t slot_index, double now_ms, bool downlink_slot,
                                const SchedulerConfig& config);

/// Fills a transport block from the UE's PDU-set stream (head-of-line
/// first) up to capacity_bits and marks those bits as served.
TransportBlock take_payload(UeContext& ue, std::int64_t capacity_bits);

}  // namespace xrsched
