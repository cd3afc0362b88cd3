#include "xrsched/scheduler.h"

#include <algorithm>
#include <cmath>

namespace xrsched {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::kProposed: return "proposed";
    case SchedulerKind::kPf: return "pf";
    case SchedulerKind::kWpf: return "wpf";
    case SchedulerKind::kMlwdf: return "mlwdf";
  }
  return "unknown";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  if (name == "proposed") return SchedulerKind::kProposed;
  if (name == "pf") return SchedulerKind::kPf;
  if (name == "wpf") return SchedulerKind::kWpf;
  if (name == "mlwdf" || name == "m-lwdf") return SchedulerKind::kMlwdf;
  throw ConfigError("unknown scheduler '" + std::string(name) +
                    "' (expected proposed, pf, wpf or mlwdf)");
}

void SchedulerConfig::validate() const {
  if (!(beta_epsilon > 0.0)) throw ConfigError("beta_epsilon must be > 0");
  if (!(tracker_tau_tti >= 1.0)) throw ConfigError("tracker_tau_tti must be >= 1");
  if (!(tracker_floor_bps > 0.0)) throw ConfigError("tracker_floor_bps must be > 0");
  if (!(wpf_weight_xr > 0.0) || !(wpf_weight_embb > 0.0)) {
    throw ConfigError("wpf weights must be > 0");
  }
  for (double d : {mlwdf_delta_xr, mlwdf_delta_embb}) {
    if (!(d > 0.0 && d < 1.0)) throw ConfigError("mlwdf delta must be in (0,1)");
  }
}

std::vector<int> Grant::prb_indices() const {
  std::vector<int> out(static_cast<std::size_t>(num_prbs));
  for (int i = 0; i < num_prbs; ++i) out[static_cast<std::size_t>(i)] = first_prb + i;
  return out;
}

double alpha(const PduSet& set) {
  if (set.total_size_bits <= 0) throw ContractError("alpha: empty PDU-set");
  return static_cast<double>(set.served_bits) / static_cast<double>(set.total_size_bits);
}

double beta(const PduSet& set, double now_ms) {
  const double budget = set.deadline_ms - set.first_arrival_ms;
  if (!(budget > 0.0)) throw ContractError("beta: non-positive delay budget");
  return 1.0 - (now_ms - set.first_arrival_ms) / budget;
}

double proposed_metric(const PduSet& set, double now_ms, double beta_epsilon) {
  const double hol_delay = now_ms - set.first_arrival_ms;
  const double budget = set.deadline_ms - set.first_arrival_ms;
  if (hol_delay >= budget) return 0.0;
  return std::exp(alpha(set)) / std::max(beta(set, now_ms), beta_epsilon);
}

double pf_metric(const ThroughputTracker& tracker, double floor_bps) {
  return tracker.instantaneous_rate_bps / std::max(tracker.average_tp_bps, floor_bps);
}

double wpf_metric(const UeContext& ue, double floor_bps) {
  return ue.qos.w_k * pf_metric(ue.tp_tracker, floor_bps);
}

double mlwdf_metric(const UeContext& ue, const PduSet* hol, double now_ms, double floor_bps) {
  if (!(ue.qos.delta > 0.0 && ue.qos.delta < 1.0)) {
    throw ConfigError("mlwdf delta must be in (0,1)");
  }
  double m = -std::log(ue.qos.delta) * pf_metric(ue.tp_tracker, floor_bps);
  if (ue.is_xr()) {
    if (hol == nullptr) throw ContractError("mlwdf_metric: XR UE without head-of-line set");
    const double budget = hol->deadline_ms - hol->first_arrival_ms;
    m *= (now_ms - hol->first_arrival_ms) / budget;
  }
  return m;
}

void update_throughput_tracker(ThroughputTracker& tracker, std::int64_t served_bits,
                               double tti_duration_s, double tau_tti) {
  const double rate = static_cast<double>(served_bits) / tti_duration_s;
  tracker.average_tp_bps = (1.0 - 1.0 / tau_tti) * tracker.average_tp_bps + rate / tau_tti;
}

TransportBlock take_payload(UeContext& ue, std::int64_t capacity_bits) {
  TransportBlock tb;
  tb.ue_id = ue.ue_id;
  if (!ue.is_xr()) {
    tb.size_bits = capacity_bits;
    for (int c = 0; c < kCbgsPerTb; ++c) {
      const auto [first, last] = tb.cbg_range(c);
      if (first == last) continue;
      tb.segments.push_back({kNoPduSet, 0, first, last - first, false});
    }
    tb.mark_empty_cbgs();
    return tb;
  }
  std::int64_t left = capacity_bits;
  for (auto& set : ue.pdu_set_queue) {
    if (left == 0) break;
    if (set.pending_bits() == 0) continue;
    for (auto& pdu : set.pdus) {
      if (left == 0) break;
      if (pdu.remaining_bits == 0) continue;
      const std::int64_t take = std::min(left, pdu.remaining_bits);
      tb.segments.push_back({set.set_index, pdu.pdu_index, tb.size_bits, take, false});
      pdu.remaining_bits -= take;
      set.served_bits += take;
      tb.size_bits += take;
      left -= take;
    }
  }
  tb.mark_empty_cbgs();
  return tb;
}

namespace {

struct Candidate {
  std::size_t ue = 0;
  int tier = 0;  // lower tiers are served first
  double key = 0.0;
  std::uint32_t ue_id = 0;
};

Candidate rank_new_transmission(const UeContext& ue, std::size_t idx, double now_ms,
                                const SchedulerConfig& config) {
  Candidate c{idx, 0, 0.0, ue.ue_id};
  const PduSet* hol = ue.is_xr() ? ue.hol_set() : nullptr;
  switch (config.kind) {
    case SchedulerKind::kProposed:
      if (!ue.is_xr()) {
        c.tier = 2;
        c.key = pf_metric(ue.tp_tracker, config.tracker_floor_bps);
      } else if (now_ms - hol->first_arrival_ms < hol->deadline_ms - hol->first_arrival_ms) {
        c.tier = 0;
        c.key = proposed_metric(*hol, now_ms, config.beta_epsilon);
      } else {
        // Expired payload is still sent, after every in-time set.
        c.tier = 1;
        c.key = std::exp(alpha(*hol));
      }
      break;
    case SchedulerKind::kPf:
      c.key = pf_metric(ue.tp_tracker, config.tracker_floor_bps);
      break;
    case SchedulerKind::kWpf:
      c.key = wpf_metric(ue, config.tracker_floor_bps);
      break;
    case SchedulerKind::kMlwdf:
      c.key = mlwdf_metric(ue, hol, now_ms, config.tracker_floor_bps);
      break;
  }
  return c;
}

}  // namespace

std::vector<Grant> allocate_tti(std::span<UeContext> ues, int available_prbs,
                                std::int64_t slot_index, double now_ms, bool downlink_slot,
                                const SchedulerConfig& config) {
  if (!downlink_slot) throw ContractError("allocate_tti: slot " + std::to_string(slot_index) +
                                          " is not a downlink slot");
  std::vector<Grant> grants;
  std::vector<bool> granted(ues.size(), false);
  int next_prb = 0;
  int remaining = available_prbs;

  struct Retx {
    std::size_t ue;
    std::size_t process;
    bool xr;
    std::int64_t feedback_slot;
  };
  std::vector<Retx> retx;
  for (std::size_t u = 0; u < ues.size(); ++u) {
    for (std::size_t p = 0; p < ues[u].harq.size(); ++p) {
      const auto& proc = ues[u].harq[p];
      if (proc.feedback_received && proc.tb.failed_cbgs() > 0) {
        retx.push_back({u, p, ues[u].is_xr(), proc.feedback_due_slot});
      }
    }
  }
  std::sort(retx.begin(), retx.end(), [&](const Retx& a, const Retx& b) {
    if (a.xr != b.xr) return a.xr;
    if (a.feedback_slot != b.feedback_slot) return a.feedback_slot < b.feedback_slot;
    if (ues[a.ue].ue_id != ues[b.ue].ue_id) return ues[a.ue].ue_id < ues[b.ue].ue_id;
    return ues[a.ue].harq[a.process].process_id < ues[b.ue].harq[b.process].process_id;
  });
  for (const auto& r : retx) {
    if (remaining == 0) break;
    if (granted[r.ue]) continue;  // one transport block per UE per slot
    const auto& proc = ues[r.ue].harq[r.process];
    const int need = proc.retx_prbs();
    if (need > remaining) continue;
    Grant g;
    g.ue_id = ues[r.ue].ue_id;
    g.first_prb = next_prb;
    g.num_prbs = need;
    g.is_retransmission = true;
    g.harq_process_id = proc.process_id;
    grants.push_back(std::move(g));
    granted[r.ue] = true;
    next_prb += need;
    remaining -= need;
  }

  std::vector<Candidate> candidates;
  for (std::size_t u = 0; u < ues.size(); ++u) {
    if (granted[u] || ues[u].bits_per_prb <= 0) continue;
    if (ues[u].buffered_bits() <= 0) continue;
    candidates.push_back(rank_new_transmission(ues[u], u, now_ms, config));
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.tier != b.tier) return a.tier < b.tier;
    if (a.key != b.key) return a.key > b.key;
    return a.ue_id < b.ue_id;
  });

  for (const auto& c : candidates) {
    if (remaining == 0) break;
    UeContext& ue = ues[c.ue];
    const std::int64_t pending = ue.buffered_bits();
    const std::int64_t per_prb = ue.bits_per_prb;
    const std::int64_t wanted =
        pending == kFullBufferBits ? remaining : (pending + per_prb - 1) / per_prb;
    const int prbs = static_cast<int>(std::min<std::int64_t>(wanted, remaining));
    Grant g;
    g.ue_id = ue.ue_id;
    g.first_prb = next_prb;
    g.num_prbs = prbs;
    g.metric = c.key;
    g.tb = take_payload(ue, static_cast<std::int64_t>(prbs) * per_prb);
    grants.push_back(std::move(g));
    next_prb += prbs;
    remaining -= prbs;
  }
  return grants;
}

}  // namespace xrsched
