#include "xrsched/sim_engine.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace xrsched {

std::int64_t SimConfig::num_slots() const {
  return static_cast<std::int64_t>(std::ceil(duration_ms / slot_ms() - 1e-9));
}

SlotType SimConfig::slot_type(std::int64_t slot) const {
  const char c = tdd_pattern[static_cast<std::size_t>(slot) % tdd_pattern.size()];
  switch (c) {
    case 'D': return SlotType::kDownlink;
    case 'S': return SlotType::kSpecial;
    default: return SlotType::kUplink;
  }
}

void SimConfig::validate() const {
  if (num_cells < 1) throw ConfigError("num_cells must be >= 1");
  if (num_cells > 1 && num_cells % 2 != 0) {
    throw ConfigError("num_cells must be 1 or even (two-row layout)");
  }
  if (!(isd_m > 0.0)) throw ConfigError("isd_m must be > 0");
  if (!(world_width_m > 0.0) || !(world_height_m > 0.0)) {
    throw ConfigError("world dimensions must be > 0");
  }
  if (xr_ues_per_cell < 0 || embb_ues_per_cell < 0) {
    throw ConfigError("UE counts must be >= 0");
  }
  if (!(scs_khz > 0.0)) throw ConfigError("scs_khz must be > 0");
  if (tdd_pattern.empty() ||
      tdd_pattern.find_first_not_of("DSU") != std::string::npos) {
    throw ConfigError("tdd_pattern must be a non-empty string over {D,S,U}");
  }
  if (prbs < 1) throw ConfigError("prbs must be >= 1");
  if (!(duration_ms > 0.0)) throw ConfigError("duration_ms must be > 0");
  if (warmup_ms < 0.0 || warmup_ms >= duration_ms) {
    throw ConfigError("warmup_ms must be in [0, duration_ms)");
  }
  if (drops < 1) throw ConfigError("drops must be >= 1");
  scheduler.validate();
  traffic.validate();
  link.validate();
  const auto cells = cell_layout(*this);
  for (const auto& c : cells) {
    if (c.x < 0.0 || c.x > world_width_m || c.y < 0.0 || c.y > world_height_m) {
      throw ConfigError("cell layout does not fit in the world area");
    }
  }
}

std::vector<Position> cell_layout(const SimConfig& config) {
  const int rows = config.num_cells == 1 ? 1 : 2;
  const int cols = config.num_cells / rows;
  std::vector<Position> cells;
  cells.reserve(static_cast<std::size_t>(config.num_cells));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      cells.push_back({config.world_width_m / 2.0 + (c - (cols - 1) / 2.0) * config.isd_m,
                       config.world_height_m / 2.0 + (r - (rows - 1) / 2.0) * config.isd_m});
    }
  }
  return cells;
}

namespace {

Rng make_stream(std::uint64_t base, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

std::size_t nearest_cell(Position p, const std::vector<Position>& cells) {
  std::size_t best = 0;
  double best_d2 = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const double dx = p.x - cells[c].x;
    const double dy = p.y - cells[c].y;
    const double d2 = dx * dx + dy * dy;
    if (c == 0 || d2 < best_d2) {
      best = c;
      best_d2 = d2;
    }
  }
  return best;
}

struct XrSource {
  std::vector<FrameArrival> frames;
  std::size_t next = 0;
  std::uint64_t next_set_index = 0;
};

class DropRunner {
 public:
  DropRunner(const SimConfig& config, int drop_index, const SlotObserver& observer)
      : config_(config),
        observer_(observer),
        base_seed_(config.seed + static_cast<std::uint64_t>(drop_index)),
        link_rng_(make_stream(base_seed_, 2)),
        mcs_table_(default_mcs_table()) {
    record_.drop_index = drop_index;
    record_.seed = config.seed;
    record_.scheduler = config.scheduler.kind;
    record_.psdb_ms = config.traffic.psdb_ms;
    record_.num_cells = config.num_cells;
    record_.xr_ues_per_cell = config.xr_ues_per_cell;
    record_.embb_ues_per_cell = config.embb_ues_per_cell;
    record_.duration_ms = config.duration_ms;
    record_.warmup_ms = config.warmup_ms;
    record_.kpi_window_end_ms = config.duration_ms - config.traffic.psdb_ms;
    record_.queued_ues.resize(static_cast<std::size_t>(config.num_cells));
    record_.embb_decoded_bits.assign(static_cast<std::size_t>(config.num_cells), 0);
  }

  KpiRecord run() {
    place_ues();
    const std::int64_t slots = config_.num_slots();
    for (std::int64_t t = 0; t < slots; ++t) step(t);
    finish();
    return std::move(record_);
  }

 private:
  // Per-UE streams keyed by (cell, role, index within role), so a drop with
  // more UEs per cell extends the smaller one instead of replacing it.
  static std::uint64_t ue_stream(std::uint64_t kind, std::size_t cell, bool xr, int index) {
    return (kind << 40) | (static_cast<std::uint64_t>(cell) << 20) |
           (static_cast<std::uint64_t>(xr ? 0 : 1) << 19) | static_cast<std::uint64_t>(index);
  }

  void place_ues() {
    cells_ = cell_layout(config_);
    std::uniform_real_distribution<double> ux(0.0, config_.world_width_m);
    std::uniform_real_distribution<double> uy(0.0, config_.world_height_m);
    std::normal_distribution<double> shadow(0.0, 1.0);

    cell_ues_.resize(cells_.size());
    std::uint32_t next_id = 0;
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const int total = config_.xr_ues_per_cell + config_.embb_ues_per_cell;
      for (int i = 0; i < total; ++i) {
        const bool xr = i < config_.xr_ues_per_cell;
        const int role_index = xr ? i : i - config_.xr_ues_per_cell;
        Rng rng = make_stream(base_seed_, ue_stream(1, c, xr, role_index));
        Position p;
        do {
          p = {ux(rng), uy(rng)};
        } while (nearest_cell(p, cells_) != c);
        UeContext ue;
        ue.ue_id = next_id++;
        ue.cell = static_cast<std::uint32_t>(c);
        ue.position = p;
        ue.traffic_type = xr ? TrafficType::kXr : TrafficType::kEmbb;
        std::vector<double> shadowing(cells_.size());
        for (auto& s : shadowing) s = config_.link.shadowing_std_db * shadow(rng);
        const Position gnb = cells_[c];
        ue.channel.distance_m = link_distance_m(p, gnb, config_.link);
        ue.channel.pathloss_db = pathloss_db(ue.channel.distance_m, config_.link);
        ue.channel.shadowing_db = shadowing[c];
        ue.channel.avg_sinr_db = compute_avg_sinr(p, c, cells_, shadowing, config_.link);
        ue.channel.last_cqi_sinr_db = ue.channel.avg_sinr_db;
        ue.tp_tracker.average_tp_bps = config_.scheduler.tracker_floor_bps;
        if (ue.is_xr()) {
          ue.qos.w_k = config_.scheduler.wpf_weight_xr;
          ue.qos.delta = config_.scheduler.mlwdf_delta_xr;
          Rng traffic_rng = make_stream(base_seed_, ue_stream(3, c, true, role_index));
          sources_[ue.ue_id].frames =
              generate_frame_arrivals(config_.traffic, config_.duration_ms, traffic_rng);
        } else {
          ue.qos.w_k = config_.scheduler.wpf_weight_embb;
          ue.qos.delta = config_.scheduler.mlwdf_delta_embb;
        }
        cell_ues_[c].push_back(std::move(ue));
      }
    }
    for (const auto& ues : cell_ues_) {
      for (const auto& ue : ues) {
        record_.ues.push_back({ue.ue_id, ue.cell, ue.traffic_type, ue.channel.avg_sinr_db, 0});
      }
    }
  }

  void step(std::int64_t t) {
    const double now = static_cast<double>(t) * config_.slot_ms();
    const SlotType type = config_.slot_type(t);
    for (auto& ues : cell_ues_) {
      for (auto& ue : ues) {
        admit_arrivals(ue, now);
        refresh_cqi(ue, t);
        process_feedback(ue, t);
      }
    }
    for (std::size_t c = 0; c < cell_ues_.size(); ++c) {
      if (type == SlotType::kDownlink) {
        schedule_cell(c, t, now);
      } else if (observer_) {
        std::vector<UeSnapshot> snaps = snapshot(cell_ues_[c], now);
        observer_({t, now, type, static_cast<std::uint32_t>(c), config_.prbs, snaps, {}});
      }
    }
  }

  void admit_arrivals(UeContext& ue, double now) {
    if (!ue.is_xr()) return;
    auto& src = sources_[ue.ue_id];
    while (src.next < src.frames.size() && src.frames[src.next].arrival_ms <= now) {
      ue.pdu_set_queue.push_back(
          make_pdu_set(ue.ue_id, src.next_set_index++, src.frames[src.next], config_.traffic));
      ++src.next;
    }
  }

  void refresh_cqi(UeContext& ue, std::int64_t t) {
    auto& ch = ue.channel;
    if (ch.pending_cqi_db && t >= ch.pending_cqi_apply_slot) {
      ch.last_cqi_sinr_db = *ch.pending_cqi_db;
      ch.pending_cqi_db.reset();
    }
    if (t % config_.link.cqi_period_slots == 0) {
      ch.pending_cqi_db = ch.avg_sinr_db;
      ch.pending_cqi_apply_slot = t + config_.link.cqi_delay_slots;
      if (config_.link.cqi_delay_slots == 0) {
        ch.last_cqi_sinr_db = *ch.pending_cqi_db;
        ch.pending_cqi_db.reset();
      }
    }
  }

  void process_feedback(UeContext& ue, std::int64_t t) {
    auto& procs = ue.harq;
    for (auto it = procs.begin(); it != procs.end();) {
      if (it->feedback_received || it->feedback_due_slot > t) {
        ++it;
        continue;
      }
      it->feedback_received = true;
      if (it->num_transmissions == 1) {
        CbgFlags first{};
        std::size_t n = 0;
        for (int c = 0; c < kCbgsPerTb; ++c) {
          const auto [lo, hi] = it->tb.cbg_range(c);
          if (lo != hi) first[n++] = it->first_tx_decoded[c];
        }
        ue.channel.olla_offset_db = olla_update(
            ue.channel.olla_offset_db, std::span<const bool>(first.data(), n), config_.link);
      }
      if (it->tb.fully_decoded()) {
        it = procs.erase(it);
      } else if (it->num_transmissions >= config_.link.max_harq_tx) {
        abandon(ue, *it);
        it = procs.erase(it);
      } else {
        ++it;
      }
    }
  }

  // Undecoded payload goes back to the buffer as new-transmission data.
  void abandon(UeContext& ue, const HarqProcess& proc) {
    if (!ue.is_xr()) return;
    for (const auto& seg : proc.tb.segments) {
      if (seg.credited) continue;
      PduSet* set = find_set(ue, seg.set_index);
      if (set == nullptr) continue;
      set->pdus[seg.pdu_index].remaining_bits += seg.bits;
      set->served_bits -= seg.bits;
    }
  }

  static PduSet* find_set(UeContext& ue, std::uint64_t set_index) {
    for (auto& s : ue.pdu_set_queue) {
      if (s.set_index == set_index) return &s;
    }
    return nullptr;
  }

  std::vector<UeSnapshot> snapshot(const std::vector<UeContext>& ues, double now) const {
    std::vector<UeSnapshot> out;
    out.reserve(ues.size());
    for (const auto& ue : ues) {
      UeSnapshot s;
      s.ue_id = ue.ue_id;
      s.is_xr = ue.is_xr();
      s.buffered_bits = ue.buffered_bits();
      if (const PduSet* hol = ue.is_xr() ? ue.hol_set() : nullptr) {
        s.hol_in_time = now < hol->deadline_ms;
      }
      for (const auto& p : ue.harq) {
        if (p.feedback_received && p.tb.failed_cbgs() > 0) {
          const int need = p.retx_prbs();
          s.min_retx_prbs = s.has_pending_retx ? std::min(s.min_retx_prbs, need) : need;
          s.has_pending_retx = true;
        }
      }
      out.push_back(s);
    }
    return out;
  }

  void schedule_cell(std::size_t c, std::int64_t t, double now) {
    auto& ues = cell_ues_[c];
    const double slot_s = config_.slot_ms() / 1000.0;
    for (auto& ue : ues) {
      const McsEntry& mcs =
          select_mcs(ue.channel.last_cqi_sinr_db, ue.channel.olla_offset_db, mcs_table_);
      ue.mcs_index = mcs.index;
      ue.bits_per_prb =
          bits_per_prb(mcs, config_.link.data_symbols()) * config_.link.spatial_layers;
      ue.tp_tracker.instantaneous_rate_bps =
          static_cast<double>(ue.bits_per_prb) * config_.prbs / slot_s;
    }
    const bool in_kpi = now >= config_.warmup_ms;
    if (in_kpi) {
      std::uint16_t queued = 0;
      for (const auto& ue : ues) queued += ue.has_pending_data() ? 1 : 0;
      record_.queued_ues[c].push_back(queued);
    }
    std::vector<UeSnapshot> snaps;
    if (observer_) snaps = snapshot(ues, now);

    std::vector<Grant> grants =
        allocate_tti(ues, config_.prbs, t, now, true, config_.scheduler);

    std::vector<std::int64_t> sent(ues.size(), 0);
    const double done_ms = now + config_.slot_ms();
    for (auto& g : grants) {
      const std::size_t u = index_of(ues, g.ue_id);
      UeContext& ue = ues[u];
      if (g.is_retransmission) {
        auto it = std::find_if(ue.harq.begin(), ue.harq.end(), [&](const HarqProcess& p) {
          return p.process_id == g.harq_process_id;
        });
        HarqProcess& proc = *it;
        for (int k = 0; k < kCbgsPerTb; ++k) {
          if (!proc.tb.cbg_decoded[k]) {
            const auto [lo, hi] = proc.tb.cbg_range(k);
            sent[u] += hi - lo;
          }
        }
        ++proc.num_transmissions;
        proc.tb.cbg_decoded =
            draw_cbg_outcomes(proc.tb.cbg_decoded, ue.channel.avg_sinr_db,
                              mcs_table_[static_cast<std::size_t>(proc.mcs_index)],
                              proc.num_transmissions, config_.link, link_rng_);
        proc.feedback_received = false;
        proc.feedback_due_slot = t + config_.link.harq_rtt_slots;
        credit(ue, c, proc.tb, done_ms, in_kpi);
      } else {
        if (g.tb.size_bits == 0) continue;
        HarqProcess proc;
        proc.process_id = next_process_id_++;
        proc.tb = std::move(g.tb);
        proc.num_transmissions = 1;
        proc.prb_count = g.num_prbs;
        proc.mcs_index = ue.mcs_index;
        proc.bits_per_prb = ue.bits_per_prb;
        proc.feedback_due_slot = t + config_.link.harq_rtt_slots;
        proc.tb.cbg_decoded =
            draw_cbg_outcomes(proc.tb.cbg_decoded, ue.channel.avg_sinr_db,
                              mcs_table_[static_cast<std::size_t>(ue.mcs_index)], 1,
                              config_.link, link_rng_);
        proc.first_tx_decoded = proc.tb.cbg_decoded;
        sent[u] += proc.tb.size_bits;
        credit(ue, c, proc.tb, done_ms, in_kpi);
        ue.harq.push_back(std::move(proc));
      }
    }
    if (observer_) {
      observer_({t, now, SlotType::kDownlink, static_cast<std::uint32_t>(c), config_.prbs, snaps,
                 grants});
    }
    for (std::size_t u = 0; u < ues.size(); ++u) {
      update_throughput_tracker(ues[u].tp_tracker, sent[u], slot_s,
                                config_.scheduler.tracker_tau_tti);
    }
  }

  static std::size_t index_of(const std::vector<UeContext>& ues, std::uint32_t ue_id) {
    for (std::size_t u = 0; u < ues.size(); ++u) {
      if (ues[u].ue_id == ue_id) return u;
    }
    throw ContractError("grant for unknown UE");
  }

  void credit(UeContext& ue, std::size_t cell, TransportBlock& tb, double done_ms, bool in_kpi) {
    for (auto& seg : tb.segments) {
      if (seg.credited || !tb.segment_decoded(seg)) continue;
      seg.credited = true;
      credited_bits_[ue.ue_id] += seg.bits;
      if (!ue.is_xr()) {
        if (in_kpi) record_.embb_decoded_bits[cell] += seg.bits;
        continue;
      }
      PduSet* set = find_set(ue, seg.set_index);
      if (set == nullptr) throw ContractError("decoded segment of an unknown PDU-set");
      set->decoded_bits += seg.bits;
      if (set->decoded_bits == set->total_size_bits) set->delivered_at_ms = done_ms;
    }
    if (!ue.is_xr()) return;
    auto& q = ue.pdu_set_queue;
    for (auto it = q.begin(); it != q.end();) {
      if (it->delivered()) {
        record_outcome(ue, *it);
        it = q.erase(it);
      } else {
        ++it;
      }
    }
  }

  void record_outcome(const UeContext& ue, const PduSet& set) {
    PduSetOutcome o;
    o.ue_id = ue.ue_id;
    o.cell = ue.cell;
    o.set_index = set.set_index;
    o.size_bits = set.total_size_bits;
    o.first_arrival_ms = set.first_arrival_ms;
    o.delivered_at_ms = set.delivered_at_ms;
    o.decoded_bits = set.decoded_bits;
    o.in_kpi_window = set.first_arrival_ms >= record_.warmup_ms &&
                      set.first_arrival_ms <= record_.kpi_window_end_ms;
    record_.pdu_sets.push_back(o);
  }

  void finish() {
    for (auto& ues : cell_ues_) {
      for (auto& ue : ues) {
        for (const auto& set : ue.pdu_set_queue) record_outcome(ue, set);
        // Frames that never reached the gNB before the end are not recorded.
      }
    }
    std::sort(record_.pdu_sets.begin(), record_.pdu_sets.end(),
              [](const PduSetOutcome& a, const PduSetOutcome& b) {
                if (a.ue_id != b.ue_id) return a.ue_id < b.ue_id;
                return a.set_index < b.set_index;
              });
    for (auto& s : record_.ues) s.credited_bits = credited_bits_[s.ue_id];
  }

  const SimConfig& config_;
  const SlotObserver& observer_;
  std::uint64_t base_seed_;
  Rng link_rng_;
  McsTable mcs_table_;
  std::vector<Position> cells_;
  std::vector<std::vector<UeContext>> cell_ues_;
  std::unordered_map<std::uint32_t, XrSource> sources_;
  std::unordered_map<std::uint32_t, std::int64_t> credited_bits_;
  std::uint64_t next_process_id_ = 0;
  KpiRecord record_;
};

}  // namespace

KpiRecord run_drop(const SimConfig& config, int drop_index, const SlotObserver& observer) {
  config.validate();
  return DropRunner(config, drop_index, observer).run();
}

}  // namespace xrsched
