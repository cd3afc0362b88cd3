#include "xrsched/exact_solver.h"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "json.hpp"
#include "xrsched/scheduler.h"
#include "xrsched/ue_context.h"

namespace xrsched {

namespace {

constexpr double kObjectiveTol = 1e-9;

int required_sets(std::size_t n, double fraction) {
  return static_cast<int>(std::ceil(static_cast<double>(n) * fraction - 1e-9));
}

// Preemptive earliest-deadline-first over per-slot capacities. Fills
// served[i][s] for the sets in `mask` and reports whether all of them
// complete inside their windows.
bool edf_feasible(const std::vector<MiniPduSet>& sets, unsigned mask,
                  const std::vector<std::int64_t>& capacity,
                  std::vector<std::vector<std::int64_t>>* served) {
  const std::size_t n = sets.size();
  std::vector<std::int64_t> left(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (1u << i)) left[i] = sets[i].size_bits;
  }
  if (served) served->assign(n, std::vector<std::int64_t>(capacity.size(), 0));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sets[a].deadline_slot < sets[b].deadline_slot;
  });
  for (std::size_t s = 0; s < capacity.size(); ++s) {
    std::int64_t avail = capacity[s];
    const int slot = static_cast<int>(s);
    for (std::size_t i : order) {
      if (avail == 0) break;
      if (left[i] == 0 || sets[i].arrival_slot > slot || sets[i].deadline_slot < slot) continue;
      const std::int64_t take = std::min(avail, left[i]);
      left[i] -= take;
      avail -= take;
      if (served) (*served)[i][s] += take;
    }
  }
  return std::all_of(left.begin(), left.end(), [](std::int64_t b) { return b == 0; });
}

// Largest completable subset; among equals, the first in descending mask
// order.
unsigned best_subset(const std::vector<MiniPduSet>& sets, const std::vector<std::int64_t>& capacity) {
  const unsigned full = sets.empty() ? 0u : (1u << sets.size()) - 1u;
  if (edf_feasible(sets, full, capacity, nullptr)) return full;
  unsigned best = 0;
  int best_count = 0;
  for (unsigned mask = full; mask > 0; --mask) {
    const int c = std::popcount(mask);
    if (c <= best_count) continue;
    if (edf_feasible(sets, mask, capacity, nullptr)) {
      best = mask;
      best_count = c;
    }
  }
  return best;
}

double embb_log_rate(std::int64_t bits, double horizon_s) {
  return std::log(std::max(static_cast<double>(bits) / horizon_s, kEmbbRateFloorBps));
}

struct EmbbSplit {
  double term = 0.0;
  std::vector<int> prbs;
};

// Best division of `total` PRBs among the eMBB UEs. Earlier UEs get more
// when splits tie.
EmbbSplit best_embb_split(const MiniInstance& inst, int total) {
  const std::size_t e = inst.embb_ues.size();
  EmbbSplit best;
  best.term = -std::numeric_limits<double>::infinity();
  if (e == 0) return {0.0, {}};
  std::vector<int> cur(e, 0);
  auto rec = [&](auto&& self, std::size_t i, int left) -> void {
    if (i + 1 == e) {
      cur[i] = left;
      double term = 0.0;
      for (std::size_t j = 0; j < e; ++j) {
        term += embb_log_rate(cur[j] * inst.embb_ues[j].bits_per_prb, inst.horizon_s());
      }
      if (term > best.term + kObjectiveTol) best = {term, cur};
      return;
    }
    for (int n = left; n >= 0; --n) {
      cur[i] = n;
      self(self, i + 1, left - n);
    }
  };
  rec(rec, 0, total);
  return best;
}

void check_assignment_shape(const MiniInstance& inst, const Assignment& a) {
  if (a.size() != static_cast<std::size_t>(inst.num_slots * inst.num_prbs)) {
    throw ContractError(fmt::format("assignment has {} entries, expected {}", a.size(),
                                    inst.num_slots * inst.num_prbs));
  }
  for (int u : a) {
    if (u != kIdle && (u < 0 || u >= inst.num_ues())) {
      throw ContractError(fmt::format("assignment names unknown UE {}", u));
    }
  }
}

}  // namespace

double MiniInstance::enumeration_count() const {
  return std::pow(static_cast<double>(num_ues() + 1), static_cast<double>(num_slots * num_prbs));
}

void MiniInstance::validate() const {
  if (num_slots < 1 || num_prbs < 1) throw InstanceError("num_slots and num_prbs must be >= 1");
  if (!(slot_ms > 0.0)) throw InstanceError("slot_ms must be > 0");
  if (!(satisfaction_fraction > 0.0 && satisfaction_fraction <= 1.0)) {
    throw InstanceError("satisfaction_fraction must be in (0,1]");
  }
  if (num_slots > kMaxMiniSlots || num_prbs > kMaxMiniPrbs || num_ues() > kMaxMiniUes) {
    throw InstanceError(fmt::format(
        "instance too large for exhaustive search: {} slots, {} PRBs, {} UEs "
        "(limits {}, {}, {}); (U+1)^(S*P) = {:.6g} assignments",
        num_slots, num_prbs, num_ues(), kMaxMiniSlots, kMaxMiniPrbs, kMaxMiniUes,
        enumeration_count()));
  }
  for (std::size_t k = 0; k < xr_ues.size(); ++k) {
    const auto& ue = xr_ues[k];
    if (ue.bits_per_prb <= 0) throw InstanceError(fmt::format("xr_ues[{}]: bits_per_prb must be > 0", k));
    if (!(ue.a_k >= 0.0)) throw InstanceError(fmt::format("xr_ues[{}]: a_k must be >= 0", k));
    if (ue.pdu_sets.size() > static_cast<std::size_t>(kMaxMiniSetsPerUe)) {
      throw InstanceError(fmt::format("xr_ues[{}]: at most {} PDU-sets", k, kMaxMiniSetsPerUe));
    }
    for (std::size_t i = 0; i < ue.pdu_sets.size(); ++i) {
      const auto& s = ue.pdu_sets[i];
      if (s.size_bits <= 0) {
        throw InstanceError(fmt::format("xr_ues[{}].pdu_sets[{}]: size_bits must be > 0", k, i));
      }
      if (s.arrival_slot < 0 || s.arrival_slot >= num_slots || s.deadline_slot < s.arrival_slot) {
        throw InstanceError(fmt::format(
            "xr_ues[{}].pdu_sets[{}]: need 0 <= arrival_slot < num_slots and deadline_slot >= "
            "arrival_slot",
            k, i));
      }
    }
  }
  for (std::size_t e = 0; e < embb_ues.size(); ++e) {
    if (embb_ues[e].bits_per_prb <= 0) {
      throw InstanceError(fmt::format("embb_ues[{}]: bits_per_prb must be > 0", e));
    }
  }
}

Evaluation evaluate_objective(const MiniInstance& inst, const Assignment& a) {
  check_assignment_shape(inst, a);
  const std::size_t x = inst.xr_ues.size();
  const std::size_t slots = static_cast<std::size_t>(inst.num_slots);
  std::vector<std::int64_t> prbs_of(static_cast<std::size_t>(inst.num_ues()) * slots, 0);
  for (std::size_t s = 0; s < slots; ++s) {
    for (int p = 0; p < inst.num_prbs; ++p) {
      const int u = a[s * static_cast<std::size_t>(inst.num_prbs) + static_cast<std::size_t>(p)];
      if (u != kIdle) ++prbs_of[static_cast<std::size_t>(u) * slots + s];
    }
  }
  Evaluation ev;
  ev.gamma.assign(x, false);
  ev.y.resize(x);
  ev.served.resize(x);
  for (std::size_t k = 0; k < x; ++k) {
    const auto& ue = inst.xr_ues[k];
    std::vector<std::int64_t> cap(slots);
    for (std::size_t s = 0; s < slots; ++s) cap[s] = prbs_of[k * slots + s] * ue.bits_per_prb;
    const unsigned mask = best_subset(ue.pdu_sets, cap);
    edf_feasible(ue.pdu_sets, mask, cap, &ev.served[k]);
    ev.y[k].resize(ue.pdu_sets.size());
    for (std::size_t i = 0; i < ue.pdu_sets.size(); ++i) ev.y[k][i] = (mask >> i) & 1u;
    ev.gamma[k] = std::popcount(mask) >= required_sets(ue.pdu_sets.size(), inst.satisfaction_fraction);
    if (ev.gamma[k]) ev.xr_term += ue.a_k;
  }
  for (std::size_t e = 0; e < inst.embb_ues.size(); ++e) {
    std::int64_t bits = 0;
    for (std::size_t s = 0; s < slots; ++s) bits += prbs_of[(x + e) * slots + s];
    bits *= inst.embb_ues[e].bits_per_prb;
    ev.embb_term += embb_log_rate(bits, inst.horizon_s());
  }
  ev.objective = ev.xr_term + ev.embb_term;
  return ev;
}

namespace {

class BranchAndBound {
 public:
  BranchAndBound(const MiniInstance& inst, double lower_bound)
      : inst_(inst),
        x_(inst.xr_ues.size()),
        slots_(static_cast<std::size_t>(inst.num_slots)),
        counts_(slots_, std::vector<int>(x_, 0)),
        floor_(lower_bound) {
    const int total = inst.num_slots * inst.num_prbs;
    for (int t = 0; t <= total; ++t) embb_.push_back(best_embb_split(inst, t));
    max_prbs_.assign(slots_, std::vector<int>(x_, 0));
    for (std::size_t s = 0; s < slots_; ++s) {
      for (std::size_t k = 0; k < x_; ++k) {
        std::int64_t demand = 0;
        for (const auto& set : inst.xr_ues[k].pdu_sets) {
          const int slot = static_cast<int>(s);
          if (set.arrival_slot <= slot && slot <= set.deadline_slot) demand += set.size_bits;
        }
        const auto l = inst.xr_ues[k].bits_per_prb;
        max_prbs_[s][k] =
            static_cast<int>(std::min<std::int64_t>(inst.num_prbs, (demand + l - 1) / l));
      }
    }
  }

  void run() { slot(0, 0); }

  bool found() const { return found_; }
  const std::vector<std::vector<int>>& best_counts() const { return best_counts_; }
  std::uint64_t nodes() const { return nodes_; }

 private:
  int allocated(int xr_used) const {
    return inst_.embb_ues.empty() ? xr_used : inst_.num_slots * inst_.num_prbs;
  }

  double xr_value(std::size_t upto_slot, bool optimistic) const {
    double v = 0.0;
    for (std::size_t k = 0; k < x_; ++k) {
      const auto& ue = inst_.xr_ues[k];
      std::vector<std::int64_t> cap(slots_, 0);
      for (std::size_t s = 0; s < slots_; ++s) {
        const int prbs = s < upto_slot ? counts_[s][k] : (optimistic ? inst_.num_prbs : 0);
        cap[s] = prbs * ue.bits_per_prb;
      }
      const unsigned mask = best_subset(ue.pdu_sets, cap);
      if (std::popcount(mask) >= required_sets(ue.pdu_sets.size(), inst_.satisfaction_fraction)) {
        v += ue.a_k;
      }
    }
    return v;
  }

  // Returns true when the subtree can be skipped.
  bool prune(std::size_t s, int xr_used) const {
    const int free_prbs = static_cast<int>(s) * inst_.num_prbs - xr_used +
                          static_cast<int>(slots_ - s) * inst_.num_prbs;
    const double ub = xr_value(s, true) + embb_[static_cast<std::size_t>(free_prbs)].term;
    if (ub < floor_ - kObjectiveTol) return true;
    if (!found_) return false;
    if (ub < best_obj_ - kObjectiveTol) return true;
    // Later leaves lose lexicographic ties, so only strictly fewer PRBs help.
    return ub <= best_obj_ + kObjectiveTol && allocated(xr_used) >= best_allocated_;
  }

  void slot(std::size_t s, int xr_used) {
    ++nodes_;
    if (prune(s, xr_used)) return;
    if (s == slots_) {
      leaf(xr_used);
      return;
    }
    compose(s, 0, inst_.num_prbs, xr_used);
  }

  void compose(std::size_t s, std::size_t k, int left, int xr_used) {
    if (k == x_) {
      slot(s + 1, xr_used);
      return;
    }
    for (int n = std::min(left, max_prbs_[s][k]); n >= 0; --n) {
      counts_[s][k] = n;
      compose(s, k + 1, left - n, xr_used + n);
    }
    counts_[s][k] = 0;
  }

  void leaf(int xr_used) {
    const int free_prbs = inst_.num_slots * inst_.num_prbs - xr_used;
    const double obj = xr_value(slots_, false) + embb_[static_cast<std::size_t>(free_prbs)].term;
    const int alloc = allocated(xr_used);
    const bool better = !found_ || obj > best_obj_ + kObjectiveTol ||
                        (obj >= best_obj_ - kObjectiveTol && alloc < best_allocated_);
    if (!better) return;
    found_ = true;
    best_obj_ = obj;
    best_allocated_ = alloc;
    best_counts_ = counts_;
  }

  const MiniInstance& inst_;
  std::size_t x_;
  std::size_t slots_;
  std::vector<std::vector<int>> counts_;
  std::vector<std::vector<int>> max_prbs_;
  std::vector<EmbbSplit> embb_;
  double floor_;
  bool found_ = false;
  double best_obj_ = 0.0;
  int best_allocated_ = 0;
  std::vector<std::vector<int>> best_counts_;
  std::uint64_t nodes_ = 0;
};

}  // namespace

ExactSolution solve_exact(const MiniInstance& inst) {
  inst.validate();
  const auto heuristic = heuristic_on_instance(inst);
  BranchAndBound bb(inst, heuristic.evaluation.objective);
  bb.run();
  if (!bb.found()) throw ContractError("solve_exact: search found no assignment");

  const std::size_t x = inst.xr_ues.size();
  const auto& counts = bb.best_counts();
  int xr_used = 0;
  for (const auto& row : counts) {
    for (int c : row) xr_used += c;
  }
  const auto split = best_embb_split(inst, inst.num_slots * inst.num_prbs - xr_used);

  ExactSolution sol;
  sol.assignment.assign(static_cast<std::size_t>(inst.num_slots * inst.num_prbs), kIdle);
  std::vector<int> quota = split.prbs;
  std::size_t embb = 0;
  for (int s = 0; s < inst.num_slots; ++s) {
    int p = 0;
    auto put = [&](int ue) { sol.assignment[static_cast<std::size_t>(s * inst.num_prbs + p++)] = ue; };
    for (std::size_t k = 0; k < x; ++k) {
      for (int n = 0; n < counts[static_cast<std::size_t>(s)][k]; ++n) put(static_cast<int>(k));
    }
    while (p < inst.num_prbs && embb < quota.size()) {
      if (quota[embb] == 0) {
        ++embb;
        continue;
      }
      --quota[embb];
      put(static_cast<int>(x + embb));
    }
  }
  sol.evaluation = evaluate_objective(inst, sol.assignment);
  sol.allocated_prbs = static_cast<int>(
      std::count_if(sol.assignment.begin(), sol.assignment.end(), [](int u) { return u != kIdle; }));
  sol.nodes = bb.nodes();
  return sol;
}

HeuristicSolution heuristic_on_instance(const MiniInstance& inst) {
  const double slot_s = inst.slot_ms / 1000.0;
  const std::size_t x = inst.xr_ues.size();
  std::vector<UeContext> ues(static_cast<std::size_t>(inst.num_ues()));
  for (std::size_t u = 0; u < ues.size(); ++u) {
    auto& ue = ues[u];
    ue.ue_id = static_cast<std::uint32_t>(u);
    ue.traffic_type = u < x ? TrafficType::kXr : TrafficType::kEmbb;
    ue.bits_per_prb = u < x ? inst.xr_ues[u].bits_per_prb : inst.embb_ues[u - x].bits_per_prb;
    ue.tp_tracker.instantaneous_rate_bps =
        static_cast<double>(ue.bits_per_prb) * inst.num_prbs / slot_s;
  }
  // Sets enter the queue at their arrival slot, in arrival order.
  std::vector<std::vector<std::pair<int, std::size_t>>> arrivals(
      static_cast<std::size_t>(inst.num_slots));
  for (std::size_t k = 0; k < x; ++k) {
    for (std::size_t i = 0; i < inst.xr_ues[k].pdu_sets.size(); ++i) {
      arrivals[static_cast<std::size_t>(inst.xr_ues[k].pdu_sets[i].arrival_slot)].push_back(
          {static_cast<int>(k), i});
    }
  }
  SchedulerConfig config;
  config.kind = SchedulerKind::kProposed;

  HeuristicSolution out;
  out.assignment.assign(static_cast<std::size_t>(inst.num_slots * inst.num_prbs), kIdle);
  for (int s = 0; s < inst.num_slots; ++s) {
    const double now = s * inst.slot_ms;
    for (const auto& [k, i] : arrivals[static_cast<std::size_t>(s)]) {
      const auto& def = inst.xr_ues[static_cast<std::size_t>(k)].pdu_sets[i];
      PduSet set;
      set.ue_id = static_cast<std::uint32_t>(k);
      set.set_index = i;
      set.first_arrival_ms = now;
      set.deadline_ms = (def.deadline_slot + 1) * inst.slot_ms;
      set.total_size_bits = def.size_bits;
      set.pdus.push_back({0, def.size_bits, now, def.size_bits});
      ues[static_cast<std::size_t>(k)].pdu_set_queue.push_back(std::move(set));
    }
    const auto grants = allocate_tti(ues, inst.num_prbs, s, now, true, config);
    std::vector<std::int64_t> sent(ues.size(), 0);
    for (const auto& g : grants) {
      for (int p = g.first_prb; p < g.first_prb + g.num_prbs; ++p) {
        out.assignment[static_cast<std::size_t>(s * inst.num_prbs + p)] = static_cast<int>(g.ue_id);
      }
      sent[g.ue_id] += g.tb.size_bits;
    }
    for (std::size_t u = 0; u < ues.size(); ++u) {
      update_throughput_tracker(ues[u].tp_tracker, sent[u], slot_s, config.tracker_tau_tti);
    }
  }
  out.evaluation = evaluate_objective(inst, out.assignment);
  return out;
}

std::vector<ConstraintCheck> check_constraints(const MiniInstance& inst, const Assignment& a,
                                               const Evaluation& ev) {
  std::vector<ConstraintCheck> out;
  const std::size_t x = inst.xr_ues.size();
  const std::size_t slots = static_cast<std::size_t>(inst.num_slots);

  ConstraintCheck shape{"one UE per (slot, PRB)", true, ""};
  if (a.size() != slots * static_cast<std::size_t>(inst.num_prbs)) {
    shape.pass = false;
    shape.detail = "assignment size mismatch";
  }
  for (int u : a) {
    if (u != kIdle && (u < 0 || u >= inst.num_ues())) {
      shape.pass = false;
      shape.detail = fmt::format("unknown UE {}", u);
    }
  }
  out.push_back(shape);
  if (!shape.pass) return out;

  std::vector<std::vector<std::int64_t>> bits(x, std::vector<std::int64_t>(slots, 0));
  for (std::size_t s = 0; s < slots; ++s) {
    for (int p = 0; p < inst.num_prbs; ++p) {
      const int u = a[s * static_cast<std::size_t>(inst.num_prbs) + static_cast<std::size_t>(p)];
      if (u != kIdle && static_cast<std::size_t>(u) < x) {
        bits[static_cast<std::size_t>(u)][s] += inst.xr_ues[static_cast<std::size_t>(u)].bits_per_prb;
      }
    }
  }

  ConstraintCheck domains{"decision variables well formed", true, ""};
  if (ev.gamma.size() != x || ev.y.size() != x || ev.served.size() != x) {
    domains.pass = false;
    domains.detail = "per-UE vectors have the wrong length";
  } else {
    for (std::size_t k = 0; k < x; ++k) {
      const auto n = inst.xr_ues[k].pdu_sets.size();
      if (ev.y[k].size() != n || ev.served[k].size() != n) domains.pass = false;
      for (const auto& row : ev.served[k]) {
        if (row.size() != slots) domains.pass = false;
        for (auto b : row) {
          if (b < 0) domains.pass = false;
        }
      }
    }
    if (!domains.pass) domains.detail = "per-set vectors have the wrong shape";
  }
  out.push_back(domains);
  if (!domains.pass) return out;

  ConstraintCheck cover{"served sets covered by their allocated bits", true, ""};
  ConstraintCheck window{"no bits outside [arrival, deadline]", true, ""};
  ConstraintCheck capacity{"per-slot bits within allocated PRBs", true, ""};
  ConstraintCheck hall{"served sets jointly fit every time window", true, ""};
  ConstraintCheck satisfied{"gamma implies enough served sets", true, ""};
  double xr_term = 0.0;
  for (std::size_t k = 0; k < x; ++k) {
    const auto& sets = inst.xr_ues[k].pdu_sets;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      std::int64_t total = 0;
      for (std::size_t s = 0; s < slots; ++s) {
        const auto b = ev.served[k][i][s];
        total += b;
        const int slot = static_cast<int>(s);
        if (b > 0 && (slot < sets[i].arrival_slot || slot > sets[i].deadline_slot)) {
          window.pass = false;
          window.detail += fmt::format("ue {} set {} slot {}; ", k, i, s);
        }
      }
      if (ev.y[k][i] && total < sets[i].size_bits) {
        cover.pass = false;
        cover.detail += fmt::format("ue {} set {}: {} < {}; ", k, i, total, sets[i].size_bits);
      }
    }
    for (std::size_t s = 0; s < slots; ++s) {
      std::int64_t used = 0;
      for (std::size_t i = 0; i < sets.size(); ++i) used += ev.served[k][i][s];
      if (used > bits[k][s]) {
        capacity.pass = false;
        capacity.detail += fmt::format("ue {} slot {}: {} > {}; ", k, s, used, bits[k][s]);
      }
    }
    // Demand of served sets whose window lies inside [lo, hi] must not
    // exceed the bits allocated in [lo, hi].
    for (int lo = 0; lo < inst.num_slots; ++lo) {
      for (int hi = lo; hi < inst.num_slots; ++hi) {
        std::int64_t demand = 0, supply = 0;
        for (std::size_t i = 0; i < sets.size(); ++i) {
          if (!ev.y[k][i]) continue;
          const int d = std::min(sets[i].deadline_slot, inst.num_slots - 1);
          if (sets[i].arrival_slot >= lo && d <= hi) demand += sets[i].size_bits;
        }
        for (int s = lo; s <= hi; ++s) supply += bits[k][static_cast<std::size_t>(s)];
        if (demand > supply) {
          hall.pass = false;
          hall.detail += fmt::format("ue {} [{}, {}]: {} > {}; ", k, lo, hi, demand, supply);
        }
      }
    }
    const auto served_count = std::count(ev.y[k].begin(), ev.y[k].end(), true);
    const int need = required_sets(sets.size(), inst.satisfaction_fraction);
    if (ev.gamma[k] && served_count < need) {
      satisfied.pass = false;
      satisfied.detail += fmt::format("ue {}: {} < {}; ", k, served_count, need);
    }
    if (ev.gamma[k]) xr_term += inst.xr_ues[k].a_k;
  }
  out.push_back(cover);
  out.push_back(window);
  out.push_back(capacity);
  out.push_back(hall);
  out.push_back(satisfied);

  double embb_term = 0.0;
  for (std::size_t e = 0; e < inst.embb_ues.size(); ++e) {
    const auto count = std::count(a.begin(), a.end(), static_cast<int>(x + e));
    const double rate = static_cast<double>(count * inst.embb_ues[e].bits_per_prb) / inst.horizon_s();
    embb_term += std::log(std::max(rate, kEmbbRateFloorBps));
  }
  const double obj = xr_term + embb_term;
  out.push_back({"objective matches assignment",
                 std::abs(obj - ev.objective) <= 1e-9 * std::max(1.0, std::abs(obj)),
                 fmt::format("recomputed {:.12g}, reported {:.12g}", obj, ev.objective)});
  return out;
}

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      throw InstanceError(fmt::format("{}: unknown field '{}'", where, k));
    }
  }
}

template <typename T>
T field(const json& j, const char* name, const std::string& where) {
  if (!j.contains(name)) throw InstanceError(fmt::format("{}: missing field '{}'", where, name));
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw InstanceError(fmt::format("{}: field '{}' has the wrong type", where, name));
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback, const std::string& where) {
  return j.contains(name) ? field<T>(j, name, where) : fallback;
}

}  // namespace

MiniInstance parse_instance_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InstanceError(fmt::format("instance is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw InstanceError("instance must be a JSON object");
  reject_unknown(j, {"num_slots", "num_prbs", "xr_ues", "embb_ues", "satisfaction_fraction", "slot_ms"},
                 "instance");
  MiniInstance inst;
  inst.num_slots = field<int>(j, "num_slots", "instance");
  inst.num_prbs = field<int>(j, "num_prbs", "instance");
  inst.satisfaction_fraction = field_or<double>(j, "satisfaction_fraction", 1.0, "instance");
  inst.slot_ms = field_or<double>(j, "slot_ms", 0.5, "instance");
  const json xr = j.value("xr_ues", json::array());
  const json embb = j.value("embb_ues", json::array());
  if (!xr.is_array() || !embb.is_array()) throw InstanceError("xr_ues and embb_ues must be arrays");
  for (std::size_t k = 0; k < xr.size(); ++k) {
    const auto where = fmt::format("xr_ues[{}]", k);
    if (!xr[k].is_object()) throw InstanceError(where + " must be an object");
    reject_unknown(xr[k], {"a_k", "bits_per_prb", "pdu_sets"}, where);
    MiniXrUe ue;
    ue.a_k = field_or<double>(xr[k], "a_k", 1000.0, where);
    ue.bits_per_prb = field<std::int64_t>(xr[k], "bits_per_prb", where);
    const json sets = xr[k].value("pdu_sets", json::array());
    if (!sets.is_array()) throw InstanceError(where + ".pdu_sets must be an array");
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const auto w = fmt::format("{}.pdu_sets[{}]", where, i);
      if (!sets[i].is_object()) throw InstanceError(w + " must be an object");
      reject_unknown(sets[i], {"size_bits", "arrival_slot", "deadline_slot"}, w);
      ue.pdu_sets.push_back({field<std::int64_t>(sets[i], "size_bits", w),
                             field<int>(sets[i], "arrival_slot", w),
                             field<int>(sets[i], "deadline_slot", w)});
    }
    inst.xr_ues.push_back(std::move(ue));
  }
  for (std::size_t e = 0; e < embb.size(); ++e) {
    const auto where = fmt::format("embb_ues[{}]", e);
    if (!embb[e].is_object()) throw InstanceError(where + " must be an object");
    reject_unknown(embb[e], {"bits_per_prb"}, where);
    inst.embb_ues.push_back({field<std::int64_t>(embb[e], "bits_per_prb", where)});
  }
  inst.validate();
  return inst;
}

std::string instance_to_json(const MiniInstance& inst) {
  nlohmann::ordered_json j;
  j["num_slots"] = inst.num_slots;
  j["num_prbs"] = inst.num_prbs;
  j["satisfaction_fraction"] = inst.satisfaction_fraction;
  j["slot_ms"] = inst.slot_ms;
  auto& xr = j["xr_ues"] = nlohmann::ordered_json::array();
  for (const auto& ue : inst.xr_ues) {
    nlohmann::ordered_json u;
    u["a_k"] = ue.a_k;
    u["bits_per_prb"] = ue.bits_per_prb;
    auto& sets = u["pdu_sets"] = nlohmann::ordered_json::array();
    for (const auto& s : ue.pdu_sets) {
      sets.push_back({{"size_bits", s.size_bits},
                      {"arrival_slot", s.arrival_slot},
                      {"deadline_slot", s.deadline_slot}});
    }
    xr.push_back(std::move(u));
  }
  auto& embb = j["embb_ues"] = nlohmann::ordered_json::array();
  for (const auto& ue : inst.embb_ues) embb.push_back({{"bits_per_prb", ue.bits_per_prb}});
  return j.dump(2) + "\n";
}

}  // namespace xrsched
