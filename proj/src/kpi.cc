#include "xrsched/kpi.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace xrsched {

bool is_satisfied(std::int64_t in_time, std::int64_t total) {
  if (total <= 0) return false;
  return in_time * 100 >= total * 99;
}

std::vector<UeDeliveryStats> delivery_stats(std::span<const KpiRecord> records,
                                            double psdb_ms) {
  std::vector<UeDeliveryStats> out;
  for (const auto& rec : records) {
    std::map<std::uint32_t, UeDeliveryStats> per_ue;
    for (const auto& ue : rec.ues) {
      if (ue.traffic_type == TrafficType::kXr) per_ue[ue.ue_id] = {ue.ue_id, rec.drop_index, 0, 0};
    }
    for (const auto& set : rec.pdu_sets) {
      if (!set.in_kpi_window) continue;
      auto& s = per_ue[set.ue_id];
      ++s.total;
      const auto delay = set.delay_ms();
      if (delay && *delay <= psdb_ms + 1e-9) ++s.in_time;
    }
    for (const auto& [id, s] : per_ue) out.push_back(s);
  }
  return out;
}

double satisfaction_ratio(std::span<const UeDeliveryStats> ues) {
  if (ues.empty()) throw ContractError("satisfaction_ratio: no XR UEs");
  const auto satisfied = std::count_if(ues.begin(), ues.end(), [](const UeDeliveryStats& s) {
    return is_satisfied(s.in_time, s.total);
  });
  return static_cast<double>(satisfied) / static_cast<double>(ues.size());
}

double satisfaction_ratio(std::span<const KpiRecord> records, double psdb_ms) {
  const auto stats = delivery_stats(records, psdb_ms);
  return satisfaction_ratio(stats);
}

CapacityResult xr_capacity(std::span<const std::pair<double, double>> load_points) {
  if (load_points.empty()) throw ContractError("xr_capacity: no load points");
  std::ptrdiff_t last_ok = -1;
  for (std::size_t i = 0; i < load_points.size(); ++i) {
    if (load_points[i].second >= kCapacitySatisfactionTarget) {
      last_ok = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (last_ok < 0) return {0.0, Censoring::kLeft};
  const auto i = static_cast<std::size_t>(last_ok);
  if (i + 1 == load_points.size()) return {load_points[i].first, Censoring::kRight};
  const auto [n0, r0] = load_points[i];
  const auto [n1, r1] = load_points[i + 1];
  const double frac = (r0 - kCapacitySatisfactionTarget) / (r0 - r1);
  return {n0 + frac * (n1 - n0), Censoring::kNone};
}

DelayCcdf::DelayCcdf(std::vector<double> delivered_delays_ms, std::size_t undelivered)
    : delays_(std::move(delivered_delays_ms)), undelivered_(undelivered) {
  std::sort(delays_.begin(), delays_.end());
}

double DelayCcdf::ccdf(double delay_ms) const {
  if (total() == 0) return 0.0;
  const auto above = delays_.end() - std::upper_bound(delays_.begin(), delays_.end(), delay_ms);
  return static_cast<double>(static_cast<std::size_t>(above) + undelivered_) /
         static_cast<double>(total());
}

double DelayCcdf::percentile(double q) const {
  const double tail = 1.0 - q;
  for (double d : delays_) {
    if (ccdf(d) <= tail + 1e-12) return d;
  }
  return std::numeric_limits<double>::infinity();
}

double DelayCcdf::residual_mass() const {
  if (total() == 0) return 0.0;
  return static_cast<double>(undelivered_) / static_cast<double>(total());
}

std::vector<std::pair<double, double>> DelayCcdf::points() const {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < delays_.size(); ++i) {
    if (i + 1 < delays_.size() && delays_[i + 1] == delays_[i]) continue;
    out.emplace_back(delays_[i], ccdf(delays_[i]));
  }
  return out;
}

DelayCcdf delay_ccdf(std::span<const KpiRecord> records) {
  std::vector<double> delays;
  std::size_t undelivered = 0;
  for (const auto& rec : records) {
    for (const auto& set : rec.pdu_sets) {
      if (!set.in_kpi_window) continue;
      if (const auto d = set.delay_ms()) {
        delays.push_back(*d);
      } else {
        ++undelivered;
      }
    }
  }
  return DelayCcdf(std::move(delays), undelivered);
}

double avg_queued_ues(std::span<const KpiRecord> records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& rec : records) {
    for (const auto& cell : rec.queued_ues) {
      for (auto q : cell) sum += q;
      n += cell.size();
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double embb_cell_tp_mbps(std::span<const std::int64_t> bits_per_cell, double duration_s) {
  if (!(duration_s > 0.0)) throw ContractError("embb_cell_tp: duration must be > 0");
  if (bits_per_cell.empty()) return 0.0;
  double sum = 0.0;
  for (auto b : bits_per_cell) sum += static_cast<double>(b);
  return sum / static_cast<double>(bits_per_cell.size()) / duration_s / 1e6;
}

double embb_cell_tp_mbps(std::span<const KpiRecord> records) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& rec : records) {
    sum += embb_cell_tp_mbps(rec.embb_decoded_bits, rec.kpi_duration_s());
  }
  return sum / static_cast<double>(records.size());
}

}  // namespace xrsched
