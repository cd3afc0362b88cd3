#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "xrsched/sim_engine.h"

namespace xrsched {

inline constexpr double kSatisfiedFraction = 0.99;
inline constexpr double kCapacitySatisfactionTarget = 0.90;

/// At least 99% of the UE's PDU-sets delivered within the budget.
/// Integer comparison avoids rounding at the threshold.
bool is_satisfied(std::int64_t in_time, std::int64_t total);

struct UeDeliveryStats {
  std::uint32_t ue_id = 0;
  int drop_index = 0;
  std::int64_t total = 0;
  std::int64_t in_time = 0;
};

/// Per XR UE counts over sets inside the KPI window.
std::vector<UeDeliveryStats> delivery_stats(std::span<const KpiRecord> records, double psdb_ms);

/// Fraction of XR UEs (pooled over all records) that are satisfied.
double satisfaction_ratio(std::span<const KpiRecord> records, double psdb_ms);
double satisfaction_ratio(std::span<const UeDeliveryStats> ues);

enum class Censoring { kNone, kRight, kLeft };

struct CapacityResult {
  double value = 0.0;
  Censoring censoring = Censoring::kNone;
};

/// Largest load N (interpolated) whose satisfaction ratio is >= 0.9.
/// Points must be sorted by N. When no point qualifies the result is
/// left-censored and its value is 0.
CapacityResult xr_capacity(std::span<const std::pair<double, double>> load_points);

class DelayCcdf {
 public:
  DelayCcdf() = default;
  DelayCcdf(std::vector<double> delivered_delays_ms, std::size_t undelivered);

  // Fraction of sets whose delay exceeds d; undelivered sets exceed every d.
  double ccdf(double delay_ms) const;
  // Smallest observed delay d with ccdf(d) <= 1 - q; +inf if the undelivered
  // mass alone exceeds 1 - q.
  double percentile(double q) const;
  double residual_mass() const;
  std::size_t total() const { return delays_.size() + undelivered_; }
  // (delay, ccdf) at every distinct delivered delay.
  std::vector<std::pair<double, double>> points() const;

 private:
  std::vector<double> delays_;  // sorted
  std::size_t undelivered_ = 0;
};

/// Pooled PDU-set delay distribution over all XR UEs, KPI-window sets only.
DelayCcdf delay_ccdf(std::span<const KpiRecord> records);

/// Mean number of UEs with pending data per cell and downlink slot.
double avg_queued_ues(std::span<const KpiRecord> records);

/// Decoded full-buffer bits per cell over the KPI window, averaged over
/// cells and drops, in Mbps.
double embb_cell_tp_mbps(std::span<const KpiRecord> records);
double embb_cell_tp_mbps(std::span<const std::int64_t> bits_per_cell, double duration_s);

}  // namespace xrsched
