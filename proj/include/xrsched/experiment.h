#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "xrsched/config.h"
#include "xrsched/kpi.h"
#include "xrsched/sim_engine.h"

namespace xrsched {

struct RunTuple {
  SchedulerKind scheduler = SchedulerKind::kProposed;
  double psdb_ms = 0.0;
  int xr_per_cell = 0;
  int drop = 0;
  std::uint64_t seed = 0;
};

/// Seed of one drop. Scheduler, budget and load are left out on purpose:
/// every sweep point of drop d shares placements, shadowing and frame
/// sizes, and the drop at N+1 adds one XR UE per cell to the drop at N.
std::uint64_t derive_seed(std::uint64_t base_seed, int drop);

/// All tuples in scheduler, psdb, N, drop order.
std::vector<RunTuple> enumerate_runs(const ExperimentSpec& spec);
SimConfig config_for(const ExperimentSpec& spec, const RunTuple& run);

/// What one drop leaves behind once its record is reduced.
struct RunSummary {
  RunTuple run;
  std::vector<UeDeliveryStats> xr_ues;
  std::vector<double> delays_ms;  // delivered in-window sets
  std::size_t undelivered = 0;
  double queued_sum = 0.0;
  std::size_t queued_samples = 0;
  std::vector<std::int64_t> embb_bits_per_cell;
  double kpi_duration_s = 0.0;
};

RunSummary summarize(const RunTuple& run, const KpiRecord& record);

/// Aggregates at one (scheduler, psdb, N).
struct SweepPoint {
  SchedulerKind scheduler = SchedulerKind::kProposed;
  double psdb_ms = 0.0;
  int xr_per_cell = 0;
  std::size_t xr_ues = 0;
  std::size_t satisfied = 0;
  double satisfaction = 0.0;
  std::int64_t min_sets_per_xr_ue = 0;
  DelayCcdf ccdf;
  double p95_delay_ms = 0.0;
  double avg_queued_ues = 0.0;
  double embb_cell_tp_mbps = 0.0;
};

struct CapacityRow {
  SchedulerKind scheduler = SchedulerKind::kProposed;
  double psdb_ms = 0.0;
  CapacityResult capacity;
};

struct ExperimentResult {
  std::vector<RunTuple> runs;
  std::vector<SweepPoint> points;  // scheduler, psdb, N order
  std::vector<CapacityRow> capacities;

  const SweepPoint& point(SchedulerKind s, double psdb_ms, int n) const;
  const CapacityRow& capacity(SchedulerKind s, double psdb_ms) const;
};

/// Groups drop summaries by sweep point. The result does not depend on the
/// order of `summaries`.
ExperimentResult aggregate(const ExperimentSpec& spec, std::vector<RunSummary> summaries);

/// Capacity for each (scheduler, psdb) from the satisfaction curve.
std::vector<CapacityRow> capacities_from(const std::vector<SweepPoint>& points);

struct RunOptions {
  int workers = 1;
  bool write_files = true;
  std::function<void(const RunTuple&, std::size_t done, std::size_t total)> on_run_done;
};

/// Runs every tuple, then writes drops/*.csv, fig2..fig6 CSVs and
/// summary.json under spec.output_dir. The output directory is checked
/// before the first run (IoError).
ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result);

std::string format_psdb(double psdb_ms);
std::string_view to_string(Censoring c);

}  // namespace xrsched
