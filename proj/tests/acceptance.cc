// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Detail lines are indented below the criterion they belong to.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/invariants.h"
#include "support/mini_instances.h"
#include "support/olla_loop.h"
#include "support/trend_checks.h"
#include "xrsched/config.h"
#include "xrsched/exact_solver.h"
#include "xrsched/experiment.h"
#include "xrsched/kpi.h"
#include "xrsched/scheduler.h"

namespace fs = std::filesystem;
using namespace xrsched;
using xrsched::testing::Check;

namespace {

constexpr double kMetricTol = 1e-9;
constexpr int kOracleInstances = 300;
constexpr double kOracleTol = 1e-9;
constexpr int kInvariantSeeds = 60;
constexpr std::int64_t kMinSetsPerUe = 540;
constexpr int kOllaSlots = 10000;
constexpr double kOllaTarget = 0.125;
constexpr double kOllaBand = 0.02;

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> details;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.summary = fmt::format("exception: {}", e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fmt::print("[{}] {:>2} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", id, title, o.summary,
             secs);
  for (const auto& d : o.details) fmt::print("        {}\n", d);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

bool rel_eq(double got, double want) {
  return std::abs(got - want) <= kMetricTol * std::max(1.0, std::abs(want));
}

PduSet set_with(std::int64_t total, std::int64_t served, double arrival, double psdb) {
  PduSet s;
  s.total_size_bits = total;
  s.served_bits = served;
  s.first_arrival_ms = arrival;
  s.deadline_ms = arrival + psdb;
  return s;
}

Outcome metric_exactness() {
  Outcome o;
  int n = 0;
  auto expect = [&](const std::string& what, double got, double want) {
    ++n;
    if (!rel_eq(got, want)) {
      o.pass = false;
      o.details.push_back(fmt::format("{}: got {:.12g}, want {:.12g}", what, got, want));
    }
  };
  expect("alpha 0/744000", alpha(set_with(744000, 0, 0, 15)), 0.0);
  expect("alpha 744000/744000", alpha(set_with(744000, 744000, 0, 15)), 1.0);
  expect("alpha 372000/744000", alpha(set_with(744000, 372000, 0, 15)), 0.5);
  expect("beta T=0", beta(set_with(1, 0, 0, 15), 0.0), 1.0);
  expect("beta T=psdb", beta(set_with(1, 0, 0, 15), 15.0), 0.0);
  expect("beta T=5 psdb=15", beta(set_with(1, 0, 0, 15), 5.0), 2.0 / 3.0);
  expect("eq9 alpha=0 beta=1", proposed_metric(set_with(10, 0, 0, 15), 0.0), 1.0);
  expect("eq9 expired", proposed_metric(set_with(10, 0, 0, 15), 15.0), 0.0);
  expect("eq9 alpha=0.5 beta=0.25", proposed_metric(set_with(10, 5, 0, 20), 15.0),
         std::exp(0.5) / 0.25);
  expect("eq9 alpha=0.5 beta=0.25 (4 digits)",
         std::round(proposed_metric(set_with(10, 5, 0, 20), 15.0) * 1e4) / 1e4, 6.5949);
  expect("pf r=R", pf_metric({5e7, 5e7}), 1.0);
  expect("pf 50/25 Mbps", pf_metric({5e7, 2.5e7}), 2.0);
  expect("pf at floor", pf_metric({1e8, 1e3}), 1e5);

  UeContext xr;
  xr.traffic_type = TrafficType::kXr;
  xr.qos.w_k = 1e8;
  xr.tp_tracker = {1e6, 1e6};
  expect("wpf XR r/R=1", wpf_metric(xr), 1e8);
  UeContext embb;
  embb.traffic_type = TrafficType::kEmbb;
  embb.tp_tracker = {2e6, 1e6};
  expect("wpf eMBB r/R=2", wpf_metric(embb), 2.0);
  xr.tp_tracker = {0.0, 1e6};
  expect("wpf XR r=0", wpf_metric(xr), 0.0);

  const auto hol = set_with(10, 0, 0, 15);
  xr.qos.delta = std::exp(-1.0);
  xr.tp_tracker = {1e6, 1e6};
  expect("mlwdf unity", mlwdf_metric(xr, &hol, 15.0), 1.0);
  expect("mlwdf T=0", mlwdf_metric(xr, &hol, 0.0), 0.0);
  xr.qos.delta = 0.01;
  xr.tp_tracker = {2e6, 1e6};
  expect("mlwdf delta=0.01 T/D=0.5 r/R=2", mlwdf_metric(xr, &hol, 7.5), -std::log(0.01));
  expect("mlwdf delta=0.01 (4 digits)", std::round(mlwdf_metric(xr, &hol, 7.5) * 1e4) / 1e4,
         4.6052);
  bool threw = false;
  xr.qos.delta = 1.0;
  try {
    mlwdf_metric(xr, &hol, 1.0);
  } catch (const ConfigError&) {
    threw = true;
  }
  ++n;
  if (!threw) {
    o.pass = false;
    o.details.push_back("mlwdf with delta = 1 did not raise a configuration error");
  }

  ThroughputTracker t{0.0, 5e6};
  update_throughput_tracker(t, 0, 5e-4, 100.0);
  expect("tracker decay", t.average_tp_bps, 0.99 * 5e6);
  t = {0.0, 123.0};
  update_throughput_tracker(t, 1000, 5e-4, 1.0);
  expect("tracker tau=1", t.average_tp_bps, 2e6);

  o.summary = fmt::format("{} values within {:g} relative", n, kMetricTol);
  return o;
}

struct OracleStats {
  int instances = 0;
  int exact_below_heuristic = 0;
  int single_xr_feasible = 0;
  int single_xr_mismatch = 0;
  int constraint_failures = 0;
  double gap_sum = 0.0;
  double max_gap = 0.0;
  std::vector<std::string> notes;
};

OracleStats run_oracle() {
  OracleStats s;
  std::mt19937_64 rng(20240601);
  xrsched::testing::MiniGenOptions opts;  // |S|<=5, |P|<=3, <=2 XR x <=2 sets, <=1 eMBB
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto inst = xrsched::testing::random_mini_instance(rng, opts);
    const auto exact = solve_exact(inst);
    const auto heur = heuristic_on_instance(inst);
    ++s.instances;
    const double ex = exact.evaluation.objective;
    const double he = heur.evaluation.objective;
    const double gap = ex - he;
    s.gap_sum += gap;
    s.max_gap = std::max(s.max_gap, gap);
    if (he > ex + kOracleTol * std::max(1.0, std::abs(ex))) {
      ++s.exact_below_heuristic;
      if (s.notes.size() < 5) s.notes.push_back("exact < heuristic: " + instance_to_json(inst));
    }
    if (inst.xr_ues.size() == 1 && exact.evaluation.gamma[0]) {
      ++s.single_xr_feasible;
      if (std::abs(gap) > kOracleTol * std::max(1.0, std::abs(ex))) {
        ++s.single_xr_mismatch;
        if (s.notes.size() < 5) {
          s.notes.push_back(fmt::format("single-XR mismatch {:.6g} vs {:.6g}: {}", ex, he,
                                        instance_to_json(inst)));
        }
      }
    }
    for (const auto& c : check_constraints(inst, exact.assignment, exact.evaluation)) {
      if (!c.pass) {
        ++s.constraint_failures;
        if (s.notes.size() < 5) s.notes.push_back(c.name + ": " + c.detail);
      }
    }
  }
  return s;
}

Outcome fold(const std::vector<Check>& checks) {
  Outcome o;
  int passed = 0;
  for (const auto& c : checks) {
    o.pass = o.pass && c.pass;
    passed += c.pass ? 1 : 0;
    o.details.push_back(fmt::format("{} {}: {}", c.pass ? "ok  " : "FAIL", c.name, c.detail));
  }
  o.summary = fmt::format("{}/{} checks", passed, checks.size());
  return o;
}

Outcome invariants_suite() {
  Outcome o;
  std::mt19937_64 rng(4242);
  const SchedulerKind kinds[] = {SchedulerKind::kProposed, SchedulerKind::kWpf,
                                 SchedulerKind::kMlwdf, SchedulerKind::kPf};
  const double budgets[] = {10.0, 15.0, 20.0};
  long slots = 0;
  for (int seed = 0; seed < kInvariantSeeds; ++seed) {
    SimConfig c;
    c.num_cells = 1;
    c.world_width_m = 20.0;
    c.world_height_m = 20.0;
    c.duration_ms = 2000.0;
    c.warmup_ms = 200.0;
    c.seed = static_cast<std::uint64_t>(seed) * 7919 + 1;
    c.xr_ues_per_cell = std::uniform_int_distribution<int>(1, 10)(rng);
    c.embb_ues_per_cell = std::uniform_int_distribution<int>(0, 3)(rng);
    c.scheduler.kind = kinds[seed % 4];
    c.traffic.psdb_ms = budgets[std::uniform_int_distribution<int>(0, 2)(rng)];
    xrsched::testing::InvariantMonitor mon(c.scheduler.kind);
    const auto rec = run_drop(c, 0, std::ref(mon));
    slots += mon.slots();
    const auto problems = xrsched::testing::check_record(rec);
    const bool duty = mon.downlink_slots() * 5 == mon.slots() * 3;
    if (!mon.ok() || !problems.empty() || !duty) {
      o.pass = false;
      o.details.push_back(fmt::format("seed {} ({} XR, {} eMBB, {}): {} slot violations, {} record "
                                      "problems{}",
                                      c.seed, c.xr_ues_per_cell, c.embb_ues_per_cell,
                                      to_string(c.scheduler.kind), mon.violations(),
                                      problems.size(), duty ? "" : ", wrong D-slot share"));
      for (const auto& m : mon.messages()) o.details.push_back("  " + m);
      for (const auto& m : problems) o.details.push_back("  " + m);
    }
  }
  o.summary = fmt::format("{} seeds, {} cell-slots observed", kInvariantSeeds, slots);
  return o;
}

Outcome statistical_harness() {
  ExperimentSpec spec;  // full profile
  Outcome o;
  const auto runs = enumerate_runs(spec);
  // The longest budget leaves the shortest KPI window.
  RunTuple run = runs.front();
  run.psdb_ms = *std::max_element(spec.psdb_set_ms.begin(), spec.psdb_set_ms.end());
  run.xr_per_cell = spec.xr_ues_max;
  const auto rec = run_drop(config_for(spec, run), run.drop);
  const std::vector<KpiRecord> recs{rec};
  const auto stats = delivery_stats(recs, run.psdb_ms);
  std::int64_t lo = std::numeric_limits<std::int64_t>::max();
  for (const auto& s : stats) lo = std::min(lo, s.total);
  o.pass = !stats.empty() && lo >= kMinSetsPerUe;
  o.summary = fmt::format("{} XR UEs in {} cells, min post-warm-up sets per UE {} (need {})",
                          stats.size(), spec.base.num_cells, lo, kMinSetsPerUe);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism(const fs::path& a, const fs::path& b) {
  Outcome o;
  int files = 0;
  auto compare = [&](const fs::path& dir_a, const fs::path& dir_b) {
    for (const auto& e : fs::directory_iterator(dir_a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const auto other = dir_b / e.path().filename();
      if (!fs::exists(other) || slurp(e.path()) != slurp(other)) {
        o.pass = false;
        o.details.push_back(fmt::format("{} differs", e.path().filename().string()));
      }
    }
  };
  compare(a, b);
  const int aggregate = files;
  compare(a / "drops", b / "drops");
  o.summary = fmt::format("{} aggregate and {} per-drop CSVs identical across 1 and 3 workers",
                          aggregate, files - aggregate);
  if (aggregate != 5) {
    o.pass = false;
    o.details.push_back(fmt::format("expected 5 aggregate CSVs, found {}", aggregate));
  }
  return o;
}

Outcome olla_convergence() {
  Outcome o;
  const auto [lo, hi] = xrsched::testing::olla_reachable_sinr_range();
  double worst = 0.0;
  int worst_sinr = lo;
  for (int sinr = lo; sinr <= hi; ++sinr) {
    const auto r = xrsched::testing::run_olla_loop(sinr, kOllaSlots,
                                                   static_cast<std::uint64_t>(1000 + sinr));
    const double dev = std::abs(r.error_rate - kOllaTarget);
    if (dev > worst) {
      worst = dev;
      worst_sinr = sinr;
    }
    if (dev > kOllaBand) {
      o.pass = false;
      o.details.push_back(fmt::format("SINR {:>3} dB: CBG error rate {:.4f}, final offset {:+.2f} dB",
                                      sinr, r.error_rate, r.final_offset_db));
    }
    if (r.clamped_slots > 0) {
      o.details.push_back(fmt::format("SINR {:>3} dB: offset at the clamp for {} slots", sinr,
                                      r.clamped_slots));
    }
  }
  o.summary = fmt::format("{} slots at each SINR in [{}, {}] dB, target {} +/- {}, worst |error - target| "
                          "{:.4f} at {} dB",
                          kOllaSlots, lo, hi, kOllaTarget, kOllaBand, worst, worst_sinr);
  return o;
}

}  // namespace

int main() {
  const auto scratch = fs::temp_directory_path() / "xrsched_acceptance";
  fs::remove_all(scratch);

  fmt::print("acceptance: metric, oracle, trend and harness criteria\n");
  report(1, "metric exactness", metric_exactness);

  OracleStats oracle;
  report(2, "oracle equivalence", [&] {
    oracle = run_oracle();
    Outcome o;
    o.pass = oracle.exact_below_heuristic == 0 && oracle.single_xr_mismatch == 0 &&
             oracle.instances >= 200;
    o.summary = fmt::format(
        "{} instances, exact >= heuristic on all but {}, single-XR feasible {} with {} "
        "mismatches, mean gap {:.4f}, max gap {:.4f}",
        oracle.instances, oracle.exact_below_heuristic, oracle.single_xr_feasible,
        oracle.single_xr_mismatch, oracle.gap_sum / oracle.instances, oracle.max_gap);
    o.details = oracle.notes;
    return o;
  });
  report(3, "constraint validation", [&] {
    Outcome o;
    o.pass = oracle.instances > 0 && oracle.constraint_failures == 0;
    o.summary = fmt::format("{} exact solutions, {} failed checks", oracle.instances,
                            oracle.constraint_failures);
    return o;
  });

  ExperimentSpec fast;
  apply_fast_profile(fast);
  fast.output_dir = (scratch / "sweep_1").string();
  ExperimentResult sweep;
  bool sweep_ok = false;
  std::string sweep_error;
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      RunOptions opts;
      opts.workers = 1;
      sweep = run_experiment(fast, opts);
      sweep_ok = true;
    } catch (const std::exception& e) {
      sweep_error = e.what();
    }
    fmt::print("     fast sweep: {} runs in {:.1f} s (config_hash={})\n", enumerate_runs(fast).size(),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(),
               config_hash(fast));
  }
  auto needs_sweep = [&](auto checks) {
    return [&, checks]() -> Outcome {
      if (!sweep_ok) return {false, "fast sweep failed: " + sweep_error, {}};
      return fold(checks());
    };
  };
  report(4, "satisfaction trend", needs_sweep([&] {
           return xrsched::testing::satisfaction_trend(fast, sweep);
         }));
  report(5, "capacity trend", needs_sweep([&] {
           auto checks = xrsched::testing::capacity_trend(fast, sweep);
           for (const auto& c : sweep.capacities) {
             checks.push_back({fmt::format("capacity {} {} ms", to_string(c.scheduler),
                                           format_psdb(c.psdb_ms)),
                               true,
                               fmt::format("{:.3f} ({})", c.capacity.value,
                                           to_string(c.capacity.censoring))});
           }
           return checks;
         }));
  report(6, "delay trend", needs_sweep([&] {
           return std::vector<Check>{xrsched::testing::delay_trend(fast, sweep)};
         }));
  report(7, "queue trend", needs_sweep([&] {
           return std::vector<Check>{xrsched::testing::queue_trend(fast, sweep)};
         }));
  report(8, "eMBB throughput trend", needs_sweep([&] {
           return xrsched::testing::embb_trend(fast, sweep);
         }));
  report(9, "simulation invariants", invariants_suite);
  report(10, "statistical harness", statistical_harness);
  report(11, "determinism", [&] {
    if (!sweep_ok) return Outcome{false, "fast sweep failed: " + sweep_error, {}};
    ExperimentSpec again = fast;
    again.output_dir = (scratch / "sweep_2").string();
    RunOptions opts;
    opts.workers = 3;
    run_experiment(again, opts);
    return determinism(scratch / "sweep_1", scratch / "sweep_2");
  });
  report(12, "OLLA convergence", olla_convergence);

  fs::remove_all(scratch);
  fmt::print("acceptance: {} of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
