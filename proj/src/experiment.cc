#include "xrsched/experiment.h"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include "json.hpp"

namespace xrsched {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

int scheduler_rank(const ExperimentSpec& spec, SchedulerKind k) {
  const auto it = std::find(spec.schedulers.begin(), spec.schedulers.end(), k);
  return static_cast<int>(it - spec.schedulers.begin());
}

auto sort_key(const ExperimentSpec& spec, const RunTuple& r) {
  return std::make_tuple(scheduler_rank(spec, r.scheduler), r.psdb_ms, r.xr_per_cell, r.drop);
}

std::filesystem::path drop_csv_path(const std::filesystem::path& dir, const RunTuple& r,
                                    const char* sub) {
  return dir / sub /
         fmt::format("{}_psdb{}_n{}_drop{}.csv", to_string(r.scheduler), format_psdb(r.psdb_ms),
                     r.xr_per_cell, r.drop);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  out.close();
  if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

std::string file_header(const std::string& hash, std::uint64_t seed) {
  return fmt::format("# config_hash={}, seed={}\n", hash, seed);
}

std::string drop_csv(const std::string& hash, const RunTuple& r, const KpiRecord& record) {
  std::string out = file_header(hash, r.seed);
  out += "ue_id,cell,set_index,size_bits,first_arrival_ms,delivered_at_ms,delay_ms,in_kpi_window,"
         "in_time\n";
  for (const auto& set : record.pdu_sets) {
    const auto delay = set.delay_ms();
    const bool in_time = delay && *delay <= r.psdb_ms + 1e-9;
    out += fmt::format("{},{},{},{},{:.4f},", set.ue_id, set.cell, set.set_index, set.size_bits,
                       set.first_arrival_ms);
    if (delay) {
      out += fmt::format("{:.4f},{:.4f},", *set.delivered_at_ms, *delay);
    } else {
      out += ",,";
    }
    out += fmt::format("{},{}\n", set.in_kpi_window ? 1 : 0, in_time ? 1 : 0);
  }
  return out;
}

class TraceWriter {
 public:
  explicit TraceWriter(const std::string& header) : text_(header + "slot,cell,ue,metric,prbs,retx\n") {}

  void operator()(const SlotView& v) {
    for (const auto& g : v.grants) {
      text_ += fmt::format("{},{},{},{:.6g},{},{}\n", v.slot, v.cell, g.ue_id, g.metric, g.num_prbs,
                           g.is_retransmission ? 1 : 0);
    }
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

void check_output_dir(const std::filesystem::path& dir, bool traces) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "drops", ec);
  if (!ec && traces) std::filesystem::create_directories(dir / "traces", ec);
  if (ec) {
    throw IoError(fmt::format("cannot create output directory '{}': {}", dir.string(),
                              ec.message()));
  }
  const auto probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("output directory '{}' is not writable", dir.string()));
  }
  std::filesystem::remove(probe, ec);
}

}  // namespace

std::string format_psdb(double psdb_ms) { return fmt::format("{}", psdb_ms); }

std::string_view to_string(Censoring c) {
  switch (c) {
    case Censoring::kNone: return "none";
    case Censoring::kRight: return "right";
    case Censoring::kLeft: return "left";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t base_seed, int drop) {
  return base_seed ^ splitmix64(static_cast<std::uint64_t>(static_cast<std::uint32_t>(drop)));
}

std::vector<RunTuple> enumerate_runs(const ExperimentSpec& spec) {
  std::vector<RunTuple> runs;
  for (auto kind : spec.schedulers) {
    for (double psdb : spec.psdb_set_ms) {
      for (int n : spec.xr_sweep()) {
        for (int d = 0; d < spec.base.drops; ++d) {
          runs.push_back({kind, psdb, n, d, derive_seed(spec.base.seed, d)});
        }
      }
    }
  }
  return runs;
}

SimConfig config_for(const ExperimentSpec& spec, const RunTuple& run) {
  SimConfig c = spec.base;
  c.scheduler.kind = run.scheduler;
  c.traffic.psdb_ms = run.psdb_ms;
  c.xr_ues_per_cell = run.xr_per_cell;
  c.seed = run.seed;
  return c;
}

RunSummary summarize(const RunTuple& run, const KpiRecord& record) {
  RunSummary s;
  s.run = run;
  s.xr_ues = delivery_stats(std::span<const KpiRecord>(&record, 1), run.psdb_ms);
  for (const auto& set : record.pdu_sets) {
    if (!set.in_kpi_window) continue;
    if (const auto d = set.delay_ms()) {
      s.delays_ms.push_back(*d);
    } else {
      ++s.undelivered;
    }
  }
  for (const auto& cell : record.queued_ues) {
    for (auto q : cell) s.queued_sum += q;
    s.queued_samples += cell.size();
  }
  s.embb_bits_per_cell = record.embb_decoded_bits;
  s.kpi_duration_s = record.kpi_duration_s();
  return s;
}

const SweepPoint& ExperimentResult::point(SchedulerKind s, double psdb_ms, int n) const {
  for (const auto& p : points) {
    if (p.scheduler == s && p.psdb_ms == psdb_ms && p.xr_per_cell == n) return p;
  }
  throw ContractError(fmt::format("no sweep point ({}, {}, {})", to_string(s), psdb_ms, n));
}

const CapacityRow& ExperimentResult::capacity(SchedulerKind s, double psdb_ms) const {
  for (const auto& c : capacities) {
    if (c.scheduler == s && c.psdb_ms == psdb_ms) return c;
  }
  throw ContractError(fmt::format("no capacity row ({}, {})", to_string(s), psdb_ms));
}

std::vector<CapacityRow> capacities_from(const std::vector<SweepPoint>& points) {
  std::vector<CapacityRow> rows;
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    std::vector<std::pair<double, double>> curve;
    while (j < points.size() && points[j].scheduler == points[i].scheduler &&
           points[j].psdb_ms == points[i].psdb_ms) {
      curve.emplace_back(points[j].xr_per_cell, points[j].satisfaction);
      ++j;
    }
    rows.push_back({points[i].scheduler, points[i].psdb_ms, xr_capacity(curve)});
    i = j;
  }
  return rows;
}

ExperimentResult aggregate(const ExperimentSpec& spec, std::vector<RunSummary> summaries) {
  std::sort(summaries.begin(), summaries.end(), [&](const RunSummary& a, const RunSummary& b) {
    return sort_key(spec, a.run) < sort_key(spec, b.run);
  });
  ExperimentResult result;
  for (const auto& s : summaries) result.runs.push_back(s.run);

  std::size_t i = 0;
  while (i < summaries.size()) {
    const auto& head = summaries[i].run;
    std::size_t j = i;
    SweepPoint p;
    p.scheduler = head.scheduler;
    p.psdb_ms = head.psdb_ms;
    p.xr_per_cell = head.xr_per_cell;
    std::vector<UeDeliveryStats> ues;
    std::vector<double> delays;
    std::size_t undelivered = 0;
    double queued_sum = 0.0;
    std::size_t queued_samples = 0;
    double tp_sum = 0.0;
    std::size_t tp_runs = 0;
    for (; j < summaries.size(); ++j) {
      const auto& s = summaries[j];
      if (s.run.scheduler != head.scheduler || s.run.psdb_ms != head.psdb_ms ||
          s.run.xr_per_cell != head.xr_per_cell) {
        break;
      }
      ues.insert(ues.end(), s.xr_ues.begin(), s.xr_ues.end());
      delays.insert(delays.end(), s.delays_ms.begin(), s.delays_ms.end());
      undelivered += s.undelivered;
      queued_sum += s.queued_sum;
      queued_samples += s.queued_samples;
      tp_sum += embb_cell_tp_mbps(s.embb_bits_per_cell, s.kpi_duration_s);
      ++tp_runs;
    }
    p.xr_ues = ues.size();
    p.satisfied = static_cast<std::size_t>(std::count_if(
        ues.begin(), ues.end(),
        [](const UeDeliveryStats& u) { return is_satisfied(u.in_time, u.total); }));
    p.satisfaction = ues.empty() ? 0.0 : static_cast<double>(p.satisfied) / ues.size();
    p.min_sets_per_xr_ue = 0;
    if (!ues.empty()) {
      p.min_sets_per_xr_ue = std::min_element(ues.begin(), ues.end(), [](const auto& a, const auto& b) {
                               return a.total < b.total;
                             })->total;
    }
    p.ccdf = DelayCcdf(std::move(delays), undelivered);
    p.p95_delay_ms = p.ccdf.percentile(0.95);
    p.avg_queued_ues = queued_samples == 0 ? 0.0 : queued_sum / static_cast<double>(queued_samples);
    p.embb_cell_tp_mbps = tp_runs == 0 ? 0.0 : tp_sum / static_cast<double>(tp_runs);
    result.points.push_back(std::move(p));
    i = j;
  }
  result.capacities = capacities_from(result.points);
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  spec.validate();
  const std::filesystem::path dir(spec.output_dir);
  if (options.write_files) check_output_dir(dir, spec.trace_decisions);
  const auto runs = enumerate_runs(spec);
  const auto hash = config_hash(spec);

  std::vector<RunSummary> summaries(runs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      try {
        const auto& run = runs[i];
        const bool trace = options.write_files && spec.trace_decisions;
        TraceWriter tracer(file_header(hash, run.seed));
        const KpiRecord record =
            trace ? run_drop(config_for(spec, run), run.drop, std::ref(tracer))
                  : run_drop(config_for(spec, run), run.drop);
        summaries[i] = summarize(run, record);
        if (options.write_files) {
          write_file(drop_csv_path(dir, run, "drops"), drop_csv(hash, run, record));
          if (trace) write_file(drop_csv_path(dir, run, "traces"), tracer.text());
        }
        const std::size_t n = done.fetch_add(1) + 1;
        if (options.on_run_done) {
          std::lock_guard lock(mu);
          options.on_run_done(run, n, runs.size());
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(runs.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  auto result = aggregate(spec, std::move(summaries));
  if (options.write_files) write_outputs(spec, result);
  return result;
}

void write_outputs(const ExperimentSpec& spec, const ExperimentResult& result) {
  const std::filesystem::path dir(spec.output_dir);
  const auto hash = config_hash(spec);
  const auto header = file_header(hash, spec.base.seed);

  std::string fig2 = header + "scheduler,psdb_ms,n,ratio,satisfied,xr_ues\n";
  std::string fig4 = header + "scheduler,psdb_ms,n,delay_ms,ccdf\n";
  std::string fig5 = header + "scheduler,psdb_ms,n,avg_queued_ues\n";
  std::string fig6 = header + "scheduler,psdb_ms,n,embb_cell_tp_mbps\n";
  for (const auto& p : result.points) {
    const auto name = to_string(p.scheduler);
    const auto psdb = format_psdb(p.psdb_ms);
    fig2 += fmt::format("{},{},{},{:.6f},{},{}\n", name, psdb, p.xr_per_cell, p.satisfaction,
                        p.satisfied, p.xr_ues);
    fig5 += fmt::format("{},{},{},{:.6f}\n", name, psdb, p.xr_per_cell, p.avg_queued_ues);
    fig6 += fmt::format("{},{},{},{:.6f}\n", name, psdb, p.xr_per_cell, p.embb_cell_tp_mbps);
    const auto pts = p.ccdf.points();
    const double max_delay = pts.empty() ? 0.0 : std::min(pts.back().first, 1000.0);
    const int steps = static_cast<int>(std::ceil(max_delay / 0.5 - 1e-9));
    for (int k = 0; k <= steps; ++k) {
      const double d = 0.5 * k;
      fig4 += fmt::format("{},{},{},{:.1f},{:.8f}\n", name, psdb, p.xr_per_cell, d, p.ccdf.ccdf(d));
    }
  }
  std::string fig3 = header + "scheduler,psdb_ms,capacity,censoring\n";
  for (const auto& c : result.capacities) {
    fig3 += fmt::format("{},{},{:.6f},{}\n", to_string(c.scheduler), format_psdb(c.psdb_ms),
                        c.capacity.value, to_string(c.capacity.censoring));
  }

  nlohmann::ordered_json j;
  j["config_hash"] = hash;
  j["seed"] = spec.base.seed;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  {
    const auto text = canonical_config(spec);
    std::size_t start = 0;
    while (start < text.size()) {
      const auto nl = text.find('\n', start);
      const auto line = text.substr(start, nl - start);
      const auto eq = line.find(" = ");
      cfg[line.substr(0, eq)] = line.substr(eq + 3);
      start = nl + 1;
    }
  }
  j["config"] = cfg;
  j["kpi_window"] =
      "PDU-sets with first arrival in [warmup_ms, duration_ms - psdb_ms]; later sets are "
      "recorded in the drop files but not counted";
  auto& runs = j["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"scheduler", to_string(r.scheduler)},
                    {"psdb_ms", r.psdb_ms},
                    {"n", r.xr_per_cell},
                    {"drop", r.drop},
                    {"seed", r.seed}});
  }
  auto& points = j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : result.points) {
    nlohmann::ordered_json e;
    e["scheduler"] = to_string(p.scheduler);
    e["psdb_ms"] = p.psdb_ms;
    e["n"] = p.xr_per_cell;
    e["satisfaction"] = p.satisfaction;
    e["xr_ues"] = p.xr_ues;
    e["min_pdu_sets_per_xr_ue"] = p.min_sets_per_xr_ue;
    e["p95_delay_ms"] = std::isfinite(p.p95_delay_ms) ? nlohmann::ordered_json(p.p95_delay_ms)
                                                      : nlohmann::ordered_json("inf");
    e["residual_ccdf"] = p.ccdf.residual_mass();
    e["avg_queued_ues"] = p.avg_queued_ues;
    e["embb_cell_tp_mbps"] = p.embb_cell_tp_mbps;
    points.push_back(std::move(e));
  }
  auto& caps = j["capacity"] = nlohmann::ordered_json::array();
  for (const auto& c : result.capacities) {
    caps.push_back({{"scheduler", to_string(c.scheduler)},
                    {"psdb_ms", c.psdb_ms},
                    {"capacity", c.capacity.value},
                    {"censoring", to_string(c.capacity.censoring)}});
  }

  write_file(dir / "fig2_satisfaction.csv", fig2);
  write_file(dir / "fig3_capacity.csv", fig3);
  write_file(dir / "fig4_ccdf.csv", fig4);
  write_file(dir / "fig5_queued.csv", fig5);
  write_file(dir / "fig6_embb_tp.csv", fig6);
  write_file(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace xrsched
