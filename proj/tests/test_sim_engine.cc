#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "doctest.h"
#include "support/invariants.h"
#include "xrsched/kpi.h"
#include "xrsched/sim_engine.h"

using namespace xrsched;

namespace {

SimConfig small_config() {
  SimConfig c;
  c.num_cells = 1;
  c.world_width_m = 20.0;
  c.world_height_m = 20.0;
  c.xr_ues_per_cell = 2;
  c.embb_ues_per_cell = 1;
  c.duration_ms = 2000.0;
  c.warmup_ms = 200.0;
  c.drops = 1;
  return c;
}

KpiRecord record_with(std::vector<PduSetOutcome> sets, std::vector<UeSummary> ues) {
  KpiRecord r;
  r.pdu_sets = std::move(sets);
  r.ues = std::move(ues);
  r.duration_ms = 1000.0;
  return r;
}

}  // namespace

TEST_CASE("TDD pattern and slot timing") {
  SimConfig c;
  CHECK(c.slot_ms() == 0.5);
  CHECK(c.num_slots() == 20000);
  int d = 0;
  for (std::int64_t t = 0; t < 2000; ++t) d += c.slot_type(t) == SlotType::kDownlink ? 1 : 0;
  CHECK(d == 1200);
  CHECK(c.slot_type(0) == SlotType::kDownlink);
  CHECK(c.slot_type(3) == SlotType::kSpecial);
  CHECK(c.slot_type(4) == SlotType::kUplink);
  CHECK(c.slot_type(5) == SlotType::kDownlink);
}

TEST_CASE("cell layout") {
  SimConfig c;
  const auto cells = cell_layout(c);
  REQUIRE(cells.size() == 12);
  for (const auto& p : cells) {
    CHECK(p.x > 0.0);
    CHECK(p.x < c.world_width_m);
    CHECK(p.y > 0.0);
    CHECK(p.y < c.world_height_m);
  }
  CHECK(std::hypot(cells[1].x - cells[0].x, cells[1].y - cells[0].y) == doctest::Approx(20.0));
}

TEST_CASE("a 10 ms run sees exactly one frame") {
  SimConfig c = small_config();
  c.xr_ues_per_cell = 1;
  c.embb_ues_per_cell = 0;
  c.duration_ms = 10.0;
  c.warmup_ms = 0.0;
  c.traffic.psdb_ms = 5.0;
  const auto rec = run_drop(c, 0);
  CHECK(rec.pdu_sets.size() == 1);
}

TEST_CASE("one close XR UE in an isolated cell is satisfied") {
  SimConfig c = small_config();
  c.world_width_m = 4.0;
  c.world_height_m = 4.0;
  c.xr_ues_per_cell = 1;
  c.embb_ues_per_cell = 0;
  c.link.shadowing_std_db = 0.0;
  const auto rec = run_drop(c, 0);
  const std::vector<KpiRecord> recs{rec};
  CHECK(satisfaction_ratio(recs, c.traffic.psdb_ms) == 1.0);
  const auto stats = delivery_stats(recs, c.traffic.psdb_ms);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].total > 90);
  CHECK(stats[0].in_time == stats[0].total);
}

TEST_CASE("same configuration and drop give an identical record") {
  const SimConfig c = small_config();
  const auto a = run_drop(c, 3);
  const auto b = run_drop(c, 3);
  REQUIRE(a.pdu_sets.size() == b.pdu_sets.size());
  for (std::size_t i = 0; i < a.pdu_sets.size(); ++i) {
    CHECK(a.pdu_sets[i].ue_id == b.pdu_sets[i].ue_id);
    CHECK(a.pdu_sets[i].set_index == b.pdu_sets[i].set_index);
    CHECK(a.pdu_sets[i].first_arrival_ms == b.pdu_sets[i].first_arrival_ms);
    CHECK(a.pdu_sets[i].delivered_at_ms == b.pdu_sets[i].delivered_at_ms);
    CHECK(a.pdu_sets[i].decoded_bits == b.pdu_sets[i].decoded_bits);
  }
  CHECK(a.queued_ues == b.queued_ues);
  CHECK(a.embb_decoded_bits == b.embb_decoded_bits);
  const auto other = run_drop(c, 4);
  CHECK(other.ues[0].avg_sinr_db != a.ues[0].avg_sinr_db);
}

TEST_CASE("satisfaction threshold") {
  CHECK_FALSE(is_satisfied(534, 540));
  CHECK(is_satisfied(540, 540));
  CHECK(is_satisfied(535, 540));  // 0.99074
  CHECK(is_satisfied(99, 100));
  CHECK_FALSE(is_satisfied(98, 100));
  CHECK_FALSE(is_satisfied(0, 0));
  std::vector<UeDeliveryStats> ues;
  for (int i = 0; i < 10; ++i) ues.push_back({static_cast<std::uint32_t>(i), 0, 540, i == 0 ? 534 : 540});
  CHECK(satisfaction_ratio(ues) == doctest::Approx(0.9));
  CHECK_THROWS_AS(satisfaction_ratio(std::vector<UeDeliveryStats>{}), ContractError);
}

TEST_CASE("delivery counting uses the budget and the KPI window") {
  std::vector<PduSetOutcome> sets;
  auto add = [&](double arrival, std::optional<double> delivered, bool window) {
    PduSetOutcome o;
    o.ue_id = 0;
    o.set_index = sets.size();
    o.first_arrival_ms = arrival;
    o.delivered_at_ms = delivered;
    o.in_kpi_window = window;
    sets.push_back(o);
  };
  add(0.0, 15.0, true);        // exactly at the budget: in time
  add(20.0, 35.5, true);       // late
  add(40.0, std::nullopt, true);
  add(60.0, 61.0, false);      // outside the window
  const std::vector<KpiRecord> recs{record_with(sets, {{0, 0, TrafficType::kXr, 0.0, 0}})};
  const auto stats = delivery_stats(recs, 15.0);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].total == 3);
  CHECK(stats[0].in_time == 1);
}

TEST_CASE("XR capacity") {
  using P = std::pair<double, double>;
  SUBCASE("interpolated") {
    const std::vector<P> pts{{3, 1.0}, {4, 1.0}, {5, 0.95}, {6, 0.85}, {7, 0.5}};
    const auto r = xr_capacity(pts);
    CHECK(r.value == doctest::Approx(5.5));
    CHECK(r.censoring == Censoring::kNone);
  }
  SUBCASE("right-censored") {
    const std::vector<P> pts{{3, 1.0}, {4, 1.0}, {5, 1.0}, {6, 1.0}, {7, 1.0}, {8, 1.0}};
    const auto r = xr_capacity(pts);
    CHECK(r.value == 8.0);
    CHECK(r.censoring == Censoring::kRight);
  }
  SUBCASE("left-censored") {
    const std::vector<P> pts{{3, 0.8}};
    const auto r = xr_capacity(pts);
    CHECK(r.censoring == Censoring::kLeft);
    CHECK(r.value < 3.0);
  }
  SUBCASE("exactly at the target") {
    const std::vector<P> pts{{3, 1.0}, {4, 0.9}, {5, 0.6}};
    CHECK(xr_capacity(pts).value == doctest::Approx(4.0));
  }
}

TEST_CASE("delay CCDF") {
  SUBCASE("point mass") {
    const DelayCcdf d({5, 5, 5, 5}, 0);
    CHECK(d.ccdf(4.9) == 1.0);
    CHECK(d.ccdf(5.0) == 0.0);
  }
  SUBCASE("empirical count") {
    const DelayCcdf d({1, 2, 3, 4}, 0);
    CHECK(d.ccdf(2.0) == 0.5);
    CHECK(d.ccdf(0.0) == 1.0);
    CHECK(d.ccdf(4.0) == 0.0);
  }
  SUBCASE("percentile is the smallest delay with tail at most 1 - q") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    const DelayCcdf d(v, 0);
    CHECK(d.percentile(0.95) == 95.0);
    CHECK(d.ccdf(95.0) <= 0.05);
    CHECK(d.ccdf(94.0) > 0.05);
  }
  SUBCASE("undelivered sets are residual mass") {
    const DelayCcdf d({1, 2, 3}, 1);
    CHECK(d.residual_mass() == 0.25);
    CHECK(d.ccdf(1000.0) == 0.25);
    CHECK(d.percentile(0.5) == 2.0);
    CHECK(d.percentile(0.8) == std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("queued UEs") {
  KpiRecord empty;
  empty.queued_ues = {{0, 0, 0}};
  CHECK(avg_queued_ues(std::vector<KpiRecord>{empty}) == 0.0);
  KpiRecord alt;
  alt.queued_ues = {{2, 4, 2, 4}};
  CHECK(avg_queued_ues(std::vector<KpiRecord>{alt}) == 3.0);

  SimConfig c = small_config();
  c.xr_ues_per_cell = 0;
  c.embb_ues_per_cell = 3;
  c.duration_ms = 500.0;
  c.warmup_ms = 100.0;
  c.traffic.psdb_ms = 10.0;
  const auto rec = run_drop(c, 0);
  CHECK(avg_queued_ues(std::vector<KpiRecord>{rec}) == 3.0);
}

TEST_CASE("eMBB cell throughput") {
  const std::vector<std::int64_t> one{1'000'000'000};
  CHECK(embb_cell_tp_mbps(one, 1.0) == doctest::Approx(1000.0));
  const std::vector<std::int64_t> zero{0};
  CHECK(embb_cell_tp_mbps(zero, 1.0) == 0.0);
  const std::vector<std::int64_t> two{400'000'000, 600'000'000};
  CHECK(embb_cell_tp_mbps(two, 1.0) == doctest::Approx(500.0));
  CHECK_THROWS_AS(embb_cell_tp_mbps(two, 0.0), ContractError);
}

TEST_CASE("scheduling invariants hold in short runs") {
  for (auto kind : {SchedulerKind::kProposed, SchedulerKind::kWpf, SchedulerKind::kMlwdf,
                    SchedulerKind::kPf}) {
    SimConfig c = small_config();
    c.xr_ues_per_cell = 6;
    c.scheduler.kind = kind;
    c.seed = 11;
    xrsched::testing::InvariantMonitor mon(kind);
    const auto rec = run_drop(c, 0, std::ref(mon));
    INFO(to_string(kind));
    for (const auto& m : mon.messages()) INFO(m);
    CHECK(mon.ok());
    CHECK(mon.downlink_slots() * 5 == mon.slots() * 3);
    const auto problems = xrsched::testing::check_record(rec);
    CHECK(problems.empty());
  }
}

TEST_CASE("expired sets are kept until delivered or the run ends") {
  SimConfig c = small_config();
  c.xr_ues_per_cell = 10;
  c.traffic.psdb_ms = 5.0;
  const auto rec = run_drop(c, 0);
  std::int64_t late = 0;
  for (const auto& s : rec.pdu_sets) {
    if (s.delivered_at_ms && *s.delay_ms() > 5.0) ++late;
  }
  CHECK(late > 0);
  // Every admitted frame shows up, delivered or not.
  std::map<std::uint32_t, std::uint64_t> next;
  for (const auto& s : rec.pdu_sets) {
    CHECK(s.set_index == next[s.ue_id]);
    next[s.ue_id] = s.set_index + 1;
  }
}

TEST_CASE("invalid simulation configs are rejected") {
  SimConfig c;
  c.tdd_pattern = "DDXSU";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.num_cells = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SimConfig{};
  c.warmup_ms = c.duration_ms;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
