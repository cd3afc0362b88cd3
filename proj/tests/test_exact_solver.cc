#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "support/mini_instances.h"
#include "xrsched/exact_solver.h"

using namespace xrsched;

namespace {

MiniInstance one_set(std::int64_t size, int deadline, int slots, int prbs) {
  MiniInstance inst;
  inst.num_slots = slots;
  inst.num_prbs = prbs;
  MiniXrUe ue;
  ue.bits_per_prb = 624;
  ue.pdu_sets.push_back({size, 0, deadline});
  inst.xr_ues.push_back(ue);
  return inst;
}

bool all_pass(const std::vector<ConstraintCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.pass) {
      MESSAGE(c.name << ": " << c.detail);
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("empty assignment") {
  MiniInstance inst;
  inst.num_slots = 2;
  inst.num_prbs = 2;
  inst.embb_ues = {{500}, {700}};
  inst.xr_ues.push_back({1000.0, 624, {{600, 0, 1}}});
  const Assignment a(4, kIdle);
  const auto ev = evaluate_objective(inst, a);
  CHECK(ev.objective == 0.0);
  CHECK(ev.embb_term == doctest::Approx(2 * std::log(kEmbbRateFloorBps)));
  REQUIRE(ev.gamma.size() == 1);
  CHECK_FALSE(ev.gamma[0]);
}

TEST_CASE("one PRB before the deadline satisfies a 600-bit set") {
  const auto inst = one_set(600, 1, 3, 1);
  const auto ev = evaluate_objective(inst, {0, kIdle, kIdle});
  CHECK(ev.gamma[0]);
  CHECK(ev.xr_term == 1000.0);
  CHECK(ev.y[0][0]);
  CHECK(ev.served[0][0][0] >= 600);
  CHECK(all_pass(check_constraints(inst, {0, kIdle, kIdle}, ev)));
}

TEST_CASE("a PRB after the deadline does not count") {
  const auto inst = one_set(600, 1, 3, 1);
  const auto ev = evaluate_objective(inst, {kIdle, kIdle, 0});
  CHECK_FALSE(ev.gamma[0]);
  CHECK(ev.xr_term == 0.0);
}

TEST_CASE("malformed assignments are contract errors") {
  const auto inst = one_set(600, 1, 3, 1);
  CHECK_THROWS_AS(evaluate_objective(inst, {0, 0}), ContractError);
  CHECK_THROWS_AS(evaluate_objective(inst, {0, 5, kIdle}), ContractError);
}

TEST_CASE("single XR UE with one eMBB UE") {
  auto inst = one_set(600, 1, 3, 2);
  inst.embb_ues.push_back({800});
  const auto sol = solve_exact(inst);
  CHECK(sol.evaluation.gamma[0]);
  // One PRB for the set, the other five to eMBB.
  int xr = 0, embb = 0;
  for (int u : sol.assignment) {
    xr += u == 0;
    embb += u == 1;
  }
  CHECK(xr == 1);
  CHECK(embb == 5);
  CHECK(sol.evaluation.objective ==
        doctest::Approx(1000.0 + std::log(5 * 800 / inst.horizon_s())).epsilon(1e-12));
  CHECK(all_pass(check_constraints(inst, sol.assignment, sol.evaluation)));
}

TEST_CASE("infeasible coverage gives everything to eMBB") {
  auto inst = one_set(624 * 5, 1, 3, 2);  // needs 5 PRBs, only 4 before the deadline
  inst.embb_ues.push_back({800});
  const auto sol = solve_exact(inst);
  CHECK_FALSE(sol.evaluation.gamma[0]);
  for (int u : sol.assignment) CHECK(u == 1);
  CHECK(all_pass(check_constraints(inst, sol.assignment, sol.evaluation)));
}

TEST_CASE("two identical XR UEs, room for one") {
  MiniInstance inst;
  inst.num_slots = 2;
  inst.num_prbs = 1;
  inst.xr_ues = {{1000.0, 624, {{1248, 0, 1}}}, {1000.0, 624, {{1248, 0, 1}}}};
  inst.embb_ues = {{400}};
  const auto sol = solve_exact(inst);
  CHECK(sol.evaluation.gamma[0] != sol.evaluation.gamma[1]);
  CHECK(sol.evaluation.xr_term == 1000.0);
  CHECK(sol.evaluation.objective == doctest::Approx(1000.0 + std::log(kEmbbRateFloorBps)));
  CHECK(all_pass(check_constraints(inst, sol.assignment, sol.evaluation)));
}

TEST_CASE("heuristic matches exact for a single feasible UE") {
  MiniInstance inst;
  inst.num_slots = 4;
  inst.num_prbs = 2;
  inst.xr_ues.push_back({1000.0, 624, {{624 * 2, 0, 1}, {624 * 3, 1, 3}}});
  inst.embb_ues = {{500}};
  const auto exact = solve_exact(inst);
  const auto heur = heuristic_on_instance(inst);
  CHECK(exact.evaluation.gamma[0]);
  CHECK(heur.evaluation.objective == doctest::Approx(exact.evaluation.objective).epsilon(1e-12));
}

TEST_CASE("empty instance") {
  MiniInstance inst;
  inst.num_slots = 3;
  inst.num_prbs = 2;
  const auto exact = solve_exact(inst);
  const auto heur = heuristic_on_instance(inst);
  CHECK(exact.evaluation.objective == 0.0);
  CHECK(heur.evaluation.objective == 0.0);
  CHECK(exact.allocated_prbs == 0);
}

TEST_CASE("oversized instances are refused with the enumeration count") {
  MiniInstance inst;
  inst.num_slots = 7;
  inst.num_prbs = 4;
  inst.embb_ues = {{100}, {200}};
  try {
    solve_exact(inst);
    FAIL("no error");
  } catch (const InstanceError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("too large") != std::string::npos);
    CHECK(msg.find("2.28768e+13") != std::string::npos);  // 3^28
  }
  inst.num_slots = 2;
  inst.embb_ues.assign(5, {100});
  CHECK_THROWS_AS(solve_exact(inst), InstanceError);
}

TEST_CASE("malformed instances are rejected") {
  CHECK_THROWS_AS(parse_instance_json("{"), InstanceError);
  CHECK_THROWS_AS(parse_instance_json("[]"), InstanceError);
  CHECK_THROWS_AS(parse_instance_json(R"({"num_slots": 2})"), InstanceError);
  CHECK_THROWS_AS(parse_instance_json(R"({"num_slots": 2, "num_prbs": "x"})"), InstanceError);
  CHECK_THROWS_AS(parse_instance_json(R"({"num_slots": 2, "num_prbs": 1, "extra": 1})"),
                  InstanceError);
  CHECK_THROWS_AS(parse_instance_json(
                      R"({"num_slots": 2, "num_prbs": 1, "xr_ues": [{"bits_per_prb": 10,
                          "pdu_sets": [{"size_bits": 5, "arrival_slot": 1, "deadline_slot": 0}]}]})"),
                  InstanceError);
}

TEST_CASE("instance JSON round trip") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto inst = xrsched::testing::random_mini_instance(rng);
    const auto back = parse_instance_json(instance_to_json(inst));
    CHECK(instance_to_json(back) == instance_to_json(inst));
    CHECK(back.num_slots == inst.num_slots);
    CHECK(back.xr_ues.size() == inst.xr_ues.size());
  }
}

TEST_CASE("exact solver agrees with brute force") {
  std::mt19937_64 rng(2026);
  xrsched::testing::MiniGenOptions opts;
  opts.max_slots = 3;
  opts.max_prbs = 2;
  opts.whole_prb_sizes = false;
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    const auto inst = xrsched::testing::random_mini_instance(rng, opts);
    if (inst.enumeration_count() > 5000) continue;
    const auto brute = xrsched::testing::brute_force(inst);
    const auto sol = solve_exact(inst);
    INFO(instance_to_json(inst));
    CHECK(sol.evaluation.objective == doctest::Approx(brute.best).epsilon(1e-12));
    CHECK(sol.allocated_prbs == brute.min_prbs_at_best);
    CHECK(all_pass(check_constraints(inst, sol.assignment, sol.evaluation)));
    ++compared;
  }
  CHECK(compared > 100);
}

TEST_CASE("exact is never below the heuristic, on any set sizes") {
  std::mt19937_64 rng(77);
  for (bool whole : {true, false}) {
    xrsched::testing::MiniGenOptions opts;
    opts.whole_prb_sizes = whole;
    for (int i = 0; i < 150; ++i) {
      const auto inst = xrsched::testing::random_mini_instance(rng, opts);
      const auto exact = solve_exact(inst);
      const auto heur = heuristic_on_instance(inst);
      INFO(instance_to_json(inst));
      CHECK(exact.evaluation.objective >= heur.evaluation.objective - 1e-9);
      CHECK(all_pass(check_constraints(inst, heur.assignment, heur.evaluation)));
    }
  }
}

TEST_CASE("removing an XR UE costs at most its weight") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto inst = xrsched::testing::random_mini_instance(rng);
    if (inst.xr_ues.empty()) continue;
    const double before = solve_exact(inst).evaluation.objective;
    for (std::size_t k = 0; k < inst.xr_ues.size(); ++k) {
      auto fewer = inst;
      fewer.xr_ues.erase(fewer.xr_ues.begin() + static_cast<std::ptrdiff_t>(k));
      const double after = solve_exact(fewer).evaluation.objective;
      CHECK(after >= before - inst.xr_ues[k].a_k - 1e-9);
    }
  }
}

TEST_CASE("validator catches a broken claim") {
  const auto inst = one_set(600, 1, 3, 1);
  auto ev = evaluate_objective(inst, {kIdle, kIdle, 0});
  ev.gamma[0] = true;
  ev.y[0][0] = true;
  CHECK_FALSE(all_pass(check_constraints(inst, {kIdle, kIdle, 0}, ev)));
}
