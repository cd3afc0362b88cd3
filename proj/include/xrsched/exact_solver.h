#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xrsched/errors.h"

namespace xrsched {

struct MiniPduSet {
  std::int64_t size_bits = 0;
  int arrival_slot = 0;
  int deadline_slot = 0;  // last slot that may carry its bits
};

struct MiniXrUe {
  double a_k = 1000.0;
  std::int64_t bits_per_prb = 0;
  std::vector<MiniPduSet> pdu_sets;
};

struct MiniEmbbUe {
  std::int64_t bits_per_prb = 0;
};

inline constexpr int kMaxMiniSlots = 6;
inline constexpr int kMaxMiniPrbs = 4;
inline constexpr int kMaxMiniUes = 4;
inline constexpr int kMaxMiniSetsPerUe = 8;

/// A static instance with flat channels. UE indices run over xr_ues first,
/// then embb_ues.
struct MiniInstance {
  int num_slots = 0;
  int num_prbs = 0;
  std::vector<MiniXrUe> xr_ues;
  std::vector<MiniEmbbUe> embb_ues;
  double satisfaction_fraction = 1.0;
  double slot_ms = 0.5;

  int num_ues() const { return static_cast<int>(xr_ues.size() + embb_ues.size()); }
  /// Throws InstanceError for malformed instances and for instances beyond
  /// the enumeration limits (the message carries the raw enumeration count).
  void validate() const;
  double horizon_s() const { return num_slots * slot_ms / 1000.0; }
  /// (U+1)^(S*P): per-PRB choices without symmetry reduction.
  double enumeration_count() const;
};

inline constexpr int kIdle = -1;

/// assignment[s * num_prbs + p] = UE index or kIdle.
using Assignment = std::vector<int>;

struct Evaluation {
  double objective = 0.0;
  double xr_term = 0.0;
  double embb_term = 0.0;
  std::vector<bool> gamma;                              // per XR UE
  std::vector<std::vector<bool>> y;                     // [k][i]
  std::vector<std::vector<std::vector<std::int64_t>>> served;  // [k][i][s] bits
};

inline constexpr double kEmbbRateFloorBps = 1.0;

/// Derives y, gamma and the set-to-slot bit split from an assignment: the
/// largest set of PDU-sets each UE can complete inside their windows, found
/// by subset search with an earliest-deadline feasibility test. Throws
/// ContractError when the assignment has the wrong shape or names an
/// unknown UE.
Evaluation evaluate_objective(const MiniInstance& instance, const Assignment& assignment);

struct ExactSolution {
  Assignment assignment;
  Evaluation evaluation;
  int allocated_prbs = 0;
  std::uint64_t nodes = 0;
};

/// Exhaustive search over per-slot PRB counts with branch and bound.
/// Among optimal assignments the one with the fewest allocated PRBs wins,
/// then the lexicographically smallest.
ExactSolution solve_exact(const MiniInstance& instance);

struct HeuristicSolution {
  Assignment assignment;
  Evaluation evaluation;
};

/// The proposed scheduler run slot by slot on the instance with error-free
/// links.
HeuristicSolution heuristic_on_instance(const MiniInstance& instance);

struct ConstraintCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Re-checks an evaluated assignment against the problem constraints
/// without reusing the solver's set-selection code.
std::vector<ConstraintCheck> check_constraints(const MiniInstance& instance,
                                               const Assignment& assignment,
                                               const Evaluation& evaluation);

MiniInstance parse_instance_json(const std::string& text);  // InstanceError
std::string instance_to_json(const MiniInstance& instance);

}  // namespace xrsched
