#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "unitb/ast.hpp"
#include "unitb/eval.hpp"

namespace unitb {

using StateId = int;

struct TsEdge {
  StateId from;
  int instance;
  StateId to;
};

struct TransitionSystem {
  const Machine* machine = nullptr;
  std::vector<EventInstance> instances;  // Skip last
  std::vector<Valuation> states;
  std::vector<StateId> initial;
  std::vector<std::vector<std::pair<int, StateId>>> out;  // per state: (instance, to)

  int skip_instance() const { return (int)instances.size() - 1; }
  size_t edge_count() const;
};

struct Lasso {
  std::vector<TsEdge> stem;   // from an initial state to the designated start state
  StateId pivot = -1;         // designated start state; suffix from here avoids `forbid`
  std::vector<TsEdge> loop;   // non-empty cycle; first.from reachable from pivot
  std::vector<TsEdge> to_loop;  // pivot -> loop entry, inside the ¬forbid region
};

struct SemLimits {
  long state_limit = 1000000;
  int naive_max_states = 0;  // >0: use the subset-enumeration engine up to this many region states
};

// Reachable transition system, BFS order from the init-satisfying valuations.
TransitionSystem build_ts(const Machine& m, const SemLimits& limits = {});

struct InvariantResult {
  bool holds = true;
  std::vector<TsEdge> path;  // shortest path to the violating state
  StateId bad_state = -1;
};

// I must evaluate to T at every reachable state; undef raises WdError.
InvariantResult check_invariant(const TransitionSystem& ts, const ExprPtr& inv,
                                const std::vector<std::pair<std::string, Value>>& binding = {});

struct UnlessResult {
  bool holds = true;
  std::optional<TsEdge> edge;  // a (p ∧ ¬q) -> (¬p ∧ ¬q) edge
};

UnlessResult check_unless(const TransitionSystem& ts, const ExprPtr& p, const ExprPtr& q,
                          const std::vector<std::pair<std::string, Value>>& binding = {});

// Per-instance schedule violation on an explicit cycle: coarse everywhere,
// fine somewhere, and no occurrence edge leaving a fine state.
struct CycleAnalysis {
  std::vector<bool> violated;  // per instance
  bool consistent = true;
};

CycleAnalysis cycle_schedule_consistent(const TransitionSystem& ts, const std::vector<TsEdge>& cycle,
                                        const std::vector<std::pair<std::string, Value>>& binding = {});

// A lasso entering `start`, avoiding `forbid` from the pivot onward, with a
// schedule-consistent cycle; nullopt iff none exists. `forbid` may be null
// (no restriction). SCC fixed-point engine; the naive subset engine is used
// instead when the candidate region has at most limits.naive_max_states states.
std::optional<Lasso> find_fair_lasso(const TransitionSystem& ts, const std::vector<StateId>& start,
                                     const ExprPtr& forbid,
                                     const std::vector<std::pair<std::string, Value>>& binding = {},
                                     const SemLimits& limits = {});

struct LivenessResult {
  bool holds = true;
  std::optional<Lasso> lasso;
};

LivenessResult check_leadsto(const TransitionSystem& ts, const ExprPtr& p, const ExprPtr& q,
                             const std::vector<std::pair<std::string, Value>>& binding = {},
                             const SemLimits& limits = {});

LivenessResult check_transient(const TransitionSystem& ts, const ExprPtr& p,
                               const std::vector<std::pair<std::string, Value>>& binding = {},
                               const SemLimits& limits = {});

// Counterexample serialization per the external interface.
std::string lasso_to_json(const TransitionSystem& ts, const Lasso& lasso);

}  // namespace unitb
