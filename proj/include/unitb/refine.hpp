#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unitb/ast.hpp"
#include "unitb/obligations.hpp"

namespace unitb {

// Pairing of an abstract and a concrete event. A missing abstract event means
// the concrete event is new and refines Skip. Removed indices carry witness
// expressions over the concrete state.
struct EventPair {
  const Event* abs = nullptr;  // nullptr = Skip
  const Event* conc = nullptr;
  std::vector<std::pair<std::string, ExprPtr>> removed;  // abstract index -> witness
  std::string tag;  // PO name suffix, e.g. "3" -> C_FLW_3
};

enum class GoalKind { LeadsTo, Unless };

// A subsidiary property the liveness side of a pair requires.
struct RefGoal {
  GoalKind kind;
  std::string name;  // C_FLW[_tag], C_STB[_tag], F_FLW[_tag], F_EN[_tag]
  ExprPtr lhs, rhs;
  std::vector<std::pair<std::string, SortId>> free_vars;  // shared indices
};

struct LivenessPlan {
  std::vector<ProofObligation> pos;   // F_STR / FNS_RMV / C_WKN
  std::vector<RefGoal> goals;         // C_FLW, C_STB, F_FLW
  std::vector<std::string> notes;     // which corollary applied
};

// EVT_SAFE: guard strengthening and simulation (new events against Skip's
// frame on the abstract variables).
std::vector<ProofObligation> po_event_safety(const EventPair& pair, const Machine& conc,
                                             const Machine& abs, const PoOptions& opt = {});

// EVT_LIVE via the schedule-refinement rule with corollary simplification:
// equal fines drop the F side, equal coarses drop the C side, a pointwise
// coarse weakening (C_WKN, discharged here) drops C_FLW/C_STB, fine removal
// turns F_FLW trivial and F_STR into FNS_RMV.
LivenessPlan po_event_liveness(const EventPair& pair, const Machine& conc, const Machine& abs,
                               const PoOptions& opt = {});

struct IndexRemovalResult {
  std::vector<ProofObligation> pos;  // witness-substituted safety obligations
  bool schedules_equal = false;      // liveness holds syntactically by Thm. 4
  std::string mismatch;              // why not, when schedules_equal is false
};

// Index removal: abstract coarse must contain a conjunct i = E (or wd(i = E));
// after substituting the witness, schedules must agree syntactically.
IndexRemovalResult po_index_removal(const EventPair& pair, const Machine& conc,
                                    const Machine& abs, const PoOptions& opt = {});

// Build pairs for a refinement step: same-name events pair up, others are new;
// removed indices take witnesses from the concrete machine's witness clauses.
std::vector<EventPair> default_pairing(const Machine& abs, const Machine& conc,
                                       std::string* error);

}  // namespace unitb
