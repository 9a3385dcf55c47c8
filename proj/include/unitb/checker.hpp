#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "unitb/ast.hpp"
#include "unitb/obligations.hpp"
#include "unitb/refine.hpp"
#include "unitb/semantics.hpp"

namespace unitb {

struct CheckConfig {
  long state_limit = 1000000;
  long po_limit = 10000000;
  int naive_max_states = 0;   // route lasso search through the naive engine up to this size
  bool oracle = false;        // cross-check every rule-certified property semantically
  bool prefer_derivation = true;
  unsigned seed = 0;
  int jobs = 1;
};

struct PoRecord {
  ProofObligation po;
  Verdict verdict;
};

// How a progress/safety goal was resolved.
struct GoalRecord {
  std::string name;                       // label or generated goal name
  std::string kind;                       // "leads-to" | "unless" | "transient" | "invariant"
  std::string resolution;                 // "derivation" | "semantic" | "po"
  std::vector<std::string> rules;         // rule applications, in walk order
  bool ok = false;
  std::string detail;                     // error or counterexample summary
  std::string counterexample_json;
  std::vector<PoRecord> pos;              // residual obligations of the derivation
  std::vector<std::shared_ptr<GoalRecord>> subgoals;
  // transitive reuse citations (label, source machine) under this goal
  std::vector<std::pair<std::string, std::string>> reuse_closure;
};

struct ReuseRecord {
  std::string label;
  std::string from_machine;
  std::string context_event;  // event pair whose liveness proof used it; empty otherwise
  std::string in_machine;
};

struct MachineReport {
  std::string name;
  std::vector<Diagnostic> diagnostics;
  std::vector<PoRecord> pos;                      // INV + SCH_FIS + UN of declared unless props
  std::vector<std::shared_ptr<GoalRecord>> properties;  // declared progress properties
  bool wd_failure = false;
  std::string error;
  bool ok = true;
};

struct PairReport {
  std::string abstract_event;  // "Skip" for new events
  std::string concrete_event;
  std::vector<PoRecord> pos;
  std::vector<std::shared_ptr<GoalRecord>> goals;
  std::vector<std::string> notes;
  bool ok = true;
};

struct RefinementReport {
  std::string abstract_machine;
  std::string concrete_machine;
  std::vector<PairReport> pairs;
  std::string error;
  bool ok = true;
};

struct DependencyViolation {
  std::string label;
  std::string event;
  std::string machine;
  std::string detail;
};

struct DevelopmentReport {
  std::vector<MachineReport> machines;
  std::vector<RefinementReport> refinements;
  std::vector<DependencyViolation> dependency_violations;
  std::vector<ReuseRecord> reuses;
  std::string error;
  int exit_code = 0;
  bool ok = true;
};

// An ordered development: machines plus the refinement chain between them.
struct Development {
  std::vector<Machine> machines;              // topological, abstract first
  std::vector<std::pair<int, int>> steps;     // (abstract idx, concrete idx)
  std::map<std::string, std::string> pair_tags;  // "machine/event" -> tag

  const Machine* by_name(const std::string& n) const;
  int index_of(const std::string& n) const;
  std::vector<const Machine*> ancestors(const Machine& m) const;
};

// Load machines (and an optional development index) from files or a directory.
Development load_development(const std::vector<std::string>& paths, std::string* error);

// Full pipeline: well-formedness, invariance + feasibility obligations,
// declared properties (derivation scripts with residual obligations, or the
// semantic checker), refinement steps, dependency constraints.
DevelopmentReport check_development(const Development& dev, const CheckConfig& cfg);

// Semantic check of one declared property by label.
GoalRecord check_property_semantic(const Machine& m, const Property& prop, const CheckConfig& cfg);

std::string report_to_json(const DevelopmentReport& rep);
std::string report_to_text(const DevelopmentReport& rep, bool color);

// PO dump (stable order): per machine invariance, feasibility, unless and
// derivation residuals, then refinement-step obligations. `only` filters to
// the named machines; empty means all.
std::vector<PoRecord> dump_pos(const Development& dev, const std::vector<std::string>& only,
                               const CheckConfig& cfg);
std::string pos_to_json(const std::vector<PoRecord>& pos);

}  // namespace unitb
