#pragma once

#include <optional>
#include <string>
#include <vector>

#include "unitb/ast.hpp"
#include "unitb/eval.hpp"

namespace unitb {

enum class PoOrigin {
  InvInit, InvPreserve, Un, Neg, CEn, SchFis, GrdStr, Sim, FStr, CWkn, FnsRmv, Witness, Implication
};

const char* po_origin_name(PoOrigin o);

// Entry of an obligation's bound context, enumerated by discharge.
struct CtxEntry {
  std::string name;   // display name; primed machine vars use name'
  SemType type;
  bool is_state = false;   // machine variable (unprimed)
  bool is_primed = false;  // primed machine variable
  int var_idx = -1;        // for state entries
};

struct ProofObligation {
  std::string name;  // hierarchical, stable: machine/context/ORIGIN[_tag]
  PoOrigin origin;
  std::vector<CtxEntry> ctx;
  std::vector<ExprPtr> hyps;
  ExprPtr goal;
};

struct Verdict {
  enum class Kind { Valid, CounterModel, WdFailure, Skipped };
  Kind kind = Kind::Valid;
  std::vector<std::pair<std::string, std::string>> model;  // entry name -> shown value
  std::string reason;                                      // Skipped
  bool ok() const { return kind == Kind::Valid; }
};

std::string verdict_str(const Verdict& v);

// Conjunction of the machine's declared invariants (and, through the
// refinement chain, the inherited ones) with free variables closed by
// universal quantification.
ExprPtr invariant_conjunction(const Machine& m, const std::vector<const Machine*>& ancestors = {});

struct PoOptions {
  long po_limit = 10000000;  // enumeration budget per obligation
  std::vector<const Machine*> ancestors;  // refinement chain for inherited invariants
};

// (INV): init => I, plus I ∧ g ∧ A => I' per (invariant, event) with indices
// kept symbolic in the bound context.
std::vector<ProofObligation> po_invariance(const Machine& m, const PoOptions& opt = {});

// (UN): p ∧ ¬q ∧ I ∧ g ∧ A => p' ∨ q' per event; schedules deliberately absent.
std::vector<ProofObligation> po_unless(const Machine& m, const Property& prop,
                                       const PoOptions& opt = {});

// (SCH_FIS): I ∧ c ∧ f => g per event.
std::vector<ProofObligation> po_feasibility(const Machine& m, const PoOptions& opt = {});

struct FalsifiesPos {
  ProofObligation neg;
  ProofObligation c_en;
  // (F_EN) as a leads-to goal p ∧ c ↝ f; absent when the fine schedule is 1.
  std::optional<std::pair<ExprPtr, ExprPtr>> f_en;
};

// Falsifies conditions for event `ev` with actual index expressions and the
// targeted predicate p; free_vars extend the bound context.
FalsifiesPos po_falsifies(const Machine& m, const Event& ev, const std::vector<ExprPtr>& idx_exprs,
                          const ExprPtr& p, const std::vector<std::pair<std::string, SortId>>& free_vars,
                          const std::string& tag, const std::string& name_prefix,
                          const PoOptions& opt = {});

// Exhaustive enumeration of the bound context with equality propagation:
// valid iff the goal is T whenever all hypotheses are T; the first
// counter-model in canonical order otherwise; undef goal -> wd-failure.
Verdict discharge(const ProofObligation& po, const Machine& m, const PoOptions& opt = {});

}  // namespace unitb
