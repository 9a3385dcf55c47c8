#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace unitb {

// ---------------------------------------------------------------------------
// Source locations
// ---------------------------------------------------------------------------

struct SourceSpan {
  std::string file;
  int line_begin = 0, col_begin = 0;
  int line_end = 0, col_end = 0;

  std::string str() const;
};

struct Diagnostic {
  SourceSpan span;
  std::string message;
};

// ---------------------------------------------------------------------------
// Sorts and semantic types
// ---------------------------------------------------------------------------

using SortId = int;

struct Sort {
  enum class Kind { Enum, IntRange };
  std::string name;
  Kind kind = Kind::Enum;
  std::vector<std::string> elems;  // Enum carrier, declaration order
  long lo = 0, hi = 0;             // IntRange bounds, inclusive
  bool modular = false;            // IntRange wraps on overflow

  int size() const {
    return kind == Kind::Enum ? (int)elems.size() : (int)(hi - lo + 1);
  }
  bool is_int() const { return kind == Kind::IntRange; }
};

// Semantic type of an expression or variable.
struct SemType {
  enum class Kind { None, Bool, Elem, Set, Map };
  Kind kind = Kind::None;
  SortId sort = -1;   // Elem/Set: carrier; Map: domain
  SortId sort2 = -1;  // Map: range
  bool total = false; // Map only

  static SemType boolean() { return {Kind::Bool, -1, -1, false}; }
  static SemType elem(SortId s) { return {Kind::Elem, s, -1, false}; }
  static SemType set(SortId s) { return {Kind::Set, s, -1, false}; }
  static SemType map(SortId d, SortId r, bool total) { return {Kind::Map, d, r, total}; }

  bool operator==(const SemType& o) const {
    return kind == o.kind && sort == o.sort && sort2 == o.sort2 && total == o.total;
  }
  bool operator!=(const SemType& o) const { return !(*this == o); }
  bool is_none() const { return kind == Kind::None; }
};

struct VarDecl {
  std::string name;
  SemType type;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Expressions (state predicates and terms)
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
  True, False, IntLit, ElemLit,
  Var,       // machine variable, possibly primed
  BoundVar,  // quantifier binder, event index, property free variable
  Equals, Member, Subset,
  And, Or, Not, Implies,
  Forall, Exists,
  SetLit, MapLit,
  Union, Inter, Diff,
  Dom, Ran,
  Apply,     // f.x
  InvApply,  // inv f . x  (unique preimage when x is an element, preimage set when x is a set)
  Image,     // f img S
  DomSub, RanSub, Ovl,
  Interval,  // [lo .. hi), half-open; wraps on modular sorts
  Add, Sub, Less, Leq,
  Wd,        // well-definedness bracket: false when inner is ill-defined
  InvWrap,   // parse-time wrapper for `inv f`; must be consumed by Apply/Image
};

struct Expr {
  ExprKind kind;
  // payload
  long int_val = 0;                 // IntLit
  SortId elem_sort = -1;            // ElemLit
  int elem_idx = -1;                // ElemLit: index into carrier
  std::string name;                 // Var/BoundVar/binder name
  bool primed = false;              // Var
  std::vector<ExprPtr> args;        // children; Forall/Exists: [range, term]
  SortId binder_sort = -1;          // Forall/Exists
  std::vector<std::pair<ExprPtr, ExprPtr>> entries;  // MapLit
  mutable SourceSpan span;
  mutable SemType type;             // filled by sort checker

  explicit Expr(ExprKind k) : kind(k) {}
};

ExprPtr mk_true();
ExprPtr mk_false();
ExprPtr mk_int(long v);
ExprPtr mk_elem(SortId s, int idx);
ExprPtr mk_var(const std::string& name, bool primed = false);
ExprPtr mk_bound(const std::string& name);
ExprPtr mk1(ExprKind k, ExprPtr a);
ExprPtr mk2(ExprKind k, ExprPtr a, ExprPtr b);
ExprPtr mk_quant(ExprKind k, const std::string& binder, SortId sort, ExprPtr range, ExprPtr term);
ExprPtr mk_and(ExprPtr a, ExprPtr b);
ExprPtr mk_or(ExprPtr a, ExprPtr b);
ExprPtr mk_not(ExprPtr a);

// n-ary conjunction; returns true() when empty
ExprPtr mk_and_all(const std::vector<ExprPtr>& xs);

// ---------------------------------------------------------------------------
// Actions and events
// ---------------------------------------------------------------------------

struct Assignment {
  enum class Kind { Det, ChooseIn, SuchThat };
  Kind kind = Kind::Det;
  std::vector<std::string> vars;  // assigned variables (SuchThat may list several)
  ExprPtr rhs;                    // Det: value; ChooseIn: set; SuchThat: before-after predicate
  SourceSpan span;
};

struct Action {
  std::vector<Assignment> assignments;
  // frame = union of assigned variables; everything else is unchanged
  std::vector<std::string> frame() const;
};

struct Event {
  std::string name;
  std::vector<std::pair<std::string, SortId>> indices;
  std::optional<ExprPtr> coarse_decl;  // as written; empty until normalize
  std::optional<ExprPtr> fine_decl;
  std::optional<ExprPtr> guard_decl;
  ExprPtr coarse, fine, guard;         // after normalization
  Action action;
  SourceSpan span;
};

// ---------------------------------------------------------------------------
// Properties, derivations, machines
// ---------------------------------------------------------------------------

enum class PropKind { Invariant, Unless, LeadsTo, Transient };

struct RuleApp;
using RuleAppPtr = std::shared_ptr<RuleApp>;

// One step of a derivation script.
struct RuleApp {
  enum class Kind {
    Implication, Split, Transitivity, Ensure, Induction, Psp,
    TransientFalsifies, Use, Reuse
  };
  Kind kind;
  ExprPtr mid;                       // Transitivity middle predicate
  std::string label;                 // Ensure/Psp unless label; Use/Reuse property label
  std::string label2;                // Psp leads-to label
  std::string from_machine;          // Reuse source machine
  ExprPtr variant;                   // Induction variant expression
  std::string variant_var;           // Induction fresh variable name
  SortId variant_sort = -1;
  std::string event;                 // TransientFalsifies event
  std::vector<ExprPtr> idx_exprs;    // TransientFalsifies index expressions
  std::string tag;                   // optional PO name tag, e.g. "2" -> C_EN_2
  std::vector<std::vector<RuleAppPtr>> branches;  // Transitivity sub-scripts
  SourceSpan span;
};

struct Property {
  std::string label;
  PropKind kind;
  std::vector<std::pair<std::string, SortId>> free_vars;
  ExprPtr lhs;                       // Invariant/Transient: body; Unless/LeadsTo: p
  ExprPtr rhs;                       // Unless/LeadsTo: q
  SourceSpan span;
};

struct Derivation {
  std::string goal_label;
  std::vector<RuleAppPtr> script;
  SourceSpan span;
};

struct WitnessDecl {
  std::string event;
  std::string index;
  ExprPtr expr;
  SourceSpan span;
};

struct Machine {
  std::string name;
  std::string refines;               // abstract machine name, empty if none
  std::vector<Sort> sorts;
  std::vector<std::pair<std::string, ExprPtr>> defs;  // parse-time abbreviations, kept for reference
  std::vector<VarDecl> vars;
  ExprPtr init;
  std::vector<Property> invariants;
  std::vector<Event> events;         // declaration order; Skip is implicit
  std::vector<Property> properties;
  std::vector<Derivation> derivations;
  std::vector<std::pair<std::string, std::string>> depends;  // progress label -> event
  std::vector<WitnessDecl> witnesses;
  bool normalized = false;
  SourceSpan span;

  SortId sort_id(const std::string& n) const;
  const Sort& sort(SortId id) const { return sorts[id]; }
  int var_index(const std::string& n) const;
  const Event* event(const std::string& n) const;
  const Property* property(const std::string& label) const;
  const Derivation* derivation(const std::string& goal_label) const;
};

// ---------------------------------------------------------------------------
// Kernel operations
// ---------------------------------------------------------------------------

// Insert schedule defaults (no schedule -> coarse=false/fine=true, coarse-only
// -> fine=true, fine-only -> coarse=true, no guard -> true). Idempotent.
void normalize(Machine& m);

// Structural well-formedness; empty result means all invariants hold.
std::vector<Diagnostic> well_formed(const Machine& m);

struct EventInstance {
  int event = -1;                    // index into Machine::events; -1 = Skip
  std::vector<int> idx_vals;         // element indices per event index
  std::string label;                 // e.g. "enter[p1]" or "Skip"
};

// All instances in declaration order, lexicographic index order, Skip last.
std::vector<EventInstance> event_instances(const Machine& m);

// Structural equality (normalized machines).
bool equal(const Machine& a, const Machine& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

// AC-canonical form: flattens and sorts and/or, drops units and duplicates,
// removes double negation, canonically renames quantifier binders. Used for
// rule-conclusion matching.
ExprPtr ac_normalize(const ExprPtr& e);
bool ac_equal(const ExprPtr& a, const ExprPtr& b);

// Substitute bound variables by expressions (capture-avoiding over binders).
ExprPtr subst(const ExprPtr& e, const std::map<std::string, ExprPtr>& repl);

// Free (name, primed) pairs of machine variables and unbound names.
void collect_vars(const ExprPtr& e, std::vector<std::pair<std::string, bool>>& state_vars,
                  std::vector<std::string>& bound_vars);

}  // namespace unitb
