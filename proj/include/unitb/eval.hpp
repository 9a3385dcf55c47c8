#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "unitb/ast.hpp"
#include "unitb/tribool.hpp"
#include "unitb/value.hpp"

namespace unitb {

struct WdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LimitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Evaluation environment: machine state (and optionally a primed copy) plus
// a stack of bound variables (event indices, quantifier binders, property
// free variables, obligation context).
struct Env {
  const Machine* m = nullptr;
  const Valuation* state = nullptr;
  const Valuation* primed = nullptr;
  std::vector<std::pair<std::string, Value>> bound;

  const Value* lookup_bound(const std::string& name) const {
    for (auto it = bound.rbegin(); it != bound.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }
};

// Three-valued evaluation. eval_expr yields nullopt exactly when the
// expression is ill-defined (partial application outside the domain,
// non-unique inverse, out-of-range arithmetic on non-modular sorts).
std::optional<Value> eval_expr(const ExprPtr& e, const Env& env);
TriBool eval_pred(const ExprPtr& e, const Env& env);

// Every valuation of the machine's variables, canonical order.
// Throws LimitError if the product exceeds `limit`.
std::vector<Valuation> enumerate_valuations(const Machine& m, long limit = 1000000);

// Valuations satisfying `pred` (eval T), found by backtracking with equality
// propagation over the conjuncts of pred; same set as filtering
// enumerate_valuations but without materializing the full product.
std::vector<Valuation> enumerate_where(const Machine& m, const ExprPtr& pred, long limit = 1000000);

struct Successor {
  int instance;  // index into event_instances order; Skip is the last
  Valuation state;
};

// Deterministic successor relation of one state: every enabled event instance
// paired with each state its action admits, plus the Skip self-loop.
// A guard or action evaluating to undef raises WdError carrying the state.
std::vector<Successor> successors(const Machine& m, const std::vector<EventInstance>& instances,
                                  const Valuation& s);

// Before-after predicate of an action over the machine's variables:
// assignment predicates plus v' = v for every variable outside the frame.
ExprPtr before_after(const Machine& m, const Action& action);

// c/f/g of an instance with index values bound in the environment.
Env instance_env(const Machine& m, const EventInstance& inst, const Valuation& s,
                 const Valuation* primed = nullptr);

}  // namespace unitb
