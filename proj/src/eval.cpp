#include "unitb/eval.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "unitb/parser.hpp"

namespace unitb {

namespace {

constexpr std::optional<Value> undef = std::nullopt;

long sort_size(const Machine& m, SortId s) { return m.sorts[s].size(); }

// Elem values of int sorts are the integer itself; bit positions are offsets.
int bit_of(const Machine& m, SortId s, long elem) {
  return m.sorts[s].is_int() ? (int)(elem - m.sorts[s].lo) : (int)elem;
}
long elem_of_bit(const Machine& m, SortId s, int bit) {
  return m.sorts[s].is_int() ? m.sorts[s].lo + bit : bit;
}

}  // namespace

std::optional<Value> eval_expr(const ExprPtr& e, const Env& env) {
  const Machine& m = *env.m;
  switch (e->kind) {
    case ExprKind::True: return Value::boolean(true);
    case ExprKind::False: return Value::boolean(false);
    case ExprKind::IntLit: return Value::element(e->int_val);
    case ExprKind::ElemLit: {
      const Sort& s = m.sorts[e->elem_sort];
      return Value::element(s.is_int() ? s.lo + e->elem_idx : e->elem_idx);
    }
    case ExprKind::Var: {
      int vi = m.var_index(e->name);
      const Valuation* v = e->primed ? env.primed : env.state;
      if (!v) throw WdError("no valuation for variable " + e->name);
      return v->vals[vi];
    }
    case ExprKind::BoundVar: {
      const Value* v = env.lookup_bound(e->name);
      if (!v) throw WdError("unbound variable " + e->name);
      return *v;
    }
    case ExprKind::And: {
      TriBool t = eval_pred(e, env);
      if (t == TriBool::Undef) return undef;
      return Value::boolean(t == TriBool::True);
    }
    case ExprKind::Or:
    case ExprKind::Not:
    case ExprKind::Implies:
    case ExprKind::Forall:
    case ExprKind::Exists:
    case ExprKind::Wd:
    case ExprKind::Equals:
    case ExprKind::Member:
    case ExprKind::Subset:
    case ExprKind::Less:
    case ExprKind::Leq: {
      TriBool t = eval_pred(e, env);
      if (t == TriBool::Undef) return undef;
      return Value::boolean(t == TriBool::True);
    }
    case ExprKind::SetLit: {
      uint64_t mask = 0;
      SortId s = e->type.sort;
      for (const auto& a : e->args) {
        auto v = eval_expr(a, env);
        if (!v) return undef;
        mask |= 1ull << bit_of(m, s, v->elem);
      }
      return Value::set(mask);
    }
    case ExprKind::MapLit: {
      SortId d = e->type.sort;
      Value out = Value::map((int)sort_size(m, d));
      for (const auto& [k, val] : e->entries) {
        auto kv = eval_expr(k, env);
        auto vv = eval_expr(val, env);
        if (!kv || !vv) return undef;
        out.slots[bit_of(m, d, kv->elem)] = (int16_t)bit_of(m, e->type.sort2, vv->elem);
      }
      return out;
    }
    case ExprKind::Union:
    case ExprKind::Inter:
    case ExprKind::Diff: {
      auto a = eval_expr(e->args[0], env);
      auto b = eval_expr(e->args[1], env);
      if (!a || !b) return undef;
      if (e->kind == ExprKind::Union) return Value::set(a->mask | b->mask);
      if (e->kind == ExprKind::Inter) return Value::set(a->mask & b->mask);
      return Value::set(a->mask & ~b->mask);
    }
    case ExprKind::Dom: {
      auto f = eval_expr(e->args[0], env);
      if (!f) return undef;
      uint64_t mask = 0;
      for (size_t i = 0; i < f->slots.size(); ++i)
        if (f->slots[i] >= 0) mask |= 1ull << i;
      return Value::set(mask);
    }
    case ExprKind::Ran: {
      auto f = eval_expr(e->args[0], env);
      if (!f) return undef;
      uint64_t mask = 0;
      for (int16_t slot : f->slots)
        if (slot >= 0) mask |= 1ull << slot;
      return Value::set(mask);
    }
    case ExprKind::Apply: {
      auto f = eval_expr(e->args[0], env);
      auto x = eval_expr(e->args[1], env);
      if (!f || !x) return undef;
      SortId d = e->args[0]->type.sort;
      int16_t slot = f->slots[bit_of(m, d, x->elem)];
      if (slot < 0) return undef;  // outside the domain
      return Value::element(elem_of_bit(m, e->args[0]->type.sort2, slot));
    }
    case ExprKind::InvApply: {
      auto f = eval_expr(e->args[0], env);
      auto x = eval_expr(e->args[1], env);
      if (!f || !x) return undef;
      SortId d = e->args[0]->type.sort;
      SortId r = e->args[0]->type.sort2;
      if (e->args[1]->type.kind == SemType::Kind::Set) {
        // preimage of a set: possibly empty, never undefined
        uint64_t mask = 0;
        for (size_t i = 0; i < f->slots.size(); ++i)
          if (f->slots[i] >= 0 && (x->mask & (1ull << f->slots[i]))) mask |= 1ull << i;
        return Value::set(mask);
      }
      int target = bit_of(m, r, x->elem);
      int found = -1;
      for (size_t i = 0; i < f->slots.size(); ++i)
        if (f->slots[i] == target) {
          if (found >= 0) return undef;  // not unique
          found = (int)i;
        }
      if (found < 0) return undef;
      return Value::element(elem_of_bit(m, d, found));
    }
    case ExprKind::Image: {
      auto f = eval_expr(e->args[0], env);
      auto s = eval_expr(e->args[1], env);
      if (!f || !s) return undef;
      uint64_t mask = 0;
      for (size_t i = 0; i < f->slots.size(); ++i)
        if (f->slots[i] >= 0 && (s->mask & (1ull << i))) mask |= 1ull << f->slots[i];
      return Value::set(mask);
    }
    case ExprKind::DomSub: {
      auto s = eval_expr(e->args[0], env);
      auto f = eval_expr(e->args[1], env);
      if (!s || !f) return undef;
      Value out = *f;
      for (size_t i = 0; i < out.slots.size(); ++i)
        if (s->mask & (1ull << i)) out.slots[i] = -1;
      return out;
    }
    case ExprKind::RanSub: {
      auto f = eval_expr(e->args[0], env);
      auto s = eval_expr(e->args[1], env);
      if (!f || !s) return undef;
      Value out = *f;
      for (auto& slot : out.slots)
        if (slot >= 0 && (s->mask & (1ull << slot))) slot = -1;
      return out;
    }
    case ExprKind::Ovl: {
      auto f = eval_expr(e->args[0], env);
      auto g = eval_expr(e->args[1], env);
      if (!f || !g) return undef;
      Value out = *f;
      for (size_t i = 0; i < out.slots.size(); ++i)
        if (g->slots[i] >= 0) out.slots[i] = g->slots[i];
      return out;
    }
    case ExprKind::Interval: {
      auto lo = eval_expr(e->args[0], env);
      auto hi = eval_expr(e->args[1], env);
      if (!lo || !hi) return undef;
      SortId s = e->type.sort;
      const Sort& so = m.sorts[s];
      uint64_t mask = 0;
      if (so.modular) {
        // walk the ring from lo until hi (exclusive); empty when lo = hi
        long n = so.size();
        long cur = lo->elem;
        for (long steps = 0; steps < n; ++steps) {
          if (cur == hi->elem) break;
          mask |= 1ull << bit_of(m, s, cur);
          cur = so.lo + ((cur - so.lo + 1) % n);
        }
      } else {
        for (long v = lo->elem; v < hi->elem; ++v) {
          if (v < so.lo || v > so.hi) return undef;
          mask |= 1ull << bit_of(m, s, v);
        }
      }
      return Value::set(mask);
    }
    case ExprKind::Add:
    case ExprKind::Sub: {
      auto a = eval_expr(e->args[0], env);
      auto b = eval_expr(e->args[1], env);
      if (!a || !b) return undef;
      const Sort& so = m.sorts[e->type.sort];
      long r = e->kind == ExprKind::Add ? a->elem + b->elem : a->elem - b->elem;
      if (so.modular) {
        long n = so.size();
        r = so.lo + (((r - so.lo) % n + n) % n);
      } else if (r < so.lo || r > so.hi) {
        return undef;  // out of range on a non-modular sort
      }
      return Value::element(r);
    }
    default:
      throw WdError("eval_expr: unexpected node");
  }
}

TriBool eval_pred(const ExprPtr& e, const Env& env) {
  const Machine& m = *env.m;
  auto as_tri = [](const std::optional<Value>& v) {
    if (!v) return TriBool::Undef;
    return tri_of(v->b);
  };
  switch (e->kind) {
    case ExprKind::True: return TriBool::True;
    case ExprKind::False: return TriBool::False;
    case ExprKind::Var:
    case ExprKind::BoundVar: return as_tri(eval_expr(e, env));
    case ExprKind::And:
      return tri_and(eval_pred(e->args[0], env), eval_pred(e->args[1], env));
    case ExprKind::Or:
      return tri_or(eval_pred(e->args[0], env), eval_pred(e->args[1], env));
    case ExprKind::Not: return tri_not(eval_pred(e->args[0], env));
    case ExprKind::Implies:
      return tri_implies(eval_pred(e->args[0], env), eval_pred(e->args[1], env));
    case ExprKind::Wd: {
      TriBool t = eval_pred(e->args[0], env);
      return t == TriBool::Undef ? TriBool::False : t;
    }
    case ExprKind::Forall:
    case ExprKind::Exists: {
      bool fa = e->kind == ExprKind::Forall;
      const Sort& s = m.sorts[e->binder_sort];
      TriBool acc = fa ? TriBool::True : TriBool::False;
      Env inner = env;
      inner.bound.emplace_back(e->name, Value::element(0));
      for (int i = 0; i < s.size(); ++i) {
        inner.bound.back().second = Value::element(s.is_int() ? s.lo + i : i);
        TriBool r = eval_pred(e->args[0], inner);
        // relativised quantification: forall folds range => term, exists range ∧ term
        TriBool t = fa ? tri_implies(r, eval_pred(e->args[1], inner))
                       : tri_and(r, eval_pred(e->args[1], inner));
        acc = fa ? tri_and(acc, t) : tri_or(acc, t);
        if (acc == (fa ? TriBool::False : TriBool::True)) return acc;
      }
      return acc;
    }
    case ExprKind::Equals: {
      auto a = eval_expr(e->args[0], env);
      auto b = eval_expr(e->args[1], env);
      if (!a || !b) return TriBool::Undef;
      return tri_of(*a == *b);
    }
    case ExprKind::Member: {
      auto x = eval_expr(e->args[0], env);
      auto s = eval_expr(e->args[1], env);
      if (!x || !s) return TriBool::Undef;
      return tri_of((s->mask >> bit_of(m, e->args[1]->type.sort, x->elem)) & 1);
    }
    case ExprKind::Subset: {
      auto a = eval_expr(e->args[0], env);
      auto b = eval_expr(e->args[1], env);
      if (!a || !b) return TriBool::Undef;
      return tri_of((a->mask & ~b->mask) == 0);
    }
    case ExprKind::Less:
    case ExprKind::Leq: {
      auto a = eval_expr(e->args[0], env);
      auto b = eval_expr(e->args[1], env);
      if (!a || !b) return TriBool::Undef;
      return tri_of(e->kind == ExprKind::Less ? a->elem < b->elem : a->elem <= b->elem);
    }
    default:
      return as_tri(eval_expr(e, env));
  }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

std::vector<Valuation> enumerate_valuations(const Machine& m, long limit) {
  long total = 1;
  for (const auto& v : m.vars) {
    long n = value_space_size(m, v.type);
    if (n < 0 || total > limit / std::max(n, 1l)) {
      std::ostringstream os;
      os << "state space exceeds limit " << limit;
      throw LimitError(os.str());
    }
    total *= n;
  }
  std::vector<Valuation> out;
  out.reserve(total);
  Valuation v;
  for (const auto& var : m.vars) v.vals.push_back(first_value(m, var.type));
  while (true) {
    out.push_back(v);
    // first variable least significant
    size_t i = 0;
    for (; i < m.vars.size(); ++i) {
      if (next_value(m, m.vars[i].type, v.vals[i])) break;
      v.vals[i] = first_value(m, m.vars[i].type);
    }
    if (i == m.vars.size()) break;
  }
  return out;
}

namespace {

void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->kind == ExprKind::And) {
    flatten_and(e->args[0], out);
    flatten_and(e->args[1], out);
  } else {
    out.push_back(e);
  }
}

}  // namespace

std::vector<Valuation> enumerate_where(const Machine& m, const ExprPtr& pred, long limit) {
  std::vector<ExprPtr> lits;
  flatten_and(pred, lits);

  struct Lit {
    ExprPtr e;
    std::vector<int> mentions;  // variable indices
    int prop_var = -1;          // var such that e is (var = rhs) with rhs free of it
    ExprPtr prop_rhs;
  };
  std::vector<Lit> ls;
  for (const auto& e : lits) {
    Lit l;
    l.e = e;
    std::vector<std::pair<std::string, bool>> sv;
    std::vector<std::string> bv;
    collect_vars(e, sv, bv);
    for (const auto& [n, primed] : sv)
      if (!primed) l.mentions.push_back(m.var_index(n));
    if (e->kind == ExprKind::Equals) {
      for (int side = 0; side < 2; ++side) {
        const ExprPtr& lhs = e->args[side];
        const ExprPtr& rhs = e->args[1 - side];
        if (lhs->kind == ExprKind::Var && !lhs->primed) {
          int vi = m.var_index(lhs->name);
          std::vector<std::pair<std::string, bool>> rv;
          std::vector<std::string> rb;
          collect_vars(rhs, rv, rb);
          bool self = false;
          for (const auto& [n, p] : rv)
            if (!p && m.var_index(n) == vi) self = true;
          if (!self) {
            l.prop_var = vi;
            l.prop_rhs = rhs;
            break;
          }
        }
      }
    }
    ls.push_back(std::move(l));
  }

  std::vector<Valuation> out;
  std::vector<bool> assigned(m.vars.size(), false);
  Valuation cur;
  cur.vals.resize(m.vars.size());
  long visited = 0;

  std::function<void()> go = [&]() {
    if (++visited > limit) throw LimitError("enumeration limit exceeded");
    // literals fully assigned must hold
    Env env{&m, &cur, nullptr, {}};
    for (const auto& l : ls) {
      bool ready = true;
      for (int vi : l.mentions)
        if (!assigned[vi]) { ready = false; break; }
      if (ready && eval_pred(l.e, env) != TriBool::True) return;
    }
    // propagate an equality var = rhs whose rhs is fully assigned
    for (const auto& l : ls) {
      if (l.prop_var < 0 || assigned[l.prop_var]) continue;
      bool ready = true;
      for (int vi : l.mentions)
        if (vi != l.prop_var && !assigned[vi]) { ready = false; break; }
      if (!ready) continue;
      auto v = eval_expr(l.prop_rhs, env);
      if (!v) return;  // equality with an ill-defined side cannot be T
      if (v->kind == Value::Kind::Elem) {
        // stored representation of Elem matches eval representation
      }
      cur.vals[l.prop_var] = *v;
      assigned[l.prop_var] = true;
      go();
      assigned[l.prop_var] = false;
      return;
    }
    // first unassigned variable in declaration order
    int pick = -1;
    for (size_t i = 0; i < m.vars.size(); ++i)
      if (!assigned[i]) { pick = (int)i; break; }
    if (pick < 0) {
      out.push_back(cur);
      return;
    }
    Value v = first_value(m, m.vars[pick].type);
    assigned[pick] = true;
    while (true) {
      cur.vals[pick] = v;
      go();
      if (!next_value(m, m.vars[pick].type, v)) break;
    }
    assigned[pick] = false;
  };
  go();
  return out;
}

// ---------------------------------------------------------------------------
// Successors
// ---------------------------------------------------------------------------

Env instance_env(const Machine& m, const EventInstance& inst, const Valuation& s,
                 const Valuation* primed) {
  Env env{&m, &s, primed, {}};
  if (inst.event >= 0) {
    const Event& ev = m.events[inst.event];
    for (size_t i = 0; i < ev.indices.size(); ++i) {
      const Sort& so = m.sorts[ev.indices[i].second];
      long val = so.is_int() ? so.lo + inst.idx_vals[i] : inst.idx_vals[i];
      env.bound.emplace_back(ev.indices[i].first, Value::element(val));
    }
  }
  return env;
}

ExprPtr before_after(const Machine& m, const Action& action) {
  std::vector<ExprPtr> parts;
  for (const auto& a : action.assignments) {
    switch (a.kind) {
      case Assignment::Kind::Det:
        parts.push_back(mk2(ExprKind::Equals, mk_var(a.vars[0], true), a.rhs));
        break;
      case Assignment::Kind::ChooseIn:
        parts.push_back(mk2(ExprKind::Member, mk_var(a.vars[0], true), a.rhs));
        break;
      case Assignment::Kind::SuchThat:
        parts.push_back(a.rhs);
        break;
    }
  }
  auto frame = action.frame();
  for (const auto& v : m.vars)
    if (std::find(frame.begin(), frame.end(), v.name) == frame.end())
      parts.push_back(mk2(ExprKind::Equals, mk_var(v.name, true), mk_var(v.name)));
  ExprPtr ba = mk_and_all(parts);
  // the primed equalities need types for evaluation
  struct Typer {
    const Machine& m;
    void run(const ExprPtr& e) {
      if (e->kind == ExprKind::Var) {
        int vi = m.var_index(e->name);
        if (vi >= 0) e->type = m.vars[vi].type;
      }
      if (e->kind == ExprKind::Equals || e->kind == ExprKind::Member ||
          e->kind == ExprKind::And) {
        for (const auto& a : e->args) run(a);
        if (e->kind == ExprKind::And) e->type = SemType::boolean();
        else e->type = SemType::boolean();
      }
    }
  };
  Typer{m}.run(ba);
  return ba;
}

std::vector<Successor> successors(const Machine& m, const std::vector<EventInstance>& instances,
                                  const Valuation& s) {
  std::vector<Successor> out;
  for (size_t ii = 0; ii < instances.size(); ++ii) {
    const EventInstance& inst = instances[ii];
    if (inst.event < 0) {
      out.push_back({(int)ii, s});  // Skip self-loop
      continue;
    }
    const Event& ev = m.events[inst.event];
    Env env = instance_env(m, inst, s);
    TriBool g = eval_pred(ev.guard, env);
    if (g == TriBool::Undef)
      throw WdError("guard of " + inst.label + " ill-defined at " + show_valuation(m, s));
    if (g != TriBool::True) continue;

    // accumulate candidate post-states assignment by assignment
    std::vector<Valuation> posts = {s};
    for (const auto& a : ev.action.assignments) {
      std::vector<Valuation> nexts;
      for (const auto& p : posts) {
        switch (a.kind) {
          case Assignment::Kind::Det: {
            auto v = eval_expr(a.rhs, env);
            if (!v)
              throw WdError("action of " + inst.label + " ill-defined at " + show_valuation(m, s));
            Valuation q = p;
            q.vals[m.var_index(a.vars[0])] = *v;
            nexts.push_back(std::move(q));
            break;
          }
          case Assignment::Kind::ChooseIn: {
            auto set = eval_expr(a.rhs, env);
            if (!set)
              throw WdError("action of " + inst.label + " ill-defined at " + show_valuation(m, s));
            int vi = m.var_index(a.vars[0]);
            SortId sid = m.vars[vi].type.sort;
            for (int bit = 0; bit < m.sorts[sid].size(); ++bit)
              if (set->mask & (1ull << bit)) {
                Valuation q = p;
                q.vals[vi] = Value::element(elem_of_bit(m, sid, bit));
                nexts.push_back(std::move(q));
              }
            break;  // empty set: no successor through this instance
          }
          case Assignment::Kind::SuchThat: {
            // enumerate the assigned variables' joint space, filter by the predicate
            std::vector<int> vis;
            for (const auto& vn : a.vars) vis.push_back(m.var_index(vn));
            Valuation q = p;
            std::function<void(size_t)> rec = [&](size_t k) {
              if (k == vis.size()) {
                Env be = env;
                be.primed = &q;
                TriBool t = eval_pred(a.rhs, be);
                if (t == TriBool::Undef)
                  throw WdError("action of " + inst.label + " ill-defined at " +
                                show_valuation(m, s));
                if (t == TriBool::True) nexts.push_back(q);
                return;
              }
              const SemType& ty = m.vars[vis[k]].type;
              Value v = first_value(m, ty);
              while (true) {
                q.vals[vis[k]] = v;
                rec(k + 1);
                if (!next_value(m, ty, v)) break;
              }
            };
            rec(0);
            break;
          }
        }
      }
      posts = std::move(nexts);
    }
    for (auto& p : posts) out.push_back({(int)ii, std::move(p)});
  }
  return out;
}

}  // namespace unitb
