#include "unitb/ast.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "unitb/parser.hpp"

namespace unitb {

std::string SourceSpan::str() const {
  std::ostringstream os;
  os << file << ":" << line_begin << ":" << col_begin;
  return os.str();
}

ExprPtr mk_true() { return std::make_shared<Expr>(ExprKind::True); }
ExprPtr mk_false() { return std::make_shared<Expr>(ExprKind::False); }

ExprPtr mk_int(long v) {
  auto e = std::make_shared<Expr>(ExprKind::IntLit);
  e->int_val = v;
  return e;
}

ExprPtr mk_elem(SortId s, int idx) {
  auto e = std::make_shared<Expr>(ExprKind::ElemLit);
  e->elem_sort = s;
  e->elem_idx = idx;
  return e;
}

ExprPtr mk_var(const std::string& name, bool primed) {
  auto e = std::make_shared<Expr>(ExprKind::Var);
  e->name = name;
  e->primed = primed;
  return e;
}

ExprPtr mk_bound(const std::string& name) {
  auto e = std::make_shared<Expr>(ExprKind::BoundVar);
  e->name = name;
  return e;
}

ExprPtr mk1(ExprKind k, ExprPtr a) {
  auto e = std::make_shared<Expr>(k);
  e->args = {std::move(a)};
  return e;
}

ExprPtr mk2(ExprKind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>(k);
  e->args = {std::move(a), std::move(b)};
  return e;
}

ExprPtr mk_quant(ExprKind k, const std::string& binder, SortId sort, ExprPtr range, ExprPtr term) {
  auto e = std::make_shared<Expr>(k);
  e->name = binder;
  e->binder_sort = sort;
  e->args = {std::move(range), std::move(term)};
  return e;
}

ExprPtr mk_and(ExprPtr a, ExprPtr b) { return mk2(ExprKind::And, std::move(a), std::move(b)); }
ExprPtr mk_or(ExprPtr a, ExprPtr b) { return mk2(ExprKind::Or, std::move(a), std::move(b)); }
ExprPtr mk_not(ExprPtr a) { return mk1(ExprKind::Not, std::move(a)); }

ExprPtr mk_and_all(const std::vector<ExprPtr>& xs) {
  if (xs.empty()) return mk_true();
  ExprPtr acc = xs[0];
  for (size_t i = 1; i < xs.size(); ++i) acc = mk_and(acc, xs[i]);
  return acc;
}

std::vector<std::string> Action::frame() const {
  std::vector<std::string> out;
  for (const auto& a : assignments)
    for (const auto& v : a.vars)
      if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  return out;
}

SortId Machine::sort_id(const std::string& n) const {
  for (size_t i = 0; i < sorts.size(); ++i)
    if (sorts[i].name == n) return (SortId)i;
  return -1;
}

int Machine::var_index(const std::string& n) const {
  for (size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == n) return (int)i;
  return -1;
}

const Event* Machine::event(const std::string& n) const {
  for (const auto& e : events)
    if (e.name == n) return &e;
  return nullptr;
}

const Property* Machine::property(const std::string& label) const {
  for (const auto& p : properties)
    if (p.label == label) return &p;
  return nullptr;
}

const Derivation* Machine::derivation(const std::string& goal_label) const {
  for (const auto& d : derivations)
    if (d.goal_label == goal_label) return &d;
  return nullptr;
}

// ---------------------------------------------------------------------------
// normalize / well_formed / event_instances
// ---------------------------------------------------------------------------

void normalize(Machine& m) {
  for (auto& ev : m.events) {
    bool has_c = ev.coarse_decl.has_value();
    bool has_f = ev.fine_decl.has_value();
    ev.coarse = has_c ? *ev.coarse_decl : (has_f ? mk_true() : mk_false());
    ev.fine = has_f ? *ev.fine_decl : mk_true();
    ev.guard = ev.guard_decl ? *ev.guard_decl : mk_true();
    ev.coarse_decl = ev.coarse;
    ev.fine_decl = ev.fine;
    ev.guard_decl = ev.guard;
  }
  if (!m.init) m.init = mk_true();
  m.normalized = true;
}

static bool finite_sort(const Machine& m, SortId s) {
  return s >= 0 && s < (SortId)m.sorts.size();
}

std::vector<Diagnostic> well_formed(const Machine& m) {
  std::vector<Diagnostic> out;
  auto bad = [&](const SourceSpan& sp, const std::string& msg) { out.push_back({sp, msg}); };

  std::set<std::string> sort_names;
  for (const auto& s : m.sorts) {
    if (!sort_names.insert(s.name).second) bad(m.span, "duplicate sort " + s.name);
    if (s.kind == Sort::Kind::Enum) {
      if (s.elems.empty()) bad(m.span, "empty carrier for sort " + s.name);
      std::set<std::string> es(s.elems.begin(), s.elems.end());
      if (es.size() != s.elems.size()) bad(m.span, "duplicate element in sort " + s.name);
    } else if (s.lo > s.hi) {
      bad(m.span, "empty integer range for sort " + s.name);
    }
  }

  std::set<std::string> var_names;
  for (const auto& v : m.vars) {
    if (!var_names.insert(v.name).second) bad(v.span, "duplicate variable " + v.name);
    if (v.type.kind != SemType::Kind::Bool) {
      if (!finite_sort(m, v.type.sort)) bad(v.span, "variable " + v.name + " references undeclared sort");
      if (v.type.kind == SemType::Kind::Map && !finite_sort(m, v.type.sort2))
        bad(v.span, "variable " + v.name + " references undeclared range sort");
    }
  }

  std::set<std::string> event_names;
  for (const auto& ev : m.events) {
    if (ev.name == "Skip") bad(ev.span, "event name Skip is reserved");
    if (!event_names.insert(ev.name).second) bad(ev.span, "duplicate event " + ev.name);
    for (const auto& [in, is] : ev.indices)
      if (!finite_sort(m, is)) bad(ev.span, "index " + in + " over undeclared sort");
    std::set<std::string> assigned;
    for (const auto& a : ev.action.assignments)
      for (const auto& v : a.vars) {
        if (m.var_index(v) < 0) bad(a.span, "assignment to undeclared variable " + v);
        if (!assigned.insert(v).second)
          bad(a.span, "variable " + v + " assigned twice in event " + ev.name);
      }
  }

  std::set<std::string> labels;
  for (const auto& p : m.invariants)
    if (!labels.insert(p.label).second) bad(p.span, "duplicate label " + p.label);
  for (const auto& p : m.properties)
    if (!labels.insert(p.label).second) bad(p.span, "duplicate label " + p.label);

  for (const auto& d : m.derivations) {
    const Property* p = m.property(d.goal_label);
    if (!p) bad(d.span, "derivation goal " + d.goal_label + " is not a declared property");
    else if (p->kind != PropKind::LeadsTo && p->kind != PropKind::Transient)
      bad(d.span, "derivation goal " + d.goal_label + " is not a progress property");
  }
  for (const auto& [lbl, evn] : m.depends) {
    if (!m.property(lbl)) bad(m.span, "depends mentions undeclared label " + lbl);
    if (!m.event(evn)) bad(m.span, "depends mentions undeclared event " + evn);
  }
  for (const auto& w : m.witnesses)
    if (!m.event(w.event)) bad(w.span, "witness for undeclared event " + w.event);
  return out;
}

std::vector<EventInstance> event_instances(const Machine& m) {
  std::vector<EventInstance> out;
  for (size_t ei = 0; ei < m.events.size(); ++ei) {
    const Event& ev = m.events[ei];
    std::vector<int> sizes;
    for (const auto& [n, s] : ev.indices) sizes.push_back(m.sorts[s].size());
    std::vector<int> idx(sizes.size(), 0);
    while (true) {
      EventInstance inst;
      inst.event = (int)ei;
      inst.idx_vals = idx;
      std::ostringstream lab;
      lab << ev.name;
      if (!idx.empty()) {
        lab << "[";
        for (size_t k = 0; k < idx.size(); ++k) {
          if (k) lab << ",";
          const Sort& s = m.sorts[ev.indices[k].second];
          if (s.is_int()) lab << (s.lo + idx[k]);
          else lab << s.elems[idx[k]];
        }
        lab << "]";
      }
      inst.label = lab.str();
      out.push_back(std::move(inst));
      // lexicographic increment, last index fastest
      int k = (int)idx.size() - 1;
      while (k >= 0) {
        if (++idx[k] < sizes[k]) break;
        idx[k] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }
  EventInstance skip;
  skip.event = -1;
  skip.label = "Skip";
  out.push_back(std::move(skip));
  return out;
}

// ---------------------------------------------------------------------------
// structural equality
// ---------------------------------------------------------------------------

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::IntLit: if (a->int_val != b->int_val) return false; break;
    case ExprKind::ElemLit:
      if (a->elem_sort != b->elem_sort || a->elem_idx != b->elem_idx) return false;
      break;
    case ExprKind::Var:
      if (a->name != b->name || a->primed != b->primed) return false;
      break;
    case ExprKind::BoundVar: if (a->name != b->name) return false; break;
    case ExprKind::Forall:
    case ExprKind::Exists:
      if (a->name != b->name || a->binder_sort != b->binder_sort) return false;
      break;
    default: break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  if (a->entries.size() != b->entries.size()) return false;
  for (size_t i = 0; i < a->entries.size(); ++i)
    if (!equal(a->entries[i].first, b->entries[i].first) ||
        !equal(a->entries[i].second, b->entries[i].second))
      return false;
  return true;
}

static bool equal_prop(const Property& a, const Property& b) {
  if (a.label != b.label || a.kind != b.kind || a.free_vars != b.free_vars) return false;
  if (!equal(a.lhs, b.lhs)) return false;
  if ((a.rhs == nullptr) != (b.rhs == nullptr)) return false;
  return !a.rhs || equal(a.rhs, b.rhs);
}

bool equal(const Machine& a, const Machine& b) {
  if (a.name != b.name || a.refines != b.refines) return false;
  if (a.sorts.size() != b.sorts.size() || a.vars.size() != b.vars.size() ||
      a.events.size() != b.events.size() || a.invariants.size() != b.invariants.size() ||
      a.properties.size() != b.properties.size())
    return false;
  for (size_t i = 0; i < a.sorts.size(); ++i) {
    const Sort &x = a.sorts[i], &y = b.sorts[i];
    if (x.name != y.name || x.kind != y.kind || x.elems != y.elems || x.lo != y.lo ||
        x.hi != y.hi || x.modular != y.modular)
      return false;
  }
  for (size_t i = 0; i < a.vars.size(); ++i)
    if (a.vars[i].name != b.vars[i].name || a.vars[i].type != b.vars[i].type) return false;
  if (!equal(a.init, b.init)) return false;
  for (size_t i = 0; i < a.invariants.size(); ++i)
    if (!equal_prop(a.invariants[i], b.invariants[i])) return false;
  for (size_t i = 0; i < a.events.size(); ++i) {
    const Event &x = a.events[i], &y = b.events[i];
    if (x.name != y.name || x.indices != y.indices) return false;
    if (!equal(x.coarse, y.coarse) || !equal(x.fine, y.fine) || !equal(x.guard, y.guard))
      return false;
    if (x.action.assignments.size() != y.action.assignments.size()) return false;
    for (size_t k = 0; k < x.action.assignments.size(); ++k) {
      const Assignment &p = x.action.assignments[k], &q = y.action.assignments[k];
      if (p.kind != q.kind || p.vars != q.vars || !equal(p.rhs, q.rhs)) return false;
    }
  }
  for (size_t i = 0; i < a.properties.size(); ++i)
    if (!equal_prop(a.properties[i], b.properties[i])) return false;
  if (a.depends != b.depends) return false;
  return true;
}

// ---------------------------------------------------------------------------
// substitution
// ---------------------------------------------------------------------------

ExprPtr subst(const ExprPtr& e, const std::map<std::string, ExprPtr>& repl) {
  if (!e || repl.empty()) return e;
  switch (e->kind) {
    case ExprKind::BoundVar: {
      auto it = repl.find(e->name);
      return it != repl.end() ? it->second : e;
    }
    case ExprKind::Forall:
    case ExprKind::Exists: {
      // capture check: rename the binder when it occurs free in a replacement
      bool captured = false;
      for (const auto& [k, v] : repl) {
        if (k == e->name) continue;
        std::vector<std::pair<std::string, bool>> sv;
        std::vector<std::string> bv;
        collect_vars(v, sv, bv);
        if (std::find(bv.begin(), bv.end(), e->name) != bv.end()) { captured = true; break; }
      }
      std::string binder = e->name;
      ExprPtr range = e->args[0], term = e->args[1];
      if (captured) {
        static int fresh_counter = 0;
        binder = e->name + "_r" + std::to_string(fresh_counter++);
        std::map<std::string, ExprPtr> ren{{e->name, mk_bound(binder)}};
        range = subst(range, ren);
        term = subst(term, ren);
      }
      auto inner = repl;
      inner.erase(binder);  // shadowing
      ExprPtr r = subst(range, inner);
      ExprPtr t = subst(term, inner);
      if (!captured && r == e->args[0] && t == e->args[1]) return e;
      auto q = mk_quant(e->kind, binder, e->binder_sort, r, t);
      q->span = e->span;
      q->type = e->type;
      return q;
    }
    default: break;
  }
  bool changed = false;
  auto copy = std::make_shared<Expr>(*e);
  for (auto& a : copy->args) {
    ExprPtr n = subst(a, repl);
    if (n != a) { a = n; changed = true; }
  }
  for (auto& [k, v] : copy->entries) {
    ExprPtr nk = subst(k, repl), nv = subst(v, repl);
    if (nk != k || nv != v) { k = nk; v = nv; changed = true; }
  }
  return changed ? ExprPtr(copy) : e;
}

void collect_vars(const ExprPtr& e, std::vector<std::pair<std::string, bool>>& state_vars,
                  std::vector<std::string>& bound_vars) {
  if (!e) return;
  if (e->kind == ExprKind::Var) {
    auto p = std::make_pair(e->name, e->primed);
    if (std::find(state_vars.begin(), state_vars.end(), p) == state_vars.end())
      state_vars.push_back(p);
    return;
  }
  if (e->kind == ExprKind::BoundVar) {
    if (std::find(bound_vars.begin(), bound_vars.end(), e->name) == bound_vars.end())
      bound_vars.push_back(e->name);
    return;
  }
  if (e->kind == ExprKind::Forall || e->kind == ExprKind::Exists) {
    std::vector<std::string> inner;
    collect_vars(e->args[0], state_vars, inner);
    collect_vars(e->args[1], state_vars, inner);
    for (auto& n : inner)
      if (n != e->name && std::find(bound_vars.begin(), bound_vars.end(), n) == bound_vars.end())
        bound_vars.push_back(n);
    return;
  }
  for (const auto& a : e->args) collect_vars(a, state_vars, bound_vars);
  for (const auto& [k, v] : e->entries) {
    collect_vars(k, state_vars, bound_vars);
    collect_vars(v, state_vars, bound_vars);
  }
}

// ---------------------------------------------------------------------------
// AC normalization
// ---------------------------------------------------------------------------

namespace {

void flatten(ExprKind k, const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (e->kind == k) {
    for (const auto& a : e->args) flatten(k, a, out);
  } else {
    out.push_back(e);
  }
}

ExprPtr ac_rec(const ExprPtr& e, std::vector<std::pair<std::string, std::string>>& renames, int& counter);

ExprPtr ac_nary(ExprKind k, const ExprPtr& e,
                std::vector<std::pair<std::string, std::string>>& renames, int& counter) {
  std::vector<ExprPtr> parts;
  flatten(k, e, parts);
  std::vector<ExprPtr> normed;
  for (const auto& p : parts) {
    ExprPtr n = ac_rec(p, renames, counter);
    if (k == ExprKind::And) {
      if (n->kind == ExprKind::True) continue;
      if (n->kind == ExprKind::False) return mk_false();
    } else {
      if (n->kind == ExprKind::False) continue;
      if (n->kind == ExprKind::True) return mk_true();
    }
    flatten(k, n, normed);  // nested sides may have re-normalized into the same op
  }
  std::sort(normed.begin(), normed.end(),
            [](const ExprPtr& a, const ExprPtr& b) { return pretty(a) < pretty(b); });
  normed.erase(std::unique(normed.begin(), normed.end(),
                           [](const ExprPtr& a, const ExprPtr& b) { return equal(a, b); }),
               normed.end());
  if (normed.empty()) return k == ExprKind::And ? mk_true() : mk_false();
  if (normed.size() == 1) return normed[0];
  ExprPtr acc = normed[0];
  for (size_t i = 1; i < normed.size(); ++i) acc = mk2(k, acc, normed[i]);
  return acc;
}

ExprPtr ac_rec(const ExprPtr& e, std::vector<std::pair<std::string, std::string>>& renames, int& counter) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::And:
    case ExprKind::Or:
      return ac_nary(e->kind, e, renames, counter);
    case ExprKind::Not: {
      ExprPtr a = ac_rec(e->args[0], renames, counter);
      if (a->kind == ExprKind::Not) return a->args[0];
      if (a->kind == ExprKind::True) return mk_false();
      if (a->kind == ExprKind::False) return mk_true();
      return mk_not(a);
    }
    case ExprKind::Implies: {
      ExprPtr a = ac_rec(e->args[0], renames, counter);
      ExprPtr b = ac_rec(e->args[1], renames, counter);
      if (a->kind == ExprKind::True) return b;
      if (a->kind == ExprKind::False) return mk_true();
      return mk2(ExprKind::Implies, a, b);
    }
    case ExprKind::Forall:
    case ExprKind::Exists: {
      std::string fresh = "$" + std::to_string(counter++);
      renames.emplace_back(e->name, fresh);
      ExprPtr r = ac_rec(e->args[0], renames, counter);
      ExprPtr t = ac_rec(e->args[1], renames, counter);
      renames.pop_back();
      return mk_quant(e->kind, fresh, e->binder_sort, r, t);
    }
    case ExprKind::BoundVar: {
      for (auto it = renames.rbegin(); it != renames.rend(); ++it)
        if (it->first == e->name) return mk_bound(it->second);
      return e;
    }
    default: break;
  }
  auto copy = std::make_shared<Expr>(*e);
  for (auto& a : copy->args) a = ac_rec(a, renames, counter);
  for (auto& [k, v] : copy->entries) {
    k = ac_rec(k, renames, counter);
    v = ac_rec(v, renames, counter);
  }
  return copy;
}

}  // namespace

ExprPtr ac_normalize(const ExprPtr& e) {
  std::vector<std::pair<std::string, std::string>> renames;
  int counter = 0;
  return ac_rec(e, renames, counter);
}

bool ac_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  return equal(ac_normalize(a), ac_normalize(b));
}

}  // namespace unitb
