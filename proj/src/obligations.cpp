#include "unitb/obligations.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "unitb/parser.hpp"

namespace unitb {

const char* po_origin_name(PoOrigin o) {
  switch (o) {
    case PoOrigin::InvInit: return "INV-init";
    case PoOrigin::InvPreserve: return "INV-preserve";
    case PoOrigin::Un: return "UN";
    case PoOrigin::Neg: return "NEG";
    case PoOrigin::CEn: return "C_EN";
    case PoOrigin::SchFis: return "SCH_FIS";
    case PoOrigin::GrdStr: return "GRD-STR";
    case PoOrigin::Sim: return "SIM";
    case PoOrigin::FStr: return "F_STR";
    case PoOrigin::CWkn: return "C_WKN";
    case PoOrigin::FnsRmv: return "FNS_RMV";
    case PoOrigin::Witness: return "WITNESS";
    case PoOrigin::Implication: return "IMP";
  }
  return "?";
}

std::string verdict_str(const Verdict& v) {
  switch (v.kind) {
    case Verdict::Kind::Valid: return "valid";
    case Verdict::Kind::CounterModel: {
      std::ostringstream os;
      os << "counter-model {";
      for (size_t i = 0; i < v.model.size(); ++i) {
        if (i) os << ", ";
        os << v.model[i].first << "=" << v.model[i].second;
      }
      os << "}";
      return os.str();
    }
    case Verdict::Kind::WdFailure: {
      std::ostringstream os;
      os << "wd-failure {";
      for (size_t i = 0; i < v.model.size(); ++i) {
        if (i) os << ", ";
        os << v.model[i].first << "=" << v.model[i].second;
      }
      os << "}";
      return os.str();
    }
    case Verdict::Kind::Skipped: return "skipped(" + v.reason + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// helpers
// ---------------------------------------------------------------------------

namespace {

ExprPtr prime_vars(const ExprPtr& e) {
  if (!e) return e;
  if (e->kind == ExprKind::Var && !e->primed) {
    auto v = mk_var(e->name, true);
    v->type = e->type;
    const_cast<Expr*>(v.get())->span = e->span;
    return v;
  }
  auto copy = std::make_shared<Expr>(*e);
  bool changed = false;
  for (auto& a : copy->args) {
    ExprPtr n = prime_vars(a);
    if (n != a) { a = n; changed = true; }
  }
  for (auto& [k, v] : copy->entries) {
    ExprPtr nk = prime_vars(k), nv = prime_vars(v);
    if (nk != k || nv != v) { k = nk; v = nv; changed = true; }
  }
  return changed ? ExprPtr(copy) : e;
}

ExprPtr closure(const Property& p) {
  ExprPtr body = p.lhs;
  for (auto it = p.free_vars.rbegin(); it != p.free_vars.rend(); ++it) {
    body = mk_quant(ExprKind::Forall, it->first, it->second, mk_true(), body);
    body->type = SemType::boolean();
  }
  return body;
}

void add_state_entries(const Machine& m, std::vector<CtxEntry>& ctx, bool primed_too) {
  for (size_t i = 0; i < m.vars.size(); ++i)
    ctx.push_back({m.vars[i].name, m.vars[i].type, true, false, (int)i});
  if (primed_too)
    for (size_t i = 0; i < m.vars.size(); ++i)
      ctx.push_back({m.vars[i].name + "'", m.vars[i].type, false, true, (int)i});
}

void add_extra(std::vector<CtxEntry>& ctx, const std::string& name, SortId sort) {
  ctx.push_back({name, SemType::elem(sort), false, false, -1});
}

// rename event indices apart from a property's free variables
struct EventView {
  std::vector<std::pair<std::string, SortId>> indices;
  ExprPtr coarse, fine, guard, ba;
};

EventView event_view(const Machine& m, const Event& ev,
                     const std::vector<std::pair<std::string, SortId>>& avoid) {
  EventView v;
  std::map<std::string, ExprPtr> ren;
  for (const auto& [n, s] : ev.indices) {
    bool clash = false;
    for (const auto& [an, as] : avoid)
      if (an == n) clash = true;
    std::string name = clash ? n + "#i" : n;
    if (clash) ren[n] = mk_bound(name);
    v.indices.emplace_back(name, s);
  }
  v.coarse = subst(ev.coarse, ren);
  v.fine = subst(ev.fine, ren);
  v.guard = subst(ev.guard, ren);
  v.ba = subst(before_after(m, ev.action), ren);
  return v;
}

}  // namespace

ExprPtr invariant_conjunction(const Machine& m, const std::vector<const Machine*>& ancestors) {
  std::vector<ExprPtr> parts;
  for (const Machine* anc : ancestors)
    for (const auto& inv : anc->invariants) parts.push_back(closure(inv));
  for (const auto& inv : m.invariants) parts.push_back(closure(inv));
  ExprPtr e = mk_and_all(parts);
  e->type = SemType::boolean();
  return e;
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

std::vector<ProofObligation> po_invariance(const Machine& m, const PoOptions& opt) {
  std::vector<ProofObligation> out;
  ExprPtr inv_all = invariant_conjunction(m, opt.ancestors);
  for (const auto& inv : m.invariants) {
    {
      ProofObligation po;
      po.name = m.name + "/" + inv.label + "/INV-init";
      po.origin = PoOrigin::InvInit;
      add_state_entries(m, po.ctx, false);
      for (const auto& [n, s] : inv.free_vars) add_extra(po.ctx, n, s);
      po.hyps = {m.init};
      po.goal = inv.lhs;
      out.push_back(std::move(po));
    }
    for (const auto& ev : m.events) {
      EventView v = event_view(m, ev, inv.free_vars);
      ProofObligation po;
      po.name = m.name + "/" + inv.label + "/" + ev.name + "/INV-preserve";
      po.origin = PoOrigin::InvPreserve;
      add_state_entries(m, po.ctx, true);
      for (const auto& [n, s] : v.indices) add_extra(po.ctx, n, s);
      for (const auto& [n, s] : inv.free_vars) add_extra(po.ctx, n, s);
      po.hyps = {inv_all, v.guard, v.ba};
      po.goal = prime_vars(inv.lhs);
      out.push_back(std::move(po));
    }
  }
  return out;
}

std::vector<ProofObligation> po_unless(const Machine& m, const Property& prop,
                                       const PoOptions& opt) {
  std::vector<ProofObligation> out;
  ExprPtr inv_all = invariant_conjunction(m, opt.ancestors);
  for (const auto& ev : m.events) {
    EventView v = event_view(m, ev, prop.free_vars);
    ProofObligation po;
    po.name = m.name + "/" + prop.label + "/" + ev.name + "/UN";
    po.origin = PoOrigin::Un;
    add_state_entries(m, po.ctx, true);
    for (const auto& [n, s] : v.indices) add_extra(po.ctx, n, s);
    for (const auto& [n, s] : prop.free_vars) add_extra(po.ctx, n, s);
    // schedules deliberately absent from the hypotheses
    po.hyps = {prop.lhs, mk_not(prop.rhs), inv_all, v.guard, v.ba};
    po.goal = mk_or(prime_vars(prop.lhs), prime_vars(prop.rhs));
    out.push_back(std::move(po));
  }
  return out;
}

std::vector<ProofObligation> po_feasibility(const Machine& m, const PoOptions& opt) {
  std::vector<ProofObligation> out;
  ExprPtr inv_all = invariant_conjunction(m, opt.ancestors);
  for (const auto& ev : m.events) {
    ProofObligation po;
    po.name = m.name + "/" + ev.name + "/SCH_FIS";
    po.origin = PoOrigin::SchFis;
    add_state_entries(m, po.ctx, false);
    for (const auto& [n, s] : ev.indices) add_extra(po.ctx, n, s);
    po.hyps = {inv_all, ev.coarse, ev.fine};
    po.goal = ev.guard;
    out.push_back(std::move(po));
  }
  return out;
}

FalsifiesPos po_falsifies(const Machine& m, const Event& ev, const std::vector<ExprPtr>& idx_exprs,
                          const ExprPtr& p, const std::vector<std::pair<std::string, SortId>>& free_vars,
                          const std::string& tag, const std::string& name_prefix,
                          const PoOptions& opt) {
  std::map<std::string, ExprPtr> sigma;
  for (size_t i = 0; i < ev.indices.size(); ++i) sigma[ev.indices[i].first] = idx_exprs[i];
  ExprPtr c = subst(ev.coarse, sigma);
  ExprPtr f = subst(ev.fine, sigma);
  ExprPtr ba = subst(before_after(m, ev.action), sigma);
  ExprPtr inv_all = invariant_conjunction(m, opt.ancestors);
  std::string suffix = tag.empty() ? "" : "_" + tag;

  FalsifiesPos out;
  {
    ProofObligation po;
    po.name = name_prefix + "/NEG" + suffix;
    po.origin = PoOrigin::Neg;
    add_state_entries(m, po.ctx, true);
    for (const auto& [n, s] : free_vars) add_extra(po.ctx, n, s);
    po.hyps = {inv_all, p, c, f, ba};
    po.goal = mk_not(prime_vars(p));
    out.neg = std::move(po);
  }
  {
    ProofObligation po;
    po.name = name_prefix + "/C_EN" + suffix;
    po.origin = PoOrigin::CEn;
    add_state_entries(m, po.ctx, false);
    for (const auto& [n, s] : free_vars) add_extra(po.ctx, n, s);
    po.hyps = {inv_all, p};
    po.goal = c;
    out.c_en = std::move(po);
  }
  if (!ac_equal(ev.fine, mk_true()))
    out.f_en = std::make_pair(mk_and(p, c), f);
  return out;
}

// ---------------------------------------------------------------------------
// discharge
// ---------------------------------------------------------------------------

namespace {

struct Discharger {
  const ProofObligation& po;
  const Machine& m;
  long limit;

  struct Lit {
    ExprPtr e;
    std::vector<int> mentions;  // ctx entry indices
    int unassigned = 0;
    int prop_entry = -1;
    ExprPtr prop_rhs;
  };
  std::vector<Lit> lits;
  std::vector<std::vector<int>> lits_of_entry;  // entry -> literal indices

  std::vector<bool> assigned;
  Valuation state, primed;
  Env env_;
  std::vector<int> extra_of_entry;  // ctx idx -> env_.bound idx or -1
  long visited = 0;
  Verdict result;
  bool done = false;

  explicit Discharger(const ProofObligation& p, const Machine& mm, long lim)
      : po(p), m(mm), limit(lim) {
    assigned.assign(po.ctx.size(), false);
    state.vals.resize(m.vars.size());
    primed.vals.resize(m.vars.size());
    env_ = {&m, &state, &primed, {}};
    extra_of_entry.assign(po.ctx.size(), -1);
    for (size_t i = 0; i < po.ctx.size(); ++i) {
      if (!po.ctx[i].is_state && !po.ctx[i].is_primed) {
        extra_of_entry[i] = (int)env_.bound.size();
        env_.bound.emplace_back(po.ctx[i].name, Value::boolean(false));
      }
    }
    analyze();
    lits_of_entry.assign(po.ctx.size(), {});
    for (size_t li = 0; li < lits.size(); ++li) {
      lits[li].unassigned = (int)lits[li].mentions.size();
      for (int idx : lits[li].mentions) lits_of_entry[idx].push_back((int)li);
    }
  }

  int entry_of(const std::string& name, bool primed_flag, bool is_bound) {
    for (size_t i = 0; i < po.ctx.size(); ++i) {
      const CtxEntry& c = po.ctx[i];
      if (is_bound) {
        if (!c.is_state && !c.is_primed && c.name == name) return (int)i;
      } else if (primed_flag ? (c.is_primed && c.name == name + "'")
                             : (c.is_state && c.name == name)) {
        return (int)i;
      }
    }
    return -1;
  }

  void mentions_of(const ExprPtr& e, std::vector<int>& out) {
    std::vector<std::pair<std::string, bool>> sv;
    std::vector<std::string> bv;
    collect_vars(e, sv, bv);
    for (const auto& [n, pr] : sv) {
      int idx = entry_of(n, pr, false);
      if (idx >= 0 && std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
    }
    for (const auto& n : bv) {
      int idx = entry_of(n, false, true);
      if (idx >= 0 && std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
    }
  }

  void analyze() {
    std::function<void(const ExprPtr&)> split = [&](const ExprPtr& e) {
      if (e->kind == ExprKind::And) {
        split(e->args[0]);
        split(e->args[1]);
        return;
      }
      Lit l;
      l.e = e;
      mentions_of(e, l.mentions);
      if (e->kind == ExprKind::Equals) {
        for (int side = 0; side < 2 && l.prop_entry < 0; ++side) {
          const ExprPtr& lhs = e->args[side];
          const ExprPtr& rhs = e->args[1 - side];
          int idx = -1;
          if (lhs->kind == ExprKind::Var) idx = entry_of(lhs->name, lhs->primed, false);
          else if (lhs->kind == ExprKind::BoundVar) idx = entry_of(lhs->name, false, true);
          if (idx < 0) continue;
          std::vector<int> rm;
          mentions_of(rhs, rm);
          if (std::find(rm.begin(), rm.end(), idx) == rm.end()) {
            l.prop_entry = idx;
            l.prop_rhs = rhs;
          }
        }
      }
      lits.push_back(std::move(l));
    };
    for (const auto& h : po.hyps) split(h);
  }

  // assigns and checks the literals that become fully assigned; false = conflict
  bool set_entry(int idx, const Value& v) {
    const CtxEntry& c = po.ctx[idx];
    if (c.is_state) state.vals[c.var_idx] = v;
    else if (c.is_primed) primed.vals[c.var_idx] = v;
    else env_.bound[extra_of_entry[idx]].second = v;
    assigned[idx] = true;
    bool ok = true;
    for (int li : lits_of_entry[idx])
      if (--lits[li].unassigned == 0 && ok)
        if (eval_pred(lits[li].e, env_) != TriBool::True) ok = false;
    return ok;
  }

  void unset_entry(int idx) {
    assigned[idx] = false;
    for (int li : lits_of_entry[idx]) ++lits[li].unassigned;
  }

  std::vector<std::pair<std::string, std::string>> model() {
    std::vector<std::pair<std::string, std::string>> out;
    for (size_t i = 0; i < po.ctx.size(); ++i) {
      const CtxEntry& c = po.ctx[i];
      Value v = c.is_state ? state.vals[c.var_idx]
                           : (c.is_primed ? primed.vals[c.var_idx]
                                          : env_.bound[extra_of_entry[i]].second);
      out.emplace_back(c.name, show_value(m, c.type, v));
    }
    return out;
  }

  void search() {
    if (done) return;
    if (++visited > limit) {
      result.kind = Verdict::Kind::Skipped;
      std::ostringstream os;
      os << "enumeration budget " << limit << " exceeded";
      result.reason = os.str();
      done = true;
      return;
    }
    // propagate an equality entry = rhs whose other mentions are assigned
    for (const auto& l : lits) {
      if (l.prop_entry < 0 || assigned[l.prop_entry] || l.unassigned != 1) continue;
      auto v = eval_expr(l.prop_rhs, env_);
      if (!v) return;  // ill-defined side: equality cannot be T
      bool ok = set_entry(l.prop_entry, *v);
      if (ok) search();
      unset_entry(l.prop_entry);
      return;
    }
    int pick = -1;
    for (size_t i = 0; i < po.ctx.size(); ++i)
      if (!assigned[i]) { pick = (int)i; break; }
    if (pick < 0) {
      // hypotheses all T here; decide the goal
      TriBool g = eval_pred(po.goal, env_);
      if (g == TriBool::True) return;
      result.kind = g == TriBool::False ? Verdict::Kind::CounterModel : Verdict::Kind::WdFailure;
      result.model = model();
      done = true;
      return;
    }
    Value v = first_value(m, po.ctx[pick].type);
    while (true) {
      if (set_entry(pick, v)) search();
      unset_entry(pick);
      if (done) return;
      if (!next_value(m, po.ctx[pick].type, v)) break;
    }
  }
};

}  // namespace

Verdict discharge(const ProofObligation& po, const Machine& m, const PoOptions& opt) {
  Discharger d(po, m, opt.po_limit);
  // constant hypotheses make the whole obligation vacuous when not T
  for (const auto& l : d.lits)
    if (l.mentions.empty() && eval_pred(l.e, d.env_) != TriBool::True) return {};
  d.search();
  return d.result;
}

}  // namespace unitb
