#include "unitb/refine.hpp"

#include <algorithm>
#include <sstream>

#include "unitb/eval.hpp"
#include "unitb/parser.hpp"

namespace unitb {

namespace {

void add_state_entries(const Machine& m, std::vector<CtxEntry>& ctx, bool primed_too) {
  for (size_t i = 0; i < m.vars.size(); ++i)
    ctx.push_back({m.vars[i].name, m.vars[i].type, true, false, (int)i});
  if (primed_too)
    for (size_t i = 0; i < m.vars.size(); ++i)
      ctx.push_back({m.vars[i].name + "'", m.vars[i].type, false, true, (int)i});
}

std::map<std::string, ExprPtr> witness_subst(const EventPair& pair) {
  std::map<std::string, ExprPtr> sigma;
  for (const auto& [idx, expr] : pair.removed) sigma[idx] = expr;
  return sigma;
}

// identity before-after of Skip over the abstract machine's variables
ExprPtr skip_frame(const Machine& abs) {
  std::vector<ExprPtr> parts;
  for (const auto& v : abs.vars) {
    auto eq = mk2(ExprKind::Equals, mk_var(v.name, true), mk_var(v.name));
    eq->args[0]->type = v.type;
    eq->args[1]->type = v.type;
    eq->type = SemType::boolean();
    parts.push_back(eq);
  }
  ExprPtr e = mk_and_all(parts);
  e->type = SemType::boolean();
  return e;
}

std::string pair_name(const Machine& conc, const EventPair& pair) {
  return conc.name + "/refines/" + pair.conc->name;
}

}  // namespace

std::vector<ProofObligation> po_event_safety(const EventPair& pair, const Machine& conc,
                                             const Machine& abs, const PoOptions& opt) {
  std::vector<ProofObligation> out;
  ExprPtr inv_c = invariant_conjunction(conc, opt.ancestors);
  ExprPtr ba1 = before_after(conc, pair.conc->action);
  auto sigma = witness_subst(pair);
  bool removal = !pair.removed.empty();
  PoOrigin safety_origin = removal ? PoOrigin::Witness : PoOrigin::GrdStr;

  auto shared_indices = [&](ProofObligation& po) {
    for (const auto& [n, s] : pair.conc->indices) po.ctx.push_back({n, SemType::elem(s), false, false, -1});
  };

  if (pair.abs) {
    ExprPtr g0 = subst(pair.abs->guard, sigma);
    ProofObligation po;
    po.name = pair_name(conc, pair) + (removal ? "/WITNESS-GRD" : "/GRD-STR");
    po.origin = safety_origin == PoOrigin::Witness ? PoOrigin::Witness : PoOrigin::GrdStr;
    add_state_entries(conc, po.ctx, false);
    shared_indices(po);
    po.hyps = {inv_c, pair.conc->guard};
    po.goal = g0;
    out.push_back(std::move(po));
  }

  {
    ProofObligation po;
    po.name = pair_name(conc, pair) + "/SIM";
    po.origin = PoOrigin::Sim;
    add_state_entries(conc, po.ctx, true);
    shared_indices(po);
    po.hyps = {inv_c, pair.conc->guard, ba1};
    if (pair.abs) {
      // the abstract before-after over the abstract frame, index-substituted
      po.goal = subst(before_after(abs, pair.abs->action), sigma);
    } else {
      po.goal = skip_frame(abs);
    }
    out.push_back(std::move(po));
  }
  return out;
}

namespace {

// abstract coarse schedule split as  idx = E  (possibly wd-bracketed) ∧ rest,
// with E matching the declared witness
bool strip_index_eq(const ExprPtr& coarse, const std::string& idx, const ExprPtr& witness,
                    ExprPtr* rest_out) {
  std::vector<ExprPtr> parts;
  std::function<void(const ExprPtr&)> flat = [&](const ExprPtr& e) {
    if (e->kind == ExprKind::And) {
      flat(e->args[0]);
      flat(e->args[1]);
    } else {
      parts.push_back(e);
    }
  };
  flat(coarse);
  int found = -1;
  for (size_t i = 0; i < parts.size(); ++i) {
    ExprPtr p = parts[i];
    if (p->kind == ExprKind::Wd) p = p->args[0];
    if (p->kind != ExprKind::Equals) continue;
    for (int side = 0; side < 2; ++side) {
      const ExprPtr& l = p->args[side];
      if (l->kind == ExprKind::BoundVar && l->name == idx &&
          ac_equal(p->args[1 - side], witness)) {
        found = (int)i;
        break;
      }
    }
    if (found >= 0) break;
  }
  if (found < 0) return false;
  std::vector<ExprPtr> rest;
  for (size_t i = 0; i < parts.size(); ++i)
    if ((int)i != found) rest.push_back(parts[i]);
  *rest_out = mk_and_all(rest);
  (*rest_out)->type = SemType::boolean();
  return true;
}

bool mentions_bound(const ExprPtr& e, const std::string& name) {
  std::vector<std::pair<std::string, bool>> sv;
  std::vector<std::string> bv;
  collect_vars(e, sv, bv);
  return std::find(bv.begin(), bv.end(), name) != bv.end();
}

}  // namespace

LivenessPlan po_event_liveness(const EventPair& pair, const Machine& conc, const Machine& abs,
                               const PoOptions& opt) {
  LivenessPlan plan;
  if (!pair.abs) {
    plan.notes.push_back("new event refines Skip; no liveness obligation");
    return plan;
  }
  auto sigma = witness_subst(pair);
  ExprPtr c0 = subst(pair.abs->coarse, sigma);
  ExprPtr f0 = subst(pair.abs->fine, sigma);
  ExprPtr c1 = pair.conc->coarse;
  ExprPtr f1 = pair.conc->fine;
  std::string suffix = pair.tag.empty() ? "" : "_" + pair.tag;
  ExprPtr inv_c = invariant_conjunction(conc, opt.ancestors);

  std::vector<std::pair<std::string, SortId>> fvs(pair.conc->indices.begin(),
                                                  pair.conc->indices.end());

  if (ac_equal(c0, mk_false())) {
    plan.notes.push_back("abstract event unscheduled; schedule implication trivial");
    return plan;
  }

  ExprPtr lhs0 = mk_and(c0, f0);  // c0 ∧ f0, the recurring premise
  lhs0->type = SemType::boolean();

  // F side
  bool fine_equal = ac_equal(f1, f0);
  bool fine_removed = ac_equal(f1, mk_true());
  if (fine_equal) {
    plan.notes.push_back("fine schedules equal; F_FLW and F_STR dropped");
  } else {
    if (!fine_removed) {
      RefGoal g;
      g.kind = GoalKind::LeadsTo;
      g.name = "F_FLW" + suffix;
      g.lhs = lhs0;
      g.rhs = f1;
      g.free_vars = fvs;
      plan.goals.push_back(std::move(g));
    } else {
      plan.notes.push_back("fine schedule removed; F_FLW trivial");
    }
    ProofObligation po;
    bool rmv = fine_removed && ac_equal(c1, c0);
    po.name = pair_name(conc, pair) + "/" + (rmv ? "FNS_RMV" : "F_STR") + suffix;
    po.origin = rmv ? PoOrigin::FnsRmv : PoOrigin::FStr;
    add_state_entries(conc, po.ctx, false);
    for (const auto& [n, s] : fvs) po.ctx.push_back({n, SemType::elem(s), false, false, -1});
    po.hyps = {inv_c, c1, f1};
    po.goal = f0;
    plan.pos.push_back(std::move(po));
  }

  // C side
  if (ac_equal(c1, c0)) {
    plan.notes.push_back("coarse schedules equal; C_FLW and C_STB dropped");
    return plan;
  }
  {
    // pointwise weakening: I ∧ c0 => c1 discharges both C conditions
    ProofObligation po;
    po.name = pair_name(conc, pair) + "/C_WKN" + suffix;
    po.origin = PoOrigin::CWkn;
    add_state_entries(conc, po.ctx, false);
    for (const auto& [n, s] : fvs) po.ctx.push_back({n, SemType::elem(s), false, false, -1});
    po.hyps = {inv_c, c0};
    po.goal = c1;
    Verdict v = discharge(po, conc, opt);
    if (v.ok()) {
      plan.notes.push_back("coarse schedule weakened pointwise (C_WKN); C_FLW and C_STB dropped");
      plan.pos.push_back(std::move(po));
      return plan;
    }
  }
  {
    RefGoal g;
    g.kind = GoalKind::LeadsTo;
    g.name = "C_FLW" + suffix;
    g.lhs = lhs0;
    g.rhs = c1;
    g.free_vars = fvs;
    plan.goals.push_back(std::move(g));
  }
  {
    RefGoal g;
    g.kind = GoalKind::Unless;
    g.name = "C_STB" + suffix;
    g.lhs = c1;
    g.rhs = mk_not(c0);
    g.rhs->type = SemType::boolean();
    g.free_vars = fvs;
    plan.goals.push_back(std::move(g));
  }
  return plan;
}

IndexRemovalResult po_index_removal(const EventPair& pair, const Machine& conc,
                                    const Machine& abs, const PoOptions& opt) {
  IndexRemovalResult out;
  out.pos = po_event_safety(pair, conc, abs, opt);
  auto sigma = witness_subst(pair);

  // the abstract coarse must fix each removed index (idx = E ∧ rest), unless
  // the schedules never mention it, in which case substitution is the identity
  ExprPtr rest = pair.abs->coarse;
  for (const auto& [idx, wit] : pair.removed) {
    ExprPtr r;
    if (strip_index_eq(rest, idx, wit, &r)) {
      rest = r;
    } else if (!mentions_bound(rest, idx) && !mentions_bound(pair.abs->fine, idx)) {
      // degenerate removal: schedules are index-free
    } else {
      out.mismatch = "abstract coarse schedule of " + pair.abs->name +
                     " has no conjunct fixing index " + idx + " by its witness";
      return out;
    }
  }
  ExprPtr c0 = subst(rest, sigma);
  ExprPtr f0 = subst(pair.abs->fine, sigma);
  if (!ac_equal(c0, pair.conc->coarse)) {
    out.mismatch = "coarse schedules differ after witness substitution: " + pretty(c0) + " vs " +
                   pretty(pair.conc->coarse);
    return out;
  }
  if (!ac_equal(f0, pair.conc->fine)) {
    out.mismatch = "fine schedules differ after witness substitution";
    return out;
  }
  out.schedules_equal = true;
  return out;
}

std::vector<EventPair> default_pairing(const Machine& abs, const Machine& conc,
                                       std::string* error) {
  std::vector<EventPair> pairs;
  for (const auto& ce : conc.events) {
    EventPair p;
    p.conc = &ce;
    const Event* ae = abs.event(ce.name);
    if (ae) {
      p.abs = ae;
      // removed indices are the abstract ones missing from the concrete event
      for (const auto& [n, s] : ae->indices) {
        bool kept = false;
        for (const auto& [cn, cs] : ce.indices)
          if (cn == n && cs == s) kept = true;
        if (!kept) {
          const WitnessDecl* w = nullptr;
          for (const auto& wd : conc.witnesses)
            if (wd.event == ce.name && wd.index == n) w = &wd;
          if (!w) {
            if (error)
              *error = "event " + ce.name + " drops index " + n + " but declares no witness";
            return {};
          }
          p.removed.emplace_back(n, w->expr);
        }
      }
      for (const auto& [cn, cs] : ce.indices) {
        bool shared = false;
        for (const auto& [n, s] : ae->indices)
          if (cn == n) shared = true;
        if (!shared) {
          if (error) *error = "event " + ce.name + " introduces index " + cn + "; not supported";
          return {};
        }
      }
    }
    pairs.push_back(std::move(p));
  }
  // every abstract event must be covered
  for (const auto& ae : abs.events) {
    bool covered = false;
    for (const auto& p : pairs)
      if (p.abs == &ae) covered = true;
    if (!covered) {
      if (error) *error = "abstract event " + ae.name + " is not refined by any concrete event";
      return {};
    }
  }
  return pairs;
}

}  // namespace unitb
