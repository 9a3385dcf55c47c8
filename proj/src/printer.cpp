#include <sstream>

#include "unitb/parser.hpp"

namespace unitb {

namespace {

// Operator precedence mirrors the parser: higher binds tighter.
enum Prec {
  P_Implies = 1, P_Or, P_And, P_Not, P_Cmp, P_SetOp, P_Add, P_Prefix, P_App, P_Atom
};

struct Printer {
  const Machine* m = nullptr;
  std::ostringstream os;

  void expr(const ExprPtr& e, int ctx) {
    switch (e->kind) {
      case ExprKind::True: os << "true"; return;
      case ExprKind::False: os << "false"; return;
      case ExprKind::IntLit: os << e->int_val; return;
      case ExprKind::ElemLit: {
        if (m) {
          const Sort& s = m->sorts[e->elem_sort];
          if (s.is_int()) os << (s.lo + e->elem_idx);
          else os << s.elems[e->elem_idx];
        } else {
          os << "#" << e->elem_sort << ":" << e->elem_idx;
        }
        return;
      }
      case ExprKind::Var: os << e->name << (e->primed ? "'" : ""); return;
      case ExprKind::BoundVar: os << e->name; return;
      case ExprKind::Equals: binary(e, "=", P_Cmp, P_SetOp, P_SetOp, ctx); return;
      case ExprKind::Member: binary(e, "in", P_Cmp, P_SetOp, P_SetOp, ctx); return;
      case ExprKind::Subset: binary(e, "subset", P_Cmp, P_SetOp, P_SetOp, ctx); return;
      case ExprKind::Less: binary(e, "<", P_Cmp, P_SetOp, P_SetOp, ctx); return;
      case ExprKind::Leq: binary(e, "<=", P_Cmp, P_SetOp, P_SetOp, ctx); return;
      case ExprKind::And: nary(e, "and", P_And, ctx); return;
      case ExprKind::Or: nary(e, "or", P_Or, ctx); return;
      case ExprKind::Implies: {
        bool par = ctx > P_Implies;
        if (par) os << "(";
        expr(e->args[0], P_Implies + 1);
        os << " => ";
        expr(e->args[1], P_Implies);
        if (par) os << ")";
        return;
      }
      case ExprKind::Not: {
        bool par = ctx > P_Not;
        if (par) os << "(";
        os << "not ";
        expr(e->args[0], P_Not + 1);
        if (par) os << ")";
        return;
      }
      case ExprKind::Forall:
      case ExprKind::Exists: {
        os << (e->kind == ExprKind::Forall ? "forall (" : "exists (") << e->name << " : "
           << (m ? m->sorts[e->binder_sort].name : std::to_string(e->binder_sort)) << " | ";
        expr(e->args[0], P_Implies);
        os << " . ";
        expr(e->args[1], P_Implies);
        os << ")";
        return;
      }
      case ExprKind::SetLit: {
        os << "{";
        for (size_t i = 0; i < e->args.size(); ++i) {
          if (i) os << ", ";
          expr(e->args[i], P_Implies);
        }
        os << "}";
        return;
      }
      case ExprKind::MapLit: {
        os << "{";
        for (size_t i = 0; i < e->entries.size(); ++i) {
          if (i) os << ", ";
          expr(e->entries[i].first, P_SetOp);
          os << " -> ";
          expr(e->entries[i].second, P_SetOp);
        }
        os << "}";
        return;
      }
      case ExprKind::Union: binary(e, "union", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::Inter: binary(e, "inter", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::Diff: binary(e, "\\", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::Ovl: binary(e, "ovl", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::DomSub: binary(e, "domsub", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::RanSub: binary(e, "ransub", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::Image: binary(e, "img", P_SetOp, P_SetOp, P_SetOp + 1, ctx); return;
      case ExprKind::Add: binary(e, "+", P_Add, P_Add, P_Add + 1, ctx); return;
      case ExprKind::Sub: binary(e, "-", P_Add, P_Add, P_Add + 1, ctx); return;
      case ExprKind::Dom: prefix(e, "dom", ctx); return;
      case ExprKind::Ran: prefix(e, "ran", ctx); return;
      case ExprKind::Apply: {
        bool par = ctx > P_App;
        if (par) os << "(";
        expr(e->args[0], P_App);
        os << ".";
        expr(e->args[1], P_Atom);
        if (par) os << ")";
        return;
      }
      case ExprKind::InvApply: {
        bool par = ctx > P_App;
        if (par) os << "(";
        os << "(inv ";
        expr(e->args[0], P_Atom);
        os << ").";
        expr(e->args[1], P_Atom);
        if (par) os << ")";
        return;
      }
      case ExprKind::Interval: {
        os << "[";
        expr(e->args[0], P_Implies);
        os << " .. ";
        expr(e->args[1], P_Implies);
        os << ")";
        return;
      }
      case ExprKind::Wd: {
        os << "wd(";
        expr(e->args[0], P_Implies);
        os << ")";
        return;
      }
      case ExprKind::InvWrap: {
        os << "(inv ";
        expr(e->args[0], P_Atom);
        os << ")";
        return;
      }
    }
  }

  void binary(const ExprPtr& e, const char* op, int prec, int lctx, int rctx, int ctx) {
    bool par = ctx > prec;
    if (par) os << "(";
    expr(e->args[0], lctx);
    os << " " << op << " ";
    expr(e->args[1], rctx);
    if (par) os << ")";
  }

  void nary(const ExprPtr& e, const char* op, int prec, int ctx) {
    bool par = ctx > prec;
    if (par) os << "(";
    expr(e->args[0], prec);
    os << " " << op << " ";
    expr(e->args[1], prec + 1);
    if (par) os << ")";
  }

  void prefix(const ExprPtr& e, const char* op, int ctx) {
    bool par = ctx > P_Prefix;
    if (par) os << "(";
    os << op << " ";
    expr(e->args[0], P_Prefix + 1);
    if (par) os << ")";
  }
};

bool is_lit_true(const ExprPtr& e) { return e && e->kind == ExprKind::True; }
bool is_lit_false(const ExprPtr& e) { return e && e->kind == ExprKind::False; }

std::string type_text(const Machine& m, const SemType& t) {
  switch (t.kind) {
    case SemType::Kind::Bool: return "bool";
    case SemType::Kind::Elem: return m.sorts[t.sort].name;
    case SemType::Kind::Set: return "set " + m.sorts[t.sort].name;
    case SemType::Kind::Map:
      return m.sorts[t.sort].name + (t.total ? " --> " : " +-> ") + m.sorts[t.sort2].name;
    default: return "?";
  }
}

void print_free_vars(std::ostringstream& os, const Machine& m,
                     const std::vector<std::pair<std::string, SortId>>& fv) {
  if (fv.empty()) return;
  os << " [";
  for (size_t i = 0; i < fv.size(); ++i) {
    if (i) os << ", ";
    os << fv[i].first << " : " << m.sorts[fv[i].second].name;
  }
  os << "]";
}

void print_script(std::ostringstream& os, const Machine& m, const std::vector<RuleAppPtr>& script);

void print_step(std::ostringstream& os, const Machine& m, const RuleApp& r) {
  Printer p;
  p.m = &m;
  switch (r.kind) {
    case RuleApp::Kind::Implication: os << "implication"; break;
    case RuleApp::Kind::Split: os << "split"; break;
    case RuleApp::Kind::Transitivity:
      p.expr(r.mid, P_Implies);
      os << "transitivity(" << p.os.str() << ") { ";
      print_script(os, m, r.branches[0]);
      os << " } { ";
      print_script(os, m, r.branches[1]);
      os << " }";
      break;
    case RuleApp::Kind::Ensure: os << "ensure(" << r.label << ")"; break;
    case RuleApp::Kind::Induction:
      p.expr(r.variant, P_Implies);
      os << "induction(" << p.os.str() << ", " << r.variant_var << " : "
         << m.sorts[r.variant_sort].name << ")";
      break;
    case RuleApp::Kind::Psp: os << "psp(" << r.label2 << ", " << r.label << ")"; break;
    case RuleApp::Kind::TransientFalsifies: {
      os << "transient via falsifies " << r.event;
      if (!r.idx_exprs.empty()) {
        os << "[";
        for (size_t i = 0; i < r.idx_exprs.size(); ++i) {
          if (i) os << ", ";
          Printer px;
          px.m = &m;
          px.expr(r.idx_exprs[i], P_Implies);
          os << px.os.str();
        }
        os << "]";
      }
      if (!r.tag.empty()) os << " tag \"" << r.tag << "\"";
      break;
    }
    case RuleApp::Kind::Use: os << "use " << r.label; break;
    case RuleApp::Kind::Reuse: os << "reuse " << r.label << " from " << r.from_machine; break;
  }
}

void print_script(std::ostringstream& os, const Machine& m, const std::vector<RuleAppPtr>& script) {
  for (size_t i = 0; i < script.size(); ++i) {
    if (i) os << " ; ";
    print_step(os, m, *script[i]);
  }
}

}  // namespace

std::string pretty(const ExprPtr& e) {
  Printer p;
  p.expr(e, 0);
  return p.os.str();
}

std::string pretty_in(const Machine& m, const ExprPtr& e) {
  Printer p;
  p.m = &m;
  p.expr(e, 0);
  return p.os.str();
}

std::string pretty(const Machine& m) {
  std::ostringstream os;
  os << "machine " << m.name;
  if (!m.refines.empty()) os << " refines " << m.refines;
  os << "\n";
  if (!m.sorts.empty()) {
    os << "sets\n";
    for (const auto& s : m.sorts) {
      os << "  " << s.name << " = ";
      if (s.kind == Sort::Kind::Enum) {
        os << "{ ";
        for (size_t i = 0; i < s.elems.size(); ++i) {
          if (i) os << ", ";
          os << s.elems[i];
        }
        os << " }";
      } else {
        os << "int " << s.lo << " .. " << s.hi << (s.modular ? " mod" : "");
      }
      os << "\n";
    }
  }
  if (!m.defs.empty()) {
    os << "defs\n";
    for (const auto& [n, b] : m.defs) os << "  " << n << " = " << pretty_in(m, b) << "\n";
  }
  if (!m.vars.empty()) {
    os << "vars\n";
    for (const auto& v : m.vars) os << "  " << v.name << " : " << type_text(m, v.type) << "\n";
  }
  if (m.init && !is_lit_true(m.init)) os << "init " << pretty_in(m, m.init) << "\n";
  for (const auto& inv : m.invariants) {
    os << "invariant " << inv.label;
    print_free_vars(os, m, inv.free_vars);
    os << " : " << pretty_in(m, inv.lhs) << "\n";
  }
  for (const auto& ev : m.events) {
    os << "event " << ev.name;
    if (!ev.indices.empty()) {
      os << " [";
      for (size_t i = 0; i < ev.indices.size(); ++i) {
        if (i) os << ", ";
        os << ev.indices[i].first << " : " << m.sorts[ev.indices[i].second].name;
      }
      os << "]";
    }
    os << "\n";
    if (is_lit_false(ev.coarse) && is_lit_true(ev.fine)) {
      os << "  -- unscheduled\n";
    } else {
      os << "  during " << pretty_in(m, ev.coarse) << "\n";
      if (!is_lit_true(ev.fine)) os << "  upon " << pretty_in(m, ev.fine) << "\n";
    }
    if (!is_lit_true(ev.guard)) os << "  when " << pretty_in(m, ev.guard) << "\n";
    os << "  then";
    if (ev.action.assignments.empty()) os << "\n";
    else {
      os << "\n";
      for (size_t i = 0; i < ev.action.assignments.size(); ++i) {
        const Assignment& a = ev.action.assignments[i];
        os << "    ";
        for (size_t k = 0; k < a.vars.size(); ++k) {
          if (k) os << ", ";
          os << a.vars[k];
        }
        switch (a.kind) {
          case Assignment::Kind::Det: os << " := "; break;
          case Assignment::Kind::ChooseIn: os << " :in "; break;
          case Assignment::Kind::SuchThat: os << " :| "; break;
        }
        os << pretty_in(m, a.rhs);
        os << (i + 1 < ev.action.assignments.size() ? " ;\n" : "\n");
      }
    }
    os << "  end\n";
  }
  for (const auto& p : m.properties) {
    os << "property " << p.label;
    print_free_vars(os, m, p.free_vars);
    os << " : ";
    switch (p.kind) {
      case PropKind::Transient: os << "tr " << pretty_in(m, p.lhs); break;
      case PropKind::LeadsTo:
        os << pretty_in(m, p.lhs) << " ~> " << pretty_in(m, p.rhs);
        break;
      case PropKind::Unless:
        os << pretty_in(m, p.lhs) << " un " << pretty_in(m, p.rhs);
        break;
      default: os << pretty_in(m, p.lhs);
    }
    os << "\n";
  }
  for (const auto& d : m.derivations) {
    os << "derivation " << d.goal_label << " by ";
    print_script(os, m, d.script);
    os << "\n";
  }
  for (const auto& [lbl, evn] : m.depends) os << "depends " << lbl << " -> " << evn << "\n";
  for (const auto& w : m.witnesses)
    os << "witness " << w.event << "." << w.index << " := " << pretty_in(m, w.expr) << "\n";
  os << "end\n";
  return os.str();
}

}  // namespace unitb
