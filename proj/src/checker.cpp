#include "unitb/checker.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "unitb/parser.hpp"
#include "unitb/smt.hpp"

namespace fs = std::filesystem;

namespace unitb {

// ---------------------------------------------------------------------------
// Development loading
// ---------------------------------------------------------------------------

const Machine* Development::by_name(const std::string& n) const {
  for (const auto& m : machines)
    if (m.name == n) return &m;
  return nullptr;
}

int Development::index_of(const std::string& n) const {
  for (size_t i = 0; i < machines.size(); ++i)
    if (machines[i].name == n) return (int)i;
  return -1;
}

std::vector<const Machine*> Development::ancestors(const Machine& m) const {
  std::vector<const Machine*> out;
  const Machine* cur = &m;
  while (!cur->refines.empty()) {
    const Machine* up = by_name(cur->refines);
    if (!up) break;
    out.insert(out.begin(), up);
    cur = up;
  }
  return out;
}

namespace {

std::string read_file(const std::string& path, std::string* error) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    *error = "cannot read " + path;
    return "";
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// a refining machine must repeat the abstract sorts and variables verbatim
// so that sort ids and element indices line up across the chain
std::string check_superposition(const Machine& abs, const Machine& conc) {
  if (conc.sorts.size() < abs.sorts.size() || conc.vars.size() < abs.vars.size())
    return conc.name + " must redeclare the sorts and variables of " + abs.name;
  for (size_t i = 0; i < abs.sorts.size(); ++i) {
    const Sort &a = abs.sorts[i], &c = conc.sorts[i];
    if (a.name != c.name || a.kind != c.kind || a.elems != c.elems || a.lo != c.lo ||
        a.hi != c.hi || a.modular != c.modular)
      return conc.name + " changes sort " + a.name + " declared in " + abs.name;
  }
  for (size_t i = 0; i < abs.vars.size(); ++i)
    if (abs.vars[i].name != conc.vars[i].name || !(abs.vars[i].type == conc.vars[i].type))
      return conc.name + " changes variable " + abs.vars[i].name + " declared in " + abs.name;
  return "";
}

}  // namespace

Development load_development(const std::vector<std::string>& paths, std::string* error) {
  Development dev;
  std::vector<std::string> files;
  std::string index_file;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& ent : fs::directory_iterator(p)) {
        if (ent.path().extension() == ".ub") found.push_back(ent.path().string());
        if (ent.path().filename() == "development.ub-dev") index_file = ent.path().string();
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::path(p).extension() == ".ub-dev") {
      index_file = p;
    } else {
      files.push_back(p);
    }
  }

  std::vector<std::pair<std::string, std::string>> steps_by_name;
  if (!index_file.empty()) {
    std::string text = read_file(index_file, error);
    if (!error->empty()) return dev;
    fs::path base = fs::path(index_file).parent_path();
    std::istringstream in(text);
    std::string line;
    files.clear();
    while (std::getline(in, line)) {
      auto cut = line.find("--");
      if (cut != std::string::npos) line = line.substr(0, cut);
      std::istringstream ls(line);
      std::string word;
      if (!(ls >> word)) continue;
      if (word == "machine") {
        std::string f;
        ls >> f;
        files.push_back((base / f).string());
      } else if (word == "refine") {
        std::string a, c;
        ls >> a >> c;
        steps_by_name.emplace_back(a, c);
      } else if (word == "tag") {
        std::string mn, ev, tag;
        ls >> mn >> ev >> tag;
        dev.pair_tags[mn + "/" + ev] = tag;
      } else {
        *error = index_file + ": unknown directive " + word;
        return dev;
      }
    }
  }

  std::map<std::string, std::string> file_of;  // machine name -> file
  auto load_one = [&](const std::string& f) -> bool {
    std::string text = read_file(f, error);
    if (!error->empty()) return false;
    try {
      Machine m = parse_machine(text, f);
      if (dev.index_of(m.name) >= 0) {
        *error = "machine " + m.name + " loaded twice";
        return false;
      }
      file_of[m.name] = f;
      dev.machines.push_back(std::move(m));
      return true;
    } catch (const ParseError& pe) {
      std::ostringstream os;
      for (const auto& d : pe.diags) os << d.span.str() << ": " << d.message << "\n";
      *error = os.str();
      return false;
    }
  };
  for (const auto& f : files)
    if (!load_one(f)) return dev;

  // pull in missing abstract machines by the <name>.ub convention
  bool grew = true;
  while (grew) {
    grew = false;
    for (size_t i = 0; i < dev.machines.size(); ++i) {
      const Machine& m = dev.machines[i];
      if (m.refines.empty() || dev.index_of(m.refines) >= 0) continue;
      fs::path cand = fs::path(file_of[m.name]).parent_path() / (m.refines + ".ub");
      if (!fs::exists(cand)) {
        *error = m.name + " refines " + m.refines + " but no such machine is loaded";
        return dev;
      }
      if (!load_one(cand.string())) return dev;
      grew = true;
      break;
    }
  }
  // abstract machines first, so reports and obligations follow the chain order
  std::stable_sort(dev.machines.begin(), dev.machines.end(),
                   [&](const Machine& a, const Machine& b) {
                     std::function<int(const Machine&)> depth = [&](const Machine& m) {
                       int d = 0;
                       const Machine* cur = &m;
                       while (!cur->refines.empty()) {
                         bool found = false;
                         for (const auto& mm : dev.machines)
                           if (mm.name == cur->refines) { cur = &mm; found = true; break; }
                         if (!found) break;
                         ++d;
                       }
                       return d;
                     };
                     return depth(a) < depth(b);
                   });

  if (steps_by_name.empty()) {
    for (const auto& m : dev.machines)
      if (!m.refines.empty()) steps_by_name.emplace_back(m.refines, m.name);
  }
  for (const auto& [a, c] : steps_by_name) {
    int ai = dev.index_of(a), ci = dev.index_of(c);
    if (ai < 0 || ci < 0) {
      *error = "refinement step " + a + " -> " + c + " references an unknown machine";
      return dev;
    }
    if (dev.machines[ci].refines != a) {
      *error = c + " does not declare refines " + a;
      return dev;
    }
    std::string sup = check_superposition(dev.machines[ai], dev.machines[ci]);
    if (!sup.empty()) {
      *error = sup;
      return dev;
    }
    dev.steps.emplace_back(ai, ci);
  }
  return dev;
}

// ---------------------------------------------------------------------------
// Checker context
// ---------------------------------------------------------------------------

namespace {

using GoalPtr = std::shared_ptr<GoalRecord>;

struct Checker {
  const Development& dev;
  CheckConfig cfg;
  std::map<std::string, std::shared_ptr<TransitionSystem>> ts_cache;
  std::map<std::string, GoalPtr> memo;  // machine/label -> record
  std::set<std::string> in_progress;
  DevelopmentReport rep;

  Checker(const Development& d, const CheckConfig& c) : dev(d), cfg(c) {}

  PoOptions po_opt(const Machine& m) {
    PoOptions o;
    o.po_limit = cfg.po_limit;
    o.ancestors = dev.ancestors(m);
    return o;
  }

  SemLimits sem_limits() {
    SemLimits s;
    s.state_limit = cfg.state_limit;
    s.naive_max_states = cfg.naive_max_states;
    return s;
  }

  const TransitionSystem& ts(const Machine& m) {
    auto it = ts_cache.find(m.name);
    if (it == ts_cache.end()) {
      auto t = std::make_shared<TransitionSystem>(build_ts(m, sem_limits()));
      it = ts_cache.emplace(m.name, std::move(t)).first;
    }
    return *it->second;
  }

  PoRecord run_po(const Machine& m, ProofObligation po) {
    Verdict v = discharge(po, m, po_opt(m));
    return {std::move(po), std::move(v)};
  }

  // ---- semantic checks with free-variable instantiation -------------------

  struct Instantiator {
    const Machine& m;
    std::vector<std::pair<std::string, SortId>> fvs;
    std::vector<std::pair<std::string, Value>> binding;
    bool advance(size_t k) {
      if (k == fvs.size()) return false;
      const Sort& s = m.sorts[fvs[k].second];
      long lo = s.is_int() ? s.lo : 0;
      long hi = s.is_int() ? s.hi : s.size() - 1;
      if (binding[k].second.elem < hi) {
        ++binding[k].second.elem;
        return true;
      }
      binding[k].second.elem = lo;
      return advance(k + 1);
    }
    template <typename F>
    bool for_each(F f) {  // false = some instantiation failed
      binding.clear();
      for (const auto& [n, s] : fvs)
        binding.emplace_back(n, Value::element(m.sorts[s].is_int() ? m.sorts[s].lo : 0));
      while (true) {
        if (!f(binding)) return false;
        if (fvs.empty()) return true;
        if (!advance(0)) return true;
      }
    }
  };

  std::string show_binding(const Machine& m,
                           const std::vector<std::pair<std::string, Value>>& b,
                           const std::vector<std::pair<std::string, SortId>>& fvs) {
    std::ostringstream os;
    for (size_t i = 0; i < b.size(); ++i) {
      if (i) os << ", ";
      os << b[i].first << "=" << show_value(m, SemType::elem(fvs[i].second), b[i].second);
    }
    return os.str();
  }

  GoalPtr semantic_goal(const Machine& m, const std::string& name, PropKind kind,
                        const ExprPtr& lhs, const ExprPtr& rhs,
                        const std::vector<std::pair<std::string, SortId>>& fvs) {
    auto g = std::make_shared<GoalRecord>();
    g->name = name;
    g->kind = kind == PropKind::Unless ? "unless"
                                       : (kind == PropKind::Transient ? "transient" : "leads-to");
    g->resolution = "semantic";
    g->ok = true;
    try {
      const TransitionSystem& t = ts(m);
      Instantiator inst{m, fvs, {}};
      inst.for_each([&](const std::vector<std::pair<std::string, Value>>& b) {
        switch (kind) {
          case PropKind::Unless: {
            UnlessResult r = check_unless(t, lhs, rhs, b);
            if (!r.holds) {
              g->ok = false;
              std::ostringstream os;
              os << "unless violated by edge " << t.instances[r.edge->instance].label << " from "
                 << show_valuation(m, t.states[r.edge->from]);
              if (!b.empty()) os << " at " << show_binding(m, b, fvs);
              g->detail = os.str();
              nlohmann::json j;
              j["edge"] = {{"from", show_valuation(m, t.states[r.edge->from])},
                           {"label", t.instances[r.edge->instance].label},
                           {"to", show_valuation(m, t.states[r.edge->to])}};
              g->counterexample_json = j.dump();
            }
            break;
          }
          case PropKind::LeadsTo: {
            LivenessResult r = check_leadsto(t, lhs, rhs, b, sem_limits());
            if (!r.holds) {
              g->ok = false;
              g->detail = b.empty() ? "violating lasso found"
                                    : "violating lasso at " + show_binding(m, b, fvs);
              g->counterexample_json = lasso_to_json(t, *r.lasso);
            }
            break;
          }
          case PropKind::Transient: {
            LivenessResult r = check_transient(t, lhs, b, sem_limits());
            if (!r.holds) {
              g->ok = false;
              g->detail = b.empty() ? "violating lasso found"
                                    : "violating lasso at " + show_binding(m, b, fvs);
              g->counterexample_json = lasso_to_json(t, *r.lasso);
            }
            break;
          }
          case PropKind::Invariant: {
            InvariantResult r = check_invariant(t, lhs, b);
            if (!r.holds) {
              g->ok = false;
              g->detail = "invariant violated at " + show_valuation(m, t.states[r.bad_state]);
            }
            break;
          }
        }
        return g->ok;
      });
    } catch (const WdError& e) {
      g->ok = false;
      g->detail = std::string("well-definedness failure: ") + e.what();
    } catch (const LimitError& e) {
      g->ok = false;
      g->detail = std::string("limit: ") + e.what();
      rep.exit_code = 3;
    }
    return g;
  }

  // ---- property resolution -------------------------------------------------

  GoalPtr check_property(const Machine& m, const std::string& label) {
    std::string key = m.name + "/" + label;
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    if (in_progress.count(key)) {
      auto g = std::make_shared<GoalRecord>();
      g->name = key;
      g->ok = false;
      g->detail = "circular property citation";
      return g;
    }
    in_progress.insert(key);
    const Property* p = m.property(label);
    GoalPtr g;
    if (!p) {
      g = std::make_shared<GoalRecord>();
      g->name = key;
      g->ok = false;
      g->detail = "no such property";
    } else if (p->kind == PropKind::Unless) {
      g = std::make_shared<GoalRecord>();
      g->name = key;
      g->kind = "unless";
      g->resolution = "po";
      g->ok = true;
      for (auto& po : po_unless(m, *p, po_opt(m))) {
        PoRecord r = run_po(m, std::move(po));
        if (!r.verdict.ok()) g->ok = false;
        g->pos.push_back(std::move(r));
      }
      if (cfg.oracle) oracle_cross_check(m, *p, *g);
    } else if (const Derivation* d = m.derivation(label)) {
      g = walk_derivation(m, *p, *d);
      if (cfg.oracle && g->ok) oracle_cross_check(m, *p, *g);
    } else {
      g = semantic_goal(m, key, p->kind, p->lhs, p->rhs, p->free_vars);
    }
    in_progress.erase(key);
    memo[key] = g;
    return g;
  }

  void oracle_cross_check(const Machine& m, const Property& p, GoalRecord& g) {
    GoalPtr sem = semantic_goal(m, g.name + "/oracle", p.kind, p.lhs, p.rhs, p.free_vars);
    if (g.ok != sem->ok) {
      std::string rule_side = g.ok ? "holds" : "fails";
      g.ok = false;
      g.detail = "oracle disagreement: rule calculus says " + rule_side +
                 ", semantic checker says " + (sem->ok ? "holds" : "fails");
    }
    g.subgoals.push_back(sem);
  }

  // ---- derivations ---------------------------------------------------------

  struct DGoal {
    PropKind kind;  // LeadsTo or Transient
    ExprPtr lhs, rhs;
  };

  GoalPtr walk_derivation(const Machine& m, const Property& prop, const Derivation& d) {
    auto g = std::make_shared<GoalRecord>();
    g->name = m.name + "/" + prop.label;
    g->kind = prop.kind == PropKind::Transient ? "transient" : "leads-to";
    g->resolution = "derivation";
    g->ok = true;
    DGoal goal{prop.kind, prop.lhs, prop.rhs};
    std::vector<std::pair<std::string, SortId>> fvs = prop.free_vars;
    run_script(m, *g, goal, fvs, d.script, m.name + "/" + prop.label);
    return g;
  }

  void fail_goal(GoalRecord& g, const std::string& msg) {
    g.ok = false;
    if (g.detail.empty()) g.detail = msg;
  }

  ExprPtr mk_and_t(ExprPtr a, ExprPtr b) {
    auto e = mk_and(std::move(a), std::move(b));
    e->type = SemType::boolean();
    return e;
  }
  ExprPtr mk_or_t(ExprPtr a, ExprPtr b) {
    auto e = mk_or(std::move(a), std::move(b));
    e->type = SemType::boolean();
    return e;
  }
  ExprPtr mk_not_t(ExprPtr a) {
    auto e = mk_not(std::move(a));
    e->type = SemType::boolean();
    return e;
  }

  void absorb(GoalRecord& g, const GoalPtr& sub) {
    if (!sub->ok) g.ok = false;
    for (const auto& r : sub->reuse_closure) g.reuse_closure.push_back(r);
    g.subgoals.push_back(sub);
  }

  void run_script(const Machine& m, GoalRecord& g, DGoal goal,
                  std::vector<std::pair<std::string, SortId>> fvs,
                  const std::vector<RuleAppPtr>& script, const std::string& path) {
    bool closed = false;
    for (size_t si = 0; si < script.size(); ++si) {
      const RuleApp& r = *script[si];
      if (closed) {
        fail_goal(g, "derivation step after the goal was closed");
        return;
      }
      switch (r.kind) {
        case RuleApp::Kind::Implication: {
          g.rules.push_back("implication");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "implication applies to leads-to goals");
            return;
          }
          ProofObligation po;
          po.name = path + "/IMP" + (si ? std::to_string(si) : "");
          po.origin = PoOrigin::Implication;
          for (size_t i = 0; i < m.vars.size(); ++i)
            po.ctx.push_back({m.vars[i].name, m.vars[i].type, true, false, (int)i});
          for (const auto& [n, s] : fvs) po.ctx.push_back({n, SemType::elem(s), false, false, -1});
          po.hyps = {invariant_conjunction(m, dev.ancestors(m)), goal.lhs};
          po.goal = goal.rhs;
          PoRecord rec = run_po(m, std::move(po));
          if (!rec.verdict.ok()) fail_goal(g, "implication obligation failed: " + rec.po.name);
          g.pos.push_back(std::move(rec));
          closed = true;
          break;
        }
        case RuleApp::Kind::Split: {
          g.rules.push_back("split-off-skip");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "split-off-skip applies to leads-to goals");
            return;
          }
          goal.lhs = mk_and_t(goal.lhs, mk_not_t(goal.rhs));
          break;
        }
        case RuleApp::Kind::Transitivity: {
          g.rules.push_back("transitivity");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "transitivity applies to leads-to goals");
            return;
          }
          auto g1 = std::make_shared<GoalRecord>();
          g1->name = path + "/trans.1";
          g1->kind = "leads-to";
          g1->resolution = "derivation";
          g1->ok = true;
          run_script(m, *g1, {PropKind::LeadsTo, goal.lhs, r.mid}, fvs, r.branches[0],
                     path + "/t" + std::to_string(si) + "a");
          absorb(g, g1);
          auto g2 = std::make_shared<GoalRecord>();
          g2->name = path + "/trans.2";
          g2->kind = "leads-to";
          g2->resolution = "derivation";
          g2->ok = true;
          run_script(m, *g2, {PropKind::LeadsTo, r.mid, goal.rhs}, fvs, r.branches[1],
                     path + "/t" + std::to_string(si) + "b");
          absorb(g, g2);
          closed = true;
          break;
        }
        case RuleApp::Kind::Ensure: {
          g.rules.push_back("ensure");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "ensure applies to leads-to goals");
            return;
          }
          const Property* un = m.property(r.label);
          if (!un || un->kind != PropKind::Unless) {
            fail_goal(g, "ensure cites " + r.label + " which is not an unless property");
            return;
          }
          if (!ac_equal(un->lhs, goal.lhs) || !ac_equal(un->rhs, goal.rhs)) {
            fail_goal(g, "ensure conclusion mismatch: goal is " + pretty_in(m, goal.lhs) +
                             " ~> " + pretty_in(m, goal.rhs) + " but " + r.label + " is " +
                             pretty_in(m, un->lhs) + " un " + pretty_in(m, un->rhs));
            return;
          }
          absorb(g, check_property(m, r.label));
          goal = {PropKind::Transient, mk_and_t(goal.lhs, mk_not_t(goal.rhs)), nullptr};
          break;
        }
        case RuleApp::Kind::Induction: {
          g.rules.push_back("induction");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "induction applies to leads-to goals");
            return;
          }
          if (!m.sorts[r.variant_sort].is_int()) {
            fail_goal(g, "induction variant is not integer-sorted");
            return;
          }
          for (const auto& [n, s] : fvs)
            if (n == r.variant_var) {
              fail_goal(g, "induction variable " + n + " shadows a free variable");
              return;
            }
          auto eq = mk2(ExprKind::Equals, r.variant, mk_bound(r.variant_var));
          eq->type = SemType::boolean();
          auto lt = mk2(ExprKind::Less, r.variant, mk_bound(r.variant_var));
          lt->type = SemType::boolean();
          ExprPtr new_lhs = mk_and_t(goal.lhs, eq);
          ExprPtr new_rhs = mk_or_t(mk_and_t(goal.lhs, lt), goal.rhs);
          fvs.emplace_back(r.variant_var, r.variant_sort);
          goal = {PropKind::LeadsTo, new_lhs, new_rhs};
          break;
        }
        case RuleApp::Kind::Psp: {
          g.rules.push_back("psp");
          if (goal.kind != PropKind::LeadsTo) {
            fail_goal(g, "psp applies to leads-to goals");
            return;
          }
          const Property* prog = m.property(r.label2);
          const Property* un = m.property(r.label);
          if (!prog || prog->kind != PropKind::LeadsTo) {
            fail_goal(g, "psp cites " + r.label2 + " which is not a leads-to property");
            return;
          }
          if (!un || un->kind != PropKind::Unless) {
            fail_goal(g, "psp cites " + r.label + " which is not an unless property");
            return;
          }
          ExprPtr concl_lhs = mk_and_t(prog->lhs, un->lhs);
          ExprPtr concl_rhs = mk_or_t(mk_and_t(prog->rhs, un->lhs), un->rhs);
          if (!ac_equal(concl_lhs, goal.lhs) || !ac_equal(concl_rhs, goal.rhs)) {
            fail_goal(g, "psp conclusion mismatch: expected " + pretty_in(m, concl_lhs) + " ~> " +
                             pretty_in(m, concl_rhs) + ", goal is " + pretty_in(m, goal.lhs) +
                             " ~> " + pretty_in(m, goal.rhs));
            return;
          }
          absorb(g, check_property(m, r.label2));
          absorb(g, check_property(m, r.label));
          closed = true;
          break;
        }
        case RuleApp::Kind::TransientFalsifies: {
          g.rules.push_back("falsifies");
          ExprPtr p;
          if (goal.kind == PropKind::Transient) {
            p = goal.lhs;
          } else if (ac_equal(goal.rhs, mk_not_t(goal.lhs))) {
            p = goal.lhs;  // p ~> ¬p
          } else if (ac_equal(goal.lhs, mk_true())) {
            p = mk_not_t(goal.rhs);  // true ~> q is tr ¬q
          } else {
            fail_goal(g, "falsifies applies to transient-shaped goals");
            return;
          }
          const Event* ev = m.event(r.event);
          FalsifiesPos fp = po_falsifies(m, *ev, r.idx_exprs, p, fvs, r.tag,
                                         path + "/FLS:" + r.event, po_opt(m));
          PoRecord neg = run_po(m, std::move(fp.neg));
          PoRecord cen = run_po(m, std::move(fp.c_en));
          if (!neg.verdict.ok()) fail_goal(g, "NEG obligation failed: " + neg.po.name);
          if (!cen.verdict.ok()) fail_goal(g, "C_EN obligation failed: " + cen.po.name);
          g.pos.push_back(std::move(neg));
          g.pos.push_back(std::move(cen));
          if (fp.f_en) {
            std::string tag = r.tag.empty() ? "" : "_" + r.tag;
            GoalPtr fen = resolve_goal(m, path + "/F_EN" + tag, PropKind::LeadsTo,
                                       fp.f_en->first, fp.f_en->second, fvs);
            absorb(g, fen);
          }
          closed = true;
          break;
        }
        case RuleApp::Kind::Use: {
          g.rules.push_back("use");
          const Property* p = m.property(r.label);
          if (!p || (p->kind != PropKind::LeadsTo && p->kind != PropKind::Transient)) {
            fail_goal(g, "use cites " + r.label + " which is not a progress property");
            return;
          }
          if (!goal_matches(goal, *p)) {
            fail_goal(g, "use conclusion mismatch against " + r.label);
            return;
          }
          absorb(g, check_property(m, r.label));
          closed = true;
          break;
        }
        case RuleApp::Kind::Reuse: {
          g.rules.push_back("reuse");
          const Machine* src = dev.by_name(r.from_machine);
          if (!src) {
            fail_goal(g, "reuse from unknown machine " + r.from_machine);
            return;
          }
          bool is_ancestor = false;
          for (const Machine* a : dev.ancestors(m))
            if (a == src) is_ancestor = true;
          if (!is_ancestor) {
            fail_goal(g, r.from_machine + " is not an abstraction of " + m.name);
            return;
          }
          const Property* p = src->property(r.label);
          if (!p || (p->kind != PropKind::LeadsTo && p->kind != PropKind::Transient)) {
            fail_goal(g, "reuse cites " + r.label + " which is not a progress property of " +
                             r.from_machine);
            return;
          }
          if (!goal_matches(goal, *p)) {
            fail_goal(g, "reuse conclusion mismatch against " + r.from_machine + "." + r.label);
            return;
          }
          absorb(g, check_property(*src, r.label));
          g.reuse_closure.emplace_back(r.label, r.from_machine);
          closed = true;
          break;
        }
      }
      if (!g.ok) return;
    }
    if (!closed) fail_goal(g, "derivation leaves the goal open");
  }

  bool goal_matches(const DGoal& goal, const Property& p) {
    if (goal.kind == PropKind::Transient && p.kind == PropKind::Transient)
      return ac_equal(goal.lhs, p.lhs);
    if (goal.kind == PropKind::LeadsTo && p.kind == PropKind::LeadsTo)
      return ac_equal(goal.lhs, p.lhs) && ac_equal(goal.rhs, p.rhs);
    // tr p matches p ~> ¬p and true ~> ¬p
    if (goal.kind == PropKind::LeadsTo && p.kind == PropKind::Transient) {
      ExprPtr np = mk_not(p.lhs);
      return (ac_equal(goal.lhs, p.lhs) && ac_equal(goal.rhs, np)) ||
             (ac_equal(goal.lhs, mk_true()) && ac_equal(goal.rhs, np));
    }
    if (goal.kind == PropKind::Transient && p.kind == PropKind::LeadsTo) {
      ExprPtr np = mk_not(goal.lhs);
      return (ac_equal(p.lhs, goal.lhs) && ac_equal(p.rhs, np)) ||
             (ac_equal(p.lhs, mk_true()) && ac_equal(p.rhs, np));
    }
    return false;
  }

  // resolve a subsidiary goal: a declared property with the same body, else
  // the semantic checker
  GoalPtr resolve_goal(const Machine& m, const std::string& name, PropKind kind,
                       const ExprPtr& lhs, const ExprPtr& rhs,
                       const std::vector<std::pair<std::string, SortId>>& fvs) {
    if (cfg.prefer_derivation) {
      for (const auto& p : m.properties) {
        if (p.kind != kind) continue;
        bool match = kind == PropKind::Unless
                         ? (ac_equal(p.lhs, lhs) && ac_equal(p.rhs, rhs))
                         : (kind == PropKind::LeadsTo
                                ? (ac_equal(p.lhs, lhs) && ac_equal(p.rhs, rhs))
                                : ac_equal(p.lhs, lhs));
        if (!match) continue;
        GoalPtr sub = check_property(m, p.label);
        auto g = std::make_shared<GoalRecord>();
        g->name = name;
        g->kind = sub->kind;
        g->resolution = "derivation:" + p.label;
        g->ok = sub->ok;
        g->detail = sub->detail;
        g->rules = sub->rules;
        g->reuse_closure = sub->reuse_closure;
        g->subgoals.push_back(sub);
        return g;
      }
    }
    GoalPtr g = semantic_goal(m, name, kind, lhs, rhs, fvs);
    return g;
  }

  // ---- machine and refinement checks ---------------------------------------

  MachineReport check_machine(const Machine& m) {
    MachineReport mr;
    mr.name = m.name;
    mr.diagnostics = well_formed(m);
    if (!mr.diagnostics.empty()) mr.ok = false;
    try {
      for (auto& po : po_invariance(m, po_opt(m))) {
        PoRecord r = run_po(m, std::move(po));
        if (!r.verdict.ok()) mr.ok = false;
        mr.pos.push_back(std::move(r));
      }
      for (auto& po : po_feasibility(m, po_opt(m))) {
        PoRecord r = run_po(m, std::move(po));
        if (!r.verdict.ok()) mr.ok = false;
        mr.pos.push_back(std::move(r));
      }
      for (const auto& p : m.properties) {
        GoalPtr g = check_property(m, p.label);
        if (!g->ok) mr.ok = false;
        mr.properties.push_back(g);
      }
      if (cfg.oracle)
        for (const auto& inv : m.invariants) {
          GoalPtr g = semantic_goal(m, m.name + "/" + inv.label + "/oracle", PropKind::Invariant,
                                    inv.lhs, nullptr, inv.free_vars);
          if (!g->ok) mr.ok = false;
          mr.properties.push_back(g);
        }
    } catch (const WdError& e) {
      mr.ok = false;
      mr.wd_failure = true;
      mr.error = e.what();
    } catch (const LimitError& e) {
      mr.ok = false;
      mr.error = e.what();
      rep.exit_code = 3;
    }
    return mr;
  }

  RefinementReport check_step(const Machine& abs, const Machine& conc) {
    RefinementReport rr;
    rr.abstract_machine = abs.name;
    rr.concrete_machine = conc.name;
    std::string err;
    std::vector<EventPair> pairs = default_pairing(abs, conc, &err);
    if (!err.empty()) {
      rr.error = err;
      rr.ok = false;
      return rr;
    }
    for (auto& pair : pairs) {
      auto tag_it = dev.pair_tags.find(conc.name + "/" + pair.conc->name);
      if (tag_it != dev.pair_tags.end()) pair.tag = tag_it->second;

      PairReport pr;
      pr.abstract_event = pair.abs ? pair.abs->name : "Skip";
      pr.concrete_event = pair.conc->name;
      try {
        if (!pair.removed.empty()) {
          IndexRemovalResult ir = po_index_removal(pair, conc, abs, po_opt(conc));
          for (auto& po : ir.pos) {
            PoRecord r = run_po(conc, std::move(po));
            if (!r.verdict.ok()) pr.ok = false;
            pr.pos.push_back(std::move(r));
          }
          if (ir.schedules_equal) {
            pr.notes.push_back("index removal: schedules syntactically equal after witness substitution");
          } else {
            pr.ok = false;
            pr.notes.push_back("index removal failed: " + ir.mismatch);
          }
        } else {
          for (auto& po : po_event_safety(pair, conc, abs, po_opt(conc))) {
            PoRecord r = run_po(conc, std::move(po));
            if (!r.verdict.ok()) pr.ok = false;
            pr.pos.push_back(std::move(r));
          }
          LivenessPlan plan = po_event_liveness(pair, conc, abs, po_opt(conc));
          pr.notes = plan.notes;
          for (auto& po : plan.pos) {
            PoRecord r = run_po(conc, std::move(po));
            if (!r.verdict.ok()) pr.ok = false;
            pr.pos.push_back(std::move(r));
          }
          for (const auto& goal : plan.goals) {
            std::string gname = conc.name + "/refines/" + pair.conc->name + "/" + goal.name;
            GoalPtr gr = resolve_goal(conc, gname,
                                      goal.kind == GoalKind::Unless ? PropKind::Unless
                                                                    : PropKind::LeadsTo,
                                      goal.lhs, goal.rhs, goal.free_vars);
            if (cfg.oracle && gr->ok && gr->resolution != "semantic") {
              GoalPtr sem = semantic_goal(conc, gname + "/oracle",
                                          goal.kind == GoalKind::Unless ? PropKind::Unless
                                                                        : PropKind::LeadsTo,
                                          goal.lhs, goal.rhs, goal.free_vars);
              if (!sem->ok) {
                gr->ok = false;
                gr->detail = "oracle disagreement on " + gname;
              }
              gr->subgoals.push_back(sem);
            }
            if (!gr->ok) pr.ok = false;
            // liveness-refinement reuse bookkeeping for the dependency check
            for (const auto& [lbl, from] : gr->reuse_closure)
              rep.reuses.push_back({lbl, from, pair.conc->name, conc.name});
            pr.goals.push_back(gr);
          }
        }
      } catch (const WdError& e) {
        pr.ok = false;
        pr.notes.push_back(std::string("well-definedness failure: ") + e.what());
      } catch (const LimitError& e) {
        pr.ok = false;
        pr.notes.push_back(std::string("limit: ") + e.what());
        rep.exit_code = 3;
      }
      if (!pr.ok) rr.ok = false;
      rr.pairs.push_back(std::move(pr));
    }
    return rr;
  }

  void check_deps() {
    // effective dependency relation: depends clauses accumulate down the chain
    for (const auto& reuse : rep.reuses) {
      if (reuse.context_event.empty()) continue;
      const Machine* conc = dev.by_name(reuse.in_machine);
      std::vector<const Machine*> chain = dev.ancestors(*conc);
      chain.push_back(conc);
      for (const Machine* mm : chain) {
        for (const auto& [lbl, evn] : mm->depends) {
          if (lbl == reuse.label && evn == reuse.context_event) {
            DependencyViolation v;
            v.label = reuse.label;
            v.event = reuse.context_event;
            v.machine = reuse.in_machine;
            v.detail = "progress property " + reuse.label + " (certified in " +
                       reuse.from_machine + ") is reused inside the liveness refinement of " +
                       reuse.context_event + " in " + reuse.in_machine + ", but " + reuse.label +
                       " depends on " + evn;
            rep.dependency_violations.push_back(std::move(v));
          }
        }
      }
    }
  }

  DevelopmentReport run() {
    for (const auto& m : dev.machines) {
      MachineReport mr = check_machine(m);
      if (!mr.ok) rep.ok = false;
      rep.machines.push_back(std::move(mr));
    }
    for (const auto& [ai, ci] : dev.steps) {
      RefinementReport rr = check_step(dev.machines[ai], dev.machines[ci]);
      if (!rr.ok) rep.ok = false;
      rep.refinements.push_back(std::move(rr));
    }
    check_deps();
    if (!rep.dependency_violations.empty()) rep.ok = false;
    if (!rep.ok && rep.exit_code == 0) rep.exit_code = 1;
    return std::move(rep);
  }
};

}  // namespace

DevelopmentReport check_development(const Development& dev, const CheckConfig& cfg) {
  Checker c(dev, cfg);
  return c.run();
}

GoalRecord check_property_semantic(const Machine& m, const Property& prop, const CheckConfig& cfg) {
  Development dev;
  Checker c(dev, cfg);
  auto g = c.semantic_goal(m, m.name + "/" + prop.label, prop.kind, prop.lhs, prop.rhs,
                           prop.free_vars);
  return *g;
}

std::vector<PoRecord> dump_pos(const Development& dev, const std::vector<std::string>& only,
                               const CheckConfig& cfg) {
  CheckConfig c2 = cfg;
  c2.oracle = false;
  DevelopmentReport rep = check_development(dev, c2);
  auto wanted = [&](const std::string& name) {
    return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
  };
  std::vector<PoRecord> out;
  std::set<std::string> seen;
  auto push = [&](const PoRecord& r) {
    if (seen.insert(r.po.name).second) out.push_back(r);
  };
  std::function<void(const GoalRecord&)> collect = [&](const GoalRecord& gr) {
    for (const auto& r : gr.pos) push(r);
    for (const auto& sub : gr.subgoals) collect(*sub);
  };
  for (const auto& mr : rep.machines) {
    if (!wanted(mr.name)) continue;
    for (const auto& r : mr.pos) push(r);
    for (const auto& g : mr.properties) collect(*g);
  }
  for (const auto& rr : rep.refinements) {
    if (!wanted(rr.concrete_machine)) continue;
    for (const auto& pr : rr.pairs) {
      for (const auto& r : pr.pos) push(r);
      for (const auto& g : pr.goals) collect(*g);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

nlohmann::json po_json(const PoRecord& r, const Machine* m) {
  nlohmann::json j;
  j["name"] = r.po.name;
  j["origin"] = po_origin_name(r.po.origin);
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : r.po.hyps) hyps.push_back(m ? pretty_in(*m, h) : pretty(h));
  j["hypotheses"] = hyps;
  j["goal"] = m ? pretty_in(*m, r.po.goal) : pretty(r.po.goal);
  j["verdict"] = r.verdict.ok() ? "valid" : verdict_str(r.verdict);
  if (r.verdict.kind == Verdict::Kind::CounterModel ||
      r.verdict.kind == Verdict::Kind::WdFailure) {
    nlohmann::json model;
    for (const auto& [k, v] : r.verdict.model) model[k] = v;
    j["model"] = model;
    j["verdict"] = r.verdict.kind == Verdict::Kind::CounterModel ? "counter-model" : "wd-failure";
  } else if (r.verdict.kind == Verdict::Kind::Skipped) {
    j["verdict"] = "skipped";
    j["reason"] = r.verdict.reason;
  }
  return j;
}

nlohmann::json goal_json(const GoalRecord& g, const Machine* m) {
  nlohmann::json j;
  j["name"] = g.name;
  j["kind"] = g.kind;
  j["resolution"] = g.resolution;
  j["ok"] = g.ok;
  if (!g.rules.empty()) j["rules"] = g.rules;
  if (!g.detail.empty()) j["detail"] = g.detail;
  if (!g.counterexample_json.empty())
    j["counterexample"] = nlohmann::json::parse(g.counterexample_json);
  if (!g.pos.empty()) {
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& r : g.pos) pos.push_back(po_json(r, m));
    j["pos"] = pos;
  }
  if (!g.subgoals.empty()) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : g.subgoals) subs.push_back(goal_json(*s, m));
    j["subgoals"] = subs;
  }
  return j;
}

}  // namespace

std::string report_to_json(const DevelopmentReport& rep) {
  nlohmann::json j;
  j["ok"] = rep.ok;
  j["exit_code"] = rep.exit_code;
  if (!rep.error.empty()) j["error"] = rep.error;
  nlohmann::json ms = nlohmann::json::array();
  for (const auto& mr : rep.machines) {
    nlohmann::json m;
    m["name"] = mr.name;
    m["ok"] = mr.ok;
    if (!mr.error.empty()) m["error"] = mr.error;
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& d : mr.diagnostics)
      diags.push_back({{"at", d.span.str()}, {"message", d.message}});
    m["diagnostics"] = diags;
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& r : mr.pos) pos.push_back(po_json(r, nullptr));
    m["pos"] = pos;
    nlohmann::json props = nlohmann::json::array();
    for (const auto& g : mr.properties) props.push_back(goal_json(*g, nullptr));
    m["properties"] = props;
    ms.push_back(m);
  }
  j["machines"] = ms;
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& rr : rep.refinements) {
    nlohmann::json r;
    r["abstract"] = rr.abstract_machine;
    r["concrete"] = rr.concrete_machine;
    r["ok"] = rr.ok;
    if (!rr.error.empty()) r["error"] = rr.error;
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& pr : rr.pairs) {
      nlohmann::json p;
      p["abstract_event"] = pr.abstract_event;
      p["concrete_event"] = pr.concrete_event;
      p["ok"] = pr.ok;
      p["notes"] = pr.notes;
      nlohmann::json pos = nlohmann::json::array();
      for (const auto& rc : pr.pos) pos.push_back(po_json(rc, nullptr));
      p["pos"] = pos;
      nlohmann::json goals = nlohmann::json::array();
      for (const auto& g : pr.goals) goals.push_back(goal_json(*g, nullptr));
      p["goals"] = goals;
      pairs.push_back(p);
    }
    r["pairs"] = pairs;
    rs.push_back(r);
  }
  j["refinements"] = rs;
  nlohmann::json deps = nlohmann::json::array();
  for (const auto& v : rep.dependency_violations)
    deps.push_back({{"label", v.label}, {"event", v.event}, {"machine", v.machine},
                    {"detail", v.detail}});
  j["dependency_violations"] = deps;
  nlohmann::json reuses = nlohmann::json::array();
  for (const auto& r : rep.reuses)
    reuses.push_back({{"label", r.label}, {"from", r.from_machine},
                      {"context_event", r.context_event}, {"machine", r.in_machine}});
  j["reuses"] = reuses;
  return j.dump(2);
}

std::string pos_to_json(const std::vector<PoRecord>& pos) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : pos) arr.push_back(po_json(r, nullptr));
  return arr.dump(2);
}

namespace {

const char* c_red(bool color) { return color ? "\033[31m" : ""; }
const char* c_green(bool color) { return color ? "\033[32m" : ""; }
const char* c_off(bool color) { return color ? "\033[0m" : ""; }

void goal_text(std::ostringstream& os, const GoalRecord& g, bool color, int depth) {
  std::string pad(2 * depth + 2, ' ');
  os << pad << (g.ok ? c_green(color) : c_red(color)) << (g.ok ? "ok " : "FAIL ") << c_off(color)
     << g.name << " [" << g.kind << ", " << g.resolution << "]";
  if (!g.rules.empty()) {
    os << " rules:";
    for (const auto& r : g.rules) os << " " << r;
  }
  os << "\n";
  if (!g.detail.empty()) os << pad << "  " << g.detail << "\n";
  for (const auto& r : g.pos)
    if (!r.verdict.ok())
      os << pad << "  " << c_red(color) << "FAIL " << c_off(color) << r.po.name << ": "
         << verdict_str(r.verdict) << "\n";
  for (const auto& s : g.subgoals) goal_text(os, *s, color, depth + 1);
}

}  // namespace

std::string report_to_text(const DevelopmentReport& rep, bool color) {
  std::ostringstream os;
  for (const auto& mr : rep.machines) {
    os << "machine " << mr.name << ": " << (mr.ok ? c_green(color) : c_red(color))
       << (mr.ok ? "ok" : "FAIL") << c_off(color) << "\n";
    for (const auto& d : mr.diagnostics) os << "  " << d.span.str() << ": " << d.message << "\n";
    if (!mr.error.empty()) os << "  error: " << mr.error << "\n";
    int valid = 0, bad = 0;
    for (const auto& r : mr.pos) (r.verdict.ok() ? valid : bad)++;
    os << "  obligations: " << valid << " valid, " << bad << " failing\n";
    for (const auto& r : mr.pos)
      if (!r.verdict.ok())
        os << "    " << c_red(color) << "FAIL " << c_off(color) << r.po.name << ": "
           << verdict_str(r.verdict) << "\n";
    for (const auto& g : mr.properties) goal_text(os, *g, color, 0);
  }
  for (const auto& rr : rep.refinements) {
    os << "refinement " << rr.abstract_machine << " <= " << rr.concrete_machine << ": "
       << (rr.ok ? c_green(color) : c_red(color)) << (rr.ok ? "ok" : "FAIL") << c_off(color)
       << "\n";
    if (!rr.error.empty()) os << "  error: " << rr.error << "\n";
    for (const auto& pr : rr.pairs) {
      os << "  " << pr.abstract_event << " <= " << pr.concrete_event << ": "
         << (pr.ok ? "ok" : "FAIL") << "\n";
      for (const auto& n : pr.notes) os << "    note: " << n << "\n";
      for (const auto& r : pr.pos)
        if (!r.verdict.ok())
          os << "    " << c_red(color) << "FAIL " << c_off(color) << r.po.name << ": "
             << verdict_str(r.verdict) << "\n";
      for (const auto& g : pr.goals) goal_text(os, *g, color, 2);
    }
  }
  for (const auto& v : rep.dependency_violations)
    os << c_red(color) << "dependency violation: " << c_off(color) << v.detail << "\n";
  os << (rep.ok ? "RESULT: ok" : "RESULT: FAIL") << "\n";
  return os.str();
}

}  // namespace unitb
