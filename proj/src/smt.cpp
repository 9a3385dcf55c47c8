#include "unitb/smt.hpp"

#include <cstring>
#include <map>
#include <sstream>
#include <vector>

namespace unitb {

namespace {

// Translation of one expression: a definedness formula and a value term.
// Map-typed results carry a value array and a domain-mask array.
struct SmtVal {
  std::string def = "true";
  std::string val;
  std::string mask;
};

struct SmtBuilder {
  const Machine& m;
  std::ostringstream decls, defs;
  int aux_count = 0;
  int binder_count = 0;
  std::map<std::string, std::pair<std::string, SortId>> binders;  // name -> (symbol, sort)

  explicit SmtBuilder(const Machine& mm) : m(mm) {}

  static std::string paren(const std::string& op, const std::vector<std::string>& args) {
    std::ostringstream os;
    os << "(" << op;
    for (const auto& a : args) os << " " << a;
    os << ")";
    return os.str();
  }
  static std::string band(const std::string& a, const std::string& b) {
    if (a == "true") return b;
    if (b == "true") return a;
    return paren("and", {a, b});
  }

  std::string sort_name(SortId s) const {
    return m.sorts[s].is_int() ? "Int" : "S_" + m.sorts[s].name;
  }
  std::string set_sort(SortId s) const { return "(Array " + sort_name(s) + " Bool)"; }
  std::string elem_term(SortId s, int idx) const {
    const Sort& so = m.sorts[s];
    if (!so.is_int()) return "E_" + so.elems[idx];
    long v = so.lo + idx;
    return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v);
  }
  static std::string int_term(long v) {
    return v < 0 ? "(- " + std::to_string(-v) + ")" : std::to_string(v);
  }

  std::string in_range(SortId s, const std::string& t) const {
    const Sort& so = m.sorts[s];
    if (!so.is_int()) return "true";
    return paren("and", {paren("<=", {int_term(so.lo), t}), paren("<=", {t, int_term(so.hi)})});
  }

  std::string fresh_aux(const std::string& sort_text) {
    std::string n = "aux" + std::to_string(aux_count++);
    decls << "(declare-const " << n << " " << sort_text << ")\n";
    return n;
  }

  // fresh set constant defined pointwise: all[k] . a[k] = body(k); false out of range
  std::string def_set(SortId s, const std::string& k, const std::string& body) {
    std::string a = fresh_aux(set_sort(s));
    std::string guarded = m.sorts[s].is_int() ? band(in_range(s, k), body) : body;
    defs << "(assert (forall ((" << k << " " << sort_name(s) << ")) (= (select " << a << " " << k
         << ") " << guarded << ")))\n";
    return a;
  }

  std::string binder_sym() { return "k" + std::to_string(binder_count++); }

  // quantify over a sort with range relativization
  std::string quant(const char* q, SortId s, const std::string& k, const std::string& body) {
    std::string b = body;
    if (m.sorts[s].is_int())
      b = strcmp(q, "forall") == 0 ? paren("=>", {in_range(s, k), body})
                                   : band(in_range(s, k), body);
    return "(" + std::string(q) + " ((" + k + " " + sort_name(s) + ")) " + b + ")";
  }

  SmtVal tr(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::True: return {"true", "true", ""};
      case ExprKind::False: return {"true", "false", ""};
      case ExprKind::IntLit: return {"true", int_term(e->int_val), ""};
      case ExprKind::ElemLit: return {"true", elem_term(e->elem_sort, e->elem_idx), ""};
      case ExprKind::Var: {
        std::string base = (e->primed ? "vp_" : "v_") + e->name;
        if (e->type.kind == SemType::Kind::Map) return {"true", base + "_val", base + "_dom"};
        return {"true", base, ""};
      }
      case ExprKind::BoundVar: {
        auto it = binders.find(e->name);
        if (it != binders.end()) return {"true", it->second.first, ""};
        return {"true", "b_" + e->name, ""};
      }
      case ExprKind::And: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        std::string d = paren("or", {band(a.def, b.def), band(a.def, paren("not", {a.val})),
                                     band(b.def, paren("not", {b.val}))});
        return {d, paren("and", {a.val, b.val}), ""};
      }
      case ExprKind::Or: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        std::string d = paren("or", {band(a.def, b.def), band(a.def, a.val), band(b.def, b.val)});
        return {d, paren("or", {a.val, b.val}), ""};
      }
      case ExprKind::Implies: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        std::string d = paren("or", {band(a.def, b.def), band(a.def, paren("not", {a.val})),
                                     band(b.def, b.val)});
        return {d, paren("=>", {a.val, b.val}), ""};
      }
      case ExprKind::Not: {
        SmtVal a = tr(e->args[0]);
        return {a.def, paren("not", {a.val}), ""};
      }
      case ExprKind::Wd: {
        SmtVal a = tr(e->args[0]);
        return {"true", band(a.def, a.val), ""};
      }
      case ExprKind::Forall:
      case ExprKind::Exists: {
        bool fa = e->kind == ExprKind::Forall;
        std::string k = binder_sym();
        auto saved = binders;
        binders[e->name] = {k, e->binder_sort};
        SmtVal r = tr(e->args[0]), t = tr(e->args[1]);
        binders = saved;
        SortId s = e->binder_sort;
        std::string inst_d, inst_v;
        if (fa) {
          inst_d = paren("or", {band(r.def, t.def), band(r.def, paren("not", {r.val})),
                                band(t.def, t.val)});
          inst_v = paren("=>", {r.val, t.val});
        } else {
          inst_d = paren("or", {band(r.def, t.def), band(r.def, paren("not", {r.val})),
                                band(t.def, paren("not", {t.val}))});
          inst_v = paren("and", {r.val, t.val});
        }
        std::string all_defined = quant("forall", s, k, inst_d);
        std::string decisive = fa ? quant("exists", s, k, band(inst_d, paren("not", {inst_v})))
                                  : quant("exists", s, k, band(inst_d, inst_v));
        std::string d = paren("or", {all_defined, decisive});
        std::string v = fa ? quant("forall", s, k, inst_v) : quant("exists", s, k, inst_v);
        return {d, v, ""};
      }
      case ExprKind::Equals: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        std::string d = band(a.def, b.def);
        const SemType& t = e->args[0]->type;
        if (t.kind == SemType::Kind::Map) {
          std::string k = binder_sym();
          std::string same_dom =
              quant("forall", t.sort, k,
                    paren("=", {paren("select", {a.mask, k}), paren("select", {b.mask, k})}));
          std::string same_val = quant(
              "forall", t.sort, k,
              paren("=>", {paren("select", {a.mask, k}),
                           paren("=", {paren("select", {a.val, k}), paren("select", {b.val, k})})}));
          return {d, band(same_dom, same_val), ""};
        }
        if (t.kind == SemType::Kind::Set && m.sorts[t.sort].is_int()) {
          std::string k = binder_sym();
          return {d, quant("forall", t.sort, k,
                           paren("=", {paren("select", {a.val, k}), paren("select", {b.val, k})})),
                  ""};
        }
        return {d, paren("=", {a.val, b.val}), ""};
      }
      case ExprKind::Member: {
        SmtVal x = tr(e->args[0]), s = tr(e->args[1]);
        return {band(x.def, s.def), paren("select", {s.val, x.val}), ""};
      }
      case ExprKind::Subset: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        std::string k = binder_sym();
        SortId s = e->args[0]->type.sort;
        std::string v = quant("forall", s, k,
                              paren("=>", {paren("select", {a.val, k}), paren("select", {b.val, k})}));
        return {band(a.def, b.def), v, ""};
      }
      case ExprKind::SetLit: {
        SortId s = e->type.sort;
        std::string arr = "((as const " + set_sort(s) + ") false)";
        std::string d = "true";
        for (const auto& a : e->args) {
          SmtVal av = tr(a);
          d = band(d, av.def);
          arr = paren("store", {arr, av.val, "true"});
        }
        return {d, arr, ""};
      }
      case ExprKind::MapLit: {
        SortId ds = e->type.sort, rs = e->type.sort2;
        std::string dom = "((as const " + set_sort(ds) + ") false)";
        std::string val = "((as const (Array " + sort_name(ds) + " " + sort_name(rs) + ")) " +
                          elem_term(rs, 0) + ")";
        std::string d = "true";
        for (const auto& [k, v] : e->entries) {
          SmtVal kv = tr(k), vv = tr(v);
          d = band(d, band(kv.def, vv.def));
          dom = paren("store", {dom, kv.val, "true"});
          val = paren("store", {val, kv.val, vv.val});
        }
        return {d, val, dom};
      }
      case ExprKind::Union:
      case ExprKind::Inter:
      case ExprKind::Diff: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        SortId s = e->type.sort;
        std::string k = binder_sym();
        std::string body =
            e->kind == ExprKind::Union
                ? paren("or", {paren("select", {a.val, k}), paren("select", {b.val, k})})
                : (e->kind == ExprKind::Inter
                       ? paren("and", {paren("select", {a.val, k}), paren("select", {b.val, k})})
                       : paren("and", {paren("select", {a.val, k}),
                                       paren("not", {paren("select", {b.val, k})})}));
        return {band(a.def, b.def), def_set(s, k, body), ""};
      }
      case ExprKind::Dom: {
        SmtVal f = tr(e->args[0]);
        return {f.def, f.mask, ""};
      }
      case ExprKind::Ran: {
        SmtVal f = tr(e->args[0]);
        const SemType& ft = e->args[0]->type;
        std::string k = binder_sym(), j = binder_sym();
        std::string body = quant("exists", ft.sort, j,
                                 band(paren("select", {f.mask, j}),
                                      paren("=", {paren("select", {f.val, j}), k})));
        return {f.def, def_set(ft.sort2, k, body), ""};
      }
      case ExprKind::Apply: {
        SmtVal f = tr(e->args[0]), x = tr(e->args[1]);
        std::string d = band(band(f.def, x.def), paren("select", {f.mask, x.val}));
        return {d, paren("select", {f.val, x.val}), ""};
      }
      case ExprKind::InvApply: {
        SmtVal f = tr(e->args[0]), x = tr(e->args[1]);
        const SemType& ft = e->args[0]->type;
        if (e->args[1]->type.kind == SemType::Kind::Set) {
          // preimage set: total
          std::string k = binder_sym();
          std::string body = band(paren("select", {f.mask, k}),
                                  paren("select", {x.val, paren("select", {f.val, k})}));
          return {band(f.def, x.def), def_set(ft.sort, k, body), ""};
        }
        // unique preimage: definedness demands exactly one
        const Sort& ds = m.sorts[ft.sort];
        auto hit = [&](const std::string& k) {
          return band(paren("select", {f.mask, k}), paren("=", {paren("select", {f.val, k}), x.val}));
        };
        std::string k1 = binder_sym(), k2 = binder_sym();
        std::string exists_one = quant("exists", ft.sort, k1, hit(k1));
        std::string unique =
            quant("forall", ft.sort, k1,
                  paren("=>", {hit(k1), quant("forall", ft.sort, k2,
                                              paren("=>", {hit(k2), paren("=", {k1, k2})}))}));
        std::string d = band(band(f.def, x.def), band(exists_one, unique));
        // value: ite chain over the finite carrier
        std::string v = elem_term(ft.sort, 0);
        for (int i = ds.size() - 1; i >= 0; --i) {
          std::string ei = elem_term(ft.sort, i);
          v = paren("ite", {hit(ei), ei, v});
        }
        return {d, v, ""};
      }
      case ExprKind::Image: {
        SmtVal f = tr(e->args[0]), s = tr(e->args[1]);
        const SemType& ft = e->args[0]->type;
        std::string k = binder_sym(), j = binder_sym();
        std::string body = quant("exists", ft.sort, j,
                                 band(band(paren("select", {s.val, j}), paren("select", {f.mask, j})),
                                      paren("=", {paren("select", {f.val, j}), k})));
        return {band(f.def, s.def), def_set(ft.sort2, k, body), ""};
      }
      case ExprKind::DomSub: {
        SmtVal s = tr(e->args[0]), f = tr(e->args[1]);
        const SemType& ft = e->args[1]->type;
        std::string k = binder_sym();
        std::string dom = def_set(ft.sort, k,
                                  band(paren("select", {f.mask, k}),
                                       paren("not", {paren("select", {s.val, k})})));
        return {band(s.def, f.def), f.val, dom};
      }
      case ExprKind::RanSub: {
        SmtVal f = tr(e->args[0]), s = tr(e->args[1]);
        const SemType& ft = e->args[0]->type;
        std::string k = binder_sym();
        std::string dom =
            def_set(ft.sort, k,
                    band(paren("select", {f.mask, k}),
                         paren("not", {paren("select", {s.val, paren("select", {f.val, k})})})));
        return {band(f.def, s.def), f.val, dom};
      }
      case ExprKind::Ovl: {
        SmtVal f = tr(e->args[0]), g = tr(e->args[1]);
        const SemType& ft = e->args[0]->type;
        std::string k = binder_sym();
        std::string dom = def_set(ft.sort, k, paren("or", {paren("select", {f.mask, k}),
                                                           paren("select", {g.mask, k})}));
        std::string val = fresh_aux("(Array " + sort_name(ft.sort) + " " + sort_name(ft.sort2) + ")");
        std::string k2 = binder_sym();
        defs << "(assert (forall ((" << k2 << " " << sort_name(ft.sort) << ")) (= (select " << val
             << " " << k2 << ") (ite (select " << g.mask << " " << k2 << ") (select " << g.val
             << " " << k2 << ") (select " << f.val << " " << k2 << ")))))\n";
        return {band(f.def, g.def), val, dom};
      }
      case ExprKind::Interval: {
        SmtVal lo = tr(e->args[0]), hi = tr(e->args[1]);
        SortId s = e->type.sort;
        const Sort& so = m.sorts[s];
        std::string k = binder_sym();
        std::string d = band(lo.def, hi.def);
        std::string body;
        if (so.modular) {
          std::string n = int_term(so.size());
          auto dist = [&](const std::string& a, const std::string& b) {
            return paren("mod", {paren("-", {a, b}), n});
          };
          body = paren("<", {dist(k, lo.val), dist(hi.val, lo.val)});
        } else {
          body = band(paren("<=", {lo.val, k}), paren("<", {k, hi.val}));
          std::string ok = paren("or", {paren("not", {paren("<", {lo.val, hi.val})}),
                                        band(paren("<=", {int_term(so.lo), lo.val}),
                                             paren("<=", {hi.val, int_term(so.hi + 1)}))});
          d = band(d, ok);
        }
        return {d, def_set(s, k, body), ""};
      }
      case ExprKind::Add:
      case ExprKind::Sub: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        const Sort& so = m.sorts[e->type.sort];
        std::string raw = paren(e->kind == ExprKind::Add ? "+" : "-", {a.val, b.val});
        std::string d = band(a.def, b.def);
        if (so.modular) {
          std::string n = int_term(so.size());
          std::string v = paren("+", {int_term(so.lo),
                                      paren("mod", {paren("-", {raw, int_term(so.lo)}), n})});
          return {d, v, ""};
        }
        d = band(d, band(paren("<=", {int_term(so.lo), raw}), paren("<=", {raw, int_term(so.hi)})));
        return {d, raw, ""};
      }
      case ExprKind::Less: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        return {band(a.def, b.def), paren("<", {a.val, b.val}), ""};
      }
      case ExprKind::Leq: {
        SmtVal a = tr(e->args[0]), b = tr(e->args[1]);
        return {band(a.def, b.def), paren("<=", {a.val, b.val}), ""};
      }
      case ExprKind::InvWrap: break;
    }
    return {"false", "true", ""};
  }
};

}  // namespace

std::string export_smtlib(const ProofObligation& po, const Machine& m) {
  SmtBuilder b(m);
  std::ostringstream head;
  head << "; obligation " << po.name << "\n";
  head << "; origin " << po_origin_name(po.origin) << "\n";
  head << "(set-logic ALL)\n";
  for (const auto& s : m.sorts) {
    if (s.is_int()) continue;
    head << "(declare-datatypes ((S_" << s.name << " 0)) (((E_" << s.elems[0] << ")";
    for (size_t i = 1; i < s.elems.size(); ++i) head << " (E_" << s.elems[i] << ")";
    head << ")))\n";
  }

  std::ostringstream vars;
  auto declare_entry = [&](const CtxEntry& c) {
    std::string base = c.is_primed ? "vp_" + c.name.substr(0, c.name.size() - 1)
                                   : (c.is_state ? "v_" + c.name : "b_" + c.name);
    switch (c.type.kind) {
      case SemType::Kind::Bool:
        vars << "(declare-const " << base << " Bool)\n";
        break;
      case SemType::Kind::Elem: {
        vars << "(declare-const " << base << " " << b.sort_name(c.type.sort) << ")\n";
        std::string rg = b.in_range(c.type.sort, base);
        if (rg != "true") vars << "(assert " << rg << ")\n";
        break;
      }
      case SemType::Kind::Set: {
        vars << "(declare-const " << base << " " << b.set_sort(c.type.sort) << ")\n";
        if (m.sorts[c.type.sort].is_int()) {
          std::string k = b.binder_sym();
          vars << "(assert (forall ((" << k << " Int)) (=> (not " << b.in_range(c.type.sort, k)
               << ") (not (select " << base << " " << k << ")))))\n";
        }
        break;
      }
      case SemType::Kind::Map: {
        std::string dsort = b.sort_name(c.type.sort), rsort = b.sort_name(c.type.sort2);
        vars << "(declare-const " << base << "_val (Array " << dsort << " " << rsort << "))\n";
        vars << "(declare-const " << base << "_dom (Array " << dsort << " Bool))\n";
        std::string k = b.binder_sym();
        if (m.sorts[c.type.sort].is_int())
          vars << "(assert (forall ((" << k << " Int)) (=> (not " << b.in_range(c.type.sort, k)
               << ") (not (select " << base << "_dom " << k << ")))))\n";
        std::string k2 = b.binder_sym();
        if (m.sorts[c.type.sort2].is_int())
          vars << "(assert (forall ((" << k2 << " " << dsort << ")) (=> (select " << base
               << "_dom " << k2 << ") " << b.in_range(c.type.sort2, "(select " + base + "_val " +
               k2 + ")") << ")))\n";
        if (c.type.total) {
          std::string k3 = b.binder_sym();
          vars << "(assert (forall ((" << k3 << " " << dsort << ")) "
               << (m.sorts[c.type.sort].is_int()
                       ? "(=> " + b.in_range(c.type.sort, k3) + " (select " + base + "_dom " + k3 + "))"
                       : "(select " + base + "_dom " + k3 + ")")
               << "))\n";
        }
        break;
      }
      default: break;
    }
  };
  for (const auto& c : po.ctx) declare_entry(c);

  std::ostringstream asserts;
  for (const auto& h : po.hyps) {
    SmtVal v = b.tr(h);
    asserts << "(assert " << SmtBuilder::band(v.def, v.val) << ")\n";
  }
  SmtVal g = b.tr(po.goal);
  asserts << "; a model is a counter-model or well-definedness failure of the goal\n";
  asserts << "(assert (not " << SmtBuilder::band(g.def, g.val) << "))\n";

  std::ostringstream out;
  out << head.str() << vars.str() << b.decls.str() << b.defs.str() << asserts.str()
      << "(check-sat)\n";
  return out.str();
}

}  // namespace unitb
