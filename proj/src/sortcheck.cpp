#include <functional>
#include <sstream>
#include <vector>

#include "unitb/parser.hpp"

namespace unitb {

namespace {

struct SortChecker {
  const Machine& m;
  bool allow_primed;
  std::vector<std::pair<std::string, SortId>> bound;

  [[noreturn]] void fail(const ExprPtr& e, const std::string& msg) {
    throw ParseError({{e->span, msg}});
  }

  std::string type_str(const SemType& t) {
    switch (t.kind) {
      case SemType::Kind::Bool: return "bool";
      case SemType::Kind::Elem: return m.sorts[t.sort].name;
      case SemType::Kind::Set: return "set " + m.sorts[t.sort].name;
      case SemType::Kind::Map:
        return m.sorts[t.sort].name + (t.total ? " --> " : " +-> ") + m.sorts[t.sort2].name;
      default: return "?";
    }
  }

  bool is_int_sort(SortId s) { return s >= 0 && m.sorts[s].is_int(); }

  // Infer bottom-up; `expected` guides literals whose sort is not determined
  // by their own shape (integer literals, {} and map/set literals of them).
  SemType check(const ExprPtr& e, const SemType& expected) {
    SemType t = infer(e, expected);
    if (!expected.is_none() && t != expected)
      fail(e, "expected " + type_str(expected) + ", found " + type_str(t));
    e->type = t;
    return t;
  }

  SemType infer(const ExprPtr& e, const SemType& expected) {
    switch (e->kind) {
      case ExprKind::True:
      case ExprKind::False:
        return SemType::boolean();
      case ExprKind::IntLit: {
        if (expected.kind == SemType::Kind::Elem && is_int_sort(expected.sort)) return expected;
        // unambiguous when exactly one int sort contains the literal
        SortId found = -1;
        for (size_t i = 0; i < m.sorts.size(); ++i)
          if (m.sorts[i].is_int() && m.sorts[i].lo <= e->int_val && e->int_val <= m.sorts[i].hi) {
            if (found >= 0) fail(e, "ambiguous integer literal; annotate via context");
            found = (SortId)i;
          }
        if (found < 0) fail(e, "integer literal outside every declared int sort");
        return SemType::elem(found);
      }
      case ExprKind::ElemLit:
        return SemType::elem(e->elem_sort);
      case ExprKind::Var: {
        int vi = m.var_index(e->name);
        if (vi < 0) fail(e, "unknown variable " + e->name);
        if (e->primed && !allow_primed) fail(e, "primed variable outside before-after predicate");
        return m.vars[vi].type;
      }
      case ExprKind::BoundVar: {
        for (auto it = bound.rbegin(); it != bound.rend(); ++it)
          if (it->first == e->name) return SemType::elem(it->second);
        fail(e, "unknown identifier " + e->name);
      }
      case ExprKind::Equals: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none()) {
          SemType rt = check(e->args[1], {});
          check(e->args[0], rt);
        } else {
          check(e->args[0], lt);
          check(e->args[1], lt);
        }
        return SemType::boolean();
      }
      case ExprKind::Member: {
        SemType st = try_infer(e->args[1]);
        if (!st.is_none() && st.kind == SemType::Kind::Set) {
          check(e->args[1], st);
          check(e->args[0], SemType::elem(st.sort));
        } else {
          SemType et = check(e->args[0], {});
          if (et.kind != SemType::Kind::Elem) fail(e->args[0], "member needs an element");
          check(e->args[1], SemType::set(et.sort));
        }
        return SemType::boolean();
      }
      case ExprKind::Subset: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none() || lt.kind != SemType::Kind::Set) {
          SemType rt = check(e->args[1], {});
          if (rt.kind != SemType::Kind::Set) fail(e, "subset needs sets");
          check(e->args[0], rt);
        } else {
          check(e->args[0], lt);
          check(e->args[1], lt);
        }
        return SemType::boolean();
      }
      case ExprKind::And:
      case ExprKind::Or:
      case ExprKind::Implies:
        check(e->args[0], SemType::boolean());
        check(e->args[1], SemType::boolean());
        return SemType::boolean();
      case ExprKind::Not:
      case ExprKind::Wd:
        check(e->args[0], SemType::boolean());
        return SemType::boolean();
      case ExprKind::Forall:
      case ExprKind::Exists: {
        bound.emplace_back(e->name, e->binder_sort);
        check(e->args[0], SemType::boolean());
        check(e->args[1], SemType::boolean());
        bound.pop_back();
        return SemType::boolean();
      }
      case ExprKind::SetLit: {
        if (e->args.empty()) {
          if (expected.kind == SemType::Kind::Map) {
            // {} doubles as the empty partial function
            const_cast<Expr*>(e.get())->kind = ExprKind::MapLit;
            return expected;
          }
          if (expected.kind != SemType::Kind::Set)
            fail(e, "cannot infer the sort of {} here");
          return expected;
        }
        SemType et = expected.kind == SemType::Kind::Set ? SemType::elem(expected.sort)
                                                         : try_infer(e->args[0]);
        if (et.is_none())
          for (const auto& a : e->args) {
            et = try_infer(a);
            if (!et.is_none()) break;
          }
        if (et.is_none()) fail(e, "cannot infer the sort of this set literal");
        if (et.kind != SemType::Kind::Elem) fail(e, "set literal of non-elements");
        for (const auto& a : e->args) check(a, et);
        return SemType::set(et.sort);
      }
      case ExprKind::MapLit: {
        SemType kt, vt;
        if (expected.kind == SemType::Kind::Map) {
          kt = SemType::elem(expected.sort);
          vt = SemType::elem(expected.sort2);
        } else {
          kt = try_infer(e->entries[0].first);
          vt = try_infer(e->entries[0].second);
          if (kt.is_none() || vt.is_none()) fail(e, "cannot infer the sorts of this map literal");
        }
        if (kt.kind != SemType::Kind::Elem || vt.kind != SemType::Kind::Elem)
          fail(e, "map literal needs element keys and values");
        for (const auto& [k, v] : e->entries) {
          check(k, kt);
          check(v, vt);
        }
        // map literals are partial-function values
        return SemType::map(kt.sort, vt.sort, false);
      }
      case ExprKind::Union:
      case ExprKind::Inter:
      case ExprKind::Diff: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none() || lt.kind != SemType::Kind::Set) lt = check(e->args[1], {});
        if (lt.kind != SemType::Kind::Set) fail(e, "set operator needs sets");
        check(e->args[0], lt);
        check(e->args[1], lt);
        return lt;
      }
      case ExprKind::Dom: {
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "dom needs a function");
        return SemType::set(ft.sort);
      }
      case ExprKind::Ran: {
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "ran needs a function");
        return SemType::set(ft.sort2);
      }
      case ExprKind::Apply: {
        // f.x, (inv f).x, (inv f).S
        if (e->args[0]->kind == ExprKind::InvWrap) {
          SemType ft = check(e->args[0]->args[0], {});
          if (ft.kind != SemType::Kind::Map) fail(e, "inv needs a function");
          e->args[0]->type = ft;
          SemType at = try_infer(e->args[1]);
          auto inv = std::make_shared<Expr>(ExprKind::InvApply);
          inv->args = {e->args[0]->args[0], e->args[1]};
          inv->span = e->span;
          if (!at.is_none() && at.kind == SemType::Kind::Set) {
            check(e->args[1], SemType::set(ft.sort2));
            inv->type = SemType::set(ft.sort);
          } else {
            check(e->args[1], SemType::elem(ft.sort2));
            inv->type = SemType::elem(ft.sort);
          }
          // rewrite in place
          const_cast<Expr*>(e.get())->kind = ExprKind::InvApply;
          const_cast<Expr*>(e.get())->args = inv->args;
          return inv->type;
        }
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e->args[0], "application needs a function");
        check(e->args[1], SemType::elem(ft.sort));
        return SemType::elem(ft.sort2);
      }
      case ExprKind::InvApply: {
        SemType ft = check(e->args[0], {});
        SemType at = check(e->args[1], {});
        if (at.kind == SemType::Kind::Set) return SemType::set(ft.sort);
        return SemType::elem(ft.sort);
      }
      case ExprKind::Image: {
        if (e->args[0]->kind == ExprKind::InvWrap) {
          SemType ft = check(e->args[0]->args[0], {});
          if (ft.kind != SemType::Kind::Map) fail(e, "inv needs a function");
          check(e->args[1], SemType::set(ft.sort2));
          const_cast<Expr*>(e.get())->kind = ExprKind::InvApply;
          const_cast<Expr*>(e.get())->args = {e->args[0]->args[0], e->args[1]};
          return SemType::set(ft.sort);
        }
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "img needs a function");
        check(e->args[1], SemType::set(ft.sort));
        return SemType::set(ft.sort2);
      }
      case ExprKind::DomSub: {
        SemType ft = check(e->args[1], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "domsub needs a function");
        check(e->args[0], SemType::set(ft.sort));
        return SemType::map(ft.sort, ft.sort2, false);
      }
      case ExprKind::RanSub: {
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "ransub needs a function");
        check(e->args[1], SemType::set(ft.sort2));
        return SemType::map(ft.sort, ft.sort2, false);
      }
      case ExprKind::Ovl: {
        SemType ft = check(e->args[0], {});
        if (ft.kind != SemType::Kind::Map) fail(e, "ovl needs functions");
        check(e->args[1], SemType::map(ft.sort, ft.sort2, false));
        return ft;
      }
      case ExprKind::Interval: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none() || !is_int_sort(lt.sort)) lt = try_infer(e->args[1]);
        if (lt.is_none() && expected.kind == SemType::Kind::Set && is_int_sort(expected.sort))
          lt = SemType::elem(expected.sort);
        if (lt.is_none() || lt.kind != SemType::Kind::Elem || !is_int_sort(lt.sort))
          fail(e, "interval needs int-sorted bounds");
        check(e->args[0], lt);
        check(e->args[1], lt);
        return SemType::set(lt.sort);
      }
      case ExprKind::Add:
      case ExprKind::Sub: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none()) lt = try_infer(e->args[1]);
        if (lt.is_none() && expected.kind == SemType::Kind::Elem) lt = expected;
        if (lt.is_none() || lt.kind != SemType::Kind::Elem || !is_int_sort(lt.sort))
          fail(e, "arithmetic needs int-sorted operands");
        check(e->args[0], lt);
        check(e->args[1], lt);
        return lt;
      }
      case ExprKind::Less:
      case ExprKind::Leq: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none()) lt = try_infer(e->args[1]);
        if (lt.is_none() || lt.kind != SemType::Kind::Elem || !is_int_sort(lt.sort))
          fail(e, "comparison needs int-sorted operands");
        check(e->args[0], lt);
        check(e->args[1], lt);
        return SemType::boolean();
      }
      case ExprKind::InvWrap:
        fail(e, "inv must be applied with '.' or img");
    }
    fail(e, "malformed expression");
  }

  // Inference attempt that does not commit; returns None for literals whose
  // sort needs context.
  SemType try_infer(const ExprPtr& e) {
    switch (e->kind) {
      case ExprKind::IntLit: {
        SortId found = -1;
        int hits = 0;
        for (size_t i = 0; i < m.sorts.size(); ++i)
          if (m.sorts[i].is_int() && m.sorts[i].lo <= e->int_val && e->int_val <= m.sorts[i].hi) {
            found = (SortId)i;
            ++hits;
          }
        return hits == 1 ? SemType::elem(found) : SemType{};
      }
      case ExprKind::SetLit: {
        if (e->args.empty()) return {};
        SemType et = try_infer(e->args[0]);
        if (et.is_none() || et.kind != SemType::Kind::Elem) return {};
        return SemType::set(et.sort);
      }
      case ExprKind::MapLit: {
        SemType kt = try_infer(e->entries[0].first);
        SemType vt = try_infer(e->entries[0].second);
        if (kt.is_none() || vt.is_none()) return {};
        return SemType::map(kt.sort, vt.sort, false);
      }
      case ExprKind::Interval: {
        SemType lt = try_infer(e->args[0]);
        if (lt.is_none()) lt = try_infer(e->args[1]);
        if (lt.is_none()) return {};
        return SemType::set(lt.sort);
      }
      case ExprKind::ElemLit: return SemType::elem(e->elem_sort);
      case ExprKind::Var: {
        int vi = m.var_index(e->name);
        return vi < 0 ? SemType{} : m.vars[vi].type;
      }
      case ExprKind::BoundVar: {
        for (auto it = bound.rbegin(); it != bound.rend(); ++it)
          if (it->first == e->name) return SemType::elem(it->second);
        return {};
      }
      case ExprKind::Add:
      case ExprKind::Sub: {
        SemType lt = try_infer(e->args[0]);
        return lt.is_none() ? try_infer(e->args[1]) : lt;
      }
      case ExprKind::Union:
      case ExprKind::Inter:
      case ExprKind::Diff: {
        SemType lt = try_infer(e->args[0]);
        return lt.is_none() ? try_infer(e->args[1]) : lt;
      }
      case ExprKind::Dom: {
        SemType ft = try_infer(e->args[0]);
        return ft.kind == SemType::Kind::Map ? SemType::set(ft.sort) : SemType{};
      }
      case ExprKind::Ran: {
        SemType ft = try_infer(e->args[0]);
        return ft.kind == SemType::Kind::Map ? SemType::set(ft.sort2) : SemType{};
      }
      case ExprKind::Apply: {
        if (e->args[0]->kind == ExprKind::InvWrap) {
          SemType ft = try_infer(e->args[0]->args[0]);
          if (ft.kind != SemType::Kind::Map) return {};
          SemType at = try_infer(e->args[1]);
          if (at.kind == SemType::Kind::Set) return SemType::set(ft.sort);
          return SemType::elem(ft.sort);
        }
        SemType ft = try_infer(e->args[0]);
        return ft.kind == SemType::Kind::Map ? SemType::elem(ft.sort2) : SemType{};
      }
      case ExprKind::InvApply: {
        SemType ft = try_infer(e->args[0]);
        if (ft.kind != SemType::Kind::Map) return {};
        SemType at = try_infer(e->args[1]);
        if (at.kind == SemType::Kind::Set) return SemType::set(ft.sort);
        return SemType::elem(ft.sort);
      }
      case ExprKind::Image: {
        SemType ft = try_infer(e->args[0]->kind == ExprKind::InvWrap ? e->args[0]->args[0]
                                                                     : e->args[0]);
        if (ft.kind != SemType::Kind::Map) return {};
        return SemType::set(e->args[0]->kind == ExprKind::InvWrap ? ft.sort : ft.sort2);
      }
      case ExprKind::Ovl:
        return try_infer(e->args[0]);
      case ExprKind::DomSub:
        return try_infer(e->args[1]);
      case ExprKind::RanSub:
        return try_infer(e->args[0]);
      case ExprKind::True:
      case ExprKind::False:
      case ExprKind::And:
      case ExprKind::Or:
      case ExprKind::Not:
      case ExprKind::Implies:
      case ExprKind::Equals:
      case ExprKind::Member:
      case ExprKind::Subset:
      case ExprKind::Less:
      case ExprKind::Leq:
      case ExprKind::Wd:
      case ExprKind::Forall:
      case ExprKind::Exists:
        return SemType::boolean();
      default: return {};
    }
  }
};

}  // namespace

void sort_check(const Machine& m, const ExprPtr& e, const SemType& expected,
                std::vector<std::pair<std::string, SortId>> bound, bool allow_primed) {
  SortChecker sc{m, allow_primed, std::move(bound)};
  sc.check(e, expected);
}

}  // namespace unitb
