#include <algorithm>

#include "doctest.h"
#include "unitb/obligations.hpp"
#include "unitb/parser.hpp"

using namespace unitb;

namespace {

const char* kM0Unscheduled = R"(
machine m0u
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
invariant inv0_1 : trains subset TRAIN
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] when t in TRAIN then trains := trains \ { t } end
end)";

const char* kM0 = R"(
machine m0
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
invariant inv0_1 : trains subset TRAIN
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] during t in trains when t in TRAIN then trains := trains \ { t } end
end)";

const ProofObligation* find_po(const std::vector<ProofObligation>& pos, const std::string& part) {
  for (const auto& po : pos)
    if (po.name.find(part) != std::string::npos) return &po;
  return nullptr;
}

}  // namespace

TEST_CASE("invariance obligations: init and preservation per event") {
  Machine m = parse_machine(kM0, "m0.ub");
  auto pos = po_invariance(m);
  REQUIRE(pos.size() == 3);  // init + arrive + depart
  for (const auto& po : pos) CHECK(discharge(po, m).ok());
}

TEST_CASE("a trivially true invariant discharges") {
  Machine m = parse_machine(R"(
machine t
vars x : bool
init x = false
invariant always : true
event flip then x := not x end
end)", "t.ub");
  for (const auto& po : po_invariance(m)) CHECK(discharge(po, m).ok());
}

TEST_CASE("collision invariant vs unguarded moveout yields two trains at Exit") {
  // M2-like machine whose moveout lacks the exit-free strengthening
  Machine m = parse_machine(R"(
machine m2x
sets TRAIN = { t1, t2 }
     BLOCK = { Entry, P1, P2, Exit }
defs PLATFORM = { P1, P2 }
vars trains : set TRAIN ; location : TRAIN +-> BLOCK
init trains = {} and location = {}
invariant inv1_1 : dom location = trains
invariant inv2_1 : forall (a : TRAIN | a in trains . forall (b : TRAIN | b in trains and location.a = location.b . a = b))
event moveout [t : TRAIN]
  during t in trains and location.t in PLATFORM
  when t in trains and location.t in PLATFORM
  then location := location ovl { t -> Exit } end
end)", "m2x.ub");
  auto pos = po_invariance(m);
  const ProofObligation* po = find_po(pos, "inv2_1/moveout");
  REQUIRE(po != nullptr);
  Verdict v = discharge(*po, m);
  REQUIRE(v.kind == Verdict::Kind::CounterModel);
  // the counter-model maps both trains to Exit in the post state
  std::string loc_after;
  for (const auto& [k, val] : v.model)
    if (k == "location'") loc_after = val;
  CHECK(loc_after.find("t1 -> Exit") != std::string::npos);
  CHECK(loc_after.find("t2 -> Exit") != std::string::npos);
}

TEST_CASE("unless obligations omit the schedules") {
  Machine m = parse_machine(R"(
machine mu
sets S = { a, b }
vars x : S
init x = a
property keep : x = a un x = b
event go [s : S] during x = a when true then x := s end
end)", "mu.ub");
  const Property* p = m.property("keep");
  auto pos = po_unless(m, *p);
  REQUIRE(pos.size() == 1);
  // hypotheses: p, ¬q, I, g, BA -- the coarse schedule (x = a) appears only as p
  CHECK(pos[0].hyps.size() == 5);
  CHECK(pretty_in(m, pos[0].hyps[3]) == "true");  // the guard, not the schedule
  CHECK(discharge(pos[0], m).ok());
}

TEST_CASE("q := true makes an unless goal trivially valid") {
  Machine m = parse_machine(R"(
machine mq
vars x : bool
init x = false
property triv : x = false un true
event flip then x := not x end
end)", "mq.ub");
  for (const auto& po : po_unless(m, *m.property("triv"))) CHECK(discharge(po, m).ok());
}

TEST_CASE("feasibility: coarse equal to guard is valid, c false is vacuous") {
  Machine m = parse_machine(R"(
machine mf
sets S = { a, b }
vars x : S
init x = a
event e1 during x = a when x = a then x := b end
event e2 when x = b then x := a end
end)", "mf.ub");
  auto pos = po_feasibility(m);
  REQUIRE(pos.size() == 2);
  CHECK(discharge(pos[0], m).ok());
  CHECK(discharge(pos[1], m).ok());  // coarse false: vacuous
}

TEST_CASE("infeasible schedules produce a counter-model") {
  Machine m = parse_machine(R"(
machine minf
sets S = { a, b }
vars x : S ; y : S
init x = a and y = a
event e during x = a when x = a and y = b then x := b end
end)", "minf.ub");
  auto pos = po_feasibility(m);
  Verdict v = discharge(pos[0], m);
  CHECK(v.kind == Verdict::Kind::CounterModel);
}

TEST_CASE("falsifies: unscheduled depart fails C_EN with the first counter-model") {
  Machine m = parse_machine(kM0Unscheduled, "m0u.ub");
  const Event* depart = m.event("depart");
  SortId train = m.sort_id("TRAIN");
  ExprPtr p = parse_predicate("t in trains", m, {{"t", train}});
  FalsifiesPos fp = po_falsifies(m, *depart, {parse_expression("t", m, {{"t", train}})}, p,
                                 {{"t", train}}, "1", "m0u/prg0_1/FLS:depart");
  CHECK(discharge(fp.neg, m).ok());  // NEG_1 holds even unscheduled
  Verdict v = discharge(fp.c_en, m);
  REQUIRE(v.kind == Verdict::Kind::CounterModel);
  // enumeration-first witness: trains = {t1}, t = t1
  std::string trains, t;
  for (const auto& [k, val] : v.model) {
    if (k == "trains") trains = val;
    if (k == "t") t = val;
  }
  CHECK(trains == "{t1}");
  CHECK(t == "t1");
  CHECK(!fp.f_en.has_value());  // fine is 1
}

TEST_CASE("falsifies: scheduled depart discharges C_EN' and NEG'") {
  Machine m = parse_machine(kM0, "m0.ub");
  const Event* depart = m.event("depart");
  SortId train = m.sort_id("TRAIN");
  ExprPtr p = parse_predicate("t in trains", m, {{"t", train}});
  FalsifiesPos fp = po_falsifies(m, *depart, {parse_expression("t", m, {{"t", train}})}, p,
                                 {{"t", train}}, "1'", "m0/prg0_1/FLS:depart");
  CHECK(fp.neg.name == "m0/prg0_1/FLS:depart/NEG_1'");
  CHECK(fp.c_en.name == "m0/prg0_1/FLS:depart/C_EN_1'");
  CHECK(discharge(fp.neg, m).ok());
  CHECK(discharge(fp.c_en, m).ok());
}

TEST_CASE("goal equal to a hypothesis is valid") {
  Machine m = parse_machine("machine g vars x : bool init true end", "g.ub");
  ProofObligation po;
  po.name = "g/test";
  po.origin = PoOrigin::Implication;
  po.ctx.push_back({"x", SemType::boolean(), true, false, 0});
  po.hyps = {parse_predicate("x = true", m)};
  po.goal = parse_predicate("x = true", m);
  CHECK(discharge(po, m).ok());
}

TEST_CASE("discharge is monotone in hypotheses") {
  Machine m = parse_machine(R"(
machine mono
sets S = { a, b, c }
vars x : S ; y : S
init true
end)", "mono.ub");
  ProofObligation po;
  po.name = "mono/base";
  po.origin = PoOrigin::Implication;
  po.ctx.push_back({"x", SemType::elem(0), true, false, 0});
  po.ctx.push_back({"y", SemType::elem(0), false, false, 1});
  po.ctx.back().is_state = true;
  po.ctx.back().var_idx = 1;
  po.hyps = {parse_predicate("x = a", m)};
  po.goal = parse_predicate("x = a or y = b", m);
  CHECK(discharge(po, m).ok());
  po.hyps.push_back(parse_predicate("y = c", m));
  CHECK(discharge(po, m).ok());  // adding hypotheses never breaks validity
}

TEST_CASE("wd failure of the goal under true hypotheses is reported as such") {
  Machine m = parse_machine(R"(
machine w
sets T = { t1 }
     B = { x }
vars f : T +-> B
init true
end)", "w.ub");
  ProofObligation po;
  po.name = "w/wd";
  po.origin = PoOrigin::Implication;
  po.ctx.push_back({"f", m.vars[0].type, true, false, 0});
  po.hyps = {parse_predicate("f = {}", m)};
  po.goal = parse_predicate("f.t1 = x", m);
  Verdict v = discharge(po, m);
  CHECK(v.kind == Verdict::Kind::WdFailure);
}

TEST_CASE("the enumeration budget reports skipped") {
  Machine m = parse_machine(R"(
machine big
sets S = { a, b, c }
vars x : set S ; y : set S ; z : set S
init true
end)", "big.ub");
  ProofObligation po;
  po.name = "big/skip";
  po.origin = PoOrigin::Implication;
  for (size_t i = 0; i < m.vars.size(); ++i)
    po.ctx.push_back({m.vars[i].name, m.vars[i].type, true, false, (int)i});
  po.hyps = {parse_predicate("true", m)};
  po.goal = parse_predicate("x = x", m);
  PoOptions opt;
  opt.po_limit = 10;
  Verdict v = discharge(po, m, opt);
  CHECK(v.kind == Verdict::Kind::Skipped);
}
