#include <string>

#include "doctest.h"
#include "unitb/parser.hpp"

using namespace unitb;

namespace {

const char* kMutex = R"(
machine mutex
sets
  Pcs = { p1, p2 }
  St = { idle, waiting, cs }
vars
  st : Pcs --> St
init forall (p : Pcs | true . st.p = idle)
invariant inv1 : forall (p : Pcs | true . forall (q : Pcs | p /= q . not (st.p = cs and st.q = cs)))
event request [p : Pcs]
  when st.p = idle
  then st.p := waiting end
event enter [p : Pcs]
  during st.p = waiting
  upon forall (q : Pcs | q /= p . st.q /= cs)
  when st.p = waiting and forall (q : Pcs | q /= p . st.q /= cs)
  then st.p := cs end
event exit [p : Pcs]
  during st.p = cs
  when st.p = cs
  then st.p := idle end
property prg1 [p : Pcs] : st.p = waiting ~> st.p = cs
property prg2 : true ~> forall (p : Pcs | true . not st.p = cs)
end
)";

}  // namespace

TEST_CASE("mutex parses with three events and both schedules on enter") {
  Machine m = parse_machine(kMutex, "mutex.ub");
  CHECK(m.events.size() == 3);
  const Event* enter = m.event("enter");
  REQUIRE(enter != nullptr);
  CHECK(enter->coarse->kind != ExprKind::False);
  CHECK(enter->fine->kind != ExprKind::True);
  // request is unscheduled: coarse defaults to false, fine to true
  const Event* request = m.event("request");
  CHECK(request->coarse->kind == ExprKind::False);
  CHECK(request->fine->kind == ExprKind::True);
  // exit has a coarse schedule only
  const Event* exit_ = m.event("exit");
  CHECK(exit_->fine->kind == ExprKind::True);
}

TEST_CASE("round-trip: parse(pretty(m)) is structurally equal") {
  Machine m = parse_machine(kMutex, "mutex.ub");
  std::string text = pretty(m);
  Machine m2 = parse_machine(text, "mutex2.ub");
  CHECK(equal(m, m2));
  // pretty is deterministic
  CHECK(pretty(m) == pretty(m2));
}

TEST_CASE("depart-like event defaults its fine schedule") {
  Machine m = parse_machine(R"(
machine m0
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
event e [t : TRAIN] during t in trains then trains := trains \ { t } end
end)", "m0.ub");
  const Event* e = m.event("e");
  REQUIRE(e != nullptr);
  CHECK(e->fine->kind == ExprKind::True);
  CHECK(e->coarse->kind == ExprKind::Member);
  CHECK(e->guard->kind == ExprKind::True);
}

TEST_CASE("syntax errors carry a span") {
  try {
    parse_machine("machine m vars x : bool init x and end", "bad.ub");
    FAIL("expected a parse error");
  } catch (const ParseError& pe) {
    REQUIRE(!pe.diags.empty());
    CHECK(pe.diags[0].span.line_begin >= 1);
    CHECK(pe.diags[0].span.file == "bad.ub");
  }
}

TEST_CASE("scope errors name the unknown identifier") {
  try {
    parse_machine("machine m vars x : bool init foo end", "scope.ub");
    FAIL("expected a scope error");
  } catch (const ParseError& pe) {
    CHECK(pe.diags[0].message.find("foo") != std::string::npos);
  }
}

TEST_CASE("predicates parse in machine scope") {
  Machine m = parse_machine(R"(
machine m1
sets TRAIN = { t1, t2 }
     BLOCK = { Entry, P1, P2, Exit }
vars trains : set TRAIN ; location : TRAIN +-> BLOCK
init trains = {} and location = {}
end)", "m1.ub");
  ExprPtr e = parse_predicate("wd(location.t = Exit)", m, {{"t", m.sort_id("TRAIN")}});
  CHECK(e->kind == ExprKind::Wd);
  CHECK(e->args[0]->kind == ExprKind::Equals);
  CHECK(e->args[0]->args[0]->kind == ExprKind::Apply);

  ExprPtr sub = parse_predicate("{} subset trains", m);
  CHECK(sub->kind == ExprKind::Subset);

  ExprPtr invap = parse_predicate("(inv location).Exit in trains", m);
  CHECK(invap->kind == ExprKind::Member);
  CHECK(invap->args[0]->kind == ExprKind::InvApply);
}

TEST_CASE("unicode aliases are accepted") {
  std::string src = "machine m\nsets S = { a, b }\nvars x : set S\ninit x = {}\n";
  src += "property pr [s : S] : s \xE2\x88\x88 x \xE2\x86\x9D \xC2\xAC s \xE2\x88\x88 x\nend\n";
  Machine m = parse_machine(src, "uni.ub");
  const Property* p = m.property("pr");
  REQUIRE(p != nullptr);
  CHECK(p->kind == PropKind::LeadsTo);
  CHECK(p->rhs->kind == ExprKind::Not);
}

TEST_CASE("normalize is idempotent") {
  Machine m = parse_machine(kMutex, "mutex.ub");
  Machine before = m;
  normalize(m);
  CHECK(equal(before, m));
}

TEST_CASE("event_instances enumerates the index product plus Skip") {
  Machine m = parse_machine(kMutex, "mutex.ub");
  auto insts = event_instances(m);
  REQUIRE(insts.size() == 7);
  CHECK(insts[0].label == "request[p1]");
  CHECK(insts[1].label == "request[p2]");
  CHECK(insts[2].label == "enter[p1]");
  CHECK(insts[4].label == "exit[p1]");
  CHECK(insts[6].label == "Skip");
}

TEST_CASE("mixed-sort indices enumerate lexicographically") {
  Machine m = parse_machine(R"(
machine m
sets N = int 0 .. 1
     E = { a, b }
vars x : bool
init x = false
event e [i : N, j : E] then x := true end
end)", "mix.ub");
  auto insts = event_instances(m);
  REQUIRE(insts.size() == 5);
  CHECK(insts[0].label == "e[0,a]");
  CHECK(insts[1].label == "e[0,b]");
  CHECK(insts[2].label == "e[1,a]");
  CHECK(insts[3].label == "e[1,b]");
}

TEST_CASE("well_formed flags double assignment") {
  try {
    parse_machine(R"(
machine m
vars x : bool
init x = false
event e then x := true ; x := false end
end)", "dup.ub");
    FAIL("expected a diagnostic");
  } catch (const ParseError& pe) {
    CHECK(pe.diags[0].message.find("assigned twice") != std::string::npos);
  }
}
