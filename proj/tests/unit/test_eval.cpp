#include "doctest.h"
#include "unitb/eval.hpp"
#include "unitb/parser.hpp"

using namespace unitb;

namespace {

Machine m1() {
  return parse_machine(R"(
machine m1
sets TRAIN = { t1, t2 }
     BLOCK = { Entry, P1, P2, Exit }
vars trains : set TRAIN ; location : TRAIN +-> BLOCK
init trains = {} and location = {}
end)", "m1.ub");
}

Valuation initial(const Machine& m) {
  auto vs = enumerate_where(m, m.init);
  REQUIRE(vs.size() == 1);
  return vs[0];
}

}  // namespace

TEST_CASE("partial application misses the domain -> undefined") {
  Machine m = m1();
  Valuation v = initial(m);
  Env env{&m, &v, nullptr, {}};
  ExprPtr e = parse_predicate("location.t1 = Exit", m);
  CHECK(eval_pred(e, env) == TriBool::Undef);
  // the wd bracket turns undefined into false, its negation into true
  CHECK(eval_pred(parse_predicate("wd(location.t1 = Exit)", m), env) == TriBool::False);
  CHECK(eval_pred(parse_predicate("not wd(location.t1 = Exit)", m), env) == TriBool::True);
}

TEST_CASE("inverse applied to a set yields the possibly-empty preimage") {
  Machine m = parse_machine(R"(
machine m4
sets P = { a, b }
     Q = int 0 .. 3
vars queue : P +-> Q ; head : Q
init queue = {} and head = 0
end)", "m4.ub");
  Valuation v = initial(m);
  Env env{&m, &v, nullptr, {}};
  CHECK(eval_pred(parse_predicate("(inv queue) img { head } = {}", m), env) == TriBool::True);
  // unique-element demand on an empty function is undefined
  CHECK(eval_pred(parse_predicate("(inv queue).head = a", m), env) == TriBool::Undef);
}

TEST_CASE("dom of the empty map is the empty set") {
  Machine m = m1();
  Valuation v = initial(m);
  Env env{&m, &v, nullptr, {}};
  CHECK(eval_pred(parse_predicate("dom location = {}", m), env) == TriBool::True);
}

TEST_CASE("enumerate_valuations sizes") {
  Machine mutex = parse_machine(R"(
machine mx
sets Pcs = { p1, p2 }
     St = { idle, waiting, cs }
vars st : Pcs --> St
init true
end)", "mx.ub");
  CHECK(enumerate_valuations(mutex).size() == 9);

  Machine mb = parse_machine("machine b vars x : bool init true end", "b.ub");
  CHECK(enumerate_valuations(mb).size() == 2);

  Machine ms = parse_machine(R"(
machine s
sets S = { a, b, c }
vars x : set S
init true
end)", "s.ub");
  CHECK(enumerate_valuations(ms).size() == 8);
}

TEST_CASE("successors of the initial train station") {
  Machine m = parse_machine(R"(
machine m0
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] during t in trains when t in TRAIN then trains := trains \ { t } end
end)", "m0.ub");
  auto insts = event_instances(m);
  Valuation v = initial(m);
  auto sucs = successors(m, insts, v);
  // arrive[t1], arrive[t2], depart[t1], depart[t2] (guard t in TRAIN), Skip
  REQUIRE(sucs.size() == 5);
  CHECK(insts[sucs[0].instance].label == "arrive[t1]");
  CHECK(show_valuation(m, sucs[0].state) == "{trains={t1}}");
  // depart of an absent element leaves the set unchanged
  CHECK(insts[sucs[2].instance].label == "depart[t1]");
  CHECK(show_valuation(m, sucs[2].state) == "{trains={}}");
  // Skip self-loop is always present
  CHECK(insts[sucs.back().instance].label == "Skip");
  CHECK(sucs.back().state == v);
}

TEST_CASE("choose-in over the empty set yields no successor") {
  Machine m = parse_machine(R"(
machine c
sets S = { a, b }
vars x : S ; pool : set S
init x = a and pool = {}
event pick when true then x :in pool end
end)", "c.ub");
  auto insts = event_instances(m);
  Valuation v = initial(m);
  auto sucs = successors(m, insts, v);
  REQUIRE(sucs.size() == 1);  // only Skip
  CHECK(insts[sucs[0].instance].label == "Skip");
}

TEST_CASE("guard undefined at a state raises a wd error") {
  Machine m = parse_machine(R"(
machine g
sets T = { t1 }
     B = { x, y }
vars f : T +-> B
init f = {}
event e when f.t1 = x then f := {} end
end)", "g.ub");
  auto insts = event_instances(m);
  Valuation v = initial(m);
  CHECK_THROWS_AS(successors(m, insts, v), WdError);
}

TEST_CASE("modular arithmetic wraps, plain arithmetic goes undefined") {
  Machine m = parse_machine(R"(
machine q
sets R = int 0 .. 3 mod
     N = int 4 .. 7
vars r : R ; n : N
init r = 3 and n = 7
end)", "q.ub");
  auto vs = enumerate_where(m, m.init);
  REQUIRE(vs.size() == 1);
  Env env{&m, &vs[0], nullptr, {}};
  CHECK(eval_pred(parse_predicate("r + 1 = 0", m), env) == TriBool::True);
  CHECK(eval_pred(parse_predicate("n + n = n", m), env) == TriBool::Undef);
  CHECK(eval_pred(parse_predicate("r - 1 = 2", m), env) == TriBool::True);
}

TEST_CASE("interval evaluation, including the modular ring") {
  Machine m = parse_machine(R"(
machine iv
sets R = int 0 .. 3 mod
vars h : R ; t : R
init h = 3 and t = 1
end)", "iv.ub");
  auto vs = enumerate_where(m, m.init);
  REQUIRE(vs.size() == 1);
  Env env{&m, &vs[0], nullptr, {}};
  // [3 .. 1) on the ring 0..3 is {3, 0}
  CHECK(eval_pred(parse_predicate("3 in [h .. t)", m), env) == TriBool::True);
  CHECK(eval_pred(parse_predicate("0 in [h .. t)", m), env) == TriBool::True);
  CHECK(eval_pred(parse_predicate("1 in [h .. t)", m), env) == TriBool::False);
  CHECK(eval_pred(parse_predicate("[h .. h) = {}", m), env) == TriBool::True);
}
