#include "doctest.h"
#include "unitb/parser.hpp"
#include "unitb/semantics.hpp"

using namespace unitb;

namespace {

const char* kMutex = R"(
machine mutex
sets Pcs = { p1, p2 }
     St = { idle, waiting, cs }
vars st : Pcs --> St
init forall (p : Pcs | true . st.p = idle)
invariant inv1 : forall (p : Pcs | true . forall (q : Pcs | p /= q . not (st.p = cs and st.q = cs)))
event request [p : Pcs]
  when st.p = idle then st.p := waiting end
event enter [p : Pcs]
  during st.p = waiting
  upon forall (q : Pcs | q /= p . st.q /= cs)
  when st.p = waiting and forall (q : Pcs | q /= p . st.q /= cs)
  then st.p := cs end
event exit [p : Pcs]
  during st.p = cs
  when st.p = cs then st.p := idle end
end
)";

// weak-fairness variant of enter: everything in the coarse schedule
const char* kMutexWeak = R"(
machine mutexw
sets Pcs = { p1, p2 }
     St = { idle, waiting, cs }
vars st : Pcs --> St
init forall (p : Pcs | true . st.p = idle)
event request [p : Pcs]
  when st.p = idle then st.p := waiting end
event enter [p : Pcs]
  during st.p = waiting and forall (q : Pcs | q /= p . st.q /= cs)
  when st.p = waiting and forall (q : Pcs | q /= p . st.q /= cs)
  then st.p := cs end
event exit [p : Pcs]
  during st.p = cs
  when st.p = cs then st.p := idle end
end
)";

Machine mutex() { return parse_machine(kMutex, "mutex.ub"); }

}  // namespace

TEST_CASE("mutex reaches the 8 states with at most one process in cs") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  CHECK(ts.states.size() == 8);
  CHECK(ts.initial.size() == 1);
}

TEST_CASE("train m0 reaches the powerset; init false gives an empty system") {
  Machine m = parse_machine(R"(
machine m0
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] during t in trains when t in TRAIN then trains := trains \ { t } end
end)", "m0.ub");
  CHECK(build_ts(m).states.size() == 4);

  Machine dead = parse_machine("machine d vars x : bool init false end", "d.ub");
  TransitionSystem ts = build_ts(dead);
  CHECK(ts.states.empty());
  CHECK(ts.initial.empty());
}

TEST_CASE("check_invariant: mutual exclusion holds, false fails at an initial state") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  const Property& inv = m.invariants[0];
  CHECK(check_invariant(ts, inv.lhs).holds);

  InvariantResult r = check_invariant(ts, parse_predicate("false", m));
  CHECK(!r.holds);
  CHECK(r.path.empty());  // already violated at an initial state
}

TEST_CASE("check_unless basics") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  // p un true holds for any p
  CHECK(check_unless(ts, parse_predicate("st.p1 = cs", m), parse_predicate("true", m)).holds);
  // direct violation: waiting -> cs falsifies (st.p1 = waiting) un false
  UnlessResult r =
      check_unless(ts, parse_predicate("st.p1 = waiting", m), parse_predicate("false", m));
  CHECK(!r.holds);
  CHECK(ts.instances[r.edge->instance].label == "enter[p1]");
}

TEST_CASE("cycle schedule consistency on explicit cycles") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  // find the state where p1 is in cs and p2 idle
  StateId cs_state = -1;
  for (StateId s = 0; s < (StateId)ts.states.size(); ++s)
    if (show_valuation(m, ts.states[s]) == "{st={p1 -> cs,p2 -> idle}}") cs_state = s;
  REQUIRE(cs_state >= 0);
  int skip = ts.skip_instance();
  // a Skip self-loop where exit[p1]'s coarse holds is inconsistent
  CycleAnalysis an = cycle_schedule_consistent(ts, {{cs_state, skip, cs_state}});
  CHECK(!an.consistent);
  bool exit_p1_violated = false;
  for (size_t i = 0; i < ts.instances.size(); ++i)
    if (ts.instances[i].label == "exit[p1]" && an.violated[i]) exit_p1_violated = true;
  CHECK(exit_p1_violated);

  // a cycle containing the exit[p1] occurrence is consistent for exit[p1]
  int exit_inst = -1;
  StateId after = -1;
  for (const auto& [inst, to] : ts.out[cs_state])
    if (ts.instances[inst].label == "exit[p1]") { exit_inst = inst; after = to; }
  REQUIRE(exit_inst >= 0);
  int req_inst = -1;
  StateId back = -1;
  for (const auto& [inst, to] : ts.out[after])
    if (ts.instances[inst].label == "request[p1]") { req_inst = inst; back = to; }
  REQUIRE(req_inst >= 0);
  int enter_inst = -1;
  StateId back2 = -1;
  for (const auto& [inst, to] : ts.out[back])
    if (ts.instances[inst].label == "enter[p1]") { enter_inst = inst; back2 = to; }
  REQUIRE(back2 == cs_state);
  CycleAnalysis an2 = cycle_schedule_consistent(
      ts, {{cs_state, exit_inst, after}, {after, req_inst, back}, {back, enter_inst, cs_state}});
  for (size_t i = 0; i < ts.instances.size(); ++i)
    if (ts.instances[i].label == "exit[p1]") CHECK(!an2.violated[i]);
}

TEST_CASE("individual progress holds under the split schedule") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  for (const char* p : {"p1", "p2"}) {
    LivenessResult r = check_leadsto(ts, parse_predicate(std::string("st.") + p + " = waiting", m),
                                     parse_predicate(std::string("st.") + p + " = cs", m));
    CHECK(r.holds);
  }
  // prg2: infinitely often nobody is in a critical section
  LivenessResult r2 = check_leadsto(ts, parse_predicate("true", m),
                                    parse_predicate("forall (p : Pcs | true . not st.p = cs)", m));
  CHECK(r2.holds);
}

TEST_CASE("weak fairness admits a starvation lasso") {
  Machine m = parse_machine(kMutexWeak, "mutexw.ub");
  TransitionSystem ts = build_ts(m);
  LivenessResult r = check_leadsto(ts, parse_predicate("st.p1 = waiting", m),
                                   parse_predicate("st.p1 = cs", m));
  CHECK(!r.holds);
  REQUIRE(r.lasso.has_value());
  // the cycle keeps p1 waiting while p2 moves
  std::string json = lasso_to_json(ts, *r.lasso);
  CHECK(json.find("\"cycle\"") != std::string::npos);
}

TEST_CASE("forbid false: some lasso exists in any nonempty system") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  auto lasso = find_fair_lasso(ts, ts.initial, parse_predicate("false", m));
  CHECK(lasso.has_value());
}

TEST_CASE("leads-to on m0 with and without the coarse schedule on depart") {
  Machine scheduled = parse_machine(R"(
machine m0
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] during t in trains when t in TRAIN then trains := trains \ { t } end
end)", "m0.ub");
  TransitionSystem ts = build_ts(scheduled);
  SortId train = scheduled.sort_id("TRAIN");
  std::vector<std::pair<std::string, Value>> bind{{"t", Value::element(0)}};
  auto p = parse_predicate("t in trains", scheduled, {{"t", train}});
  auto q = parse_predicate("not t in trains", scheduled, {{"t", train}});
  CHECK(check_leadsto(ts, p, q, bind).holds);

  Machine unscheduled = parse_machine(R"(
machine m0u
sets TRAIN = { t1, t2 }
vars trains : set TRAIN
init trains = {}
event arrive [t : TRAIN] then trains := trains union { t } end
event depart [t : TRAIN] when t in TRAIN then trains := trains \ { t } end
end)", "m0u.ub");
  TransitionSystem ts2 = build_ts(unscheduled);
  auto p2 = parse_predicate("t in trains", unscheduled, {{"t", train}});
  auto q2 = parse_predicate("not t in trains", unscheduled, {{"t", train}});
  LivenessResult r = check_leadsto(ts2, p2, q2, bind);
  CHECK(!r.holds);  // Skip forever is a consistent violating lasso
}

TEST_CASE("leads-to reflexivity and transient corner cases") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  auto p = parse_predicate("st.p1 = waiting", m);
  CHECK(check_leadsto(ts, p, p).holds);
  CHECK(check_transient(ts, parse_predicate("false", m)).holds);
  LivenessResult r = check_transient(ts, parse_predicate("true", m));
  CHECK(!r.holds);
}

TEST_CASE("naive subset engine agrees with the scc engine on the mutex") {
  Machine m = mutex();
  TransitionSystem ts = build_ts(m);
  SemLimits naive;
  naive.naive_max_states = 10;
  auto p = parse_predicate("st.p1 = waiting", m);
  auto q = parse_predicate("st.p1 = cs", m);
  CHECK(check_leadsto(ts, p, q, {}, naive).holds == check_leadsto(ts, p, q).holds);

  Machine w = parse_machine(kMutexWeak, "mutexw.ub");
  TransitionSystem tw = build_ts(w);
  auto pw = parse_predicate("st.p1 = waiting", w);
  auto qw = parse_predicate("st.p1 = cs", w);
  CHECK(check_leadsto(tw, pw, qw, {}, naive).holds == check_leadsto(tw, pw, qw).holds);
}
