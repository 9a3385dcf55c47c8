#include "unitb/semantics.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "unitb/parser.hpp"
#include "json.hpp"

namespace unitb {

size_t TransitionSystem::edge_count() const {
  size_t n = 0;
  for (const auto& o : out) n += o.size();
  return n;
}

TransitionSystem build_ts(const Machine& m, const SemLimits& limits) {
  TransitionSystem ts;
  ts.machine = &m;
  ts.instances = event_instances(m);

  std::unordered_map<Valuation, StateId, ValuationHash> index;
  std::deque<StateId> work;
  auto intern = [&](const Valuation& v) -> StateId {
    auto it = index.find(v);
    if (it != index.end()) return it->second;
    if ((long)ts.states.size() >= limits.state_limit)
      throw LimitError("state limit exceeded while building the transition system");
    StateId id = (StateId)ts.states.size();
    ts.states.push_back(v);
    ts.out.emplace_back();
    index.emplace(v, id);
    work.push_back(id);
    return id;
  };

  for (const auto& v : enumerate_where(m, m.init, limits.state_limit))
    ts.initial.push_back(intern(v));

  while (!work.empty()) {
    StateId id = work.front();
    work.pop_front();
    Valuation s = ts.states[id];  // copy: intern() may reallocate
    for (auto& suc : successors(m, ts.instances, s)) {
      StateId to = intern(suc.state);
      ts.out[id].emplace_back(suc.instance, to);
    }
  }
  return ts;
}

namespace {

TriBool eval_at(const TransitionSystem& ts, const ExprPtr& e, StateId s,
                const std::vector<std::pair<std::string, Value>>& binding) {
  Env env{ts.machine, &ts.states[s], nullptr, binding};
  return eval_pred(e, env);
}

bool holds_at(const TransitionSystem& ts, const ExprPtr& e, StateId s,
              const std::vector<std::pair<std::string, Value>>& binding, const char* what) {
  TriBool t = eval_at(ts, e, s, binding);
  if (t == TriBool::Undef)
    throw WdError(std::string(what) + " ill-defined at state " +
                  show_valuation(*ts.machine, ts.states[s]));
  return t == TriBool::True;
}

// parents for shortest-path reconstruction from the initial states
std::vector<TsEdge> shortest_path_from_init(const TransitionSystem& ts, StateId target) {
  std::vector<int> parent(ts.states.size(), -2);
  std::vector<TsEdge> via(ts.states.size());
  std::deque<StateId> q;
  for (StateId s : ts.initial) {
    parent[s] = -1;
    q.push_back(s);
  }
  while (!q.empty()) {
    StateId s = q.front();
    q.pop_front();
    if (s == target) break;
    for (const auto& [inst, to] : ts.out[s])
      if (parent[to] == -2) {
        parent[to] = s;
        via[to] = {s, inst, to};
        q.push_back(to);
      }
  }
  std::vector<TsEdge> path;
  StateId cur = target;
  while (parent[cur] >= 0) {
    path.push_back(via[cur]);
    cur = parent[cur];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

InvariantResult check_invariant(const TransitionSystem& ts, const ExprPtr& inv,
                                const std::vector<std::pair<std::string, Value>>& binding) {
  for (StateId s = 0; s < (StateId)ts.states.size(); ++s) {
    if (!holds_at(ts, inv, s, binding, "invariant")) {
      InvariantResult r;
      r.holds = false;
      r.bad_state = s;
      r.path = shortest_path_from_init(ts, s);
      return r;
    }
  }
  return {};
}

UnlessResult check_unless(const TransitionSystem& ts, const ExprPtr& p, const ExprPtr& q,
                          const std::vector<std::pair<std::string, Value>>& binding) {
  for (StateId s = 0; s < (StateId)ts.states.size(); ++s) {
    bool ps = holds_at(ts, p, s, binding, "unless lhs");
    bool qs = holds_at(ts, q, s, binding, "unless rhs");
    if (!ps || qs) continue;
    for (const auto& [inst, to] : ts.out[s]) {
      bool pt = holds_at(ts, p, to, binding, "unless lhs");
      bool qt = holds_at(ts, q, to, binding, "unless rhs");
      if (!pt && !qt) return {false, TsEdge{s, inst, to}};
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Schedule consistency
// ---------------------------------------------------------------------------

namespace {

// truth of an instance's coarse/fine schedule per state, cached lazily
struct SchedCache {
  const TransitionSystem& ts;
  const std::vector<std::pair<std::string, Value>>& binding;
  // per instance: computed flags 2 bits (known, value) for c and f
  std::vector<std::unordered_map<StateId, std::pair<bool, bool>>> cache_c, cache_f;

  SchedCache(const TransitionSystem& t, const std::vector<std::pair<std::string, Value>>& b)
      : ts(t), binding(b), cache_c(t.instances.size()), cache_f(t.instances.size()) {}

  bool get(bool fine, int inst, StateId s) {
    auto& cache = fine ? cache_f[inst] : cache_c[inst];
    auto it = cache.find(s);
    if (it != cache.end()) return it->second.second;
    const EventInstance& ei = ts.instances[inst];
    const Event& ev = ts.machine->events[ei.event];
    // instance indices shadow equally-named property variables
    Env env{ts.machine, &ts.states[s], nullptr, binding};
    Env ienv = instance_env(*ts.machine, ei, ts.states[s]);
    for (auto& b : ienv.bound) env.bound.push_back(std::move(b));
    TriBool t = eval_pred(fine ? ev.fine : ev.coarse, env);
    if (t == TriBool::Undef)
      throw WdError("schedule of " + ei.label + " ill-defined at state " +
                    show_valuation(*ts.machine, ts.states[s]));
    bool v = t == TriBool::True;
    cache.emplace(s, std::make_pair(true, v));
    return v;
  }
  bool coarse(int inst, StateId s) { return get(false, inst, s); }
  bool fine(int inst, StateId s) { return get(true, inst, s); }
};

struct Support {
  std::vector<StateId> states;
  std::vector<TsEdge> edges;
};

// violation of instance i on a cycle support: coarse everywhere, fine
// somewhere, no i-labelled edge out of a fine state
bool violated_on(SchedCache& sc, int inst, const Support& sup) {
  if (sup.states.empty()) return false;
  for (StateId s : sup.states)
    if (!sc.coarse(inst, s)) return false;
  bool fine_somewhere = false;
  for (StateId s : sup.states)
    if (sc.fine(inst, s)) { fine_somewhere = true; break; }
  if (!fine_somewhere) return false;
  for (const TsEdge& e : sup.edges)
    if (e.instance == inst && sc.fine(inst, e.from)) return false;
  return true;
}

}  // namespace

CycleAnalysis cycle_schedule_consistent(const TransitionSystem& ts, const std::vector<TsEdge>& cycle,
                                        const std::vector<std::pair<std::string, Value>>& binding) {
  SchedCache sc(ts, binding);
  Support sup;
  std::set<StateId> seen;
  for (const TsEdge& e : cycle) {
    sup.edges.push_back(e);
    if (seen.insert(e.from).second) sup.states.push_back(e.from);
    if (seen.insert(e.to).second) sup.states.push_back(e.to);
  }
  CycleAnalysis out;
  out.violated.assign(ts.instances.size(), false);
  for (size_t i = 0; i + 1 < ts.instances.size(); ++i) {  // Skip is unscheduled
    out.violated[i] = violated_on(sc, (int)i, sup);
    if (out.violated[i]) out.consistent = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fair lasso search
// ---------------------------------------------------------------------------

namespace {

// Tarjan SCCs over a state subset; deterministic by ascending state id.
std::vector<std::vector<StateId>> sccs_of(const TransitionSystem& ts,
                                          const std::vector<StateId>& nodes,
                                          const std::vector<char>& in_region) {
  std::unordered_map<StateId, int> idx, low;
  std::vector<StateId> stack;
  std::vector<char> on_stack(ts.states.size(), 0);
  std::vector<std::vector<StateId>> out;
  int counter = 0;

  struct Frame { StateId v; size_t ei; };
  for (StateId root : nodes) {
    if (idx.count(root)) continue;
    std::vector<Frame> st{{root, 0}};
    idx[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!st.empty()) {
      Frame& f = st.back();
      if (f.ei < ts.out[f.v].size()) {
        StateId w = ts.out[f.v][f.ei].second;
        ++f.ei;
        if (!in_region[w]) continue;
        if (!idx.count(w)) {
          idx[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          st.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], idx[w]);
        }
      } else {
        StateId v = f.v;
        st.pop_back();
        if (!st.empty()) low[st.back().v] = std::min(low[st.back().v], low[v]);
        if (low[v] == idx[v]) {
          std::vector<StateId> comp;
          while (true) {
            StateId w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp.push_back(w);
            if (w == v) break;
          }
          std::sort(comp.begin(), comp.end());
          out.push_back(std::move(comp));
        }
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

Support support_of(const TransitionSystem& ts, const std::vector<StateId>& comp,
                   const std::vector<char>& member) {
  Support sup;
  sup.states = comp;
  for (StateId s : comp)
    for (const auto& [inst, to] : ts.out[s])
      if (member[to]) sup.edges.push_back({s, inst, to});
  return sup;
}

// Fixed point: a violated instance forces its fine states out of the
// candidate set; recurse into the refined SCCs. Returns the first sub-SCC
// whose full support is consistent.
std::optional<Support> consistent_component(const TransitionSystem& ts, SchedCache& sc,
                                            const std::vector<StateId>& comp) {
  std::vector<char> member(ts.states.size(), 0);
  for (StateId s : comp) member[s] = 1;
  Support sup = support_of(ts, comp, member);
  if (sup.edges.empty()) return std::nullopt;

  std::vector<int> violated;
  for (size_t i = 0; i + 1 < ts.instances.size(); ++i)
    if (violated_on(sc, (int)i, sup)) violated.push_back((int)i);
  if (violated.empty()) return sup;

  std::vector<StateId> rest;
  for (StateId s : comp) {
    bool drop = false;
    for (int i : violated)
      if (sc.fine(i, s)) { drop = true; break; }
    if (!drop) rest.push_back(s);
  }
  if (rest.empty() || rest.size() == comp.size()) return std::nullopt;
  std::vector<char> in_rest(ts.states.size(), 0);
  for (StateId s : rest) in_rest[s] = 1;
  for (const auto& sub : sccs_of(ts, rest, in_rest)) {
    auto r = consistent_component(ts, sc, sub);
    if (r) return r;
  }
  return std::nullopt;
}

// closed walk covering every edge of a strongly connected support
std::vector<TsEdge> covering_cycle(const TransitionSystem& ts, const Support& sup) {
  std::vector<char> member(ts.states.size(), 0);
  for (StateId s : sup.states) member[s] = 1;
  std::set<std::pair<std::pair<StateId, StateId>, int>> uncovered;
  for (const TsEdge& e : sup.edges) uncovered.insert({{e.from, e.to}, e.instance});

  auto path_within = [&](StateId from, StateId to) {
    std::vector<int> parent(ts.states.size(), -2);
    std::vector<TsEdge> via(ts.states.size());
    std::deque<StateId> q{from};
    parent[from] = -1;
    while (!q.empty()) {
      StateId s = q.front();
      q.pop_front();
      if (s == to) break;
      for (const auto& [inst, t] : ts.out[s])
        if (member[t] && parent[t] == -2) {
          parent[t] = s;
          via[t] = {s, inst, t};
          q.push_back(t);
        }
    }
    std::vector<TsEdge> path;
    StateId cur = to;
    while (parent[cur] >= 0) {
      path.push_back(via[cur]);
      cur = parent[cur];
    }
    std::reverse(path.begin(), path.end());
    return path;
  };

  StateId start = sup.states.front();
  StateId cur = start;
  std::vector<TsEdge> walk;
  while (!uncovered.empty()) {
    // an uncovered edge leaving cur?
    const TsEdge* pick = nullptr;
    for (const TsEdge& e : sup.edges)
      if (e.from == cur && uncovered.count({{e.from, e.to}, e.instance})) { pick = &e; break; }
    if (pick) {
      walk.push_back(*pick);
      uncovered.erase({{pick->from, pick->to}, pick->instance});
      cur = pick->to;
      continue;
    }
    // move towards some state with an uncovered out-edge
    StateId target = -1;
    for (const auto& [key, inst] : uncovered) { target = key.first; break; }
    auto path = path_within(cur, target);
    for (const TsEdge& e : path) walk.push_back(e);
    cur = target;
  }
  if (cur != start) {
    auto back = path_within(cur, start);
    for (const TsEdge& e : back) walk.push_back(e);
  }
  if (walk.empty())
    for (const TsEdge& e : sup.edges)
      if (e.from == start && e.to == start) { walk.push_back(e); break; }
  return walk;
}

}  // namespace

std::optional<Lasso> find_fair_lasso(const TransitionSystem& ts, const std::vector<StateId>& start,
                                     const ExprPtr& forbid,
                                     const std::vector<std::pair<std::string, Value>>& binding,
                                     const SemLimits& limits) {
  SchedCache sc(ts, binding);

  std::vector<char> allowed(ts.states.size(), 1);
  if (forbid)
    for (StateId s = 0; s < (StateId)ts.states.size(); ++s)
      allowed[s] = !holds_at(ts, forbid, s, binding, "liveness target");

  // pivots: start states inside the allowed region
  std::vector<StateId> pivots;
  for (StateId s : start)
    if (allowed[s]) pivots.push_back(s);
  if (pivots.empty()) return std::nullopt;

  // region reachable from the pivots through allowed states
  std::vector<char> region(ts.states.size(), 0);
  std::deque<StateId> q;
  for (StateId s : pivots)
    if (!region[s]) { region[s] = 1; q.push_back(s); }
  std::vector<StateId> nodes;
  while (!q.empty()) {
    StateId s = q.front();
    q.pop_front();
    nodes.push_back(s);
    for (const auto& [inst, to] : ts.out[s])
      if (allowed[to] && !region[to]) { region[to] = 1; q.push_back(to); }
  }
  std::sort(nodes.begin(), nodes.end());

  std::optional<Support> found;

  if (limits.naive_max_states > 0 && (int)nodes.size() <= limits.naive_max_states) {
    // independent engine: enumerate state subsets; a subset whose full induced
    // subgraph is strongly connected and consistent witnesses a fair cycle
    int n = (int)nodes.size();
    for (uint64_t bits = 1; bits < (1ull << n) && !found; ++bits) {
      std::vector<StateId> sub;
      std::vector<char> member(ts.states.size(), 0);
      for (int i = 0; i < n; ++i)
        if (bits & (1ull << i)) { sub.push_back(nodes[i]); member[nodes[i]] = 1; }
      auto comps = sccs_of(ts, sub, member);
      if (comps.size() != 1 || comps[0].size() != sub.size()) continue;
      Support sup = support_of(ts, sub, member);
      if (sup.edges.empty()) continue;
      bool ok = true;
      for (size_t i = 0; ok && i + 1 < ts.instances.size(); ++i)
        if (violated_on(sc, (int)i, sup)) ok = false;
      if (ok) found = sup;
    }
  } else {
    for (const auto& comp : sccs_of(ts, nodes, region)) {
      found = consistent_component(ts, sc, comp);
      if (found) break;
    }
  }
  if (!found) return std::nullopt;

  // greedy minimisation: prefer a single consistent self-loop inside the support
  std::vector<TsEdge> cycle;
  for (const TsEdge& e : found->edges) {
    if (e.from != e.to) continue;
    CycleAnalysis one = cycle_schedule_consistent(ts, {e}, binding);
    if (one.consistent) { cycle = {e}; break; }
  }
  if (cycle.empty()) cycle = covering_cycle(ts, *found);

  // stem: shortest init -> pivot, then pivot -> cycle inside the region
  Lasso lasso;
  lasso.loop = cycle;
  StateId entry = cycle.front().from;

  std::vector<char> loop_member(ts.states.size(), 0);
  loop_member[entry] = 1;
  StateId best_pivot = -1;
  std::vector<TsEdge> best_to_loop;
  size_t best_len = SIZE_MAX;
  for (StateId pv : pivots) {
    // BFS pivot -> entry within region
    std::vector<int> parent(ts.states.size(), -2);
    std::vector<TsEdge> via(ts.states.size());
    std::deque<StateId> bq{pv};
    parent[pv] = -1;
    while (!bq.empty()) {
      StateId s = bq.front();
      bq.pop_front();
      if (s == entry) break;
      for (const auto& [inst, to] : ts.out[s])
        if (region[to] && parent[to] == -2) {
          parent[to] = s;
          via[to] = {s, inst, to};
          bq.push_back(to);
        }
    }
    if (parent[entry] == -2 && pv != entry) continue;
    std::vector<TsEdge> path;
    StateId cur = entry;
    while (parent[cur] >= 0) {
      path.push_back(via[cur]);
      cur = parent[cur];
    }
    std::reverse(path.begin(), path.end());
    size_t stem_len = shortest_path_from_init(ts, pv).size();
    if (stem_len + path.size() < best_len) {
      best_len = stem_len + path.size();
      best_pivot = pv;
      best_to_loop = path;
    }
  }
  if (best_pivot < 0) { best_pivot = pivots.front(); }
  lasso.pivot = best_pivot;
  lasso.to_loop = best_to_loop;
  lasso.stem = shortest_path_from_init(ts, best_pivot);
  return lasso;
}

LivenessResult check_leadsto(const TransitionSystem& ts, const ExprPtr& p, const ExprPtr& q,
                             const std::vector<std::pair<std::string, Value>>& binding,
                             const SemLimits& limits) {
  std::vector<StateId> start;
  for (StateId s = 0; s < (StateId)ts.states.size(); ++s)
    if (holds_at(ts, p, s, binding, "leads-to lhs")) start.push_back(s);
  auto lasso = find_fair_lasso(ts, start, q, binding, limits);
  if (!lasso) return {};
  return {false, lasso};
}

LivenessResult check_transient(const TransitionSystem& ts, const ExprPtr& p,
                               const std::vector<std::pair<std::string, Value>>& binding,
                               const SemLimits& limits) {
  // tr p fails exactly when a consistent cycle stays inside the p-states
  std::vector<StateId> start;
  for (StateId s = 0; s < (StateId)ts.states.size(); ++s)
    if (holds_at(ts, p, s, binding, "transient predicate")) start.push_back(s);
  auto lasso = find_fair_lasso(ts, start, mk_not(p), binding, limits);
  if (!lasso) return {};
  return {false, lasso};
}

std::string lasso_to_json(const TransitionSystem& ts, const Lasso& lasso) {
  nlohmann::json j;
  const Machine& m = *ts.machine;
  auto state_json = [&](StateId s) {
    nlohmann::json st;
    for (size_t i = 0; i < m.vars.size(); ++i)
      st[m.vars[i].name] = show_value(m, m.vars[i].type, ts.states[s].vals[i]);
    return st;
  };
  auto seg_json = [&](const std::vector<TsEdge>& seg, StateId first) {
    nlohmann::json arr = nlohmann::json::array();
    arr.push_back(state_json(first));
    for (const TsEdge& e : seg) {
      arr.push_back(ts.instances[e.instance].label);
      arr.push_back(state_json(e.to));
    }
    return arr;
  };
  StateId stem_first = lasso.stem.empty() ? lasso.pivot : lasso.stem.front().from;
  std::vector<TsEdge> full_stem = lasso.stem;
  for (const TsEdge& e : lasso.to_loop) full_stem.push_back(e);
  j["stem"] = seg_json(full_stem, stem_first);
  j["cycle"] = seg_json(lasso.loop, lasso.loop.front().from);
  CycleAnalysis an = cycle_schedule_consistent(ts, lasso.loop);
  nlohmann::json viol;
  for (size_t i = 0; i + 1 < ts.instances.size(); ++i)
    viol[ts.instances[i].label] = (bool)an.violated[i];
  j["violated_instance_analysis"] = viol;
  return j.dump(2);
}

}  // namespace unitb
