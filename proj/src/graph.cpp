#include "dcalc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dcalc/error.hpp"

namespace dcalc {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > kSaturated - b ? kSaturated : a + b;
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  return a > kSaturated / b ? kSaturated : a * b;
}

std::string format_weight(double w) {
  std::ostringstream os;
  os << w;
  return os.str();
}

}  // namespace

std::vector<std::string> validate(const GraphData& data) {
  std::vector<std::string> violations;

  if (!(data.gamma >= 0.0 && data.gamma <= 1.0))
    violations.push_back("gamma out of range: " + format_weight(data.gamma) + " not in [0, 1]");
  if (data.states.empty()) violations.push_back("no states");

  std::set<std::string> states;
  for (const auto& s : data.states) {
    if (s.id.empty()) violations.push_back("empty state id");
    if (!states.insert(s.id).second) violations.push_back("duplicate state: " + s.id);
    if (!(std::isfinite(s.weight) && s.weight > 0.0))
      violations.push_back("non-positive state weight: " + s.id + " (" + format_weight(s.weight) +
                           ")");
  }

  std::set<std::string> actions;
  for (const auto& a : data.actions) {
    if (a.empty()) violations.push_back("empty action id");
    if (!actions.insert(a).second) violations.push_back("duplicate action: " + a);
  }

  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::set<std::string> has_outgoing;
  for (const auto& t : data.transitions) {
    const std::string name = t.from + " -" + t.action + "-> " + t.to;
    bool ok = true;
    if (!states.count(t.from)) {
      violations.push_back("unknown source state in transition " + name);
      ok = false;
    }
    if (!states.count(t.to)) {
      violations.push_back("unknown target state in transition " + name);
      ok = false;
    }
    if (!actions.count(t.action)) {
      violations.push_back("unknown action in transition " + name);
      ok = false;
    }
    if (!(std::isfinite(t.weight) && t.weight > 0.0)) {
      violations.push_back("non-positive transition weight: " + name + " (" +
                           format_weight(t.weight) + ")");
    }
    if (!seen.emplace(t.from, t.action, t.to).second)
      violations.push_back("duplicate transition: " + name);
    if (ok) has_outgoing.insert(t.from);
  }

  for (const auto& s : states)
    if (!has_outgoing.count(s)) violations.push_back("dead end: " + s);

  return violations;
}

TransitionGraph TransitionGraph::build(const GraphData& data) {
  if (auto violations = validate(data); !violations.empty()) {
    std::string msg = "invalid transition graph:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw InputError(msg);
  }

  TransitionGraph g;
  g.gamma_ = data.gamma;

  auto states = data.states;
  std::sort(states.begin(), states.end(),
            [](const StateSpec& a, const StateSpec& b) { return a.id < b.id; });
  for (const auto& s : states) {
    g.state_labels_.push_back(s.id);
    g.state_weights_.push_back(s.weight);
  }
  g.action_labels_ = data.actions;
  std::sort(g.action_labels_.begin(), g.action_labels_.end());

  for (const auto& t : data.transitions) {
    g.transitions_.push_back(Transition{*g.find_state(t.from), *g.find_action(t.action),
                                        *g.find_state(t.to), t.weight});
  }
  std::sort(g.transitions_.begin(), g.transitions_.end(),
            [](const Transition& a, const Transition& b) {
              return std::tie(a.src, a.action, a.dst) < std::tie(b.src, b.action, b.dst);
            });

  g.outgoing_.assign(g.num_states(), {});
  g.incoming_.assign(g.num_states(), {});
  for (TransitionIndex i = 0; i < g.transitions_.size(); ++i) {
    g.outgoing_[g.transitions_[i].src].push_back(i);
    g.incoming_[g.transitions_[i].dst].push_back(i);
  }
  return g;
}

std::optional<StateIndex> TransitionGraph::find_state(std::string_view label) const {
  auto it = std::lower_bound(state_labels_.begin(), state_labels_.end(), label);
  if (it == state_labels_.end() || *it != label) return std::nullopt;
  return static_cast<StateIndex>(it - state_labels_.begin());
}

std::optional<ActionIndex> TransitionGraph::find_action(std::string_view label) const {
  auto it = std::lower_bound(action_labels_.begin(), action_labels_.end(), label);
  if (it == action_labels_.end() || *it != label) return std::nullopt;
  return static_cast<ActionIndex>(it - action_labels_.begin());
}

std::optional<TransitionIndex> TransitionGraph::find_transition(StateIndex src, ActionIndex action,
                                                                StateIndex dst) const {
  if (src >= num_states()) return std::nullopt;
  const auto& out = outgoing_[src];
  auto it = std::lower_bound(out.begin(), out.end(), std::pair{action, dst},
                             [this](TransitionIndex t, const std::pair<ActionIndex, StateIndex>& key) {
                               const auto& tr = transitions_[t];
                               return std::pair{tr.action, tr.dst} < key;
                             });
  if (it == out.end()) return std::nullopt;
  const auto& tr = transitions_[*it];
  if (tr.action != action || tr.dst != dst) return std::nullopt;
  return *it;
}

StateIndex TransitionGraph::state_index(std::string_view label) const {
  if (auto s = find_state(label)) return *s;
  throw InputError("unknown state: " + std::string(label));
}

TransitionIndex TransitionGraph::transition_index(std::string_view from, std::string_view action,
                                                  std::string_view to) const {
  const std::string name =
      std::string(from) + " -" + std::string(action) + "-> " + std::string(to);
  auto s = find_state(from);
  auto a = find_action(action);
  auto d = find_state(to);
  if (s && a && d)
    if (auto t = find_transition(*s, *a, *d)) return *t;
  throw InputError("transition not in graph: " + name);
}

std::string TransitionGraph::describe(TransitionIndex t) const {
  const auto& tr = transition(t);
  return state_labels_[tr.src] + " -" + action_labels_[tr.action] + "-> " + state_labels_[tr.dst];
}

TransitionGraph TransitionGraph::with_gamma(double gamma) const {
  auto d = data();
  d.gamma = gamma;
  return build(d);
}

GraphData TransitionGraph::data() const {
  GraphData d;
  d.gamma = gamma_;
  for (StateIndex s = 0; s < num_states(); ++s) d.states.push_back({state_labels_[s], state_weights_[s]});
  d.actions = action_labels_;
  for (const auto& t : transitions_)
    d.transitions.push_back(
        {state_labels_[t.src], action_labels_[t.action], state_labels_[t.dst], t.weight});
  return d;
}

// ---------------------------------------------------------------------------

StateIndex Trajectory::end(const TransitionGraph& graph) const {
  return steps.empty() ? start : graph.transition(steps.back()).dst;
}

void check_trajectory(const TransitionGraph& graph, const Trajectory& t) {
  if (t.start >= graph.num_states()) throw InputError("trajectory starts at an unknown state");
  StateIndex at = t.start;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    if (t.steps[i] >= graph.num_transitions())
      throw InputError("trajectory step " + std::to_string(i) + " uses a transition outside T");
    const auto& tr = graph.transition(t.steps[i]);
    if (tr.src != at)
      throw InputError("trajectory step " + std::to_string(i) + " (" + graph.describe(t.steps[i]) +
                       ") does not start at " + graph.state_label(at));
    at = tr.dst;
  }
}

void check_lasso(const TransitionGraph& graph, const LassoTrajectory& lasso) {
  check_trajectory(graph, lasso.prefix);
  check_trajectory(graph, lasso.cycle);
  if (lasso.cycle.length() == 0) throw InputError("lasso cycle is empty");
  if (lasso.cycle.start != lasso.prefix.end(graph))
    throw InputError("lasso cycle does not start where the prefix ends");
  if (lasso.cycle.end(graph) != lasso.cycle.start)
    throw InputError("lasso cycle does not return to its start state " +
                     graph.state_label(lasso.cycle.start));
}

std::uint64_t count_trajectories(const TransitionGraph& graph, StateIndex start,
                                 std::size_t length) {
  // ways[s]: number of trajectories of the current length ending at s.
  std::vector<std::uint64_t> ways(graph.num_states(), 0);
  ways.at(start) = 1;
  for (std::size_t step = 0; step < length; ++step) {
    std::vector<std::uint64_t> next(graph.num_states(), 0);
    for (const auto& t : graph.transitions()) next[t.dst] = saturating_add(next[t.dst], ways[t.src]);
    ways = std::move(next);
  }
  std::uint64_t total = 0;
  for (auto w : ways) total = saturating_add(total, w);
  return total;
}

std::vector<Trajectory> enumerate_trajectories(const TransitionGraph& graph, StateIndex start,
                                               std::size_t length, std::size_t cap) {
  if (start >= graph.num_states()) throw InputError("unknown start state");
  const auto count = count_trajectories(graph, start, length);
  if (count > cap)
    throw CapExceeded("trajectory enumeration of length " + std::to_string(length) + " from " +
                      graph.state_label(start) + " would yield " + std::to_string(count) +
                      " trajectories (cap " + std::to_string(cap) + ")");

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(count));
  Trajectory current{start, {}};
  current.steps.reserve(length);
  auto extend = [&](auto&& self, StateIndex at) -> void {
    if (current.steps.size() == length) {
      out.push_back(current);
      return;
    }
    for (TransitionIndex t : graph.outgoing(at)) {
      current.steps.push_back(t);
      self(self, graph.transition(t).dst);
      current.steps.pop_back();
    }
  };
  extend(extend, start);
  return out;
}

std::uint64_t count_diamonds(const TransitionGraph& graph) {
  std::uint64_t total = 0;
  for (StateIndex s = 0; s < graph.num_states(); ++s) {
    std::map<StateIndex, std::uint64_t> paths_to;
    for (TransitionIndex t0 : graph.outgoing(s))
      for (TransitionIndex t1 : graph.outgoing(graph.transition(t0).dst))
        ++paths_to[graph.transition(t1).dst];
    for (const auto& [end, n] : paths_to) total = saturating_add(total, saturating_mul(n, n));
  }
  return total;
}

std::vector<Diamond> enumerate_diamonds(const TransitionGraph& graph, std::size_t cap) {
  const auto count = count_diamonds(graph);
  if (count > cap)
    throw CapExceeded("graph has " + std::to_string(count) + " diamonds (cap " +
                      std::to_string(cap) + ")");
  std::vector<Diamond> out;
  out.reserve(static_cast<std::size_t>(count));
  for_each_diamond(graph, [&](const Diamond& d) { out.push_back(d); });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<StateIndex> successors(const TransitionGraph& graph, StateIndex s) {
  std::vector<StateIndex> out;
  for (TransitionIndex t : graph.outgoing(s)) out.push_back(graph.transition(t).dst);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TopologyReport topology_report(const TransitionGraph& graph) {
  const std::size_t n = graph.num_states();
  TopologyReport report;
  report.is_complete = graph.num_transitions() == n * graph.num_actions() * n;

  std::vector<std::vector<StateIndex>> succ(n);
  for (StateIndex s = 0; s < n; ++s) succ[s] = successors(graph, s);

  // Distinguishing actions: two distinct successors must be reachable under
  // two distinct actions. That fails only when both are reachable under one
  // and the same single action.
  report.has_distinguishing_actions = true;
  for (StateIndex s = 0; s < n && report.has_distinguishing_actions; ++s) {
    std::map<StateIndex, std::vector<ActionIndex>> actions_to;
    for (TransitionIndex t : graph.outgoing(s))
      actions_to[graph.transition(t).dst].push_back(graph.transition(t).action);
    for (auto i = actions_to.begin(); i != actions_to.end(); ++i)
      for (auto j = std::next(i); j != actions_to.end(); ++j) {
        bool found = false;
        for (ActionIndex a : i->second)
          for (ActionIndex b : j->second) found = found || a != b;
        if (!found) report.has_distinguishing_actions = false;
      }
  }

  // Diamond-completeness: any two successors of a common state share a successor.
  report.is_diamond_complete = true;
  for (StateIndex s = 0; s < n && report.is_diamond_complete; ++s)
    for (std::size_t i = 0; i < succ[s].size(); ++i)
      for (std::size_t j = i + 1; j < succ[s].size(); ++j) {
        const auto& x = succ[succ[s][i]];
        const auto& y = succ[succ[s][j]];
        std::vector<StateIndex> common;
        std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(common));
        if (common.empty()) report.is_diamond_complete = false;
      }

  report.reachable_from.resize(n);
  report.every_state_in_loop = true;
  for (StateIndex s = 0; s < n; ++s) {
    std::vector<char> seen(n, 0);
    std::vector<StateIndex> stack{s};
    seen[s] = 1;
    bool on_loop = false;
    while (!stack.empty()) {
      StateIndex u = stack.back();
      stack.pop_back();
      for (StateIndex v : succ[u]) {
        if (v == s) on_loop = true;
        if (!seen[v]) {
          seen[v] = 1;
          stack.push_back(v);
        }
      }
    }
    for (StateIndex v = 0; v < n; ++v)
      if (seen[v]) report.reachable_from[s].push_back(v);
    if (!on_loop) report.every_state_in_loop = false;
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<DecisionSlot> decision_slots(const TransitionGraph& graph) {
  std::vector<DecisionSlot> slots;
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
    const auto& tr = graph.transition(t);
    if (slots.empty() || slots.back().state != tr.src || slots.back().action != tr.action)
      slots.push_back({tr.src, tr.action, {}});
    slots.back().options.push_back(t);
  }
  return slots;
}

DeterministicDynamics make_dynamics(const TransitionGraph& graph,
                                    std::vector<TransitionIndex> chosen,
                                    std::vector<StateIndex> initial_support) {
  std::sort(chosen.begin(), chosen.end());
  const auto slots = decision_slots(graph);
  if (chosen.size() != slots.size())
    throw InputError("dynamics must choose exactly one successor for each of the " +
                     std::to_string(slots.size()) + " (state, action) pairs; got " +
                     std::to_string(chosen.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& opts = slots[i].options;
    if (!std::binary_search(opts.begin(), opts.end(), chosen[i]))
      throw InputError("dynamics has no valid choice for (" + graph.state_label(slots[i].state) +
                       ", " + graph.action_label(slots[i].action) + ")");
  }
  if (initial_support.empty()) {
    initial_support.resize(graph.num_states());
    for (StateIndex s = 0; s < graph.num_states(); ++s) initial_support[s] = s;
  }
  std::sort(initial_support.begin(), initial_support.end());
  initial_support.erase(std::unique(initial_support.begin(), initial_support.end()),
                        initial_support.end());
  if (initial_support.back() >= graph.num_states())
    throw InputError("dynamics initial support names an unknown state");
  return {std::move(chosen), std::move(initial_support)};
}

DynamicsEnumerator::DynamicsEnumerator(const TransitionGraph& graph, std::uint64_t budget)
    : slots_(decision_slots(graph)), budget_(budget) {
  for (const auto& slot : slots_) total_ = saturating_mul(total_, slot.options.size());
  support_.resize(graph.num_states());
  for (StateIndex s = 0; s < graph.num_states(); ++s) support_[s] = s;
}

DeterministicDynamics DynamicsEnumerator::at(std::uint64_t index) const {
  DeterministicDynamics d;
  d.chosen.resize(slots_.size());
  d.initial_support = support_;
  for (std::size_t i = slots_.size(); i-- > 0;) {
    const auto radix = slots_[i].options.size();
    d.chosen[i] = slots_[i].options[index % radix];
    index /= radix;
  }
  return d;
}

std::optional<DeterministicDynamics> DynamicsEnumerator::next() {
  if (yielded_ >= limit()) return std::nullopt;
  return at(yielded_++);
}

}  // namespace dcalc
