#pragma once

// Finite weighted transition graphs (S, A, T, gamma, lambda, w) together with
// trajectory, diamond, and deterministic-dynamics enumeration.
//
// States, actions and transitions are stored in canonical order: states and
// actions sorted by label, transitions sorted by (source, action, target)
// label. Every index handed out by the graph refers to that order, so any
// iteration over indices is deterministic.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcalc {

using StateIndex = std::size_t;
using ActionIndex = std::size_t;
using TransitionIndex = std::size_t;

// ---------------------------------------------------------------------------
// Raw, unvalidated description (what a graph file parses into).

struct StateSpec {
  std::string id;
  double weight = 1.0;
};

struct TransitionSpec {
  std::string from;
  std::string action;
  std::string to;
  double weight = 1.0;
};

struct GraphData {
  double gamma = 0.9;
  std::vector<StateSpec> states;
  std::vector<std::string> actions;
  std::vector<TransitionSpec> transitions;
};

/// Every invariant violation of `data`, each naming the offending item.
/// An empty result means the data describes a valid transition graph.
std::vector<std::string> validate(const GraphData& data);

// ---------------------------------------------------------------------------

struct Transition {
  StateIndex src;
  ActionIndex action;
  StateIndex dst;
  double weight;
};

/// A validated transition graph. Immutable after construction.
class TransitionGraph {
 public:
  /// Throws InputError listing every violation when `data` does not validate.
  static TransitionGraph build(const GraphData& data);

  double gamma() const { return gamma_; }
  std::size_t num_states() const { return state_labels_.size(); }
  std::size_t num_actions() const { return action_labels_.size(); }
  std::size_t num_transitions() const { return transitions_.size(); }

  const std::string& state_label(StateIndex s) const { return state_labels_.at(s); }
  const std::string& action_label(ActionIndex a) const { return action_labels_.at(a); }
  double state_weight(StateIndex s) const { return state_weights_.at(s); }
  const Transition& transition(TransitionIndex t) const { return transitions_.at(t); }
  std::span<const Transition> transitions() const { return transitions_; }
  std::span<const std::string> state_labels() const { return state_labels_; }
  std::span<const std::string> action_labels() const { return action_labels_; }

  std::optional<StateIndex> find_state(std::string_view label) const;
  std::optional<ActionIndex> find_action(std::string_view label) const;
  std::optional<TransitionIndex> find_transition(StateIndex src, ActionIndex action,
                                                 StateIndex dst) const;
  /// Label-based lookups; throw InputError naming the missing item.
  StateIndex state_index(std::string_view label) const;
  TransitionIndex transition_index(std::string_view from, std::string_view action,
                                   std::string_view to) const;

  /// Outgoing / incoming transitions of a state, in canonical order.
  std::span<const TransitionIndex> outgoing(StateIndex s) const { return outgoing_.at(s); }
  std::span<const TransitionIndex> incoming(StateIndex s) const { return incoming_.at(s); }

  /// "s0 -a0-> s1" for messages.
  std::string describe(TransitionIndex t) const;

  /// Same graph with a different discount factor.
  TransitionGraph with_gamma(double gamma) const;

  /// Canonically ordered raw description (suitable for serialization).
  GraphData data() const;

 private:
  TransitionGraph() = default;

  double gamma_ = 0.0;
  std::vector<std::string> state_labels_;
  std::vector<double> state_weights_;
  std::vector<std::string> action_labels_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<TransitionIndex>> outgoing_;
  std::vector<std::vector<TransitionIndex>> incoming_;
};

// ---------------------------------------------------------------------------
// Trajectories

struct Trajectory {
  StateIndex start = 0;
  std::vector<TransitionIndex> steps;

  std::size_t length() const { return steps.size(); }
  StateIndex end(const TransitionGraph& graph) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws InputError unless consecutive steps chain from `t.start` through T.
void check_trajectory(const TransitionGraph& graph, const Trajectory& t);

/// Eventually periodic infinite trajectory prefix . cycle . cycle . ...
struct LassoTrajectory {
  Trajectory prefix;
  Trajectory cycle;

  friend bool operator==(const LassoTrajectory&, const LassoTrajectory&) = default;
};

/// Throws InputError unless the cycle is non-empty, closed, and attached to
/// the end of the prefix.
void check_lasso(const TransitionGraph& graph, const LassoTrajectory& lasso);

/// Ordered pair of length-two trajectories sharing start and end.
struct Diamond {
  std::array<TransitionIndex, 2> first;
  std::array<TransitionIndex, 2> second;

  friend bool operator==(const Diamond&, const Diamond&) = default;
};

inline constexpr std::size_t kDefaultTrajectoryCap = 1'000'000;
inline constexpr std::size_t kDefaultDiamondCap = 1'000'000;
inline constexpr std::uint64_t kDefaultDynamicsBudget = 10'000;

/// Number of trajectories of exactly `length` steps from `start`, saturating
/// at UINT64_MAX.
std::uint64_t count_trajectories(const TransitionGraph& graph, StateIndex start,
                                 std::size_t length);

/// All trajectories of exactly `length` steps from `start`, in lexicographic
/// order of their transition sequences. Throws CapExceeded above `cap`.
std::vector<Trajectory> enumerate_trajectories(const TransitionGraph& graph, StateIndex start,
                                               std::size_t length,
                                               std::size_t cap = kDefaultTrajectoryCap);

std::uint64_t count_diamonds(const TransitionGraph& graph);

/// Visits every diamond in canonical order (lexicographic in
/// first[0], first[1], second[0], second[1]) without materializing them.
template <typename Visitor>
void for_each_diamond(const TransitionGraph& graph, Visitor&& visit);

/// Throws CapExceeded when there are more than `cap` diamonds.
std::vector<Diamond> enumerate_diamonds(const TransitionGraph& graph,
                                        std::size_t cap = kDefaultDiamondCap);

// ---------------------------------------------------------------------------
// Topology

struct TopologyReport {
  bool is_complete = false;
  bool has_distinguishing_actions = false;
  bool is_diamond_complete = false;
  bool every_state_in_loop = false;
  /// reachable_from[s]: sorted states reachable from s in zero or more steps.
  std::vector<std::vector<StateIndex>> reachable_from;
};

TopologyReport topology_report(const TransitionGraph& graph);

/// Sorted successor states of s, ignoring actions.
std::vector<StateIndex> successors(const TransitionGraph& graph, StateIndex s);

// ---------------------------------------------------------------------------
// Deterministic compatible dynamics

/// A (state, action) pair with at least one outgoing transition, and the
/// transitions it may resolve to.
struct DecisionSlot {
  StateIndex state;
  ActionIndex action;
  std::vector<TransitionIndex> options;
};

/// One successor choice per decision slot.
struct DeterministicDynamics {
  /// chosen[i] is the transition taken from slot i, in slot order.
  std::vector<TransitionIndex> chosen;
  /// Sorted, non-empty.
  std::vector<StateIndex> initial_support;

  friend bool operator==(const DeterministicDynamics&, const DeterministicDynamics&) = default;
};

/// Decision slots of `graph` in canonical (state, action) order.
std::vector<DecisionSlot> decision_slots(const TransitionGraph& graph);

/// Builds dynamics from a set of chosen transitions (any order). Throws
/// InputError unless exactly one transition per decision slot is given and
/// the support is non-empty. An empty support means all states.
DeterministicDynamics make_dynamics(const TransitionGraph& graph,
                                    std::vector<TransitionIndex> chosen,
                                    std::vector<StateIndex> initial_support = {});

/// Mixed-radix enumeration over every deterministic dynamics compatible with
/// the graph. The last slot varies fastest.
class DynamicsEnumerator {
 public:
  DynamicsEnumerator(const TransitionGraph& graph, std::uint64_t budget);

  /// Product of slot out-degrees (saturating at UINT64_MAX).
  std::uint64_t total() const { return total_; }
  std::uint64_t budget() const { return budget_; }
  std::uint64_t yielded() const { return yielded_; }
  /// True when the budget cut the enumeration short.
  bool truncated() const { return budget_ < total_; }
  /// Number of dynamics this enumerator will yield.
  std::uint64_t limit() const { return budget_ < total_ ? budget_ : total_; }

  std::optional<DeterministicDynamics> next();

  /// Random access to the index-th dynamics in enumeration order.
  DeterministicDynamics at(std::uint64_t index) const;

 private:
  std::vector<DecisionSlot> slots_;
  std::vector<StateIndex> support_;
  std::uint64_t total_ = 1;
  std::uint64_t budget_ = 0;
  std::uint64_t yielded_ = 0;
};

inline DynamicsEnumerator enumerate_deterministic_dynamics(
    const TransitionGraph& graph, std::uint64_t budget = kDefaultDynamicsBudget) {
  return DynamicsEnumerator(graph, budget);
}

// ---------------------------------------------------------------------------

template <typename Visitor>
void for_each_diamond(const TransitionGraph& graph, Visitor&& visit) {
  std::vector<std::array<TransitionIndex, 2>> paths;
  for (StateIndex s = 0; s < graph.num_states(); ++s) {
    paths.clear();
    for (TransitionIndex t0 : graph.outgoing(s))
      for (TransitionIndex t1 : graph.outgoing(graph.transition(t0).dst)) paths.push_back({t0, t1});
    for (const auto& p : paths) {
      const StateIndex end = graph.transition(p[1]).dst;
      for (const auto& q : paths)
        if (graph.transition(q[1]).dst == end) visit(Diamond{p, q});
    }
  }
}

}  // namespace dcalc
