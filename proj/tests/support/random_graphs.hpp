#pragma once

// Random transition graphs and fields for property tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dcalc/fields.hpp"
#include "dcalc/graph.hpp"

namespace dcalc::testing {

using Rng = std::mt19937_64;

struct GraphOptions {
  std::size_t min_states = 1;
  std::size_t max_states = 8;
  std::size_t min_actions = 1;
  std::size_t max_actions = 3;
  double edge_probability = 0.25;
  std::vector<double> gammas{0.9};
  double min_weight = 1.0;
  double max_weight = 1.0;
  /// Add a random Hamiltonian cycle so that every state lies on a loop.
  bool every_state_in_loop = false;
  /// Send every state to one hub state (which gets a self-loop); this makes
  /// the graph diamond-complete.
  bool hub = false;
  /// Give state 0 a self-loop and make every state reachable from it.
  bool rooted = false;
};

inline std::string state_name(std::size_t i) { return "s" + std::to_string(i); }
inline std::string action_name(std::size_t i) { return "a" + std::to_string(i); }

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline TransitionGraph random_graph(Rng& rng, const GraphOptions& o) {
  const std::size_t n = uniform_index(rng, o.min_states, o.max_states);
  const std::size_t m = uniform_index(rng, o.min_actions, o.max_actions);
  auto weight = [&] { return o.min_weight == o.max_weight ? o.min_weight : uniform(rng, o.min_weight, o.max_weight); };

  GraphData d;
  d.gamma = o.gammas[uniform_index(rng, 0, o.gammas.size() - 1)];
  for (std::size_t i = 0; i < n; ++i) d.states.push_back({state_name(i), weight()});
  for (std::size_t a = 0; a < m; ++a) d.actions.push_back(action_name(a));

  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> edges;
  std::bernoulli_distribution coin(o.edge_probability);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t t = 0; t < n; ++t)
        if (coin(rng)) edges.emplace(s, a, t);

  auto any_action = [&] { return uniform_index(rng, 0, m - 1); };
  if (o.every_state_in_loop) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) edges.emplace(perm[i], any_action(), perm[(i + 1) % n]);
  }
  if (o.hub) {
    const std::size_t hub = uniform_index(rng, 0, n - 1);
    for (std::size_t s = 0; s < n; ++s) edges.emplace(s, any_action(), hub);
  }
  if (o.rooted) {
    edges.emplace(0, any_action(), 0);
    // A random spanning tree rooted at state 0.
    for (std::size_t s = 1; s < n; ++s) edges.emplace(uniform_index(rng, 0, s - 1), any_action(), s);
  }
  for (std::size_t s = 0; s < n; ++s) {
    const bool has_out = std::any_of(edges.begin(), edges.end(),
                                     [&](const auto& e) { return std::get<0>(e) == s; });
    if (!has_out) edges.emplace(s, any_action(), uniform_index(rng, 0, n - 1));
  }

  for (const auto& [s, a, t] : edges)
    d.transitions.push_back({state_name(s), action_name(a), state_name(t), weight()});
  return TransitionGraph::build(d);
}

inline Potential random_potential(const TransitionGraph& g, Rng& rng, double lo = -10,
                                  double hi = 10) {
  Potential p = Potential::zero(g);
  for (auto& v : p.values) v = uniform(rng, lo, hi);
  return p;
}

inline Reward random_reward(const TransitionGraph& g, Rng& rng, double lo = -10, double hi = 10) {
  Reward r = Reward::zero(g);
  for (auto& v : r.values) v = uniform(rng, lo, hi);
  return r;
}

/// Random reward that depends only on (src, dst).
inline Reward random_action_independent_reward(const TransitionGraph& g, Rng& rng,
                                               double lo = -10, double hi = 10) {
  std::vector<double> by_pair(g.num_states() * g.num_states());
  for (auto& v : by_pair) v = uniform(rng, lo, hi);
  Reward r = Reward::zero(g);
  for (TransitionIndex t = 0; t < g.num_transitions(); ++t) {
    const auto& tr = g.transition(t);
    r[t] = by_pair[tr.src * g.num_states() + tr.dst];
  }
  return r;
}

inline Trajectory random_trajectory(const TransitionGraph& g, Rng& rng, StateIndex start,
                                    std::size_t length) {
  Trajectory t{start, {}};
  StateIndex at = start;
  for (std::size_t i = 0; i < length; ++i) {
    const auto out = g.outgoing(at);
    const TransitionIndex step = out[uniform_index(rng, 0, out.size() - 1)];
    t.steps.push_back(step);
    at = g.transition(step).dst;
  }
  return t;
}

/// Graph from a compact edge list; all weights 1 unless given.
inline TransitionGraph make_graph(double gamma, std::vector<std::string> states,
                                  std::vector<std::string> actions,
                                  std::vector<TransitionSpec> transitions) {
  GraphData d;
  d.gamma = gamma;
  for (auto& s : states) d.states.push_back({std::move(s), 1.0});
  d.actions = std::move(actions);
  d.transitions = std::move(transitions);
  return TransitionGraph::build(d);
}

/// Complete graph on n states and m actions.
inline TransitionGraph complete_graph(std::size_t n, std::size_t m, double gamma) {
  GraphData d;
  d.gamma = gamma;
  for (std::size_t i = 0; i < n; ++i) d.states.push_back({state_name(i), 1.0});
  for (std::size_t a = 0; a < m; ++a) d.actions.push_back(action_name(a));
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t t = 0; t < n; ++t)
        d.transitions.push_back({state_name(s), action_name(a), state_name(t), 1.0});
  return TransitionGraph::build(d);
}

inline Reward reward_from(const TransitionGraph& g,
                          std::initializer_list<std::pair<TransitionSpec, double>> values) {
  Reward r = Reward::zero(g);
  for (const auto& [spec, v] : values) r[g.transition_index(spec.from, spec.action, spec.to)] = v;
  return r;
}

}  // namespace dcalc::testing
