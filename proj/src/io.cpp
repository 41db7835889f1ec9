#include "dcalc/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dcalc/error.hpp"

namespace dcalc::io {

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& what) {
  throw InputError(source + ": " + what);
}

void expect_object(const Json& j, const std::string& source, const std::string& where,
                   std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(source, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return key == k; }))
      fail(source, "unknown key \"" + key + "\" in " + where);
  }
}

const Json& require(const Json& j, const char* key, const std::string& source,
                    const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(source, "missing key \"" + std::string(key) + "\" in " + where);
  return *it;
}

std::string get_string(const Json& j, const char* key, const std::string& source,
                       const std::string& where) {
  const Json& v = require(j, key, source, where);
  if (!v.is_string()) fail(source, "\"" + std::string(key) + "\" in " + where + " must be a string");
  return v.get<std::string>();
}

double get_number(const Json& v, const std::string& source, const std::string& where) {
  if (!v.is_number()) fail(source, where + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(source, where + " must be finite");
  return x;
}

double get_number(const Json& j, const char* key, const std::string& source,
                  const std::string& where, std::optional<double> fallback = std::nullopt) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    fail(source, "missing key \"" + std::string(key) + "\" in " + where);
  }
  return get_number(*it, source, "\"" + std::string(key) + "\" in " + where);
}

const Json& get_array(const Json& j, const char* key, const std::string& source,
                      const std::string& where) {
  const Json& v = require(j, key, source, where);
  if (!v.is_array()) fail(source, "\"" + std::string(key) + "\" in " + where + " must be an array");
  return v;
}

struct TransitionRef {
  std::string from, action, to;
  std::string name() const { return from + " -" + action + "-> " + to; }
};

TransitionRef parse_ref(const Json& e, const std::string& source, const std::string& where) {
  return {get_string(e, "from", source, where), get_string(e, "action", source, where),
          get_string(e, "to", source, where)};
}

TransitionIndex resolve(const TransitionGraph& graph, const TransitionRef& ref,
                        const std::string& source) {
  try {
    return graph.transition_index(ref.from, ref.action, ref.to);
  } catch (const InputError& e) {
    fail(source, e.what());
  }
}

std::string entry(std::size_t i) { return "entry " + std::to_string(i); }

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
}

// ---------------------------------------------------------------------------

GraphData parse_graph(const Json& j, const std::string& source) {
  expect_object(j, source, "graph", {"gamma", "states", "actions", "transitions"});
  GraphData d;
  d.gamma = get_number(j, "gamma", source, "graph");

  const auto& states = get_array(j, "states", source, "graph");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const std::string where = "states " + entry(i);
    expect_object(states[i], source, where, {"id", "weight"});
    d.states.push_back({get_string(states[i], "id", source, where),
                        get_number(states[i], "weight", source, where, 1.0)});
  }

  const auto& actions = get_array(j, "actions", source, "graph");
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (!actions[i].is_string()) fail(source, "actions " + entry(i) + " must be a string");
    d.actions.push_back(actions[i].get<std::string>());
  }

  const auto& transitions = get_array(j, "transitions", source, "graph");
  for (std::size_t i = 0; i < transitions.size(); ++i) {
    const std::string where = "transitions " + entry(i);
    expect_object(transitions[i], source, where, {"from", "action", "to", "weight"});
    auto ref = parse_ref(transitions[i], source, where);
    d.transitions.push_back({ref.from, ref.action, ref.to,
                             get_number(transitions[i], "weight", source, where, 1.0)});
  }
  return d;
}

TransitionGraph load_graph(const std::filesystem::path& path) {
  const auto d = parse_graph(read_json_file(path), path.string());
  try {
    return TransitionGraph::build(d);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Json graph_to_json(const TransitionGraph& graph) {
  Json j;
  j["gamma"] = graph.gamma();
  j["states"] = Json::array();
  for (StateIndex s = 0; s < graph.num_states(); ++s)
    j["states"].push_back({{"id", graph.state_label(s)}, {"weight", graph.state_weight(s)}});
  j["actions"] = Json::array();
  for (const auto& a : graph.action_labels()) j["actions"].push_back(a);
  j["transitions"] = Json::array();
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
    Json e = transition_to_json(graph, t);
    e["weight"] = graph.transition(t).weight;
    j["transitions"].push_back(std::move(e));
  }
  return j;
}

// ---------------------------------------------------------------------------

Potential parse_potential(const TransitionGraph& graph, const Json& j, const std::string& source) {
  expect_object(j, source, "potential", {"values"});
  const Json& values = require(j, "values", source, "potential");
  if (!values.is_object()) fail(source, "\"values\" must be an object keyed by state id");
  Potential p = Potential::zero(graph);
  for (const auto& [key, value] : values.items()) {
    auto s = graph.find_state(key);
    if (!s) fail(source, "potential names unknown state \"" + key + "\"");
    p[*s] = get_number(value, source, "value of state \"" + key + "\"");
  }
  for (StateIndex s = 0; s < graph.num_states(); ++s)
    if (!values.contains(graph.state_label(s)))
      fail(source, "potential is missing state \"" + graph.state_label(s) + "\"");
  return p;
}

Json potential_to_json(const TransitionGraph& graph, const Potential& p) {
  check_domain(graph, p);
  Json values = Json::object();
  for (StateIndex s = 0; s < graph.num_states(); ++s) values[graph.state_label(s)] = p[s];
  return {{"values", values}};
}

Reward parse_reward(const TransitionGraph& graph, const Json& j, const std::string& source) {
  expect_object(j, source, "reward", {"rewards"});
  const Json& entries = get_array(j, "rewards", source, "reward");
  Reward r = Reward::zero(graph);
  std::vector<char> seen(graph.num_transitions(), 0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string where = "rewards " + entry(i);
    expect_object(entries[i], source, where, {"from", "action", "to", "value"});
    const auto ref = parse_ref(entries[i], source, where);
    const TransitionIndex t = resolve(graph, ref, source);
    if (seen[t]) fail(source, "duplicate reward for transition " + ref.name());
    seen[t] = 1;
    r[t] = get_number(entries[i], "value", source, where);
  }
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t)
    if (!seen[t]) fail(source, "reward is missing transition " + graph.describe(t));
  return r;
}

Json reward_to_json(const TransitionGraph& graph, const Reward& r) {
  check_domain(graph, r);
  Json entries = Json::array();
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
    Json e = transition_to_json(graph, t);
    e["value"] = r[t];
    entries.push_back(std::move(e));
  }
  return {{"rewards", entries}};
}

// ---------------------------------------------------------------------------

Trajectory parse_trajectory(const TransitionGraph& graph, const Json& j,
                            const std::string& source) {
  expect_object(j, source, "trajectory", {"start", "steps"});
  const Json& steps = get_array(j, "steps", source, "trajectory");

  std::map<std::size_t, TransitionRef> ordered;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string where = "steps " + entry(i);
    expect_object(steps[i], source, where, {"order", "from", "action", "to"});
    const Json& order = require(steps[i], "order", source, where);
    if (!order.is_number_unsigned()) fail(source, "\"order\" in " + where + " must be a non-negative integer");
    const auto k = order.get<std::size_t>();
    if (!ordered.emplace(k, parse_ref(steps[i], source, where)).second)
      fail(source, "duplicate step order " + std::to_string(k));
  }
  std::size_t expected = 0;
  for (const auto& [k, ref] : ordered)
    if (k != expected++) fail(source, "step orders must be 0.." + std::to_string(steps.size() - 1));

  Trajectory t;
  if (j.contains("start")) {
    const auto label = get_string(j, "start", source, "trajectory");
    auto s = graph.find_state(label);
    if (!s) fail(source, "unknown start state \"" + label + "\"");
    t.start = *s;
  } else if (!ordered.empty()) {
    auto s = graph.find_state(ordered.begin()->second.from);
    if (!s) fail(source, "unknown state \"" + ordered.begin()->second.from + "\"");
    t.start = *s;
  } else {
    fail(source, "an empty trajectory needs a \"start\" state");
  }
  for (const auto& [k, ref] : ordered) t.steps.push_back(resolve(graph, ref, source));
  try {
    check_trajectory(graph, t);
  } catch (const InputError& e) {
    fail(source, e.what());
  }
  return t;
}

Json trajectory_to_json(const TransitionGraph& graph, const Trajectory& t) {
  Json steps = Json::array();
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    Json e = transition_to_json(graph, t.steps[i]);
    e["order"] = i;
    steps.push_back(std::move(e));
  }
  return {{"start", graph.state_label(t.start)}, {"steps", steps}};
}

LassoTrajectory parse_lasso(const TransitionGraph& graph, const Json& j, const std::string& source) {
  expect_object(j, source, "lasso", {"prefix", "cycle"});
  LassoTrajectory lasso{parse_trajectory(graph, require(j, "prefix", source, "lasso"), source),
                        parse_trajectory(graph, require(j, "cycle", source, "lasso"), source)};
  try {
    check_lasso(graph, lasso);
  } catch (const InputError& e) {
    fail(source, e.what());
  }
  return lasso;
}

Json lasso_to_json(const TransitionGraph& graph, const LassoTrajectory& t) {
  return {{"prefix", trajectory_to_json(graph, t.prefix)},
          {"cycle", trajectory_to_json(graph, t.cycle)}};
}

DeterministicDynamics parse_dynamics(const TransitionGraph& graph, const Json& j,
                                     const std::string& source) {
  expect_object(j, source, "dynamics", {"choices", "initial_support"});
  const Json& choices = get_array(j, "choices", source, "dynamics");
  std::vector<TransitionIndex> chosen;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const std::string where = "choices " + entry(i);
    expect_object(choices[i], source, where, {"from", "action", "to"});
    chosen.push_back(resolve(graph, parse_ref(choices[i], source, where), source));
  }
  std::vector<StateIndex> support;
  if (j.contains("initial_support")) {
    const Json& s = get_array(j, "initial_support", source, "dynamics");
    if (s.empty()) fail(source, "\"initial_support\" must not be empty");
    for (const auto& e : s) {
      if (!e.is_string()) fail(source, "\"initial_support\" entries must be state ids");
      auto idx = graph.find_state(e.get<std::string>());
      if (!idx) fail(source, "unknown state \"" + e.get<std::string>() + "\" in initial_support");
      support.push_back(*idx);
    }
  }
  try {
    return make_dynamics(graph, std::move(chosen), std::move(support));
  } catch (const InputError& e) {
    fail(source, e.what());
  }
}

Json dynamics_to_json(const TransitionGraph& graph, const DeterministicDynamics& d) {
  Json choices = Json::array();
  for (TransitionIndex t : d.chosen) choices.push_back(transition_to_json(graph, t));
  Json support = Json::array();
  for (StateIndex s : d.initial_support) support.push_back(graph.state_label(s));
  return {{"choices", choices}, {"initial_support", support}};
}

// ---------------------------------------------------------------------------

Json transition_to_json(const TransitionGraph& graph, TransitionIndex t) {
  const auto& tr = graph.transition(t);
  return {{"from", graph.state_label(tr.src)},
          {"action", graph.action_label(tr.action)},
          {"to", graph.state_label(tr.dst)}};
}

Json curl_to_json(const TransitionGraph& graph, const CurlField& curl) {
  Json out = Json::array();
  for (std::size_t i = 0; i < curl.diamonds.size(); ++i) {
    const auto& d = curl.diamonds[i];
    out.push_back({{"delta1", {transition_to_json(graph, d.first[0]),
                               transition_to_json(graph, d.first[1])}},
                   {"delta2", {transition_to_json(graph, d.second[0]),
                               transition_to_json(graph, d.second[1])}},
                   {"value", curl.values[i]}});
  }
  return out;
}

Json laplacian_to_json(const TransitionGraph& graph, const LaplacianMatrix& m) {
  Json states = Json::array();
  for (const auto& s : graph.state_labels()) states.push_back(s);
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.entries.cols(); ++k) row.push_back(m.entries(i, k));
    rows.push_back(std::move(row));
  }
  return {{"states", states},
          {"matrix", rows},
          {"rank", m.rank},
          {"smallest_singular_value", m.smallest_singular_value},
          {"largest_singular_value", m.largest_singular_value},
          {"invertible", m.invertible}};
}

Json decomposition_to_json(const TransitionGraph& graph, const Decomposition& d) {
  return {{"divergence_free", reward_to_json(graph, d.divergence_free)},
          {"potential", potential_to_json(graph, d.potential)},
          {"residuals",
           {{"reconstruction", d.reconstruction_residual}, {"divergence", d.divergence_residual}}},
          {"laplacian_invertible", d.laplacian_invertible}};
}

Json topology_to_json(const TransitionGraph& graph, const TopologyReport& report) {
  Json reach = Json::object();
  for (StateIndex s = 0; s < graph.num_states(); ++s) {
    Json targets = Json::array();
    for (StateIndex v : report.reachable_from[s]) targets.push_back(graph.state_label(v));
    reach[graph.state_label(s)] = std::move(targets);
  }
  return {{"is_complete", report.is_complete},
          {"has_distinguishing_actions", report.has_distinguishing_actions},
          {"is_diamond_complete", report.is_diamond_complete},
          {"every_state_in_loop", report.every_state_in_loop},
          {"reachable_from", reach}};
}

Json q_star_to_json(const TransitionGraph& graph, const std::vector<QEntry>& q) {
  Json out = Json::array();
  for (const auto& e : q)
    out.push_back({{"state", graph.state_label(e.state)},
                   {"action", graph.action_label(e.action)},
                   {"value", e.value}});
  return {{"q_star", out}};
}

namespace {

Json witness_pair(const Json& a, double ia, const Json& b, double ib) {
  return Json::array({{{"trajectory", a}, {"integral", ia}}, {{"trajectory", b}, {"integral", ib}}});
}

}  // namespace

Json verdict_to_json(const TransitionGraph& graph, const ConservativenessVerdict& v) {
  Json j;
  j["verdict"] = to_string(v.kind);
  j["residual"] = v.residual;
  if (v.potential) j["potential"] = potential_to_json(graph, *v.potential);
  if (v.finite_witness) {
    const auto& w = *v.finite_witness;
    j["finite_witness"] = witness_pair(trajectory_to_json(graph, w.first), w.first_integral,
                                       trajectory_to_json(graph, w.second), w.second_integral);
  }
  if (v.lasso_witness) {
    const auto& w = *v.lasso_witness;
    j["lasso_witness"] = witness_pair(lasso_to_json(graph, w.first), w.first_integral,
                                      lasso_to_json(graph, w.second), w.second_integral);
  }
  if (v.kind != ConservativenessKind::conservative) j["lassos_examined"] = v.lassos_examined;
  return j;
}

Json verdict_to_json(const TransitionGraph& graph, const OptimalityVerdict& v) {
  Json j;
  j["verdict"] = v.counterexample_found ? "counterexample_found" : "no_counterexample_within_budget";
  j["dynamics_checked"] = v.dynamics_checked;
  j["dynamics_total"] = v.dynamics_total;
  j["max_gap"] = v.max_gap;
  if (v.counterexample) {
    const auto& c = *v.counterexample;
    j["counterexample"] = {{"dynamics", dynamics_to_json(graph, c.dynamics)},
                           {"index", c.index},
                           {"state", graph.state_label(c.state)},
                           {"best_action", graph.action_label(c.best_action)},
                           {"worst_action", graph.action_label(c.worst_action)},
                           {"gap", c.gap}};
  }
  return j;
}

// ---------------------------------------------------------------------------

std::string format_number(double x) {
  const int n = std::snprintf(nullptr, 0, "%.12f", x);
  std::string s(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(s.data(), s.size(), "%.12f", x);
  s.resize(static_cast<std::size_t>(n));
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace dcalc::io
