// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. A criterion also fails when it exceeds its runtime limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "dcalc/analysis.hpp"
#include "dcalc/decompose.hpp"
#include "dcalc/io.hpp"
#include "dcalc/operators.hpp"
#include "support/cli_fixture.hpp"
#include "support/oracles.hpp"
#include "support/random_graphs.hpp"

using namespace dcalc;
using namespace dcalc::testing;

namespace {

struct Result {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double distance_between(const TransitionGraph& g, const Reward& a, const Reward& b) {
  return norm(g, combine(1.0, a, -1.0, b));
}

// ---------------------------------------------------------------------------

Result gradient_telescoping() {
  Rng rng(1001);
  GraphOptions o;
  o.max_states = 8;
  o.max_actions = 3;
  o.gammas = {0.0, 0.3, 0.9, 1.0};
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_graph(rng, o);
    const auto p = random_potential(g, rng);
    const auto len = uniform_index(rng, 0, 10);
    const auto tau = random_trajectory(g, rng, uniform_index(rng, 0, g.num_states() - 1), len);
    const double expected = std::pow(g.gamma(), static_cast<double>(len)) * p[tau.end(g)] - p[tau.start];
    worst = std::max(worst, std::abs(line_integral(g, grad(g, p), tau) - expected));
  }
  return {worst <= 1e-9, "1000 triples, max error " + fmt("%.3g", worst)};
}

Result adjointness() {
  Rng rng(1002);
  GraphOptions o;
  o.gammas = {0.0, 0.3, 0.9, 1.0};
  o.min_weight = 0.1;
  o.max_weight = 10.0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto g = random_graph(rng, o);
    const auto r = random_reward(g, rng);
    const auto p = random_potential(g, rng);
    const double a = inner_product(g, r, grad(g, p));
    const double b = inner_product(g, divergence(g, r), p);
    worst = std::max(worst, std::abs(a + b) / std::max(std::abs(a), 1.0));
  }
  return {worst <= 1e-9, "1000 triples, max relative error " + fmt("%.3g", worst)};
}

Result decomposition() {
  Rng rng(1003);
  GraphOptions o;
  o.gammas = {0.3, 0.9};
  o.min_weight = 0.1;
  o.max_weight = 10.0;
  double recon = 0.0, div = 0.0, orth = 0.0, oracle_gap = 0.0;
  for (int i = 0; i < 500; ++i) {
    const auto g = random_graph(rng, o);
    const auto r = random_reward(g, rng);
    const double scale = norm(g, r);
    const auto d = decompose(g, r);
    recon = std::max(recon, d.reconstruction_residual / scale);
    div = std::max(div, norm(g, divergence(g, d.divergence_free)) / scale);
    for (StateIndex s = 0; s < g.num_states(); ++s) {
      Potential e = Potential::zero(g);
      e[s] = 1.0;
      orth = std::max(orth, std::abs(inner_product(g, d.divergence_free, grad(g, e))));
    }
    const auto oracle = oracle::project_onto_gradients(g, r);
    oracle_gap = std::max(oracle_gap, distance_between(g, d.divergence_free, Reward(oracle.remainder)));
    for (StateIndex s = 0; s < g.num_states(); ++s)
      oracle_gap = std::max(oracle_gap, std::abs(d.potential[s] - oracle.potential[s]));
  }
  const bool pass = recon <= 1e-9 && div <= 1e-9 && orth <= 1e-9 && oracle_gap <= 1e-8;
  return {pass, "500 rewards, reconstruction " + fmt("%.3g", recon) + ", divergence " + fmt("%.3g", div) +
                    ", orthogonality " + fmt("%.3g", orth) + ", oracle gap " + fmt("%.3g", oracle_gap)};
}

Result canonicalization() {
  Rng rng(1004);
  GraphOptions o;
  o.gammas = {0.3, 0.9, 1.0};
  o.min_weight = 0.1;
  o.max_weight = 10.0;
  double invariance = 0.0, lipschitz = -INFINITY;
  int minimal_violations = 0;
  for (int i = 0; i < 500; ++i) {
    const auto g = random_graph(rng, o);
    const Decomposer dec(g);
    const auto r = random_reward(g, rng);
    const auto c = dec.canonicalize(r);
    const auto shaped = combine(1.0, r, 1.0, grad(g, random_potential(g, rng)));
    invariance = std::max(invariance, distance_between(g, dec.canonicalize(shaped), c) / (1.0 + norm(g, r)));
    const double c_norm = norm(g, c);
    for (int k = 0; k < 100; ++k)
      if (c_norm > norm(g, combine(1.0, r, 1.0, grad(g, random_potential(g, rng))))) ++minimal_violations;
    const auto q = random_reward(g, rng);
    lipschitz = std::max(lipschitz, dec.distance(r, q) - distance_between(g, r, q));
  }
  const bool pass = invariance <= 1e-8 && minimal_violations == 0 && lipschitz <= 1e-9;
  return {pass, "500 rewards, invariance " + fmt("%.3g", invariance) + ", minimal-norm violations " +
                    std::to_string(minimal_violations) + "/50000, Lipschitz excess " + fmt("%.3g", lipschitz)};
}

Result curl_equivalence() {
  Rng rng(1005);
  GraphOptions o;
  o.max_states = 6;
  o.max_actions = 2;
  o.edge_probability = 0.2;
  o.hub = true;
  o.gammas = {0.3, 0.9};
  int disagreements = 0, curl_free = 0, brute = 0;
  for (int i = 0; i < 200; ++i) {
    const auto g = random_graph(rng, o);
    if (!topology_report(g).is_diamond_complete) return {false, "generator produced a graph that is not diamond-complete"};
    Reward r = grad(g, random_potential(g, rng));
    if (i % 3 == 1) r = random_reward(g, rng);
    if (i % 3 == 2) r[uniform_index(rng, 0, g.num_transitions() - 1)] += uniform(rng, 1e-3, 1.0);
    const bool a = max_abs_curl(g, r) <= 1e-9;
    bool b;
    if (oracle::brute_force_size(g, 6) <= 500000) {
      b = oracle::brute_force_finitely_conservative(g, r, 6);
      ++brute;
    } else {
      b = check_finitely_conservative(g, r, 6).holds;
    }
    const bool c = solve_potential(g, r).residual <= 1e-9;
    if (a != b || b != c) ++disagreements;
    curl_free += a;
  }
  return {disagreements == 0, "200 graphs, " + std::to_string(curl_free) + " curl-free, " + std::to_string(brute) +
                                  " checked by full enumeration, " + std::to_string(disagreements) + " disagreements"};
}

Result optimality_forward() {
  Rng rng(1006);
  GraphOptions o;
  o.max_states = 4;
  o.max_actions = 2;
  o.edge_probability = 0.5;
  o.gammas = {0.9};
  int graphs = 0, failures = 0;
  std::uint64_t dynamics = 0;
  double worst_gap = 0.0;
  while (graphs < 50) {
    const auto g = random_graph(rng, o);
    if (enumerate_deterministic_dynamics(g).total() > 10000) continue;
    ++graphs;
    const auto v = check_optimality_preserving(g, grad(g, random_potential(g, rng)), 10000);
    if (v.counterexample_found || v.dynamics_checked != v.dynamics_total || v.max_gap > 1e-8) ++failures;
    dynamics += v.dynamics_checked;
    worst_gap = std::max(worst_gap, v.max_gap);
  }
  return {failures == 0, "50 graphs, " + std::to_string(dynamics) + " dynamics exhausted, max Q*-gap " +
                             fmt("%.3g", worst_gap)};
}

Result optimality_converse() {
  Rng rng(1007);
  GraphOptions o;
  o.min_states = 2;
  o.max_states = 4;
  o.min_actions = 2;
  o.max_actions = 2;
  o.edge_probability = 0.5;
  o.gammas = {0.9};
  int graphs = 0, missed = 0, independent = 0;
  std::uint64_t dynamics = 0;
  while (graphs < 50) {
    const auto g = random_graph(rng, o);
    if (!topology_report(g).has_distinguishing_actions) continue;
    if (enumerate_deterministic_dynamics(g).total() > 10000) continue;
    // Some graphs have every reward conservative; those are skipped.
    Reward f = Reward::zero(g);
    double residual = 0.0;
    for (int attempt = 0; attempt < 20 && residual <= 1e-6; ++attempt) {
      f = graphs % 2 ? random_reward(g, rng) : random_action_independent_reward(g, rng);
      const double n = norm(g, f);
      for (double& v : f.values) v /= n;
      residual = solve_potential(g, f).residual;
    }
    if (residual <= 1e-6) continue;
    ++graphs;
    independent += is_action_independent(g, f).independent;
    const auto v = check_optimality_preserving(g, f, 10000);
    dynamics += v.dynamics_checked;
    if (!v.counterexample_found) {
      ++missed;
      continue;
    }
    if (all_policies_optimal(g, v.counterexample->dynamics, f).optimal) ++missed;
  }
  return {missed == 0, "50 graphs (" + std::to_string(independent) + " action-independent rewards), " +
                           std::to_string(dynamics) + " dynamics searched, " + std::to_string(missed) + " without counterexample"};
}

Result shortest_path_potential() {
  Rng rng(1008);
  GraphOptions o;
  o.rooted = true;
  o.gammas = {0.3, 0.9};
  double worst = 0.0, ratio = 0.0;
  int bound_violations = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = random_graph(rng, o);
    const auto r = grad(g, random_potential(g, rng));
    const auto built = construct_potential_shortest_path(g, r, 0);
    worst = std::max(worst, distance_between(g, grad(g, built.potential), r));
    const double n = static_cast<double>(built.depth);
    const double bound = sup_norm(r) / std::pow(g.gamma(), n) * (n + 1.0 / (1.0 - g.gamma()));
    // A lone self-loop attains the bound exactly, so allow rounding.
    for (double v : built.potential.values) {
      ratio = std::max(ratio, std::abs(v) / bound);
      if (std::abs(v) > bound * (1.0 + 1e-12)) ++bound_violations;
    }
  }
  return {worst <= 1e-9 && bound_violations == 0,
          "100 graphs, max ||grad phi - R|| " + fmt("%.3g", worst) + ", max |phi|/bound " + fmt("%.17g", ratio) +
              ", bound violations " + std::to_string(bound_violations)};
}

Result branching_separation() {
  const auto g = make_graph(0.5, {"s0", "s1", "s2"}, {"a"},
                            {{"s0", "a", "s1"}, {"s0", "a", "s2"}, {"s1", "a", "s1"}, {"s2", "a", "s2"}});
  const auto r = reward_from(g, {{{"s0", "a", "s1"}, 1.0},
                                 {{"s1", "a", "s1"}, 1.0},
                                 {{"s0", "a", "s2"}, 2.0},
                                 {{"s2", "a", "s2"}, 2.0}});
  const auto v = check_conservative(g, r);
  if (v.kind != ConservativenessKind::finitely_conservative_only)
    return {false, std::string("verdict ") + to_string(v.kind)};
  if (!v.lasso_witness) return {false, "no lasso witness"};
  const double a = v.lasso_witness->first_integral, b = v.lasso_witness->second_integral;
  return {a == 2.0 && b == 4.0, std::string("verdict ") + to_string(v.kind) + ", lasso integrals " +
                                    io::format_number(a) + " and " + io::format_number(b)};
}

Result laplacian_bijectivity() {
  Rng rng(1010);
  GraphOptions o;
  o.every_state_in_loop = true;
  o.gammas = {0.3, 0.9};
  int failures = 0;
  double smallest = INFINITY;
  for (int i = 0; i < 200; ++i) {
    const auto g = random_graph(rng, o);
    const auto m = laplacian_matrix(g);
    smallest = std::min(smallest, m.smallest_singular_value / m.largest_singular_value);
    if (!(m.invertible && m.smallest_singular_value > 0.0)) ++failures;
    if (laplacian_matrix(g.with_gamma(1.0)).invertible) ++failures;

    // The bare global cycle through the same states.
    std::vector<std::string> states;
    std::vector<TransitionSpec> cycle;
    for (StateIndex s = 0; s < g.num_states(); ++s) states.push_back(g.state_label(s));
    for (std::size_t s = 0; s < states.size(); ++s)
      cycle.push_back({states[s], "a", states[(s + 1) % states.size()]});
    if (laplacian_matrix(make_graph(1.0, states, {"a"}, cycle)).invertible) ++failures;
  }
  return {failures == 0, "200 graphs, smallest relative singular value " + fmt("%.3g", smallest) + ", failures " +
                             std::to_string(failures)};
}

Result cli_determinism() {
  CliFixture fx;
  const auto graph = fx.write("graph.json", R"({
  "gamma": 0.9,
  "states": [{"id": "s0"}, {"id": "s1", "weight": 2.0}, {"id": "s2"}],
  "actions": ["left", "right"],
  "transitions": [
    {"from": "s0", "action": "left", "to": "s0"},
    {"from": "s0", "action": "right", "to": "s1"},
    {"from": "s0", "action": "right", "to": "s2", "weight": 0.5},
    {"from": "s1", "action": "left", "to": "s2"},
    {"from": "s1", "action": "right", "to": "s0"},
    {"from": "s2", "action": "left", "to": "s2"},
    {"from": "s2", "action": "right", "to": "s1", "weight": 3.0}
  ]
})");
  const auto potential = fx.write("potential.json", R"({"values": {"s0": 1.25, "s1": -0.5, "s2": 3.0}})");
  const std::string transitions[][3] = {{"s0", "left", "s0"},  {"s0", "right", "s1"}, {"s0", "right", "s2"},
                                        {"s1", "left", "s2"},  {"s1", "right", "s0"}, {"s2", "left", "s2"},
                                        {"s2", "right", "s1"}};
  auto reward_file = [&](const std::string& name, const std::vector<std::string>& values) {
    std::string text = "{\"rewards\": [";
    for (std::size_t i = 0; i < values.size(); ++i)
      text += std::string(i ? "," : "") + "{\"from\": \"" + transitions[i][0] + "\", \"action\": \"" +
              transitions[i][1] + "\", \"to\": \"" + transitions[i][2] + "\", \"value\": " + values[i] + "}";
    return fx.write(name, text + "]}");
  };
  const auto reward = reward_file("reward.json", {"0.5", "-1", "2.25", "0", "1.5", "-0.75", "0.125"});
  const auto reward2 = reward_file("reward2.json", {"1", "0.25", "2.25", "-3", "1.5", "0.1", "0.125"});
  const auto trajectory = fx.write("trajectory.json", R"({"steps": [
    {"order": 0, "from": "s0", "action": "right", "to": "s1"},
    {"order": 1, "from": "s1", "action": "left", "to": "s2"}]})");
  const auto lasso = fx.write("lasso.json", R"({
    "prefix": {"steps": [{"order": 0, "from": "s0", "action": "right", "to": "s2"}]},
    "cycle": {"steps": [{"order": 0, "from": "s2", "action": "right", "to": "s1"},
                        {"order": 1, "from": "s1", "action": "left", "to": "s2"}]}})");
  const auto dynamics = fx.write("dynamics.json", R"({"choices": [
    {"from": "s0", "action": "left", "to": "s0"}, {"from": "s0", "action": "right", "to": "s2"},
    {"from": "s1", "action": "left", "to": "s2"}, {"from": "s1", "action": "right", "to": "s0"},
    {"from": "s2", "action": "left", "to": "s2"}, {"from": "s2", "action": "right", "to": "s1"}]})");

  using Args = std::vector<std::string>;
  std::vector<Args> commands = {
      {"validate", "--graph", graph},
      {"topology", "--graph", graph},
      {"grad", "--graph", graph, "--potential", potential},
      {"integrate", "--graph", graph, "--reward", reward, "--trajectory", trajectory},
      {"integrate", "--graph", graph, "--reward", reward, "--lasso", lasso},
      {"curl", "--graph", graph, "--reward", reward},
      {"curl", "--graph", graph, "--reward", reward, "--max-only"},
      {"div", "--graph", graph, "--reward", reward},
      {"laplacian", "--graph", graph},
      {"decompose", "--graph", graph, "--reward", reward},
      {"canonicalize", "--graph", graph, "--reward", reward},
      {"distance", "--graph", graph, "--reward", reward, "--reward", reward2},
      {"distance", "--graph", graph, "--reward", reward, "--reward", reward2, "--normalize"},
      {"check", "conservative", "--graph", graph, "--reward", reward},
      {"check", "finitely-conservative", "--graph", graph, "--reward", reward},
      {"check", "curl-free", "--graph", graph, "--reward", reward},
      {"check", "action-independent", "--graph", graph, "--reward", reward},
      {"check", "optimality", "--graph", graph, "--reward", reward},
      {"check", "optimality", "--graph", graph, "--reward", reward, "--threads", "4"},
      {"construct-potential", "--graph", graph, "--reward", reward, "--from", "s0"},
      {"qstar", "--graph", graph, "--reward", reward, "--dynamics", dynamics},
  };
  const std::size_t base = commands.size();
  for (std::size_t i = 0; i < base; ++i)
    for (const char* format : {"text", "json"}) {
      Args a = commands[i];
      a.push_back("--format");
      a.push_back(format);
      commands.push_back(a);
    }

  int mismatches = 0, errors = 0;
  for (const auto& args : commands) {
    const auto first = CliFixture::run(args);
    const auto second = CliFixture::run(args);
    if (first.out != second.out || first.err != second.err || first.code != second.code) ++mismatches;
    if (first.code >= cli::kUsage || first.out.empty()) ++errors;
  }

  // grad -> check conservative -> construct-potential.
  const auto g = io::load_graph(graph);
  const auto p = io::parse_potential(g, io::read_json_file(potential));
  const auto grad_out = CliFixture::run({"grad", "--graph", graph, "--potential", potential});
  const auto gradp = fx.write("gradp.json", grad_out.out);
  const auto check = CliFixture::run({"check", "conservative", "--graph", graph, "--reward", gradp, "--format", "json"});
  const auto built = CliFixture::run({"construct-potential", "--graph", graph, "--reward", gradp, "--from", "s0"});
  bool round_trip = grad_out.code == cli::kOk && check.code == cli::kOk && built.code == cli::kOk;
  if (round_trip) {
    const auto verdict = io::Json::parse(check.out);
    round_trip = verdict.at("verdict") == "conservative";
    const auto phi = io::parse_potential(g, io::Json::parse(built.out));
    const auto lossless = io::parse_reward(g, io::read_json_file(gradp));
    round_trip = round_trip && lossless.values == grad(g, p).values;
    for (StateIndex s = 0; s < g.num_states(); ++s) round_trip = round_trip && std::abs(phi[s] - p[s]) <= 1e-9;
  }
  return {mismatches == 0 && errors == 0 && round_trip,
          std::to_string(commands.size()) + " invocations twice, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(errors) + " errors, round trip " + (round_trip ? "ok" : "broken")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient integrals telescope", 5, gradient_telescoping},
      {2, "adjointness", 5, adjointness},
      {3, "decomposition", 30, decomposition},
      {4, "canonicalization invariance", 60, canonicalization},
      {5, "curl equivalence on diamond-complete graphs", 60, curl_equivalence},
      {6, "optimality, forward", 120, optimality_forward},
      {7, "optimality, converse", 120, optimality_converse},
      {8, "shortest-path potential", 10, shortest_path_potential},
      {9, "finite vs infinite separation", 1, branching_separation},
      {10, "laplacian bijectivity", 10, laplacian_bijectivity},
      {11, "cli determinism", 5, cli_determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds < c.limit_seconds;
    const bool pass = r.pass && in_time;
    failed += !pass;
    std::printf("[%s] %2d %s: %s (%.2f s of %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, r.detail.c_str(),
                seconds, c.limit_seconds);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
