#include "dcalc/cli.hpp"

#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "dcalc/analysis.hpp"
#include "dcalc/decompose.hpp"
#include "dcalc/error.hpp"
#include "dcalc/io.hpp"
#include "dcalc/operators.hpp"

namespace dcalc::cli {

namespace {

using io::Json;

enum class Format { automatic, text, json };

struct CliConfig {
  std::string graph_path;
  std::vector<std::string> reward_paths;
  std::string potential_path;
  std::string trajectory_path;
  std::string lasso_path;
  std::string dynamics_path;
  std::string counterexample_path;
  std::string from_state;
  double tol_abs = 1e-9;
  double tol_rel = 1e-9;
  std::size_t max_len = 6;
  std::size_t max_prefix = 4;
  std::size_t max_cycle = 4;
  std::uint64_t budget = kDefaultDynamicsBudget;
  std::size_t diamond_cap = kDefaultDiamondCap;
  unsigned threads = 1;
  bool normalize = false;
  bool max_only = false;
  Format format = Format::automatic;
  std::string output;

  Tolerance tol() const { return {tol_abs, tol_rel}; }
};

/// What a command produced: the text to emit and the exit code.
struct Outcome {
  std::string text;
  int code = kOk;
};

bool want_json(const CliConfig& c, bool json_by_default) {
  return c.format == Format::json || (c.format == Format::automatic && json_by_default);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

TransitionGraph graph_of(const CliConfig& c) { return io::load_graph(c.graph_path); }

Reward reward_of(const TransitionGraph& g, const std::string& path) {
  return io::parse_reward(g, io::read_json_file(path), path);
}

Reward only_reward(const TransitionGraph& g, const CliConfig& c) {
  if (c.reward_paths.size() != 1) throw InputError("exactly one --reward is required");
  return reward_of(g, c.reward_paths.front());
}

std::string potential_text(const TransitionGraph& g, const Potential& p, const std::string& prefix) {
  std::string out;
  for (StateIndex s = 0; s < g.num_states(); ++s)
    out += prefix + g.state_label(s) + " " + io::format_number(p[s]) + "\n";
  return out;
}

std::string reward_text(const TransitionGraph& g, const Reward& r) {
  std::string out;
  for (TransitionIndex t = 0; t < g.num_transitions(); ++t) {
    const auto& tr = g.transition(t);
    out += g.state_label(tr.src) + " " + g.action_label(tr.action) + " " + g.state_label(tr.dst) +
           " " + io::format_number(r[t]) + "\n";
  }
  return out;
}

std::string steps_text(const TransitionGraph& g, const Trajectory& t) {
  std::string out = g.state_label(t.start);
  for (TransitionIndex s : t.steps) {
    const auto& tr = g.transition(s);
    out += " -" + g.action_label(tr.action) + "-> " + g.state_label(tr.dst);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_validate(const CliConfig& c) {
  const auto data = io::parse_graph(io::read_json_file(c.graph_path), c.graph_path);
  const auto violations = validate(data);
  Outcome o;
  o.code = violations.empty() ? kOk : kNegative;
  if (want_json(c, false)) {
    o.text = io::dump({{"ok", violations.empty()}, {"violations", violations}});
  } else {
    o.text = violations.empty() ? "ok\n" : "invalid\n";
    for (const auto& v : violations) o.text += "violation: " + v + "\n";
  }
  return o;
}

Outcome cmd_topology(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto report = topology_report(g);
  if (want_json(c, false)) return {io::dump(io::topology_to_json(g, report))};
  std::string out;
  out += "is_complete: " + bool_text(report.is_complete) + "\n";
  out += "has_distinguishing_actions: " + bool_text(report.has_distinguishing_actions) + "\n";
  out += "is_diamond_complete: " + bool_text(report.is_diamond_complete) + "\n";
  out += "every_state_in_loop: " + bool_text(report.every_state_in_loop) + "\n";
  for (StateIndex s = 0; s < g.num_states(); ++s) {
    out += "reachable_from " + g.state_label(s) + ":";
    for (StateIndex v : report.reachable_from[s]) out += " " + g.state_label(v);
    out += "\n";
  }
  return {out};
}

Outcome cmd_grad(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto p = io::parse_potential(g, io::read_json_file(c.potential_path), c.potential_path);
  const auto r = grad(g, p);
  if (want_json(c, true)) return {io::dump(io::reward_to_json(g, r))};
  return {reward_text(g, r)};
}

Outcome cmd_integrate(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  if (c.trajectory_path.empty() == c.lasso_path.empty())
    throw InputError("integrate needs exactly one of --trajectory or --lasso");
  double value = 0.0;
  if (!c.trajectory_path.empty()) {
    const auto t =
        io::parse_trajectory(g, io::read_json_file(c.trajectory_path), c.trajectory_path);
    value = line_integral(g, r, t);
  } else {
    const auto t = io::parse_lasso(g, io::read_json_file(c.lasso_path), c.lasso_path);
    value = line_integral(g, r, t);
  }
  if (want_json(c, false)) return {io::dump({{"integral", value}})};
  return {io::format_number(value) + "\n"};
}

Outcome cmd_curl(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  if (c.max_only) {
    const double m = max_abs_curl(g, r);
    if (want_json(c, false)) return {io::dump({{"max_abs_curl", m}})};
    return {io::format_number(m) + "\n"};
  }
  const auto field = curl(g, r, c.diamond_cap);
  if (want_json(c, true)) return {io::dump(io::curl_to_json(g, field))};
  std::string out;
  for (std::size_t i = 0; i < field.diamonds.size(); ++i) {
    const auto& d = field.diamonds[i];
    out += steps_text(g, Trajectory{g.transition(d.first[0]).src, {d.first[0], d.first[1]}}) +
           " | " +
           steps_text(g, Trajectory{g.transition(d.second[0]).src, {d.second[0], d.second[1]}}) +
           " " + io::format_number(field.values[i]) + "\n";
  }
  return {out};
}

Outcome cmd_div(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto d = divergence(g, only_reward(g, c));
  if (want_json(c, true)) return {io::dump(io::potential_to_json(g, d))};
  return {potential_text(g, d, "")};
}

Outcome cmd_laplacian(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto m = laplacian_matrix(g);
  if (want_json(c, true)) return {io::dump(io::laplacian_to_json(g, m))};
  std::string out = "states:";
  for (const auto& s : g.state_labels()) out += " " + s;
  out += "\n";
  for (Eigen::Index i = 0; i < m.entries.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.entries.cols(); ++k)
      out += (k ? " " : "") + io::format_number(m.entries(i, k));
    out += "\n";
  }
  out += "rank: " + std::to_string(m.rank) + "\n";
  out += "smallest_singular_value: " + io::format_number(m.smallest_singular_value) + "\n";
  out += "invertible: " + bool_text(m.invertible) + "\n";
  return {out};
}

Outcome cmd_decompose(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto d = decompose(g, only_reward(g, c));
  if (want_json(c, true)) return {io::dump(io::decomposition_to_json(g, d))};
  std::string out = "divergence_free:\n" + reward_text(g, d.divergence_free) + "potential:\n" +
                    potential_text(g, d.potential, "") +
                    "reconstruction_residual: " + io::format_number(d.reconstruction_residual) +
                    "\ndivergence_residual: " + io::format_number(d.divergence_residual) +
                    "\nlaplacian_invertible: " + bool_text(d.laplacian_invertible) + "\n";
  return {out};
}

Outcome cmd_canonicalize(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = canonicalize(g, only_reward(g, c));
  if (want_json(c, true)) return {io::dump(io::reward_to_json(g, r))};
  return {reward_text(g, r)};
}

Outcome cmd_distance(const CliConfig& c) {
  const auto g = graph_of(c);
  if (c.reward_paths.size() != 2) throw InputError("distance needs exactly two --reward files");
  const double d = shaping_distance(g, reward_of(g, c.reward_paths[0]),
                                    reward_of(g, c.reward_paths[1]), c.normalize);
  if (want_json(c, false)) return {io::dump({{"distance", d}})};
  return {io::format_number(d) + "\n"};
}

Outcome cmd_check_conservative(const CliConfig& c) {
  const auto g = graph_of(c);
  ConservativeCheckOptions options;
  options.max_len = c.max_len;
  options.max_prefix = c.max_prefix;
  options.max_cycle = c.max_cycle;
  options.tol = c.tol();
  const auto v = check_conservative(g, only_reward(g, c), options);
  Outcome o;
  o.code = v.kind == ConservativenessKind::conservative ? kOk : kNegative;
  if (want_json(c, false)) {
    o.text = io::dump(io::verdict_to_json(g, v));
    return o;
  }
  o.text = std::string("verdict: ") + to_string(v.kind) + "\n";
  o.text += "residual: " + io::format_number(v.residual) + "\n";
  if (v.potential) o.text += potential_text(g, *v.potential, "potential ");
  if (v.finite_witness) {
    const auto& w = *v.finite_witness;
    o.text += "finite_witness: " + steps_text(g, w.first) + " = " +
              io::format_number(w.first_integral) + "\n";
    o.text += "finite_witness: " + steps_text(g, w.second) + " = " +
              io::format_number(w.second_integral) + "\n";
  }
  if (v.lasso_witness) {
    const auto& w = *v.lasso_witness;
    for (const auto* l : {&w.first, &w.second})
      o.text += "lasso_witness: " + steps_text(g, l->prefix) + " then (" +
                steps_text(g, l->cycle) + ")* = " +
                io::format_number(l == &w.first ? w.first_integral : w.second_integral) + "\n";
  }
  return o;
}

Outcome cmd_check_finite(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto v = check_finitely_conservative(g, only_reward(g, c), c.max_len, c.tol());
  Outcome o;
  o.code = v.holds ? kOk : kNegative;
  if (want_json(c, false)) {
    Json j{{"verdict", v.holds ? "finitely_conservative" : "not_finitely_conservative"},
           {"max_len", v.max_len}};
    if (v.witness)
      j["witness"] = Json::array(
          {{{"trajectory", io::trajectory_to_json(g, v.witness->first)},
            {"integral", v.witness->first_integral}},
           {{"trajectory", io::trajectory_to_json(g, v.witness->second)},
            {"integral", v.witness->second_integral}}});
    o.text = io::dump(j);
    return o;
  }
  o.text = std::string("verdict: ") +
           (v.holds ? "finitely_conservative" : "not_finitely_conservative") +
           "\nmax_len: " + std::to_string(v.max_len) + "\n";
  if (v.witness) {
    o.text += "witness: " + steps_text(g, v.witness->first) + " = " +
              io::format_number(v.witness->first_integral) + "\n";
    o.text += "witness: " + steps_text(g, v.witness->second) + " = " +
              io::format_number(v.witness->second_integral) + "\n";
  }
  return o;
}

Outcome cmd_check_curl_free(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  const double m = max_abs_curl(g, r);
  const bool free = m <= c.tol().bound(sup_norm(r));
  Outcome o;
  o.code = free ? kOk : kNegative;
  if (want_json(c, false)) {
    o.text = io::dump({{"verdict", free ? "curl_free" : "not_curl_free"}, {"max_abs_curl", m}});
  } else {
    o.text = std::string("verdict: ") + (free ? "curl_free" : "not_curl_free") +
             "\nmax_abs_curl: " + io::format_number(m) + "\n";
  }
  return o;
}

Outcome cmd_check_action_independent(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  const auto v = is_action_independent(g, r, c.tol());
  Outcome o;
  o.code = v.independent ? kOk : kNegative;
  if (want_json(c, false)) {
    Json j{{"verdict", v.independent ? "action_independent" : "action_dependent"}};
    if (v.witness) {
      Json a = io::transition_to_json(g, v.witness->first);
      a["value"] = r[v.witness->first];
      Json b = io::transition_to_json(g, v.witness->second);
      b["value"] = r[v.witness->second];
      j["witness"] = Json::array({a, b});
    }
    o.text = io::dump(j);
    return o;
  }
  o.text = std::string("verdict: ") +
           (v.independent ? "action_independent" : "action_dependent") + "\n";
  if (v.witness)
    for (TransitionIndex t : {v.witness->first, v.witness->second})
      o.text += "witness: " + g.describe(t) + " = " + io::format_number(r[t]) + "\n";
  return o;
}

Outcome cmd_check_optimality(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto v = check_optimality_preserving(g, only_reward(g, c), c.budget, c.threads);
  if (v.counterexample && !c.counterexample_path.empty()) {
    std::ofstream file(c.counterexample_path);
    if (!file) throw InputError(c.counterexample_path + ": cannot write counterexample file");
    file << io::dump(io::dynamics_to_json(g, v.counterexample->dynamics));
  }
  Outcome o;
  o.code = v.counterexample_found ? kNegative : kOk;
  if (want_json(c, false)) {
    o.text = io::dump(io::verdict_to_json(g, v));
    return o;
  }
  o.text = std::string("verdict: ") +
           (v.counterexample_found ? "counterexample_found" : "no_counterexample_within_budget") +
           "\ndynamics_checked: " + std::to_string(v.dynamics_checked) +
           "\ndynamics_total: " + std::to_string(v.dynamics_total) + "\n";
  if (v.counterexample) {
    const auto& x = *v.counterexample;
    o.text += "state: " + g.state_label(x.state) + "\nbest_action: " +
              g.action_label(x.best_action) + "\nworst_action: " + g.action_label(x.worst_action) +
              "\ngap: " + io::format_number(x.gap) + "\n";
    for (TransitionIndex t : x.dynamics.chosen) o.text += "choice: " + g.describe(t) + "\n";
  }
  return o;
}

Outcome cmd_construct_potential(const CliConfig& c, std::ostream& err) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  const auto result = construct_potential_shortest_path(g, r, g.state_index(c.from_state), c.tol());
  Outcome o;
  o.code = result.consistent ? kOk : kNegative;
  if (!result.consistent)
    err << "warning: gradient of the constructed potential differs from the reward (residual "
        << io::format_number(result.residual) << "); the reward is not finitely conservative\n";
  if (want_json(c, true)) {
    o.text = io::dump(io::potential_to_json(g, result.potential));
  } else {
    o.text = potential_text(g, result.potential, "");
  }
  return o;
}

Outcome cmd_qstar(const CliConfig& c) {
  const auto g = graph_of(c);
  const auto r = only_reward(g, c);
  const auto dyn = io::parse_dynamics(g, io::read_json_file(c.dynamics_path), c.dynamics_path);
  const auto q = q_star(g, dyn, r);
  if (want_json(c, true)) return {io::dump(io::q_star_to_json(g, q))};
  std::string out;
  for (const auto& e : q)
    out += g.state_label(e.state) + " " + g.action_label(e.action) + " " +
           io::format_number(e.value) + "\n";
  return {out};
}

// ---------------------------------------------------------------------------

void add_common(CLI::App* sub, CliConfig& c) {
  sub->add_option("--graph", c.graph_path, "Graph file")->required()->check(CLI::ExistingFile);
  sub->add_option("--format", c.format, "Output format")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, Format>{{"text", Format::text}, {"json", Format::json}}));
  sub->add_option("--output", c.output, "Write output to this file instead of stdout");
  sub->add_option("--tol-abs", c.tol_abs, "Absolute tolerance")->check(CLI::PositiveNumber);
  sub->add_option("--tol-rel", c.tol_rel, "Relative tolerance")->check(CLI::PositiveNumber);
}

void add_reward(CLI::App* sub, CliConfig& c, bool required = true) {
  auto* opt = sub->add_option("--reward", c.reward_paths, "Reward file")->check(CLI::ExistingFile);
  if (required) opt->required();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig c;
  CLI::App app{"Discounted calculus on MDP transition graphs", "dcalc"};
  app.require_subcommand(1);

  std::function<Outcome()> action;
  auto bind = [&](CLI::App* sub, std::function<Outcome()> f) {
    sub->callback([&action, f = std::move(f)] { action = f; });
  };

  auto* validate_cmd = app.add_subcommand("validate", "Check a graph file against every invariant");
  add_common(validate_cmd, c);
  bind(validate_cmd, [&] { return cmd_validate(c); });

  auto* topology_cmd = app.add_subcommand("topology", "Report topology predicates");
  add_common(topology_cmd, c);
  bind(topology_cmd, [&] { return cmd_topology(c); });

  auto* grad_cmd = app.add_subcommand("grad", "Gradient of a potential");
  add_common(grad_cmd, c);
  grad_cmd->add_option("--potential", c.potential_path, "Potential file")
      ->required()
      ->check(CLI::ExistingFile);
  bind(grad_cmd, [&] { return cmd_grad(c); });

  auto* integrate_cmd = app.add_subcommand("integrate", "Discounted line integral");
  add_common(integrate_cmd, c);
  add_reward(integrate_cmd, c);
  integrate_cmd->add_option("--trajectory", c.trajectory_path, "Finite trajectory file")
      ->check(CLI::ExistingFile);
  integrate_cmd->add_option("--lasso", c.lasso_path, "Lasso trajectory file")
      ->check(CLI::ExistingFile);
  bind(integrate_cmd, [&] { return cmd_integrate(c); });

  auto* curl_cmd = app.add_subcommand("curl", "Curl over every diamond");
  add_common(curl_cmd, c);
  add_reward(curl_cmd, c);
  curl_cmd->add_option("--diamond-cap", c.diamond_cap, "Largest diamond count to materialize")
      ->check(CLI::PositiveNumber);
  curl_cmd->add_flag("--max-only", c.max_only, "Stream and report max |curl| only");
  bind(curl_cmd, [&] { return cmd_curl(c); });

  auto* div_cmd = app.add_subcommand("div", "Divergence of a reward");
  add_common(div_cmd, c);
  add_reward(div_cmd, c);
  bind(div_cmd, [&] { return cmd_div(c); });

  auto* laplacian_cmd = app.add_subcommand("laplacian", "Laplacian matrix and diagnostics");
  add_common(laplacian_cmd, c);
  bind(laplacian_cmd, [&] { return cmd_laplacian(c); });

  auto* decompose_cmd = app.add_subcommand("decompose", "Divergence-free plus gradient split");
  add_common(decompose_cmd, c);
  add_reward(decompose_cmd, c);
  bind(decompose_cmd, [&] { return cmd_decompose(c); });

  auto* canon_cmd = app.add_subcommand("canonicalize", "Divergence-free representative");
  add_common(canon_cmd, c);
  add_reward(canon_cmd, c);
  bind(canon_cmd, [&] { return cmd_canonicalize(c); });

  auto* distance_cmd = app.add_subcommand("distance", "Shaping-invariant distance of two rewards");
  add_common(distance_cmd, c);
  add_reward(distance_cmd, c);
  distance_cmd->add_flag("--normalize", c.normalize, "Divide canonical rewards by their norms");
  bind(distance_cmd, [&] { return cmd_distance(c); });

  auto* check_cmd = app.add_subcommand("check", "Mathematical property checks");
  check_cmd->require_subcommand(1);

  auto* conservative_cmd = check_cmd->add_subcommand("conservative", "Gradient of a bounded potential?");
  add_common(conservative_cmd, c);
  add_reward(conservative_cmd, c);
  conservative_cmd->add_option("--max-len", c.max_len, "Finite horizon")->check(CLI::PositiveNumber);
  conservative_cmd->add_option("--max-prefix", c.max_prefix, "Lasso prefix bound");
  conservative_cmd->add_option("--max-cycle", c.max_cycle, "Lasso cycle bound")
      ->check(CLI::PositiveNumber);
  bind(conservative_cmd, [&] { return cmd_check_conservative(c); });

  auto* finite_cmd = check_cmd->add_subcommand("finitely-conservative", "Equal finite integrals?");
  add_common(finite_cmd, c);
  add_reward(finite_cmd, c);
  finite_cmd->add_option("--max-len", c.max_len, "Longest trajectory length")
      ->check(CLI::PositiveNumber);
  bind(finite_cmd, [&] { return cmd_check_finite(c); });

  auto* curl_free_cmd = check_cmd->add_subcommand("curl-free", "Zero curl on every diamond?");
  add_common(curl_free_cmd, c);
  add_reward(curl_free_cmd, c);
  bind(curl_free_cmd, [&] { return cmd_check_curl_free(c); });

  auto* independent_cmd =
      check_cmd->add_subcommand("action-independent", "Reward ignores the action?");
  add_common(independent_cmd, c);
  add_reward(independent_cmd, c);
  bind(independent_cmd, [&] { return cmd_check_action_independent(c); });

  auto* optimality_cmd =
      check_cmd->add_subcommand("optimality", "Search for an optimality counterexample");
  add_common(optimality_cmd, c);
  add_reward(optimality_cmd, c);
  optimality_cmd->add_option("--budget", c.budget, "Dynamics to examine")->check(CLI::PositiveNumber);
  optimality_cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  optimality_cmd->add_option("--counterexample", c.counterexample_path,
                             "Write the counterexample dynamics here");
  bind(optimality_cmd, [&] { return cmd_check_optimality(c); });

  auto* construct_cmd =
      app.add_subcommand("construct-potential", "Shortest-path potential construction");
  add_common(construct_cmd, c);
  add_reward(construct_cmd, c);
  construct_cmd->add_option("--from", c.from_state, "Root state with a self-loop")->required();
  bind(construct_cmd, [&] { return cmd_construct_potential(c, err); });

  auto* qstar_cmd = app.add_subcommand("qstar", "Optimal action values under fixed dynamics");
  add_common(qstar_cmd, c);
  add_reward(qstar_cmd, c);
  qstar_cmd->add_option("--dynamics", c.dynamics_path, "Dynamics file")
      ->required()
      ->check(CLI::ExistingFile);
  bind(qstar_cmd, [&] { return cmd_qstar(c); });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (!action) {
    err << "error: no command given\n";
    return kUsage;
  }

  try {
    Outcome o = action();
    if (c.output.empty()) {
      out << o.text;
    } else {
      std::ofstream file(c.output);
      if (!file) throw InputError(c.output + ": cannot write output file");
      file << o.text;
    }
    return o.code;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace dcalc::cli
