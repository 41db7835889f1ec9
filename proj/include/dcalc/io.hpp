#pragma once

// JSON file formats.
//
//   graph:      {"gamma": g, "states": [{"id", "weight"?}], "actions": [..],
//                "transitions": [{"from", "action", "to", "weight"?}]}
//   potential:  {"values": {"s0": x, ...}}            keys = the state set
//   reward:     {"rewards": [{"from", "action", "to", "value"}]}   covers T once
//   trajectory: {"start": s?, "steps": [{"order", "from", "action", "to"}]}
//   lasso:      {"prefix": trajectory, "cycle": trajectory}
//   dynamics:   {"choices": [{"from", "action", "to"}], "initial_support": [..]?}
//
// Unknown keys are rejected everywhere. Object keys are written in sorted
// order and doubles in shortest round-trip form, so output is byte-stable and
// lossless.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "dcalc/analysis.hpp"
#include "dcalc/decompose.hpp"
#include "dcalc/fields.hpp"
#include "dcalc/graph.hpp"
#include "dcalc/operators.hpp"

namespace dcalc::io {

using Json = nlohmann::json;

/// Parses a file as JSON; InputError names the file on failure.
Json read_json_file(const std::filesystem::path& path);

GraphData parse_graph(const Json& j, const std::string& source = "graph");
TransitionGraph load_graph(const std::filesystem::path& path);
Json graph_to_json(const TransitionGraph& graph);

Potential parse_potential(const TransitionGraph& graph, const Json& j,
                          const std::string& source = "potential");
Json potential_to_json(const TransitionGraph& graph, const Potential& p);

Reward parse_reward(const TransitionGraph& graph, const Json& j,
                    const std::string& source = "reward");
Json reward_to_json(const TransitionGraph& graph, const Reward& r);

Trajectory parse_trajectory(const TransitionGraph& graph, const Json& j,
                            const std::string& source = "trajectory");
Json trajectory_to_json(const TransitionGraph& graph, const Trajectory& t);

LassoTrajectory parse_lasso(const TransitionGraph& graph, const Json& j,
                            const std::string& source = "lasso");
Json lasso_to_json(const TransitionGraph& graph, const LassoTrajectory& t);

DeterministicDynamics parse_dynamics(const TransitionGraph& graph, const Json& j,
                                     const std::string& source = "dynamics");
Json dynamics_to_json(const TransitionGraph& graph, const DeterministicDynamics& d);

Json transition_to_json(const TransitionGraph& graph, TransitionIndex t);
Json curl_to_json(const TransitionGraph& graph, const CurlField& curl);
Json laplacian_to_json(const TransitionGraph& graph, const LaplacianMatrix& m);
Json decomposition_to_json(const TransitionGraph& graph, const Decomposition& d);
Json topology_to_json(const TransitionGraph& graph, const TopologyReport& report);
Json q_star_to_json(const TransitionGraph& graph, const std::vector<QEntry>& q);
Json verdict_to_json(const TransitionGraph& graph, const ConservativenessVerdict& v);
Json verdict_to_json(const TransitionGraph& graph, const OptimalityVerdict& v);

/// Fixed-point with 12 fractional digits; negative zero prints unsigned.
std::string format_number(double x);

/// Canonical text serialization: 2-space indent, trailing newline.
std::string dump(const Json& j);

}  // namespace dcalc::io
