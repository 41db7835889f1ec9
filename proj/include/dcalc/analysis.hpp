#pragma once

// Conservativeness, potential reconstruction, and optimality-preservation
// checks for reward functions on a transition graph.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "dcalc/fields.hpp"
#include "dcalc/graph.hpp"
#include "dcalc/tolerance.hpp"

namespace dcalc {

// ---------------------------------------------------------------------------
// Action independence

struct ActionIndependence {
  bool independent = true;
  /// Two transitions (s, a, s'), (s, a', s') whose rewards differ.
  std::optional<std::pair<TransitionIndex, TransitionIndex>> witness;
};

ActionIndependence is_action_independent(const TransitionGraph& graph, const Reward& r,
                                         const Tolerance& tol = {});

// ---------------------------------------------------------------------------
// Conservativeness

struct PotentialSolve {
  Potential potential;
  /// ||grad potential - r|| under the transition-weighted norm.
  double residual = 0.0;
  /// residual <= tol.bound(||r||): r lies in the image of grad.
  bool certified = false;
};

/// Weighted least squares: minimize ||grad phi - r|| over phi, taking the
/// minimum-norm minimizer when it is not unique.
PotentialSolve solve_potential(const TransitionGraph& graph, const Reward& r,
                               const Tolerance& tol = {});

struct TrajectoryWitness {
  Trajectory first;
  Trajectory second;
  double first_integral = 0.0;
  double second_integral = 0.0;
};

struct LassoWitness {
  LassoTrajectory first;
  LassoTrajectory second;
  double first_integral = 0.0;
  double second_integral = 0.0;
};

struct FiniteConservativeness {
  bool holds = true;
  /// Longest trajectory length examined.
  std::size_t max_len = 0;
  /// Two trajectories with equal start, end and length but different integrals.
  std::optional<TrajectoryWitness> witness;
};

/// Exact check over every pair of trajectories of length <= max_len sharing
/// start, end and length. Runs a per-length dynamic program: once all
/// trajectories of length L into each state agree, every trajectory of length
/// L + 1 into s' is some representative of length L followed by one step, so
/// only those extensions need comparing.
FiniteConservativeness check_finitely_conservative(const TransitionGraph& graph, const Reward& r,
                                                   std::size_t max_len,
                                                   const Tolerance& tol = {});

enum class ConservativenessKind { conservative, finitely_conservative_only, not_finitely_conservative };

const char* to_string(ConservativenessKind kind);

struct ConservativenessVerdict {
  ConservativenessKind kind = ConservativenessKind::conservative;
  /// Set when kind == conservative.
  std::optional<Potential> potential;
  double residual = 0.0;
  /// Finite-horizon witness (kind == not_finitely_conservative).
  std::optional<TrajectoryWitness> finite_witness;
  /// Two lassos from a common start with different infinite integrals.
  std::optional<LassoWitness> lasso_witness;
  /// Lassos evaluated by the witness search.
  std::uint64_t lassos_examined = 0;
};

struct ConservativeCheckOptions {
  std::size_t max_len = 6;
  std::size_t max_prefix = 4;
  std::size_t max_cycle = 4;
  std::uint64_t lasso_cap = 1'000'000;
  Tolerance tol{};
};

/// Requires gamma < 1. The residual test of solve_potential decides the
/// verdict; the bounded lasso search only furnishes a witness.
ConservativenessVerdict check_conservative(const TransitionGraph& graph, const Reward& r,
                                           const ConservativeCheckOptions& options = {});

/// First pair of lassos (in canonical order, grouped by start state) whose
/// integrals differ beyond `tol`.
std::optional<LassoWitness> find_lasso_witness(const TransitionGraph& graph, const Reward& r,
                                               std::size_t max_prefix, std::size_t max_cycle,
                                               std::uint64_t cap, const Tolerance& tol,
                                               std::uint64_t* examined = nullptr);

struct ShortestPathPotential {
  Potential potential;
  /// Largest shortest-path distance from s0.
  std::size_t depth = 0;
  /// ||grad potential - r||.
  double residual = 0.0;
  /// False when grad potential != r, i.e. r was not finitely conservative.
  bool consistent = true;
};

/// phi(s) = gamma^-|tau_s| (integral over tau_s + r(s0, s0) / (gamma - 1)),
/// tau_s a shortest trajectory from s0 (breadth first, lexicographic
/// tie-break). Requires 0 < gamma < 1, a self-loop at s0, and every state
/// reachable from s0.
ShortestPathPotential construct_potential_shortest_path(const TransitionGraph& graph,
                                                        const Reward& r, StateIndex s0,
                                                        const Tolerance& tol = {});

// ---------------------------------------------------------------------------
// Optimal values under deterministic dynamics

struct QEntry {
  StateIndex state;
  ActionIndex action;
  double value;
};

/// Q*(s, a) for every decision slot, in slot order. Value iteration until the
/// sup-norm change is <= 1e-12, with the analytic iteration bound as a
/// backstop. Requires gamma < 1.
std::vector<QEntry> q_star(const TransitionGraph& graph, const DeterministicDynamics& dyn,
                           const Reward& r);

inline constexpr double kQGapTolerance = 1e-8;

struct AllPoliciesOptimal {
  bool optimal = true;
  /// max over reachable s of (max_a Q* - min_a Q*).
  double gap = 0.0;
  /// State attaining the gap with its best and worst actions.
  std::optional<StateIndex> state;
  ActionIndex best_action = 0;
  ActionIndex worst_action = 0;
};

AllPoliciesOptimal all_policies_optimal(const TransitionGraph& graph,
                                        const DeterministicDynamics& dyn, const Reward& f,
                                        double gap_tol = kQGapTolerance);

/// States reachable from the dynamics' initial support following the chosen
/// successor of every action.
std::vector<StateIndex> reachable_states(const TransitionGraph& graph,
                                         const DeterministicDynamics& dyn);

struct OptimalityCounterexample {
  DeterministicDynamics dynamics;
  std::uint64_t index = 0;
  StateIndex state = 0;
  ActionIndex best_action = 0;
  ActionIndex worst_action = 0;
  double gap = 0.0;
};

struct OptimalityVerdict {
  bool counterexample_found = false;
  std::optional<OptimalityCounterexample> counterexample;
  std::uint64_t dynamics_checked = 0;
  std::uint64_t dynamics_total = 0;
  /// Largest Q*-gap seen over all dynamics checked.
  double max_gap = 0.0;
};

/// Searches deterministic compatible dynamics (full initial support) for one
/// under which some reachable state has a Q*-gap above `gap_tol` for f.
/// Stops at `budget` dynamics. With threads > 1 dynamics are split across
/// workers; the reported counterexample is always the first in enumeration
/// order. Requires gamma < 1.
OptimalityVerdict check_optimality_preserving(const TransitionGraph& graph, const Reward& f,
                                              std::uint64_t budget = kDefaultDynamicsBudget,
                                              unsigned threads = 1,
                                              double gap_tol = kQGapTolerance);

}  // namespace dcalc
