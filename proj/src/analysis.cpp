#include "dcalc/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

#include "dcalc/error.hpp"
#include "dcalc/operators.hpp"

namespace dcalc {

namespace {

void require_discounted(const TransitionGraph& graph, const char* op) {
  if (!(graph.gamma() < 1.0))
    throw InputError(std::string(op) + " requires gamma < 1 (got gamma = 1)");
}

}  // namespace

ActionIndependence is_action_independent(const TransitionGraph& graph, const Reward& r,
                                          const Tolerance& tol) {
  check_domain(graph, r);
  ActionIndependence result;
  // Transitions sharing (src, dst): the first one seen is the reference.
  std::map<std::pair<StateIndex, StateIndex>, TransitionIndex> first;
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
    const auto& tr = graph.transition(t);
    auto [it, inserted] = first.emplace(std::pair{tr.src, tr.dst}, t);
    if (!inserted && !tol.close(r[it->second], r[t])) {
      result.independent = false;
      result.witness = std::pair{it->second, t};
      return result;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

PotentialSolve solve_potential(const TransitionGraph& graph, const Reward& r,
                               const Tolerance& tol) {
  check_domain(graph, r);
  const auto rows = static_cast<Eigen::Index>(graph.num_transitions());
  const auto cols = static_cast<Eigen::Index>(graph.num_states());
  const double gamma = graph.gamma();

  // Rows of sqrt(W) * G where (G phi)(t) = gamma phi(dst) - phi(src).
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& tr = graph.transition(static_cast<TransitionIndex>(i));
    const double sw = std::sqrt(tr.weight);
    design(i, static_cast<Eigen::Index>(tr.dst)) += sw * gamma;
    design(i, static_cast<Eigen::Index>(tr.src)) -= sw;
    rhs(i) = sw * r[static_cast<TransitionIndex>(i)];
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::VectorXd phi = cod.solve(rhs);
  if (!phi.allFinite()) throw NumericalError("least-squares potential solve failed");

  PotentialSolve result;
  result.potential = to_potential(phi);
  result.residual = norm(graph, combine(1.0, grad(graph, result.potential), -1.0, r));
  result.certified = result.residual <= tol.bound(norm(graph, r));
  return result;
}

// ---------------------------------------------------------------------------

FiniteConservativeness check_finitely_conservative(const TransitionGraph& graph, const Reward& r,
                                                   std::size_t max_len, const Tolerance& tol) {
  check_domain(graph, r);
  if (max_len == 0) throw InputError("max_len must be at least 1");

  struct Representative {
    double value;
    Trajectory path;
  };
  FiniteConservativeness result;
  result.max_len = max_len;

  for (StateIndex start = 0; start < graph.num_states(); ++start) {
    std::vector<std::optional<Representative>> current(graph.num_states());
    current[start] = Representative{0.0, Trajectory{start, {}}};
    double discount = 1.0;
    for (std::size_t len = 0; len < max_len; ++len) {
      std::vector<std::optional<Representative>> next(graph.num_states());
      for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
        const auto& tr = graph.transition(t);
        if (!current[tr.src]) continue;
        const double value = current[tr.src]->value + discount * r[t];
        auto& slot = next[tr.dst];
        if (!slot) {
          Trajectory path = current[tr.src]->path;
          path.steps.push_back(t);
          slot = Representative{value, std::move(path)};
        } else if (!tol.close(slot->value, value)) {
          Trajectory other = current[tr.src]->path;
          other.steps.push_back(t);
          result.holds = false;
          result.witness = TrajectoryWitness{slot->path, std::move(other), slot->value, value};
          return result;
        }
      }
      current = std::move(next);
      discount *= graph.gamma();
    }
  }
  return result;
}

const char* to_string(ConservativenessKind kind) {
  switch (kind) {
    case ConservativenessKind::conservative:
      return "conservative";
    case ConservativenessKind::finitely_conservative_only:
      return "finitely_conservative_only";
    case ConservativenessKind::not_finitely_conservative:
      return "not_finitely_conservative";
  }
  return "unknown";
}

std::optional<LassoWitness> find_lasso_witness(const TransitionGraph& graph, const Reward& r,
                                               std::size_t max_prefix, std::size_t max_cycle,
                                               std::uint64_t cap, const Tolerance& tol,
                                               std::uint64_t* examined) {
  require_discounted(graph, "lasso witness search");
  check_domain(graph, r);
  std::uint64_t count = 0;
  std::map<std::pair<StateIndex, std::size_t>, std::vector<Trajectory>> cycles;
  auto cycles_at = [&](StateIndex x, std::size_t len) -> const std::vector<Trajectory>& {
    auto it = cycles.find({x, len});
    if (it != cycles.end()) return it->second;
    std::vector<Trajectory> closed;
    if (count_trajectories(graph, x, len) <= cap - count)
      for (auto& t : enumerate_trajectories(graph, x, len, cap))
        if (t.end(graph) == x) closed.push_back(std::move(t));
    return cycles.emplace(std::pair{x, len}, std::move(closed)).first->second;
  };

  std::optional<LassoWitness> witness;
  for (StateIndex start = 0; start < graph.num_states() && !witness; ++start) {
    std::optional<std::pair<LassoTrajectory, double>> reference;
    for (std::size_t p = 0; p <= max_prefix && !witness && count < cap; ++p) {
      if (count_trajectories(graph, start, p) > cap - count) break;
      for (const auto& prefix : enumerate_trajectories(graph, start, p, cap)) {
        const StateIndex x = prefix.end(graph);
        for (std::size_t c = 1; c <= max_cycle && !witness && count < cap; ++c) {
          for (const auto& cycle : cycles_at(x, c)) {
            if (count >= cap) break;
            ++count;
            LassoTrajectory lasso{prefix, cycle};
            const double value = line_integral(graph, r, lasso);
            if (!reference) {
              reference.emplace(std::move(lasso), value);
            } else if (!tol.close(reference->second, value)) {
              witness = LassoWitness{reference->first, std::move(lasso), reference->second, value};
              break;
            }
          }
        }
        if (witness || count >= cap) break;
      }
    }
  }
  if (examined) *examined = count;
  return witness;
}

ConservativenessVerdict check_conservative(const TransitionGraph& graph, const Reward& r,
                                           const ConservativeCheckOptions& options) {
  require_discounted(graph, "check_conservative");
  ConservativenessVerdict verdict;
  auto solved = solve_potential(graph, r, options.tol);
  verdict.residual = solved.residual;
  if (solved.certified) {
    verdict.kind = ConservativenessKind::conservative;
    verdict.potential = std::move(solved.potential);
    return verdict;
  }

  auto finite = check_finitely_conservative(graph, r, options.max_len, options.tol);
  if (finite.holds) {
    verdict.kind = ConservativenessKind::finitely_conservative_only;
  } else {
    verdict.kind = ConservativenessKind::not_finitely_conservative;
    verdict.finite_witness = std::move(finite.witness);
  }
  verdict.lasso_witness = find_lasso_witness(graph, r, options.max_prefix, options.max_cycle,
                                             options.lasso_cap, options.tol,
                                             &verdict.lassos_examined);
  return verdict;
}

// ---------------------------------------------------------------------------

ShortestPathPotential construct_potential_shortest_path(const TransitionGraph& graph,
                                                        const Reward& r, StateIndex s0,
                                                        const Tolerance& tol) {
  check_domain(graph, r);
  const double gamma = graph.gamma();
  if (!(gamma > 0.0 && gamma < 1.0))
    throw InputError("shortest-path potential construction requires 0 < gamma < 1");
  if (s0 >= graph.num_states()) throw InputError("unknown start state");

  std::optional<TransitionIndex> self_loop;
  for (TransitionIndex t : graph.outgoing(s0))
    if (graph.transition(t).dst == s0) {
      self_loop = t;
      break;
    }
  if (!self_loop)
    throw InputError("state " + graph.state_label(s0) + " has no self-loop");

  const std::size_t n = graph.num_states();
  std::vector<std::optional<std::size_t>> depth(n);
  std::vector<double> integral(n, 0.0);
  depth[s0] = 0;
  std::vector<StateIndex> frontier{s0};
  std::size_t level = 0;
  double discount = 1.0;
  while (!frontier.empty()) {
    std::sort(frontier.begin(), frontier.end());
    std::vector<StateIndex> next;
    for (StateIndex u : frontier)
      for (TransitionIndex t : graph.outgoing(u)) {
        const StateIndex v = graph.transition(t).dst;
        if (depth[v]) continue;
        depth[v] = level + 1;
        integral[v] = integral[u] + discount * r[t];
        next.push_back(v);
      }
    frontier = std::move(next);
    ++level;
    discount *= gamma;
  }

  ShortestPathPotential result;
  result.potential = Potential::zero(graph);
  const double base = r[*self_loop] / (gamma - 1.0);
  for (StateIndex s = 0; s < n; ++s) {
    if (!depth[s])
      throw InputError("state " + graph.state_label(s) + " is not reachable from " +
                       graph.state_label(s0));
    result.depth = std::max(result.depth, *depth[s]);
    result.potential[s] =
        (integral[s] + base) / std::pow(gamma, static_cast<double>(*depth[s]));
  }
  result.residual = norm(graph, combine(1.0, grad(graph, result.potential), -1.0, r));
  result.consistent = result.residual <= tol.bound(norm(graph, r));
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kValueIterationTolerance = 1e-12;

std::size_t value_iteration_bound(double gamma, double reward_bound) {
  if (reward_bound == 0.0 || gamma == 0.0) return 1;
  const double target = kValueIterationTolerance * (1.0 - gamma) / reward_bound;
  if (target >= 1.0) return 1;
  return static_cast<std::size_t>(std::ceil(std::log(target) / std::log(gamma))) + 1;
}

// Q values per chosen transition (slot order). No validation; callers check.
std::vector<double> q_values(const TransitionGraph& graph, const DeterministicDynamics& dyn,
                             const Reward& r) {
  const double gamma = graph.gamma();
  const std::size_t n = graph.num_states();
  const auto bound = value_iteration_bound(gamma, sup_norm(r));
  std::vector<double> v(n, 0.0), next(n);
  for (std::size_t iter = 0; iter < bound; ++iter) {
    std::fill(next.begin(), next.end(), -std::numeric_limits<double>::infinity());
    for (TransitionIndex t : dyn.chosen) {
      const auto& tr = graph.transition(t);
      next[tr.src] = std::max(next[tr.src], r[t] + gamma * v[tr.dst]);
    }
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) change = std::max(change, std::abs(next[s] - v[s]));
    v.swap(next);
    if (change <= kValueIterationTolerance) break;
  }
  std::vector<double> q;
  q.reserve(dyn.chosen.size());
  for (TransitionIndex t : dyn.chosen) q.push_back(r[t] + gamma * v[graph.transition(t).dst]);
  return q;
}

std::vector<StateIndex> reachable_unchecked(const TransitionGraph& graph,
                                            const DeterministicDynamics& dyn) {
  std::vector<std::vector<StateIndex>> succ(graph.num_states());
  for (TransitionIndex t : dyn.chosen) succ[graph.transition(t).src].push_back(graph.transition(t).dst);
  std::vector<char> seen(graph.num_states(), 0);
  std::vector<StateIndex> stack;
  for (StateIndex s : dyn.initial_support)
    if (!seen[s]) {
      seen[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    StateIndex u = stack.back();
    stack.pop_back();
    for (StateIndex v : succ[u])
      if (!seen[v]) {
        seen[v] = 1;
        stack.push_back(v);
      }
  }
  std::vector<StateIndex> out;
  for (StateIndex s = 0; s < graph.num_states(); ++s)
    if (seen[s]) out.push_back(s);
  return out;
}

AllPoliciesOptimal gap_unchecked(const TransitionGraph& graph, const DeterministicDynamics& dyn,
                                 const Reward& f, double gap_tol) {
  const auto q = q_values(graph, dyn, f);
  const std::size_t n = graph.num_states();
  std::vector<std::optional<std::size_t>> best(n), worst(n);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const StateIndex s = graph.transition(dyn.chosen[i]).src;
    if (!best[s] || q[i] > q[*best[s]]) best[s] = i;
    if (!worst[s] || q[i] < q[*worst[s]]) worst[s] = i;
  }
  AllPoliciesOptimal result;
  for (StateIndex s : reachable_unchecked(graph, dyn)) {
    const double gap = q[*best[s]] - q[*worst[s]];
    if (gap > result.gap || !result.state) {
      result.gap = gap;
      result.state = s;
      result.best_action = graph.transition(dyn.chosen[*best[s]]).action;
      result.worst_action = graph.transition(dyn.chosen[*worst[s]]).action;
    }
  }
  result.optimal = result.gap <= gap_tol;
  return result;
}

void check_dynamics(const TransitionGraph& graph, const DeterministicDynamics& dyn) {
  std::vector<TransitionIndex> copy = dyn.chosen;
  make_dynamics(graph, std::move(copy), dyn.initial_support);
}

}  // namespace

std::vector<QEntry> q_star(const TransitionGraph& graph, const DeterministicDynamics& dyn,
                           const Reward& r) {
  require_discounted(graph, "q_star");
  check_domain(graph, r);
  check_dynamics(graph, dyn);
  const auto q = q_values(graph, dyn, r);
  std::vector<QEntry> out;
  out.reserve(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const auto& tr = graph.transition(dyn.chosen[i]);
    out.push_back({tr.src, tr.action, q[i]});
  }
  return out;
}

std::vector<StateIndex> reachable_states(const TransitionGraph& graph,
                                         const DeterministicDynamics& dyn) {
  check_dynamics(graph, dyn);
  return reachable_unchecked(graph, dyn);
}

AllPoliciesOptimal all_policies_optimal(const TransitionGraph& graph,
                                        const DeterministicDynamics& dyn, const Reward& f,
                                        double gap_tol) {
  require_discounted(graph, "all_policies_optimal");
  check_domain(graph, f);
  check_dynamics(graph, dyn);
  return gap_unchecked(graph, dyn, f, gap_tol);
}

OptimalityVerdict check_optimality_preserving(const TransitionGraph& graph, const Reward& f,
                                              std::uint64_t budget, unsigned threads,
                                              double gap_tol) {
  require_discounted(graph, "check_optimality_preserving");
  check_domain(graph, f);
  const DynamicsEnumerator dynamics(graph, budget);
  const std::uint64_t limit = dynamics.limit();

  // Work is split into chunks claimed in index order. A chunk stops at its
  // first counterexample, so the chunk summaries up to the globally first
  // counterexample cover exactly the indices before it.
  constexpr std::uint64_t kChunk = 256;
  const std::uint64_t num_chunks = (limit + kChunk - 1) / kChunk;
  struct ChunkResult {
    double max_gap = 0.0;
    std::optional<OptimalityCounterexample> counterexample;
  };
  std::map<std::uint64_t, ChunkResult> results;
  std::mutex mutex;
  std::atomic<std::uint64_t> next_chunk{0};
  std::atomic<std::uint64_t> first_hit{std::numeric_limits<std::uint64_t>::max()};

  auto worker = [&] {
    for (;;) {
      const std::uint64_t chunk = next_chunk.fetch_add(1);
      if (chunk >= num_chunks || chunk * kChunk > first_hit.load()) return;
      ChunkResult local;
      const std::uint64_t end = std::min(limit, (chunk + 1) * kChunk);
      for (std::uint64_t i = chunk * kChunk; i < end; ++i) {
        auto dyn = dynamics.at(i);
        const auto check = gap_unchecked(graph, dyn, f, gap_tol);
        local.max_gap = std::max(local.max_gap, check.gap);
        if (!check.optimal) {
          local.counterexample = OptimalityCounterexample{std::move(dyn), i, *check.state,
                                                          check.best_action, check.worst_action,
                                                          check.gap};
          std::uint64_t seen = first_hit.load();
          while (i < seen && !first_hit.compare_exchange_weak(seen, i)) {
          }
          break;
        }
      }
      std::lock_guard lock(mutex);
      results.emplace(chunk, std::move(local));
    }
  };

  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  OptimalityVerdict verdict;
  verdict.dynamics_total = dynamics.total();
  verdict.dynamics_checked = limit;
  for (auto& [chunk, result] : results) {
    verdict.max_gap = std::max(verdict.max_gap, result.max_gap);
    if (result.counterexample) {
      verdict.counterexample_found = true;
      verdict.dynamics_checked = result.counterexample->index + 1;
      verdict.counterexample = std::move(result.counterexample);
      break;
    }
  }
  return verdict;
}

}  // namespace dcalc
