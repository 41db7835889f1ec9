#include "dcalc/decompose.hpp"

#include <cmath>

#include "dcalc/error.hpp"

namespace dcalc {

Decomposer::Decomposer(TransitionGraph graph)
    : graph_(std::move(graph)), laplacian_(laplacian_matrix(graph_)) {
  if (laplacian_.invertible) {
    lu_.compute(laplacian_.entries);
  } else {
    svd_.compute(laplacian_.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd_.setThreshold(kRankThreshold);
  }
}

Potential Decomposer::solve(const Potential& rhs) const {
  const Eigen::VectorXd b = to_vector(rhs);
  Eigen::VectorXd x = laplacian_.invertible ? Eigen::VectorXd(lu_.solve(b))
                                            : Eigen::VectorXd(svd_.solve(b));
  if (!x.allFinite())
    throw NumericalError("laplacian solve produced non-finite values (rank " +
                         std::to_string(laplacian_.rank) + ", smallest singular value " +
                         std::to_string(laplacian_.smallest_singular_value) + ")");
  return to_potential(x);
}

Decomposition Decomposer::decompose(const Reward& r) const {
  check_domain(graph_, r);
  Decomposition d;
  d.laplacian_invertible = laplacian_.invertible;
  d.potential = solve(divergence(graph_, r));
  const Reward shaping = grad(graph_, d.potential);
  d.divergence_free = combine(1.0, r, -1.0, shaping);

  const Reward rebuilt = combine(1.0, d.divergence_free, 1.0, shaping);
  d.reconstruction_residual = norm(graph_, combine(1.0, r, -1.0, rebuilt));
  d.divergence_residual = norm(graph_, divergence(graph_, d.divergence_free));
  return d;
}

Reward Decomposer::canonicalize(const Reward& r) const { return decompose(r).divergence_free; }

double Decomposer::distance(const Reward& r1, const Reward& r2, bool normalize) const {
  Reward c1 = canonicalize(r1);
  Reward c2 = canonicalize(r2);
  if (normalize) {
    for (Reward* c : {&c1, &c2}) {
      const double n = norm(graph_, *c);
      if (n > 0.0) *c = combine(1.0 / n, *c, 0.0, *c);
    }
  }
  return norm(graph_, combine(1.0, c1, -1.0, c2));
}

Decomposition decompose(const TransitionGraph& graph, const Reward& r) {
  return Decomposer(graph).decompose(r);
}

Reward canonicalize(const TransitionGraph& graph, const Reward& r) {
  return Decomposer(graph).canonicalize(r);
}

double shaping_distance(const TransitionGraph& graph, const Reward& r1, const Reward& r2,
                        bool normalize) {
  return Decomposer(graph).distance(r1, r2, normalize);
}

}  // namespace dcalc
