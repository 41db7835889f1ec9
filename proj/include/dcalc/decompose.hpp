#pragma once

// Orthogonal decomposition r = r' + grad(phi) with div r' = 0, the canonical
// representative C(r) = r' of r's potential-shaping class, and the shaping
// invariant distance ||C(r1) - C(r2)||.

#include <memory>

#include <Eigen/Dense>

#include "dcalc/fields.hpp"
#include "dcalc/graph.hpp"
#include "dcalc/operators.hpp"

namespace dcalc {

struct Decomposition {
  Reward divergence_free;
  Potential potential;
  /// ||r - (divergence_free + grad potential)||, recomputed.
  double reconstruction_residual = 0.0;
  /// ||div divergence_free|| under the state-weighted norm, recomputed.
  double divergence_residual = 0.0;
  bool laplacian_invertible = false;
};

/// Holds the factorized Laplacian of one graph so that many rewards can be
/// decomposed against it. Immutable once constructed.
///
/// When the Laplacian is numerically nonsingular the potential is
/// laplacian^-1 (div r) from an LU solve. Otherwise it is the minimum-norm
/// least-squares solution from an SVD with relative cutoff kRankThreshold; the
/// divergence-free part is unique either way.
class Decomposer {
 public:
  explicit Decomposer(TransitionGraph graph);

  const TransitionGraph& graph() const { return graph_; }
  const LaplacianMatrix& laplacian() const { return laplacian_; }

  Decomposition decompose(const Reward& r) const;
  Reward canonicalize(const Reward& r) const;
  double distance(const Reward& r1, const Reward& r2, bool normalize = false) const;

 private:
  Potential solve(const Potential& rhs) const;

  TransitionGraph graph_;
  LaplacianMatrix laplacian_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_;
};

Decomposition decompose(const TransitionGraph& graph, const Reward& r);
Reward canonicalize(const TransitionGraph& graph, const Reward& r);

/// ||C(r1) - C(r2)|| under the transition-weighted norm. With `normalize`,
/// each canonical reward is first divided by its norm (zero stays zero).
double shaping_distance(const TransitionGraph& graph, const Reward& r1, const Reward& r2,
                        bool normalize = false);

}  // namespace dcalc
