#pragma once

// Discounted differential operators on a transition graph.
//
//   (grad p)(s, a, s') = gamma p(s') - p(s)
//   integral over tau  = sum_t gamma^t r(s_t, a_t, s_{t+1})
//   (curl r)(d1, d2)   = integral over d1 - integral over d2
//   (div r)(s)         = (sum_out w r - gamma sum_in w r) / lambda(s)
//   laplacian          = div . grad
//
// div is the negative adjoint of grad under the weighted inner products.
// Summation always runs in canonical index order, so results do not depend
// on evaluation order.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "dcalc/fields.hpp"
#include "dcalc/graph.hpp"

namespace dcalc {

Reward grad(const TransitionGraph& graph, const Potential& p);

/// Discounted return of a finite trajectory.
double line_integral(const TransitionGraph& graph, const Reward& r, const Trajectory& t);

/// Closed form of the infinite integral over prefix . cycle^infinity.
/// Requires gamma < 1.
double line_integral(const TransitionGraph& graph, const Reward& r, const LassoTrajectory& t);

struct CurlField {
  std::vector<Diamond> diamonds;
  std::vector<double> values;
};

/// Curl over every diamond, in canonical diamond order. Throws CapExceeded
/// beyond `cap` diamonds; use max_abs_curl() there.
CurlField curl(const TransitionGraph& graph, const Reward& r,
               std::size_t cap = kDefaultDiamondCap);

/// Curl of a single diamond.
double curl_at(const TransitionGraph& graph, const Reward& r, const Diamond& d);

/// max |curl r| over all diamonds, streaming (no cap).
double max_abs_curl(const TransitionGraph& graph, const Reward& r);

Potential divergence(const TransitionGraph& graph, const Reward& r);

Potential laplacian_apply(const TransitionGraph& graph, const Potential& p);

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankThreshold = 1e-10;

struct LaplacianMatrix {
  /// Rows and columns follow the canonical state order.
  Eigen::MatrixXd entries;
  std::size_t rank = 0;
  double smallest_singular_value = 0.0;
  double largest_singular_value = 0.0;
  bool invertible = false;
};

/// Column j is laplacian_apply of the j-th state indicator.
LaplacianMatrix laplacian_matrix(const TransitionGraph& graph);

Eigen::VectorXd to_vector(const Potential& p);
Potential to_potential(const Eigen::VectorXd& v);

}  // namespace dcalc
