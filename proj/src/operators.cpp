#include "dcalc/operators.hpp"

#include <algorithm>
#include <cmath>

#include "dcalc/error.hpp"

namespace dcalc {

Reward grad(const TransitionGraph& graph, const Potential& p) {
  check_domain(graph, p);
  const double gamma = graph.gamma();
  Reward out = Reward::zero(graph);
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t) {
    const auto& tr = graph.transition(t);
    out[t] = gamma * p[tr.dst] - p[tr.src];
  }
  return out;
}

double line_integral(const TransitionGraph& graph, const Reward& r, const Trajectory& t) {
  check_domain(graph, r);
  check_trajectory(graph, t);
  double sum = 0.0;
  double discount = 1.0;
  for (TransitionIndex step : t.steps) {
    sum += discount * r[step];
    discount *= graph.gamma();
  }
  return sum;
}

double line_integral(const TransitionGraph& graph, const Reward& r, const LassoTrajectory& t) {
  if (!(graph.gamma() < 1.0))
    throw InputError("lasso line integral requires gamma < 1 (the series diverges otherwise)");
  check_lasso(graph, t);
  const double gamma = graph.gamma();
  const double prefix = line_integral(graph, r, t.prefix);
  const double cycle = line_integral(graph, r, t.cycle);
  const double prefix_discount = std::pow(gamma, static_cast<double>(t.prefix.length()));
  const double cycle_discount = std::pow(gamma, static_cast<double>(t.cycle.length()));
  return prefix + prefix_discount * cycle / (1.0 - cycle_discount);
}

double curl_at(const TransitionGraph& graph, const Reward& r, const Diamond& d) {
  const double gamma = graph.gamma();
  return (r[d.first[0]] + gamma * r[d.first[1]]) - (r[d.second[0]] + gamma * r[d.second[1]]);
}

CurlField curl(const TransitionGraph& graph, const Reward& r, std::size_t cap) {
  check_domain(graph, r);
  CurlField field;
  field.diamonds = enumerate_diamonds(graph, cap);
  field.values.reserve(field.diamonds.size());
  for (const auto& d : field.diamonds) field.values.push_back(curl_at(graph, r, d));
  return field;
}

double max_abs_curl(const TransitionGraph& graph, const Reward& r) {
  check_domain(graph, r);
  double m = 0.0;
  for_each_diamond(graph, [&](const Diamond& d) { m = std::max(m, std::abs(curl_at(graph, r, d))); });
  return m;
}

Potential divergence(const TransitionGraph& graph, const Reward& r) {
  check_domain(graph, r);
  const double gamma = graph.gamma();
  Potential out = Potential::zero(graph);
  for (StateIndex s = 0; s < graph.num_states(); ++s) {
    double out_flow = 0.0;
    for (TransitionIndex t : graph.outgoing(s)) out_flow += graph.transition(t).weight * r[t];
    double in_flow = 0.0;
    for (TransitionIndex t : graph.incoming(s)) in_flow += graph.transition(t).weight * r[t];
    // A self-loop sits in both lists and nets (1 - gamma) w r.
    out[s] = (out_flow - gamma * in_flow) / graph.state_weight(s);
  }
  return out;
}

Potential laplacian_apply(const TransitionGraph& graph, const Potential& p) {
  return divergence(graph, grad(graph, p));
}

LaplacianMatrix laplacian_matrix(const TransitionGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.num_states());
  LaplacianMatrix m;
  m.entries = Eigen::MatrixXd::Zero(n, n);
  Potential indicator = Potential::zero(graph);
  for (Eigen::Index j = 0; j < n; ++j) {
    indicator[static_cast<StateIndex>(j)] = 1.0;
    m.entries.col(j) = to_vector(laplacian_apply(graph, indicator));
    indicator[static_cast<StateIndex>(j)] = 0.0;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.entries);
  const auto& sv = svd.singularValues();
  if (!sv.allFinite()) throw NumericalError("laplacian singular value decomposition failed");
  m.largest_singular_value = sv(0);
  m.smallest_singular_value = sv(n - 1);
  const double cutoff = kRankThreshold * m.largest_singular_value;
  for (Eigen::Index i = 0; i < n; ++i)
    if (sv(i) > cutoff) ++m.rank;
  m.invertible = m.largest_singular_value > 0.0 && m.smallest_singular_value > cutoff;
  return m;
}

Eigen::VectorXd to_vector(const Potential& p) {
  return Eigen::Map<const Eigen::VectorXd>(p.values.data(), static_cast<Eigen::Index>(p.size()));
}

Potential to_potential(const Eigen::VectorXd& v) {
  return Potential(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace dcalc
