#include "dcalc/fields.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcalc/error.hpp"

namespace dcalc {

namespace {

void check_finite(const std::vector<double>& values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i]))
      throw InputError(std::string(what) + " value at index " + std::to_string(i) +
                       " is not finite");
}

}  // namespace

void check_domain(const TransitionGraph& graph, const Potential& p) {
  if (p.size() != graph.num_states())
    throw InputError("potential has " + std::to_string(p.size()) + " values but the graph has " +
                     std::to_string(graph.num_states()) + " states");
  check_finite(p.values, "potential");
}

void check_domain(const TransitionGraph& graph, const Reward& r) {
  if (r.size() != graph.num_transitions())
    throw InputError("reward has " + std::to_string(r.size()) + " values but the graph has " +
                     std::to_string(graph.num_transitions()) + " transitions");
  check_finite(r.values, "reward");
}

double inner_product(const TransitionGraph& graph, const Potential& p, const Potential& q) {
  check_domain(graph, p);
  check_domain(graph, q);
  double sum = 0.0;
  for (StateIndex s = 0; s < graph.num_states(); ++s) sum += graph.state_weight(s) * p[s] * q[s];
  return sum;
}

double inner_product(const TransitionGraph& graph, const Reward& r, const Reward& q) {
  check_domain(graph, r);
  check_domain(graph, q);
  double sum = 0.0;
  for (TransitionIndex t = 0; t < graph.num_transitions(); ++t)
    sum += graph.transition(t).weight * r[t] * q[t];
  return sum;
}

double norm(const TransitionGraph& graph, const Potential& p) {
  return std::sqrt(inner_product(graph, p, p));
}

double norm(const TransitionGraph& graph, const Reward& r) {
  return std::sqrt(inner_product(graph, r, r));
}

double sup_norm(const Reward& r) {
  double m = 0.0;
  for (double v : r.values) m = std::max(m, std::abs(v));
  return m;
}

double sup_norm(const Potential& p) {
  double m = 0.0;
  for (double v : p.values) m = std::max(m, std::abs(v));
  return m;
}

Reward combine(double a, const Reward& r, double b, const Reward& q) {
  if (r.size() != q.size()) throw InputError("reward_combine: rewards live on different domains");
  Reward out(std::vector<double>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = a * r[i] + b * q[i];
  return out;
}

Potential combine(double a, const Potential& p, double b, const Potential& q) {
  if (p.size() != q.size())
    throw InputError("potential combine: potentials live on different domains");
  Potential out(std::vector<double>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = a * p[i] + b * q[i];
  return out;
}

}  // namespace dcalc
