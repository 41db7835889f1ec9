#pragma once

// Potentials (functions on states) and rewards (functions on the allowed
// transitions), with the weighted inner products
//   <p, q> = sum_s lambda(s) p(s) q(s),   <r, q> = sum_t w(t) r(t) q(t).

#include <vector>

#include "dcalc/graph.hpp"

namespace dcalc {

/// Values indexed by the graph's canonical state order.
struct Potential {
  std::vector<double> values;

  Potential() = default;
  explicit Potential(std::vector<double> v) : values(std::move(v)) {}
  static Potential zero(const TransitionGraph& graph) {
    return Potential(std::vector<double>(graph.num_states(), 0.0));
  }

  double operator[](StateIndex s) const { return values[s]; }
  double& operator[](StateIndex s) { return values[s]; }
  std::size_t size() const { return values.size(); }
};

/// Values indexed by the graph's canonical transition order.
struct Reward {
  std::vector<double> values;

  Reward() = default;
  explicit Reward(std::vector<double> v) : values(std::move(v)) {}
  static Reward zero(const TransitionGraph& graph) {
    return Reward(std::vector<double>(graph.num_transitions(), 0.0));
  }

  double operator[](TransitionIndex t) const { return values[t]; }
  double& operator[](TransitionIndex t) { return values[t]; }
  std::size_t size() const { return values.size(); }
};

/// Throw InputError unless the field is defined on exactly the graph's
/// states / transitions with finite values.
void check_domain(const TransitionGraph& graph, const Potential& p);
void check_domain(const TransitionGraph& graph, const Reward& r);

double inner_product(const TransitionGraph& graph, const Potential& p, const Potential& q);
double inner_product(const TransitionGraph& graph, const Reward& r, const Reward& q);

double norm(const TransitionGraph& graph, const Potential& p);
double norm(const TransitionGraph& graph, const Reward& r);

/// max_t |r(t)|
double sup_norm(const Reward& r);
double sup_norm(const Potential& p);

/// Pointwise a*r + b*q. Throws InputError on size mismatch.
Reward combine(double a, const Reward& r, double b, const Reward& q);
Potential combine(double a, const Potential& p, double b, const Potential& q);

}  // namespace dcalc
