#pragma once

// Hand-built networks shared by the unit tests and the acceptance suite.

#include "ofo/network.hpp"
#include "ofo/types.hpp"

#include <random>
#include <set>
#include <vector>

namespace ofo::test {

/// Tree given by parent[j] for buses 1..n (parent[0] unused), impedances in
/// pu, every bus with a symmetric DER box of half-width `q_cap`.
inline RadialNetwork tree_network(const std::vector<std::size_t>& parent, const std::vector<double>& r,
                                  const std::vector<double>& x, double q_cap = 1.0) {
  RadialNetwork net;
  net.buses.push_back({BusId(0), 0.0, 0.0});
  for (std::size_t j = 1; j < parent.size(); ++j) {
    net.buses.push_back({BusId(j), 0.0, 0.0});
    net.cables.push_back({BusId(parent[j]), BusId(j), r[j], x[j]});
    net.ders[BusId(j)] = DerSpec{BusId(j), -q_cap, q_cap, 1.0, 0.0};
  }
  return net;
}

inline std::vector<std::size_t> random_parents(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> parent(n + 1, 0);
  for (std::size_t j = 2; j <= n; ++j) parent[j] = std::uniform_int_distribution<std::size_t>(0, j - 1)(rng);
  return parent;
}

inline RadialNetwork random_tree(std::mt19937_64& rng, std::size_t n, double lo = 0.005, double hi = 0.05) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> r(n + 1), x(n + 1);
  for (std::size_t j = 1; j <= n; ++j) {
    r[j] = u(rng);
    x[j] = u(rng);
  }
  return tree_network(random_parents(rng, n), r, x);
}

/// Set of cables (by child bus) on the path from the root to `bus`.
inline std::set<std::size_t> path_set(const std::vector<std::size_t>& parent, std::size_t bus) {
  std::set<std::size_t> s;
  for (std::size_t j = bus; j != 0; j = parent[j]) s.insert(j);
  return s;
}

inline std::vector<std::size_t> parents_of(const RadialNetwork& net) {
  std::vector<std::size_t> parent(net.buses.size(), 0);
  for (const Cable& c : net.cables) parent[c.to.value] = c.from.value;
  return parent;
}

/// X by explicit path-intersection enumeration.
inline Matrix x_by_paths(const RadialNetwork& net) {
  const auto parent = parents_of(net);
  std::vector<double> x(net.buses.size(), 0.0);
  for (const Cable& c : net.cables) x[c.to.value] = c.reactance;
  const auto n = static_cast<Eigen::Index>(net.buses.size()) - 1;
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto a = path_set(parent, static_cast<std::size_t>(i + 1));
      const auto b = path_set(parent, static_cast<std::size_t>(j + 1));
      double s = 0.0;
      for (std::size_t k : a)
        if (b.count(k)) s += x[k];
      out(i, j) = s;
    }
  return out;
}

}  // namespace ofo::test

#include "ofo/feeder_generator.hpp"
#include "ofo/power_flow.hpp"
#include "ofo/scenario.hpp"
#include "ofo/sensitivity.hpp"

#include <stdexcept>

namespace ofo::test {

/// The calibrated static overvoltage case: 10-bus chain-heavy feeder at 80%
/// of rated PV. Without control the end of the feeder sits near 1.08 pu.
struct StaticCase {
  RadialNetwork net;
  Disturbance disturbance;
};

inline StaticCase static_case() {
  StaticCase c;
  c.net = generate_synthetic_feeder(1, 10, Branching::ChainHeavy);
  c.disturbance = {0.8 * c.net.p_rated() - c.net.base_p_demand(), c.net.base_q_demand()};
  return c;
}

/// min 1/2 q'Cq  s.t.  v_min <= X q + offset <= v_max,  q in box,
/// by projected gradient ascent on the dual (lambda, mu) >= 0. For fixed
/// duals the primal minimizer is separable: q = clip(-(X (lambda - mu)) / c).
inline Vector linear_qp(const Matrix& x, const Vector& c, const Box& box, const Vector& offset, double v_min,
                        double v_max, double tol = 1e-12) {
  const auto n = c.size();
  const double lmax = max_eigenvalue(x);
  const double step = c.minCoeff() / (2.0 * lmax * lmax);
  Vector lambda = Vector::Zero(n), mu = Vector::Zero(n);
  auto primal = [&](const Vector& l, const Vector& m) {
    return Vector((-(x * (l - m)).array() / c.array()).max(box.lower.array()).min(box.upper.array()));
  };
  for (long it = 0; it < 50'000'000; ++it) {
    const Vector q = primal(lambda, mu);
    const Vector v = x * q + offset;
    const Vector l2 = (lambda.array() + step * (v.array() - v_max)).max(0.0);
    const Vector m2 = (mu.array() + step * (v_min - v.array())).max(0.0);
    const double change = std::max((l2 - lambda).cwiseAbs().maxCoeff(), (m2 - mu).cwiseAbs().maxCoeff());
    lambda = l2;
    mu = m2;
    if (change <= tol * step) return primal(lambda, mu);
  }
  throw std::runtime_error("linear_qp did not converge");
}

/// Optimal reactive setpoints of the voltage-regulation QP for the AC plant:
/// the linear model's offset is re-anchored at the AC solution until the
/// setpoints stop moving, so the voltage constraints hold on the AC plant
/// with X as the sensitivity.
inline Vector qp_reference(const RadialNetwork& net, const Disturbance& d) {
  const auto s = build_sensitivities(net);
  const Box box = net.der_box();
  Vector q = Vector::Zero(net.size());
  for (int round = 0; round < 200; ++round) {
    const auto ac = solve_ac(net, {d.p, q - d.q_demand}, 1e-13);
    if (!ac.converged) throw std::runtime_error("qp_reference: AC plant failed");
    const Vector offset = ac.voltages.v - s.x * q;
    const Vector next = linear_qp(s.x, net.costs(), box, offset, net.v_min, net.v_max);
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if (change <= 1e-10) return q;
  }
  throw std::runtime_error("qp_reference: successive linearization did not settle");
}

}  // namespace ofo::test
