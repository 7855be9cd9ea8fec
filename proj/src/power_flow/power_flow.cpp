#include "ofo/power_flow.hpp"

#include "ofo/error.hpp"

#include <cmath>
#include <random>

namespace ofo {

SweepSolver::SweepSolver(const RadialNetwork& net) : v0_(net.v0) {
  const Tree tree(net);
  parent_.assign(tree.bus_count(), 0);
  z_.assign(tree.bus_count(), {0.0, 0.0});
  for (BusId b : tree.order()) {
    if (b.is_slack()) continue;
    order_.push_back(b.value);
    parent_[b.value] = tree.parent(b).value;
    const Cable& c = net.cables[tree.feeder_cable(b)];
    z_[b.value] = {c.resistance, c.reactance};
  }
}

PowerFlowSolution SweepSolver::solve(const PowerInjection& inj, const PowerFlowOptions& opt) const {
  using cd = std::complex<double>;
  const std::size_t n_bus = parent_.size();
  if (inj.p.size() + 1 != static_cast<Eigen::Index>(n_bus) || inj.q.size() != inj.p.size())
    throw DimensionError("power injection length does not match the network");

  std::vector<cd> s(n_bus, 0.0), v(n_bus, cd(v0_, 0.0)), branch(n_bus, 0.0), kcl(n_bus, 0.0);
  for (std::size_t b = 1; b < n_bus; ++b) s[b] = {inj.p[b - 1], inj.q[b - 1]};

  PowerFlowSolution sol;
  sol.residual = INFINITY;
  for (int it = 1; it <= opt.max_iter; ++it) {
    // Backward: current on the cable feeding b = downstream consumption.
    for (std::size_t b = 1; b < n_bus; ++b) branch[b] = -std::conj(s[b] / v[b]);
    for (auto k = order_.size(); k-- > 0;) {
      const auto b = order_[k];
      if (parent_[b] != 0) branch[parent_[b]] += branch[b];
    }
    // Forward: voltage drops from the substation outwards.
    for (auto b : order_) v[b] = v[parent_[b]] - z_[b] * branch[b];

    // Power mismatch with currents implied by the new voltages.
    std::fill(kcl.begin(), kcl.end(), cd(0.0, 0.0));
    for (auto b : order_) {
      const cd i_cable = (v[parent_[b]] - v[b]) / z_[b];
      kcl[b] -= i_cable;
      kcl[parent_[b]] += i_cable;
    }
    double mismatch = 0.0;
    for (std::size_t b = 1; b < n_bus; ++b) mismatch = std::max(mismatch, std::abs(v[b] * std::conj(kcl[b]) - s[b]));

    sol.iterations = it;
    sol.residual = mismatch;
    if (!std::isfinite(mismatch)) break;
    if (mismatch <= opt.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.voltages.v.resize(static_cast<Eigen::Index>(n_bus) - 1);
  for (std::size_t b = 1; b < n_bus; ++b) sol.voltages.v[static_cast<Eigen::Index>(b) - 1] = std::abs(v[b]);
  return sol;
}

PowerFlowSolution solve_ac(const RadialNetwork& net, const PowerInjection& inj, double tol, int max_iter) {
  if (!(tol > 0.0)) throw Error("power flow tolerance must be positive");
  return SweepSolver(net).solve(inj, {tol, max_iter});
}

VoltageProfile linear_voltage(const SensitivityMatrices& sens, double v0, const Vector& q, const Vector& p_demand,
                              const Vector& q_demand, const Vector& p) {
  const auto n = sens.size();
  if (q.size() != n || p_demand.size() != n || q_demand.size() != n || p.size() != n)
    throw DimensionError("linear_voltage: vector length does not match the sensitivity matrices");
  return {Vector::Constant(n, v0) + sens.r * (p - p_demand) + sens.x * (q - q_demand)};
}

VoltageProfile measure(const PowerFlowSolution& sol, const MeasurementConfig& cfg, std::uint64_t stream) {
  if (!(cfg.noise_std >= 0.0)) throw Error("measurement noise_std must be nonnegative");
  VoltageProfile out = sol.voltages;
  if (cfg.noise_std == 0.0) return out;
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  for (auto& x : out.v) x += noise(rng);
  return out;
}

}  // namespace ofo
