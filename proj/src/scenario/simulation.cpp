#include "ofo/scenario.hpp"

#include "ofo/agent_sim.hpp"
#include "ofo/error.hpp"
#include "ofo/kernels.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>

namespace ofo {

Vector compute_avv(const std::vector<Vector>& trace, double v_min, double v_max) {
  if (trace.empty()) throw Error("compute_avv: empty voltage trace");
  const auto n = trace.front().size();
  Vector acc = Vector::Zero(n);
  for (const Vector& v : trace) {
    if (v.size() != n) throw DimensionError("compute_avv: samples differ in length");
    kernels::accumulate_violation({acc.data(), static_cast<std::size_t>(n)},
                                  {v.data(), static_cast<std::size_t>(n)}, v_min, v_max);
  }
  return acc / static_cast<double>(trace.size());
}

Eigen::Index most_sensitive_bus(const SensitivityMatrices& sens) {
  Eigen::Index best = 0;
  sens.x.diagonal().maxCoeff(&best);
  return best;
}

namespace {

RunConfig effective(const RadialNetwork& net, RunConfig rc) {
  if (rc.limits_from_network) {
    rc.cfg.v_min = net.v_min;
    rc.cfg.v_max = net.v_max;
  }
  rc.validate();
  return rc;
}

class Simulation {
 public:
  Simulation(const RadialNetwork& net, const RunConfig& rc)
      : net_(net), rc_(effective(net, rc)), sens_(build_sensitivities(net)), solver_(net), box_(net.der_box()),
        controller_(make_run_controller(net, sens_, rc_)) {
    result_.controller = std::string(controller_name(rc_.controller));
    if (rc_.agents) result_.controller += "-agents";
    result_.instant_seconds = rc_.instant_seconds;
    if (rc_.measurement.noise_std > 0.0 && rc_.controller == ControllerKind::Nested)
      std::clog << "warning: measurement noise (std " << rc_.measurement.noise_std
                << " pu) enters the exploration estimate amplified by 1/epsilon = " << 1.0 / rc_.cfg.epsilon << '\n';
  }

  Controller& controller() { return *controller_; }

  /// One plant instant. Returns false if the plant failed.
  bool step(const Vector& p, const Vector& q_demand, double t) {
    const Vector& q = controller_->setpoint();
    const double allowance = controller_->excursion_allowance();
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      const double excess = std::max({q[i] - box_.upper[i], box_.lower[i] - q[i], 0.0});
      const double capacity = std::max(std::abs(box_.lower[i]), std::abs(box_.upper[i]));
      if (capacity > 0.0) capacity_violation_ = std::max(capacity_violation_, excess / capacity);
    }
    const PowerFlowSolution sol = solver_.solve({p, q - q_demand}, rc_.plant);
    if (!sol.converged) {
      result_.abort_reason = "plant did not converge at t=" + std::to_string(t) + " (residual " +
                             std::to_string(sol.residual) + " after " + std::to_string(sol.iterations) +
                             " sweeps)";
      return false;
    }
    const VoltageProfile v = measure(sol, rc_.measurement, instant_);
    result_.time.push_back(t);
    result_.setpoints.push_back(q);
    result_.voltages.push_back(v.v);
    result_.iteration.push_back(controller_->iterations());
    result_.allowance.push_back(allowance);

    const auto start = std::chrono::steady_clock::now();
    controller_->observe(v.v);
    const auto stop = std::chrono::steady_clock::now();
    result_.iter_time_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    if (const DualState* d = controller_->duals()) {
      result_.lambda.push_back(d->lambda);
      result_.mu.push_back(d->mu);
    }
    ++instant_;
    return true;
  }

  RunResult finish() {
    result_.outer_iterations = controller_->iterations();
    Metrics& m = result_.metrics;
    m.monitor_bus = most_sensitive_bus(sens_);
    m.max_capacity_violation = capacity_violation_;
    m.mean_setpoint_deviation_vs_reference = std::numeric_limits<double>::quiet_NaN();
    if (!result_.voltages.empty()) {
      m.avv_per_bus = compute_avv(result_.voltages, net_.v_min, net_.v_max);
      m.avv_worst_bus = m.avv_per_bus.maxCoeff(&m.worst_bus);
      m.avv_monitor = m.avv_per_bus[m.monitor_bus];
      for (const Vector& v : result_.voltages)
        for (double x : v) m.max_violation = std::max(m.max_violation, kernels::detail::violation(x, net_.v_min, net_.v_max));
      double total = 0.0;
      for (double t : result_.iter_time_ms) total += t;
      m.mean_iter_time_ms = total / static_cast<double>(result_.iter_time_ms.size());
    } else {
      m.avv_per_bus = Vector::Zero(net_.size());
    }
    return std::move(result_);
  }

  RunResult& result() { return result_; }
  const RunConfig& config() const { return rc_; }

 private:
  const RadialNetwork& net_;
  RunConfig rc_;
  SensitivityMatrices sens_;
  SweepSolver solver_;
  Box box_;
  std::unique_ptr<Controller> controller_;
  RunResult result_;
  std::uint64_t instant_ = 0;
  double capacity_violation_ = 0.0;
};

}  // namespace

std::unique_ptr<Controller> make_run_controller(const RadialNetwork& net, const SensitivityMatrices& sens,
                                                const RunConfig& rc) {
  if (rc.agents) {
    if (rc.controller != ControllerKind::Nested) throw Error("only the nested controller runs as agents");
    return std::make_unique<AgentNestedController>(net, sens, rc.cfg);
  }
  return make_controller(rc.controller, {net, sens, rc.cfg});
}

RunResult run_static(const RadialNetwork& net, const Disturbance& d, const RunConfig& rc) {
  if (d.p.size() != net.size() || d.q_demand.size() != net.size())
    throw DimensionError("run_static: disturbance does not match the network");
  Simulation sim(net, rc);
  Controller& ctrl = sim.controller();
  Vector boundary = ctrl.setpoint();
  std::optional<DualState> duals;
  if (ctrl.duals()) duals = *ctrl.duals();
  long instant = 0;
  while (ctrl.iterations() < sim.config().max_outer) {
    if (!sim.step(d.p, d.q_demand, static_cast<double>(instant) * sim.config().instant_seconds)) break;
    ++instant;
    if (!ctrl.at_iteration_start()) continue;
    double change = (ctrl.setpoint() - boundary).cwiseAbs().maxCoeff();
    boundary = ctrl.setpoint();
    // Dual changes enter scaled by 1/alpha_d, i.e. as voltage residuals.
    if (duals) {
      const DualState& now = *ctrl.duals();
      const double dual_change = std::max((now.lambda - duals->lambda).cwiseAbs().maxCoeff(),
                                          (now.mu - duals->mu).cwiseAbs().maxCoeff());
      change = std::max(change, dual_change / sim.config().cfg.alpha_d);
      duals = now;
    }
    if (change <= kStaticTolerance) {
      sim.result().converged = true;
      sim.result().converged_iteration = ctrl.iterations() - 1;
      break;
    }
  }
  return sim.finish();
}

std::size_t instants_per_sample(const ScenarioTimeSeries& ts, const RunConfig& rc) {
  return static_cast<std::size_t>(std::max(1.0, std::round(ts.dt / rc.instant_seconds)));
}

RunResult run_dynamic(const RadialNetwork& net, const ScenarioTimeSeries& ts, const RunConfig& rc) {
  ts.validate();
  if (ts.buses() != net.size()) throw DimensionError("run_dynamic: time series does not match the network");
  Simulation sim(net, rc);
  const std::size_t per_sample = instants_per_sample(ts, sim.config());
  const double instant = ts.dt / static_cast<double>(per_sample);
  for (std::size_t k = 0; k < ts.samples(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    const Vector p = ts.p_generation.row(r).transpose() - ts.p_demand.row(r).transpose();
    const Vector qd = ts.q_demand.row(r).transpose();
    bool ok = true;
    for (std::size_t s = 0; s < per_sample && ok; ++s)
      ok = sim.step(p, qd, ts.time(k) + instant * static_cast<double>(s));
    if (!ok) break;
  }
  return sim.finish();
}

void set_reference(RunResult& result, const RunResult& reference) {
  const std::size_t k = std::min(result.setpoints.size(), reference.setpoints.size());
  if (k == 0) return;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < k; ++i) {
    total += (result.setpoints[i] - reference.setpoints[i]).sum();
    count += static_cast<std::size_t>(result.setpoints[i].size());
  }
  result.metrics.mean_setpoint_deviation_vs_reference = count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace ofo
