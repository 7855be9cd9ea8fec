// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "ofo/agent_sim.hpp"
#include "ofo/controllers.hpp"
#include "ofo/feeder_generator.hpp"
#include "ofo/power_flow.hpp"
#include "ofo/scenario.hpp"
#include "ofo/sensitivity.hpp"

#include "../support.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>

using namespace ofo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool run_criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = out.pass && in_time;
  std::printf("%s %d %s: %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", id, name, out.detail.c_str(), secs,
              limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
  return pass;
}

// Exact projection for small boxes: enumerate which coordinates sit at the
// lower bound, upper bound or free, solve the reduced system and keep the
// candidate satisfying the KKT conditions.
Vector projection_by_enumeration(const Vector& q_dot, const Matrix& x, const Box& box) {
  const Eigen::Index n = q_dot.size();
  long combos = 1;
  for (Eigen::Index i = 0; i < n; ++i) combos *= 3;
  Vector best;
  double best_val = std::numeric_limits<double>::infinity();
  for (long code = 0; code < combos; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n));
    long c = code;
    for (auto& s : state) {
      s = static_cast<int>(c % 3);
      c /= 3;
    }
    Vector u = Vector::Zero(n);
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (state[i] == 0) u[i] = box.lower[i];
      else if (state[i] == 1) u[i] = box.upper[i];
      else free.push_back(i);
    }
    if (!free.empty()) {
      const auto m = static_cast<Eigen::Index>(free.size());
      Matrix a(m, m);
      Vector rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        // gradient X(u - q_dot) vanishes on the free coordinates
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
          if (state[j] != 2) s += x(free[r], j) * (u[j] - q_dot[j]);
          else s -= x(free[r], j) * q_dot[j];
        rhs[r] = -s;
        for (Eigen::Index k = 0; k < m; ++k) a(r, k) = x(free[r], free[k]);
      }
      const Vector sol = a.ldlt().solve(rhs);
      for (Eigen::Index r = 0; r < m; ++r) u[free[r]] = sol[r];
    }
    if ((u.array() < box.lower.array() - 1e-12).any() || (u.array() > box.upper.array() + 1e-12).any()) continue;
    const double val = (u - q_dot).dot(x * (u - q_dot));
    if (val < best_val) {
      best_val = val;
      best = u;
    }
  }
  return best;
}

Outcome criterion_sparsity() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  double worst_oracle = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 50)(rng);
    const RadialNetwork net = test::random_tree(rng, n);
    const auto parent = test::parents_of(net);
    const SensitivityMatrices s = build_sensitivities(net);
    worst_oracle = std::max(worst_oracle, (s.x - test::x_by_paths(net)).cwiseAbs().maxCoeff());
    const Matrix inv = s.x.inverse();
    const double scale = inv.cwiseAbs().maxCoeff();
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= n; ++j) {
        if (i == j || parent[i] == j || parent[j] == i) continue;
        worst = std::max(worst, std::abs(inv(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1))) / scale);
      }
  }
  return {worst <= 1e-9 && worst_oracle <= 1e-12,
          fmt("100 trees, max non-adjacent |X^-1_ij|/max|X^-1| = %.2e, X vs path sums %.1e", worst, worst_oracle)};
}

Outcome criterion_empirical_sensitivity() {
  const RadialNetwork net = generate_synthetic_feeder(2, 20, Branching::ChainHeavy);
  const SensitivityMatrices s = build_sensitivities(net);
  const PowerInjection base{0.5 * net.p_rated() - net.base_p_demand(), -net.base_q_demand()};
  const Vector v0 = solve_ac(net, base, 1e-13).voltages.v;
  const double delta = 1e-4;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < net.size(); ++i) {
    PowerInjection probe = base;
    probe.q[i] += delta;
    const Vector col = (solve_ac(net, probe, 1e-13).voltages.v - v0) / delta;
    for (Eigen::Index j = 0; j < net.size(); ++j)
      worst = std::max(worst, std::abs(col[j] - s.x(j, i)) / std::abs(s.x(j, i)));
  }
  return {worst <= 0.05, fmt("20-bus feeder, max relative deviation %.3f%%", 100.0 * worst)};
}

double inner_loop_error(const Matrix& x, const Vector& q_dot, const Box& box, const Vector& start,
                        const Vector& reference) {
  const double alpha_u = 0.9 * max_inner_step_size(x);
  const Vector offset = Vector::Constant(x.rows(), 1.0);
  InnerState in{start, offset + x * q_dot, 0};
  for (int t = 0; t < 500; ++t) in = inner_projection_step(in, offset + x * in.u, alpha_u, box);
  return (in.u - reference).cwiseAbs().maxCoeff();
}

Outcome criterion_projection() {
  std::mt19937_64 rng(77);
  double worst = 0.0, worst_oracle = 0.0;
  int accepted = 0, rejected = 0;
  while (accepted < 99) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 6)(rng);
    const RadialNetwork net = test::random_tree(rng, n, 0.05, 0.5);
    const Matrix x = build_sensitivities(net).x;
    Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff() > 60.0) {
      ++rejected;
      continue;
    }
    const auto m = static_cast<Eigen::Index>(n);
    std::uniform_real_distribution<double> half(0.2, 1.0), wide(-2.5, 2.5), unit(0.0, 1.0);
    Box box{Vector(m), Vector(m)};
    for (Eigen::Index i = 0; i < m; ++i) {
      const double h = half(rng);
      box.lower[i] = -h;
      box.upper[i] = h;
    }
    Vector q_dot(m), start(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      q_dot[i] = wide(rng);
      start[i] = box.lower[i] + unit(rng) * (box.upper[i] - box.lower[i]);
    }
    const Vector exact = projection_by_enumeration(q_dot, x, box);
    const Vector oracle = x_norm_projection_oracle(q_dot, x, box);
    worst_oracle = std::max(worst_oracle, (exact - oracle).cwiseAbs().maxCoeff());
    worst = std::max(worst, inner_loop_error(x, q_dot, box, start, exact));
    ++accepted;
  }

  Matrix x(2, 2);
  x << 2, 1, 1, 2;
  const Box unit_box{Vector::Zero(2), Vector::Ones(2)};
  const Vector q_dot = (Vector(2) << 2.0, 0.0).finished();
  const Vector expected = (Vector(2) << 1.0, 0.5).finished();
  const Vector clipped = q_dot.cwiseMax(unit_box.lower).cwiseMin(unit_box.upper);
  const double aniso = inner_loop_error(x, q_dot, unit_box, Vector::Zero(2), expected);
  const bool differs = (clipped - expected).cwiseAbs().maxCoeff() > 0.4;
  worst = std::max(worst, aniso);

  return {worst <= 1e-6 && worst_oracle <= 1e-8 && differs,
          fmt("100 instances (%d ill-conditioned draws rejected), max |u_T - proj| = %.2e, anisotropic case %.2e "
              "(Euclidean clip (%.0f,%.0f)), oracle vs enumeration %.1e",
              rejected, worst, aniso, clipped[0], clipped[1], worst_oracle)};
}

Outcome criterion_static() {
  const auto sc = test::static_case();
  RunConfig rc;
  rc.controller = ControllerKind::Nested;
  const RunResult nested = run_static(sc.net, sc.disturbance, rc);
  rc.controller = ControllerKind::Centralized;
  const RunResult central = run_static(sc.net, sc.disturbance, rc);
  const Vector ref = test::qp_reference(sc.net, sc.disturbance);
  const double v_start = nested.voltages.front().maxCoeff();
  const double v_end = nested.voltages.back().maxCoeff();
  const double d_central = (nested.setpoints.back() - central.setpoints.back()).cwiseAbs().maxCoeff();
  const double d_ref = (nested.setpoints.back() - ref).cwiseAbs().maxCoeff();
  const bool pass = nested.converged && central.converged && v_end <= sc.net.v_max + 1e-3 && d_central <= 1e-3 &&
                    d_ref <= 1e-3;
  return {pass, fmt("10-bus feeder, max v %.4f -> %.5f (limit %.3f), nested converged at k=%ld, centralized at k=%ld, "
                    "|q_nested - q_centralized| = %.1e, |q_nested - q_QP| = %.1e",
                    v_start, v_end, sc.net.v_max + 1e-3, nested.converged_iteration, central.converged_iteration,
                    d_central, d_ref)};
}

struct DynamicScenario {
  RadialNetwork net;
  ScenarioTimeSeries ts;
};

const DynamicScenario& dynamic_scenario() {
  static const DynamicScenario s = [] {
    DynamicScenario d;
    d.net = generate_synthetic_feeder(1, 41, Branching::ChainHeavy);
    d.ts = generate_profiles(1, d.net, 1800.0, 6.0);
    return d;
  }();
  return s;
}

const Comparison& dynamic_comparison() {
  static const Comparison c = [] {
    const auto& s = dynamic_scenario();
    return compare(s.net, s.ts,
                   {ControllerKind::None, ControllerKind::TwoMetric, ControllerKind::Truncated, ControllerKind::Droop,
                    ControllerKind::Nested, ControllerKind::Centralized},
                   RunConfig{});
  }();
  return c;
}

Outcome criterion_ordering() {
  const Comparison& c = dynamic_comparison();
  const auto avv = [&](std::size_t i) { return c.runs[i].metrics.avv_monitor; };
  const double none = avv(0), two = avv(1), trunc = avv(2), droop = avv(3), nested = avv(4), central = avv(5);
  const bool pass = none > two && none > trunc && two > droop && trunc > droop && droop > nested && nested >= central &&
                    nested <= 5.0 * central;
  return {pass, fmt("41-bus, 30 min, bus %ld: AVV none %.3e, two-metric %.3e, truncated %.3e, droop %.3e, "
                    "nested %.3e, centralized %.3e, nested/centralized %.2f",
                    static_cast<long>(c.monitor_bus) + 1, none, two, trunc, droop, nested, central, nested / central)};
}

Outcome criterion_excursion() {
  const auto& s = dynamic_scenario();
  const RunResult& r = dynamic_comparison().runs[4];
  const Box box = s.net.der_box();
  double worst_ratio = 0.0;
  bool within = true;
  for (std::size_t k = 0; k < r.instants(); ++k) {
    const Vector& q = r.setpoints[k];
    const double excess = std::max((q - box.upper).maxCoeff(), (box.lower - q).maxCoeff());
    // a few ulps of slack for the blend q + eps (q_dot - q)
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, box.upper.cwiseAbs().maxCoeff());
    if (excess > r.allowance[k] + slack) within = false;
    if (r.allowance[k] > 0.0) worst_ratio = std::max(worst_ratio, std::max(excess, 0.0) / r.allowance[k]);
  }
  const double cap = r.metrics.max_capacity_violation;
  return {within && cap <= 0.02,
          fmt("%zu nested instants within the inflated box (worst excess/allowance %.3f), max capacity violation %.4f%%",
              r.instants(), worst_ratio, 100.0 * cap)};
}

Outcome criterion_locality() {
  const auto& s = dynamic_scenario();
  const SensitivityMatrices sens = build_sensitivities(s.net);
  RunConfig rc;
  ControllerConfig cfg = rc.cfg;
  cfg.v_min = s.net.v_min;
  cfg.v_max = s.net.v_max;
  AgentNestedController agents(s.net, sens, cfg);
  auto mono = make_controller(ControllerKind::Nested, {s.net, sens, cfg});
  const SweepSolver solver(s.net);
  const std::size_t per = instants_per_sample(s.ts, rc);
  bool identical = true;
  std::size_t instants = 0;
  for (std::size_t k = 0; k < s.ts.samples(); ++k) {
    const Vector p = s.ts.p_generation.row(static_cast<Eigen::Index>(k)).transpose() -
                     s.ts.p_demand.row(static_cast<Eigen::Index>(k)).transpose();
    const Vector qd = s.ts.q_demand.row(static_cast<Eigen::Index>(k)).transpose();
    for (std::size_t j = 0; j < per; ++j, ++instants) {
      if (agents.setpoint() != mono->setpoint()) identical = false;
      const Vector v = solver.solve({p, mono->setpoint() - qd}, rc.plant).voltages.v;
      agents.observe(v);
      mono->observe(v);
    }
  }
  const LocalityReport rep = assert_locality(agents.message_log(), agents.graph());

  rc.controller = ControllerKind::Nested;
  const RunResult a = run_dynamic(s.net, s.ts, rc);
  rc.agents = true;
  const RunResult b = run_dynamic(s.net, s.ts, rc);
  bool runs_identical = a.instants() == b.instants();
  for (std::size_t k = 0; runs_identical && k < a.instants(); ++k)
    runs_identical = a.setpoints[k] == b.setpoints[k] && a.voltages[k] == b.voltages[k] && a.lambda[k] == b.lambda[k];

  const auto sc = test::static_case();
  RunConfig st;
  st.agents = true;
  st.max_outer = 200;
  const RunResult static_agents = run_static(sc.net, sc.disturbance, st);
  st.agents = false;
  const RunResult static_mono = run_static(sc.net, sc.disturbance, st);
  bool static_identical = static_agents.instants() == static_mono.instants();
  for (std::size_t k = 0; static_identical && k < static_mono.instants(); ++k)
    static_identical = static_agents.setpoints[k] == static_mono.setpoints[k];

  return {rep.pass && identical && runs_identical && static_identical,
          fmt("%zu messages checked, %zu non-neighbor; %zu dynamic instants %s, static run %s", rep.checked,
              rep.offending.size(), instants, identical && runs_identical ? "bitwise identical" : "DIFFER",
              static_identical ? "bitwise identical" : "DIFFERS")};
}

Outcome criterion_performance() {
  const RadialNetwork net = generate_synthetic_feeder(1, 96, Branching::ChainHeavy);
  const ScenarioTimeSeries ts = generate_profiles(1, net, 1800.0, 6.0);
  RunConfig rc;
  rc.controller = ControllerKind::Nested;
  const RunResult r = run_dynamic(net, ts, rc);
  rc.agents = true;
  const RunResult agents = run_dynamic(net, ts, rc);
  const double ms = r.metrics.mean_iter_time_ms;
  return {ms <= 5.0, fmt("96-bus feeder, %zu instants, nested %.4f ms/instant (agent simulation %.4f ms/instant)",
                         r.instants(), ms, agents.metrics.mean_iter_time_ms)};
}

Outcome criterion_two_metric() {
  const TwoMetricInstance t = two_metric_counterexample();
  SensitivityMatrices s;
  s.x = t.x;
  s.x_inv = t.x.inverse();
  s.adjacency = s.x_inv.cwiseAbs().array() > 1e-12;
  const NeighborRows rows = neighbor_rows(s, t.costs);
  const Vector kkt = t.costs.cwiseProduct(t.q_star) + t.x * (t.duals.lambda - t.duals.mu);
  const bool is_kkt = kkt[0] <= 0.0 && t.q_star[0] == t.box.upper[0] && std::abs(kkt[1]) <= 1e-12;
  const Vector moved = two_metric_update(t.q_star, t.duals, rows, t.cfg, t.box);
  const Vector tentative = tentative_setpoints(t.q_star, t.duals, rows, t.cfg);
  const Vector kept = projection_by_enumeration(tentative, t.x, t.box);
  const double leave = (moved - t.q_star).cwiseAbs().maxCoeff();
  const double stay = (kept - t.q_star).cwiseAbs().maxCoeff();
  return {is_kkt && leave > 1e-3 && stay <= 1e-12,
          fmt("KKT point (%.3f, %.3f): two-metric moves to (%.5f, %.5f), X-norm projection stays at (%.5f, %.5f)",
              t.q_star[0], t.q_star[1], moved[0], moved[1], kept[0], kept[1])};
}

}  // namespace

int main() {
  bool ok = true;
  ok &= run_criterion(1, "sensitivity sparsity", 10, criterion_sparsity);
  ok &= run_criterion(2, "empirical sensitivity", 10, criterion_empirical_sensitivity);
  ok &= run_criterion(3, "projection correctness", 30, criterion_projection);
  ok &= run_criterion(4, "static convergence and agreement", 30, criterion_static);
  ok &= run_criterion(5, "dynamic AVV ordering", 120, criterion_ordering);
  ok &= run_criterion(6, "epsilon-excursion bound", 120, criterion_excursion);
  ok &= run_criterion(7, "locality", 120, criterion_locality);
  ok &= run_criterion(8, "performance", 120, criterion_performance);
  ok &= run_criterion(9, "two-metric non-descent", 10, criterion_two_metric);
  return ok ? 0 : 1;
}
