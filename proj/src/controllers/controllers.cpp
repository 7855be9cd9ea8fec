#include "ofo/controllers.hpp"

#include "ofo/error.hpp"
#include "ofo/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace ofo {
namespace {

std::span<double> span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> span(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n)
    throw DimensionError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
}

void check_duals(const DualState& d, Eigen::Index n) {
  require_size(d.lambda, n, "lambda");
  require_size(d.mu, n, "mu");
}

// clip(q - alpha (C q + M (lambda - mu + r_p q))) for a dense M.
Vector gradient_projection(const Vector& q, const DualState& duals, const Matrix& m, const Vector& costs,
                           const ControllerConfig& cfg, const Box& box) {
  const auto n = q.size();
  check_duals(duals, n);
  require_size(costs, n, "cost vector");
  require_size(box.lower, n, "box");
  if (m.rows() != n || m.cols() != n) throw DimensionError("sensitivity matrix does not match the setpoint vector");
  const Vector w = duals.lambda - duals.mu + cfg.r_p * q;
  Vector mw(n);
  kernels::gemv(span(m), static_cast<std::size_t>(n), span(w), span(mw));
  const Vector g = costs.cwiseProduct(q) + mw;
  Vector out = q;
  kernels::projected_step(span(out), span(g), cfg.alpha, span(box.lower), span(box.upper));
  return out;
}

}  // namespace

ControllerKind parse_controller_kind(std::string_view name) {
  if (name == "none") return ControllerKind::None;
  if (name == "centralized") return ControllerKind::Centralized;
  if (name == "nested") return ControllerKind::Nested;
  if (name == "two-metric") return ControllerKind::TwoMetric;
  if (name == "truncated") return ControllerKind::Truncated;
  if (name == "droop") return ControllerKind::Droop;
  throw Error("unknown controller '" + std::string(name) +
              "' (expected centralized, nested, two-metric, truncated, droop or none)");
}

std::string_view controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::None: return "none";
    case ControllerKind::Centralized: return "centralized";
    case ControllerKind::Nested: return "nested";
    case ControllerKind::TwoMetric: return "two-metric";
    case ControllerKind::Truncated: return "truncated";
    case ControllerKind::Droop: return "droop";
  }
  return "?";
}

void ControllerConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid controller config: " + what); };
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (!(alpha_d > 0.0)) fail("alpha_d must be > 0");
  if (!(alpha_u >= 0.0)) fail("alpha_u must be > 0 (or 0 for automatic)");
  if (!(r_p >= 0.0)) fail("r_p must be >= 0");
  if (!(r_d >= 0.0)) fail("r_d must be >= 0");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  if (inner_iterations < 1) fail("inner_iterations (T) must be >= 1");
  if (!(v_min < v_max)) fail("v_min must be below v_max");
  if (!(box_deflation >= 0.0 && box_deflation < 1.0)) fail("box_deflation must lie in [0, 1)");
  if (!droop.valid()) fail("droop breakpoints must satisfy v1 < v2 <= v3 < v4");
  if (!(droop_response > 0.0 && droop_response <= 1.0)) fail("droop_response must lie in (0, 1]");
}

ControllerConfig physical_unit_config() {
  ControllerConfig c;
  c.alpha_d = 1e6;
  c.alpha = 5e-4;
  c.alpha_u = 1e2;
  c.epsilon = 1e-5;
  c.r_p = 1e-4;
  c.r_d = 1e-4;
  c.inner_iterations = 4;
  return c;
}

DualState dual_update(const DualState& duals, const Vector& v_meas, const ControllerConfig& cfg) {
  check_duals(duals, v_meas.size());
  DualState out = duals;
  kernels::dual_ascent(span(out.lambda), span(out.mu), span(v_meas), cfg.v_min, cfg.v_max, cfg.alpha_d, cfg.r_d);
  return out;
}

Vector centralized_primal_update(const Vector& q, const DualState& duals, const Matrix& x, const Vector& costs,
                                 const ControllerConfig& cfg, const Box& box) {
  return gradient_projection(q, duals, x, costs, cfg, box);
}

Vector truncated_sensitivity_update(const Vector& q, const DualState& duals, const Matrix& x_truncated,
                                    const Vector& costs, const ControllerConfig& cfg, const Box& box) {
  return gradient_projection(q, duals, x_truncated, costs, cfg, box);
}

Vector tentative_setpoints(const Vector& q, const DualState& duals, const NeighborRows& rows,
                           const ControllerConfig& cfg) {
  const auto n = q.size();
  check_duals(duals, n);
  if (rows.size() != n) throw DimensionError("neighbor rows do not match the setpoint vector");
  Vector q_dot(n);
  for (Eigen::Index i = 0; i < n; ++i)
    q_dot[i] = tentative_element(q[i], rows.row_dot(i, q), duals.lambda[i], duals.mu[i], cfg.alpha, cfg.r_p);
  return q_dot;
}

Vector two_metric_update(const Vector& q, const DualState& duals, const NeighborRows& rows,
                         const ControllerConfig& cfg, const Box& box) {
  require_size(box.lower, q.size(), "box");
  Vector out = tentative_setpoints(q, duals, rows, cfg);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = kernels::detail::clip(out[i], box.lower[i], box.upper[i]);
  return out;
}

Vector x_norm_projection_oracle(const Vector& q_dot, const Matrix& x, const Box& box) {
  const auto n = q_dot.size();
  require_size(box.lower, n, "box");
  if (x.rows() != n) throw DimensionError("X does not match q_dot");
  if ((box.lower.array() > box.upper.array()).any()) throw Error("projection box is empty");
  if (n == 0) return q_dot;

  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  const double l_max = es.eigenvalues().maxCoeff();
  const double l_min = es.eigenvalues().minCoeff();
  if (!(l_min > 0.0)) throw Error("X-norm projection needs a positive definite X");
  const double step = 1.0 / l_max;
  const double kappa = l_max / l_min;

  // Stop once the per-step change, scaled by the condition number, bounds
  // the remaining distance below 1e-10.
  Vector u = q_dot.cwiseMax(box.lower).cwiseMin(box.upper);
  const long max_iter = 20'000'000;
  for (long it = 0; it < max_iter; ++it) {
    const Vector next = (u - step * (x * (u - q_dot))).cwiseMax(box.lower).cwiseMin(box.upper);
    const double change = (next - u).cwiseAbs().maxCoeff();
    u = next;
    if (change * kappa <= 1e-10) return u;
  }
  throw Error("X-norm projection oracle did not converge (ill-conditioned X?)");
}

double max_inner_step_size(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(x, Eigen::EigenvaluesOnly);
  const double l_max = es.eigenvalues().maxCoeff();
  if (!(l_max > 0.0)) throw Error("max_inner_step_size needs a positive definite X");
  return 2.0 / l_max;
}

double droop_update(const DroopCurve& c, double v, double q_min, double q_max) {
  double q;
  if (v <= c.v1) q = q_max;
  else if (v < c.v2) q = q_max * (c.v2 - v) / (c.v2 - c.v1);
  else if (v <= c.v3) q = 0.0;
  else if (v < c.v4) q = q_min * (v - c.v3) / (c.v4 - c.v3);
  else q = q_min;
  return kernels::detail::clip(q, q_min, q_max);
}

Vector exploration_and_estimate(const Vector& q, const Vector& q_dot, const Vector& v_k, const PlantCallback& plant,
                                const ControllerConfig& cfg) {
  require_size(q_dot, q.size(), "q_dot");
  Vector q_eps(q.size());
  kernels::blend(span(q_eps), span(q), span(q_dot), cfg.epsilon);
  const Vector v_eps = plant(q_eps);
  require_size(v_eps, v_k.size(), "plant measurement");
  Vector estimate(v_k.size());
  kernels::extrapolate(span(estimate), span(v_k), span(v_eps), cfg.epsilon);
  return estimate;
}

InnerState inner_projection_step(const InnerState& inner, const Vector& v_meas_at_u, double alpha_u, const Box& box) {
  InnerState out = inner;
  kernels::projected_step_diff(span(out.u), span(v_meas_at_u), span(inner.v_target), alpha_u, span(box.lower),
                               span(box.upper));
  ++out.tau;
  return out;
}

NestedModel make_nested_model(const RadialNetwork& net, const SensitivityMatrices& sens, const ControllerConfig& cfg) {
  NestedModel m;
  m.rows = neighbor_rows(sens, net.costs());
  m.box = net.der_box();
  m.box.lower *= 1.0 - cfg.box_deflation;
  m.box.upper *= 1.0 - cfg.box_deflation;
  m.alpha_u = cfg.alpha_u > 0.0 ? cfg.alpha_u : 0.9 * max_inner_step_size(sens.x);
  return m;
}

NestedController::NestedController(NestedModel model, ControllerConfig cfg, OuterState start)
    : model_(std::move(model)), cfg_(cfg), outer_(std::move(start)) {
  cfg_.validate();
  const auto n = outer_.q.size();
  check_duals(outer_.duals, n);
  require_size(model_.box.lower, n, "box");
  if (model_.rows.size() != n) throw DimensionError("neighbor rows do not match the setpoint vector");
  implemented_ = outer_.q;
}

void NestedController::observe(const Vector& v) {
  require_size(v, outer_.q.size(), "measurement");
  switch (phase_) {
    case Phase::Outer: {
      v_outer_ = v;
      outer_.duals = dual_update(outer_.duals, v, cfg_);
      q_dot_ = tentative_setpoints(outer_.q, outer_.duals, model_.rows, cfg_);
      implemented_.resize(q_dot_.size());
      kernels::blend(span(implemented_), span(outer_.q), span(q_dot_), cfg_.epsilon);
      allowance_ = q_dot_.size() ? cfg_.epsilon * (q_dot_ - outer_.q).cwiseAbs().maxCoeff() : 0.0;
      phase_ = Phase::Exploration;
      break;
    }
    case Phase::Exploration: {
      inner_.v_target.resize(v.size());
      kernels::extrapolate(span(inner_.v_target), span(v_outer_), span(v), cfg_.epsilon);
      if (cfg_.inner_start == InnerStart::PreviousSetpoint) {
        inner_.u = outer_.q;
      } else {
        inner_.u = q_dot_;
        for (Eigen::Index i = 0; i < inner_.u.size(); ++i)
          inner_.u[i] = kernels::detail::clip(inner_.u[i], model_.box.lower[i], model_.box.upper[i]);
      }
      inner_.tau = 0;
      implemented_ = inner_.u;
      phase_ = Phase::Inner;
      break;
    }
    case Phase::Inner: {
      inner_ = inner_projection_step(inner_, v, model_.alpha_u, model_.box);
      if (inner_.tau >= cfg_.inner_iterations) {
        outer_.q = inner_.u;
        ++outer_.iteration;
        phase_ = Phase::Outer;
      }
      implemented_ = inner_.u;
      break;
    }
  }
}

OuterState nested_step(const OuterState& state, const PlantCallback& plant, const NestedModel& model,
                       const ControllerConfig& cfg) {
  NestedController c(model, cfg, state);
  const int instants = 2 + cfg.inner_iterations;
  for (int k = 0; k < instants; ++k) c.observe(plant(c.setpoint()));
  return c.outer();
}

TwoMetricInstance two_metric_counterexample() {
  TwoMetricInstance t;
  t.x.resize(2, 2);
  t.x << 2.0, 1.0, 1.0, 2.0;
  t.box = {Vector::Zero(2), Vector::Ones(2)};
  t.costs = Vector::Ones(2);
  t.q_star.resize(2);
  t.q_star << 1.0, 0.5;
  // lambda - mu = X^-1 (g - q*) with objective gradient g = (-1, 0) at q*.
  t.duals = DualState::zeros(2);
  t.duals.lambda[1] = 1.0 / 3.0;
  t.duals.mu[0] = 7.0 / 6.0;
  t.cfg.alpha = 0.1;
  t.cfg.r_p = 0.0;
  t.cfg.r_d = 0.0;
  return t;
}

namespace {

class NoControl final : public Controller {
 public:
  explicit NoControl(Eigen::Index n) : q_(Vector::Zero(n)) {}
  ControllerKind kind() const override { return ControllerKind::None; }
  const Vector& setpoint() const override { return q_; }
  void observe(const Vector&) override { ++k_; }
  long iterations() const override { return k_; }

 private:
  Vector q_;
  long k_ = 0;
};

// Centralized PDGP and its adjacency-truncated variant.
class GradientProjection final : public Controller {
 public:
  GradientProjection(ControllerKind kind, Matrix m, Vector costs, Box box, ControllerConfig cfg)
      : kind_(kind), m_(std::move(m)), costs_(std::move(costs)), box_(std::move(box)), cfg_(cfg),
        q_(Vector::Zero(costs_.size())), duals_(DualState::zeros(costs_.size())) {}

  ControllerKind kind() const override { return kind_; }
  const Vector& setpoint() const override { return q_; }
  void observe(const Vector& v) override {
    duals_ = dual_update(duals_, v, cfg_);
    q_ = gradient_projection(q_, duals_, m_, costs_, cfg_, box_);
    ++k_;
  }
  long iterations() const override { return k_; }
  const DualState* duals() const override { return &duals_; }

 private:
  ControllerKind kind_;
  Matrix m_;
  Vector costs_;
  Box box_;
  ControllerConfig cfg_;
  Vector q_;
  DualState duals_;
  long k_ = 0;
};

class TwoMetric final : public Controller {
 public:
  TwoMetric(NeighborRows rows, Box box, ControllerConfig cfg)
      : rows_(std::move(rows)), box_(std::move(box)), cfg_(cfg), q_(Vector::Zero(box_.size())),
        duals_(DualState::zeros(box_.size())) {}

  ControllerKind kind() const override { return ControllerKind::TwoMetric; }
  const Vector& setpoint() const override { return q_; }
  void observe(const Vector& v) override {
    duals_ = dual_update(duals_, v, cfg_);
    q_ = two_metric_update(q_, duals_, rows_, cfg_, box_);
    ++k_;
  }
  long iterations() const override { return k_; }
  const DualState* duals() const override { return &duals_; }

 private:
  NeighborRows rows_;
  Box box_;
  ControllerConfig cfg_;
  Vector q_;
  DualState duals_;
  long k_ = 0;
};

class Droop final : public Controller {
 public:
  Droop(Box box, ControllerConfig cfg) : box_(std::move(box)), cfg_(cfg), q_(Vector::Zero(box_.size())) {}

  ControllerKind kind() const override { return ControllerKind::Droop; }
  const Vector& setpoint() const override { return q_; }
  void observe(const Vector& v) override {
    for (Eigen::Index i = 0; i < q_.size(); ++i) {
      const double target = droop_update(cfg_.droop, v[i], box_.lower[i], box_.upper[i]);
      q_[i] += cfg_.droop_response * (target - q_[i]);
    }
    ++k_;
  }
  long iterations() const override { return k_; }

 private:
  Box box_;
  ControllerConfig cfg_;
  Vector q_;
  long k_ = 0;
};

}  // namespace

std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerContext& ctx) {
  ctx.cfg.validate();
  const Eigen::Index n = ctx.net.size();
  if (ctx.sens.size() != n) throw DimensionError("sensitivity matrices do not match the network");
  switch (kind) {
    case ControllerKind::None: return std::make_unique<NoControl>(n);
    case ControllerKind::Centralized:
      return std::make_unique<GradientProjection>(kind, ctx.sens.x, ctx.net.costs(), ctx.net.der_box(), ctx.cfg);
    case ControllerKind::Truncated:
      return std::make_unique<GradientProjection>(kind, truncated_x(ctx.sens), ctx.net.costs(), ctx.net.der_box(),
                                                  ctx.cfg);
    case ControllerKind::TwoMetric:
      return std::make_unique<TwoMetric>(neighbor_rows(ctx.sens, ctx.net.costs()), ctx.net.der_box(), ctx.cfg);
    case ControllerKind::Droop: return std::make_unique<Droop>(ctx.net.der_box(), ctx.cfg);
    case ControllerKind::Nested:
      return std::make_unique<NestedController>(make_nested_model(ctx.net, ctx.sens, ctx.cfg), ctx.cfg,
                                                OuterState::zeros(n));
  }
  throw Error("unhandled controller kind");
}

}  // namespace ofo
