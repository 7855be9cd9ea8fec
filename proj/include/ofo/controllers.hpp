#pragma once

#include "ofo/network.hpp"
#include "ofo/sensitivity.hpp"
#include "ofo/types.hpp"

#include <functional>
#include <memory>
#include <string_view>

namespace ofo {

enum class ControllerKind { None, Centralized, Nested, TwoMetric, Truncated, Droop };

ControllerKind parse_controller_kind(std::string_view name);
std::string_view controller_name(ControllerKind k);

/// Volt-VAR curve: q_max below v1, linear to 0 on [v1,v2], deadband on
/// [v2,v3], linear to q_min on [v3,v4], q_min above v4.
struct DroopCurve {
  double v1 = 0.95, v2 = 0.98, v3 = 1.02, v4 = 1.05;
  bool valid() const { return v1 < v2 && v2 <= v3 && v3 < v4; }
};

/// Where the inner projection loop starts.
enum class InnerStart {
  PreviousSetpoint,  ///< u0 = q^k
  ClippedTentative,  ///< u0 = clip(q_dot)
};

/// Step sizes and limits, all in per-unit.
struct ControllerConfig {
  double alpha = 3e-3;     ///< primal step
  double alpha_d = 200.0;  ///< dual step
  double alpha_u = 0.0;    ///< inner step; <= 0 selects 0.9 * max_inner_step_size(X)
  double r_p = 1e-6;       ///< primal regularization
  double r_d = 1e-6;       ///< dual regularization
  double epsilon = 1e-5;   ///< exploration fraction
  int inner_iterations = 4;
  double v_min = 0.95, v_max = 1.05;
  /// Fraction by which the nested controller shrinks the DER box.
  double box_deflation = 0.0;
  InnerStart inner_start = InnerStart::PreviousSetpoint;
  DroopCurve droop;
  /// First-order response of droop inverters per instant, in (0, 1]; 1 is
  /// an instantaneous curve.
  double droop_response = 0.2;

  /// Throws ofo::Error naming the first invalid field.
  void validate() const;
};

/// Step sizes for a setup in physical units (kW, kvar): alpha_d=1e6, alpha=5e-4,
/// alpha_u=1e2, epsilon=1e-5, r_p=r_d=1e-4, T=4.
ControllerConfig physical_unit_config();

struct DualState {
  Vector lambda;  ///< upper voltage limit multipliers
  Vector mu;      ///< lower voltage limit multipliers

  static DualState zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n)}; }
};

// --- single-step updates -------------------------------------------------

DualState dual_update(const DualState& duals, const Vector& v_meas, const ControllerConfig& cfg);

/// clip(q - alpha (C q + X (lambda - mu + r_p q)))
Vector centralized_primal_update(const Vector& q, const DualState& duals, const Matrix& x, const Vector& costs,
                                 const ControllerConfig& cfg, const Box& box);

/// Same as centralized with X replaced by its adjacency truncation.
Vector truncated_sensitivity_update(const Vector& q, const DualState& duals, const Matrix& x_truncated,
                                    const Vector& costs, const ControllerConfig& cfg, const Box& box);

/// q - alpha ([X^-1 C q]_i + lambda_i - mu_i + r_p q_i), not clipped.
Vector tentative_setpoints(const Vector& q, const DualState& duals, const NeighborRows& rows,
                           const ControllerConfig& cfg);

/// One element of tentative_setpoints given s = [X^-1 C q]_i.
inline double tentative_element(double q, double s, double lambda, double mu, double alpha, double r_p) {
  return q - alpha * (((s + lambda) - mu) + r_p * q);
}

/// Euclidean clip of the tentative setpoints (the two-metric iteration).
Vector two_metric_update(const Vector& q, const DualState& duals, const NeighborRows& rows,
                         const ControllerConfig& cfg, const Box& box);

/// argmin over the box of 1/2 (u - q_dot)' X (u - q_dot), by projected
/// gradient on the exact X down to 1e-10. Global information; a test oracle.
/// Throws ofo::Error if it does not converge.
Vector x_norm_projection_oracle(const Vector& q_dot, const Matrix& x, const Box& box);

/// 2 / lambda_max(X).
double max_inner_step_size(const Matrix& x);

double droop_update(const DroopCurve& curve, double v_local, double q_min, double q_max);

/// Plant in the loop: implement q, return the measured voltages.
using PlantCallback = std::function<Vector(const Vector& q)>;

/// Implements q + eps (q_dot - q) on the plant and extrapolates the measured
/// voltage change back to q_dot.
Vector exploration_and_estimate(const Vector& q, const Vector& q_dot, const Vector& v_k, const PlantCallback& plant,
                                const ControllerConfig& cfg);

struct InnerState {
  Vector u;         ///< current implementable setpoint
  Vector v_target;  ///< estimated voltage at q_dot
  int tau = 0;
};

/// u <- clip(u - alpha_u (v(u) - v_target)); uses only each bus's own data.
InnerState inner_projection_step(const InnerState& inner, const Vector& v_meas_at_u, double alpha_u, const Box& box);

struct OuterState {
  Vector q;
  DualState duals;
  long iteration = 0;

  static OuterState zeros(Eigen::Index n) { return {Vector::Zero(n), DualState::zeros(n), 0}; }
};

/// Everything the nested controller is allowed to know about the grid.
struct NestedModel {
  NeighborRows rows;
  Box box;
  double alpha_u = 0.0;
};

NestedModel make_nested_model(const RadialNetwork& net, const SensitivityMatrices& sens, const ControllerConfig& cfg);

/// One outer iteration of the nested algorithm: measure at q^k, dual update,
/// tentative setpoints, exploration, T inner steps; q^{k+1} = u^T. Calls the
/// plant exactly 2 + T times. If the plant throws, `state` is untouched.
OuterState nested_step(const OuterState& state, const PlantCallback& plant, const NestedModel& model,
                       const ControllerConfig& cfg);

/// Bundled 2-D instance on which the two-metric iteration leaves a
/// constrained optimum: X = [[2,1],[1,2]], C = I, box [0,1]^2 and duals held
/// fixed; q* = (1, 0.5) is then a KKT point of
/// min 1/2 q'q + q'X(lambda - mu) over the box.
struct TwoMetricInstance {
  Matrix x;
  Box box;
  Vector costs;
  Vector q_star;
  DualState duals;
  ControllerConfig cfg;
};

TwoMetricInstance two_metric_counterexample();

// --- controllers as per-instant state machines ---------------------------

/// A feedback controller stepped once per plant instant: implement
/// setpoint(), measure, hand the voltages to observe().
class Controller {
 public:
  virtual ~Controller() = default;

  virtual ControllerKind kind() const = 0;
  virtual const Vector& setpoint() const = 0;
  virtual void observe(const Vector& v_meas) = 0;
  /// True when setpoint() is the first instant of a new iteration.
  virtual bool at_iteration_start() const { return true; }
  /// Completed (outer) iterations.
  virtual long iterations() const = 0;
  virtual const DualState* duals() const { return nullptr; }
  /// Allowed box excursion of the setpoint currently implemented.
  virtual double excursion_allowance() const { return 0.0; }
};

/// Shared inputs for building any controller.
struct ControllerContext {
  const RadialNetwork& net;
  const SensitivityMatrices& sens;
  ControllerConfig cfg;
};

std::unique_ptr<Controller> make_controller(ControllerKind kind, const ControllerContext& ctx);

/// Monolithic nested controller; exposed for nested_step and equivalence tests.
class NestedController final : public Controller {
 public:
  enum class Phase { Outer, Exploration, Inner };

  NestedController(NestedModel model, ControllerConfig cfg, OuterState start);

  ControllerKind kind() const override { return ControllerKind::Nested; }
  const Vector& setpoint() const override { return implemented_; }
  void observe(const Vector& v_meas) override;
  bool at_iteration_start() const override { return phase_ == Phase::Outer; }
  long iterations() const override { return outer_.iteration; }
  const DualState* duals() const override { return &outer_.duals; }
  double excursion_allowance() const override { return phase_ == Phase::Exploration ? allowance_ : 0.0; }

  Phase phase() const { return phase_; }
  const OuterState& outer() const { return outer_; }
  const Vector& tentative() const { return q_dot_; }

 private:
  NestedModel model_;
  ControllerConfig cfg_;
  OuterState outer_;
  Phase phase_ = Phase::Outer;
  Vector q_dot_;
  Vector v_outer_;
  InnerState inner_;
  Vector implemented_;
  double allowance_ = 0.0;
};

}  // namespace ofo
