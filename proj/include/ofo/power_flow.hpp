#pragma once

#include "ofo/network.hpp"
#include "ofo/sensitivity.hpp"
#include "ofo/types.hpp"

#include <complex>
#include <cstdint>

namespace ofo {

/// Net injections per non-slack bus (DER injection minus demand), pu.
struct PowerInjection {
  Vector p;
  Vector q;
};

/// Voltage magnitudes of the non-slack buses, pu.
struct VoltageProfile {
  Vector v;
};

struct PowerFlowOptions {
  double tol = 1e-8;  ///< max bus power mismatch, pu
  int max_iter = 100;
};

struct PowerFlowSolution {
  VoltageProfile voltages;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Backward/forward sweep for a radial network with constant-power buses.
/// Keeps the tree ordering so repeated solves on one network stay cheap.
class SweepSolver {
 public:
  explicit SweepSolver(const RadialNetwork& net);

  /// Never throws on non-convergence; check `converged`.
  PowerFlowSolution solve(const PowerInjection& inj, const PowerFlowOptions& opt = {}) const;

 private:
  double v0_;
  std::vector<std::size_t> order_;   // non-slack buses, parents first
  std::vector<std::size_t> parent_;  // by bus id
  std::vector<std::complex<double>> z_;
};

PowerFlowSolution solve_ac(const RadialNetwork& net, const PowerInjection& inj, double tol = 1e-8, int max_iter = 100);

/// v = v0 + R (p - p_d) + X (q - q_d)
VoltageProfile linear_voltage(const SensitivityMatrices& sens, double v0, const Vector& q, const Vector& p_demand,
                              const Vector& q_demand, const Vector& p);

struct MeasurementConfig {
  double noise_std = 0.0;  ///< additive Gaussian noise, pu
  std::uint64_t seed = 0;
};

/// Solution voltages plus i.i.d. noise. `stream` selects an independent,
/// reproducible noise draw (the scenario passes the instant index).
VoltageProfile measure(const PowerFlowSolution& sol, const MeasurementConfig& cfg, std::uint64_t stream = 0);

}  // namespace ofo
