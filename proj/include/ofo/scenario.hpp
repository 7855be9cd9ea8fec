#pragma once

#include "ofo/controllers.hpp"
#include "ofo/network.hpp"
#include "ofo/power_flow.hpp"
#include "ofo/sensitivity.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ofo {

/// Per-bus disturbance samples on a uniform time grid. Rows are samples,
/// columns are bus indices; values in pu.
struct ScenarioTimeSeries {
  double t0 = 0.0;
  double dt = 6.0;  ///< seconds
  Matrix p_demand;
  Matrix q_demand;
  Matrix p_generation;

  std::size_t samples() const { return static_cast<std::size_t>(p_demand.rows()); }
  Eigen::Index buses() const { return p_demand.cols(); }
  double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
  /// Throws ofo::Error on mismatched shapes, dt <= 0 or non-finite values.
  void validate() const;

  friend bool operator==(const ScenarioTimeSeries&, const ScenarioTimeSeries&) = default;
};

/// A series holding the network's base demand and rated PV scaled by
/// `pv_scale`, repeated `samples` times.
ScenarioTimeSeries constant_series(const RadialNetwork& net, std::size_t samples, double dt, double pv_scale = 1.0);

struct ProfileOptions {
  double pv_floor = 0.5;        ///< PV fraction at the start and end of the horizon
  double pv_peak = 1.0;         ///< PV fraction at mid-horizon
  double cloud_events_per_hour = 6.0;
  std::size_t cloud_min_samples = 5, cloud_max_samples = 20;
  double cloud_depth_min = 0.1, cloud_depth_max = 0.4;
  double pv_noise_std = 0.01;   ///< AR(1) innovation per sample
  double pv_noise_memory = 0.9;
  double load_noise_std = 0.1;
};

/// Synthetic PV bell with seeded cloud dips and AR(1) flicker, plus seeded
/// load fluctuations around each bus's base demand. Deterministic per seed.
ScenarioTimeSeries generate_profiles(std::uint64_t seed, const RadialNetwork& net, double duration_s, double dt,
                                     const ProfileOptions& options = {});

enum class Units { PerUnit, SI };
Units parse_units(std::string_view name);

/// CSV `t,bus,p_demand,q_demand,p_gen`, one row per (sample, bus); SI means
/// kW and kvar, converted with the network's s_base.
void write_profiles(std::ostream& out, const ScenarioTimeSeries& ts, const RadialNetwork& net, Units units);
void save_profiles(const ScenarioTimeSeries& ts, const RadialNetwork& net, const std::filesystem::path& path,
                   Units units = Units::PerUnit);
ScenarioTimeSeries read_profiles(std::istream& in, const RadialNetwork& net, Units units,
                                 const std::string& source = "<profiles>");
ScenarioTimeSeries load_profiles(const std::filesystem::path& path, const RadialNetwork& net,
                                 Units units = Units::PerUnit);

struct RunConfig {
  ControllerKind controller = ControllerKind::Nested;
  ControllerConfig cfg;
  /// Use the network's voltage limits instead of cfg.v_min / cfg.v_max.
  bool limits_from_network = true;
  /// Run the nested controller as message-passing agents.
  bool agents = false;
  PowerFlowOptions plant;
  MeasurementConfig measurement;
  double instant_seconds = 1.0;  ///< how long each setpoint is applied
  long max_outer = 10000;        ///< static runs only

  void validate() const;
};

/// `key = value` lines; every RunConfig and ControllerConfig field.
RunConfig read_run_config(std::istream& in, const std::string& source = "<config>", RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
void write_run_config(std::ostream& out, const RunConfig& rc);

struct Metrics {
  Vector avv_per_bus;
  double avv_worst_bus = 0.0;
  Eigen::Index worst_bus = 0;    ///< bus index
  Eigen::Index monitor_bus = 0;  ///< most sensitive bus (largest X_ii), bus index
  double avv_monitor = 0.0;
  double max_violation = 0.0;
  /// Largest box excursion relative to the DER's reactive capacity.
  double max_capacity_violation = 0.0;
  /// Signed mean of q - q_ref over instants and buses; NaN without a reference.
  double mean_setpoint_deviation_vs_reference = 0.0;
  double mean_iter_time_ms = 0.0;
};

struct RunResult {
  std::string controller;
  double instant_seconds = 1.0;
  std::vector<double> time;
  std::vector<Vector> voltages;  ///< measured, per instant
  std::vector<Vector> setpoints;  ///< implemented, per instant
  std::vector<Vector> lambda, mu;  ///< after the instant's update; empty for controllers without duals
  std::vector<long> iteration;   ///< completed outer iterations before the instant
  std::vector<double> allowance;  ///< permitted box excursion per instant
  std::vector<double> iter_time_ms;
  long outer_iterations = 0;
  bool converged = false;          ///< static runs
  /// k with ||q^{k+1} - q^k|| <= 1e-6 (duals likewise stationary)
  long converged_iteration = -1;
  std::string abort_reason;        ///< non-empty if the plant failed
  Metrics metrics;

  std::size_t instants() const { return voltages.size(); }
  bool aborted() const { return !abort_reason.empty(); }
};

inline constexpr double kStaticTolerance = 1e-6;

/// Average voltage violation per bus. Throws on an empty trace.
Vector compute_avv(const std::vector<Vector>& trace, double v_min, double v_max);

/// Index of the bus with the largest X_ii.
Eigen::Index most_sensitive_bus(const SensitivityMatrices& sens);

std::unique_ptr<Controller> make_run_controller(const RadialNetwork& net, const SensitivityMatrices& sens,
                                                const RunConfig& rc);

/// Injections at one disturbance sample, before the controller's q.
struct Disturbance {
  Vector p;  ///< net active injection p_gen - p_demand
  Vector q_demand;
};

RunResult run_static(const RadialNetwork& net, const Disturbance& d, const RunConfig& rc);
RunResult run_dynamic(const RadialNetwork& net, const ScenarioTimeSeries& ts, const RunConfig& rc);

/// Plant instants per series sample.
std::size_t instants_per_sample(const ScenarioTimeSeries& ts, const RunConfig& rc);

/// Fills the reference deviation metric from a run on the same timeline.
void set_reference(RunResult& result, const RunResult& reference);

/// voltages.csv, setpoints.csv, duals.csv, metrics.csv, timing.csv.
void export_results(const RunResult& result, const std::filesystem::path& dir);

struct CompareRow {
  std::string controller;
  double avv_monitor = 0.0;
  double avv_worst = 0.0;
  std::optional<double> ratio_vs_centralized;
  double max_violation = 0.0;
  double mean_setpoint_deviation = 0.0;
  double mean_iter_time_ms = 0.0;
};

struct Comparison {
  Eigen::Index monitor_bus = 0;
  std::vector<CompareRow> rows;  ///< sorted by avv_monitor, descending
  std::vector<RunResult> runs;   ///< in the requested order
};

Comparison compare(const RadialNetwork& net, const ScenarioTimeSeries& ts, const std::vector<ControllerKind>& kinds,
                   const RunConfig& base);
void write_comparison_table(std::ostream& out, const Comparison& c);
void write_comparison_csv(std::ostream& out, const Comparison& c);

}  // namespace ofo
