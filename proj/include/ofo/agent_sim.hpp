#pragma once

#include "ofo/controllers.hpp"
#include "ofo/network.hpp"
#include "ofo/sensitivity.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ofo {

/// Communication graph equal to the electrical adjacency. Bus 0 appears as
/// a passive endpoint: it is listed as a neighbor but runs no agent.
struct CommGraph {
  std::map<BusId, std::vector<BusId>> neighbors;  ///< sorted

  const std::vector<BusId>& of(BusId b) const;
  bool has_edge(BusId a, BusId b) const;
  /// Neighbors of `b` excluding the substation.
  std::vector<BusId> controllable_neighbors(BusId b) const;
  std::size_t edge_count() const;
};

CommGraph build_comm_graph(const RadialNetwork& net);

struct Message {
  BusId from;
  BusId to;
  long round = 0;
  std::string name;
  double value = 0.0;

  friend bool operator==(const Message&, const Message&) = default;
};

enum class AgentPhase { Outer, Exploration, Inner };

std::string_view phase_name(AgentPhase p);

/// Local state of the agent at one controllable bus. The only grid data it
/// holds are its own X^-1 row entries for itself and its neighbors.
struct AgentState {
  BusId bus;
  double q_min = 0.0, q_max = 0.0;
  /// (bus, X^-1_ij c_j) for j in {i} and its controllable neighbors, sorted.
  std::vector<std::pair<BusId, double>> weights;

  double q = 0.0;
  double lambda = 0.0, mu = 0.0;
  double q_dot = 0.0;
  double v_outer = 0.0;
  double u = 0.0;
  double v_target = 0.0;
  double implemented = 0.0;
  int tau = 0;

  /// Latest setpoints received from neighbors.
  std::map<BusId, double> inbox;
};

/// Provisions one agent per controllable bus (the commissioning step).
std::vector<AgentState> make_agents(const RadialNetwork& net, const SensitivityMatrices& sens, const Box& box);

enum class Enforcement {
  Enforce,  ///< a non-neighbor message throws LocalityViolation
  Audit,    ///< non-neighbor messages are delivered and logged
};

/// Parameters shared by every agent; scalar constants only.
struct AgentParameters {
  ControllerConfig cfg;
  double alpha_u = 0.0;
};

/// One synchronous super-step given the voltages measured at the currently
/// implemented setpoints (indexed by bus index). Outer rounds exchange the
/// setpoints q^k along every comm-graph edge before computing; exploration
/// and inner rounds are purely local. Returns the messages of this round.
std::vector<Message> run_round(std::vector<AgentState>& agents, const CommGraph& graph, const Vector& v_meas,
                               AgentPhase phase, long round, const AgentParameters& params,
                               Enforcement enforcement = Enforcement::Enforce);

/// Implements the agents' setpoints on `plant`, then runs the round.
std::vector<Message> run_round(std::vector<AgentState>& agents, const CommGraph& graph, const PlantCallback& plant,
                               AgentPhase phase, long round, const AgentParameters& params,
                               Enforcement enforcement = Enforcement::Enforce);

struct LocalityReport {
  bool pass = true;
  std::size_t checked = 0;
  std::vector<Message> offending;
};

LocalityReport assert_locality(const std::vector<Message>& log, const CommGraph& graph);

/// CSV with header `round,from,to,name,value`.
void write_message_log(std::ostream& out, const std::vector<Message>& log);
void save_message_log(const std::vector<Message>& log, const std::filesystem::path& path);

/// Nested OFO run as per-bus agents; drop-in for NestedController.
class AgentNestedController final : public Controller {
 public:
  AgentNestedController(const RadialNetwork& net, const SensitivityMatrices& sens, const ControllerConfig& cfg);

  ControllerKind kind() const override { return ControllerKind::Nested; }
  const Vector& setpoint() const override { return implemented_; }
  void observe(const Vector& v_meas) override;
  bool at_iteration_start() const override { return phase_ == AgentPhase::Outer; }
  long iterations() const override { return iterations_; }
  const DualState* duals() const override { return &duals_; }
  double excursion_allowance() const override { return phase_ == AgentPhase::Exploration ? allowance_ : 0.0; }

  const CommGraph& graph() const { return graph_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<Message>& message_log() const { return log_; }
  /// Messages sent in each round, in round order.
  const std::vector<std::size_t>& messages_per_round() const { return per_round_; }

 private:
  void refresh();

  CommGraph graph_;
  std::vector<AgentState> agents_;
  AgentParameters params_;
  AgentPhase phase_ = AgentPhase::Outer;
  long round_ = 0;
  long iterations_ = 0;
  Vector implemented_;
  DualState duals_;
  double allowance_ = 0.0;
  std::vector<Message> log_;
  std::vector<std::size_t> per_round_;
};

/// Centralized PDGP driven through the agent harness. Every agent needs the
/// dual-weighted terms of all buses, so each round broadcasts them to every
/// other agent; in Audit mode the messages are logged for assert_locality.
class AgentCentralizedController final : public Controller {
 public:
  AgentCentralizedController(const RadialNetwork& net, const SensitivityMatrices& sens, const ControllerConfig& cfg,
                             Enforcement enforcement = Enforcement::Audit);

  ControllerKind kind() const override { return ControllerKind::Centralized; }
  const Vector& setpoint() const override { return q_; }
  void observe(const Vector& v_meas) override;
  long iterations() const override { return round_; }
  const DualState* duals() const override { return &duals_; }

  const CommGraph& graph() const { return graph_; }
  const std::vector<Message>& message_log() const { return log_; }

 private:
  CommGraph graph_;
  Matrix x_;
  Vector costs_;
  Box box_;
  ControllerConfig cfg_;
  Enforcement enforcement_;
  Vector q_;
  DualState duals_;
  long round_ = 0;
  std::vector<Message> log_;
};

}  // namespace ofo
