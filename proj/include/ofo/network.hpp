#pragma once

#include "ofo/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace ofo {

/// Cable between `from` (closer to the substation) and `to`. Impedances in pu.
struct Cable {
  BusId from;
  BusId to;
  double resistance = 0.0;
  double reactance = 0.0;

  friend bool operator==(const Cable&, const Cable&) = default;
};

/// Reactive-power capable DER at a bus. All powers in pu.
struct DerSpec {
  BusId bus;
  double q_min = 0.0;
  double q_max = 0.0;
  double cost = 1.0;
  /// Active-power rating of the PV unit; scales generation profiles.
  double p_rated = 0.0;

  friend bool operator==(const DerSpec&, const DerSpec&) = default;
};

/// Per-bus base demand (pu), scaled by load profiles.
struct Bus {
  BusId id;
  double base_p_demand = 0.0;
  double base_q_demand = 0.0;

  friend bool operator==(const Bus&, const Bus&) = default;
};

/// Balanced radial feeder. Everything is stored in per-unit; s_base and
/// v_base are kept for file conversion only.
struct RadialNetwork {
  std::vector<Bus> buses;
  std::vector<Cable> cables;
  std::map<BusId, DerSpec> ders;
  double v0 = 1.0;
  double v_min = 0.95;
  double v_max = 1.05;
  double s_base_kva = 100.0;
  double v_base_kv = 0.4;

  /// N, the number of non-slack buses.
  Eigen::Index size() const { return static_cast<Eigen::Index>(buses.size()) - 1; }
  double z_base_ohm() const { return v_base_kv * v_base_kv * 1000.0 / s_base_kva; }

  Box der_box() const;
  Vector costs() const;
  Vector base_p_demand() const;
  Vector base_q_demand() const;
  Vector p_rated() const;

  friend bool operator==(const RadialNetwork&, const RadialNetwork&) = default;
};

enum class ViolationKind {
  MissingSlack,
  DuplicateBus,
  NonContiguousBus,
  UnknownBus,
  CableCount,
  Cycle,
  Disconnected,
  Orientation,
  NonpositiveResistance,
  NonpositiveReactance,
  MissingDer,
  DerLimits,
  DerCost,
  VoltageLimits,
};

struct TopologyViolation {
  ViolationKind kind;
  std::string message;
};

/// Every broken RadialNetwork invariant, one entry each. Empty means valid.
std::vector<TopologyViolation> validate_topology(const RadialNetwork& net);

/// Parent/child structure of a validated tree, in breadth-first order.
class Tree {
 public:
  /// Throws ofo::Error listing the violations if `net` is not a valid tree.
  explicit Tree(const RadialNetwork& net);

  std::size_t bus_count() const { return parent_.size(); }
  BusId parent(BusId b) const { return BusId(parent_[b.value]); }
  /// Index into net.cables of the cable feeding `b` (undefined for the slack).
  std::size_t feeder_cable(BusId b) const { return feeder_[b.value]; }
  std::size_t depth(BusId b) const { return depth_[b.value]; }
  const std::vector<BusId>& children(BusId b) const { return children_[b.value]; }
  /// Root first; every bus appears after its parent.
  const std::vector<BusId>& order() const { return order_; }
  BusId lowest_common_ancestor(BusId a, BusId b) const;

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> feeder_;
  std::vector<std::size_t> depth_;
  std::vector<std::vector<BusId>> children_;
  std::vector<BusId> order_;
};

/// Cables on the unique path from the substation to `bus`, root first.
/// Throws ofo::Error for an unknown bus; empty for the slack bus.
std::vector<Cable> path_cables(const RadialNetwork& net, BusId bus);

}  // namespace ofo
