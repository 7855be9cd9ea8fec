#include "ofo/network.hpp"

#include "ofo/error.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

namespace ofo {
namespace {

std::string cable_name(const Cable& c) {
  std::ostringstream os;
  os << "(" << c.from << "," << c.to << ")";
  return os.str();
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

Box RadialNetwork::der_box() const {
  const Eigen::Index n = size();
  Box box{Vector::Zero(n), Vector::Zero(n)};
  for (const auto& [bus, der] : ders) {
    if (bus.is_slack() || bus.index() >= n) continue;
    box.lower[bus.index()] = der.q_min;
    box.upper[bus.index()] = der.q_max;
  }
  return box;
}

Vector RadialNetwork::costs() const {
  Vector c = Vector::Ones(size());
  for (const auto& [bus, der] : ders)
    if (!bus.is_slack() && bus.index() < size()) c[bus.index()] = der.cost;
  return c;
}

Vector RadialNetwork::p_rated() const {
  Vector p = Vector::Zero(size());
  for (const auto& [bus, der] : ders)
    if (!bus.is_slack() && bus.index() < size()) p[bus.index()] = der.p_rated;
  return p;
}

Vector RadialNetwork::base_p_demand() const {
  Vector p = Vector::Zero(size());
  for (const auto& b : buses)
    if (!b.id.is_slack() && b.id.index() < size()) p[b.id.index()] = b.base_p_demand;
  return p;
}

Vector RadialNetwork::base_q_demand() const {
  Vector q = Vector::Zero(size());
  for (const auto& b : buses)
    if (!b.id.is_slack() && b.id.index() < size()) q[b.id.index()] = b.base_q_demand;
  return q;
}

std::vector<TopologyViolation> validate_topology(const RadialNetwork& net) {
  std::vector<TopologyViolation> out;
  auto report = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  const std::size_t n_bus = net.buses.size();
  std::vector<int> seen(n_bus, 0);
  bool slack = false;
  for (const auto& b : net.buses) {
    if (b.id.is_slack()) slack = true;
    if (b.id.value >= n_bus) {
      report(ViolationKind::NonContiguousBus,
             "bus id " + std::to_string(b.id.value) + " outside 0.." + std::to_string(n_bus == 0 ? 0 : n_bus - 1));
      continue;
    }
    if (++seen[b.id.value] == 2) report(ViolationKind::DuplicateBus, "duplicate bus id " + std::to_string(b.id.value));
  }
  if (!slack) report(ViolationKind::MissingSlack, "substation bus 0 missing");
  auto known = [&](BusId b) { return b.value < n_bus && seen[b.value] > 0; };

  DisjointSets sets(n_bus);
  bool cycle = false;
  for (const auto& c : net.cables) {
    if (!known(c.from) || !known(c.to)) {
      report(ViolationKind::UnknownBus, "cable " + cable_name(c) + " references an unknown bus");
      continue;
    }
    if (!(c.resistance > 0.0))
      report(ViolationKind::NonpositiveResistance, "nonpositive resistance at " + cable_name(c));
    if (!(c.reactance > 0.0))
      report(ViolationKind::NonpositiveReactance, "nonpositive reactance at " + cable_name(c));
    if (!sets.unite(c.from.value, c.to.value)) {
      cycle = true;
      report(ViolationKind::Cycle, "cycle detected at cable " + cable_name(c));
    }
  }

  const std::size_t n = n_bus == 0 ? 0 : n_bus - 1;
  if (!cycle && net.cables.size() != n)
    report(ViolationKind::CableCount, "expected " + std::to_string(n) + " cables for " + std::to_string(n_bus) +
                                          " buses, found " + std::to_string(net.cables.size()));

  bool connected = true;
  if (slack) {
    std::vector<std::size_t> isolated;
    for (std::size_t b = 1; b < n_bus; ++b)
      if (seen[b] > 0 && sets.find(b) != sets.find(0)) isolated.push_back(b);
    if (!isolated.empty()) {
      connected = false;
      std::string list;
      for (auto b : isolated) list += (list.empty() ? "" : ",") + std::to_string(b);
      report(ViolationKind::Disconnected, "buses not connected to the substation: " + list);
    }
  }

  // Orientation only makes sense on an actual tree.
  if (slack && !cycle && connected && out.empty()) {
    std::vector<std::vector<std::size_t>> adj(n_bus);
    for (const auto& c : net.cables) {
      adj[c.from.value].push_back(c.to.value);
      adj[c.to.value].push_back(c.from.value);
    }
    std::vector<std::size_t> depth(n_bus, 0);
    std::vector<bool> visited(n_bus, false);
    std::queue<std::size_t> frontier;
    frontier.push(0);
    visited[0] = true;
    while (!frontier.empty()) {
      auto b = frontier.front();
      frontier.pop();
      for (auto nb : adj[b])
        if (!visited[nb]) {
          visited[nb] = true;
          depth[nb] = depth[b] + 1;
          frontier.push(nb);
        }
    }
    for (const auto& c : net.cables)
      if (depth[c.from.value] + 1 != depth[c.to.value])
        report(ViolationKind::Orientation, "cable " + cable_name(c) + " is not oriented away from the substation");
  }

  for (std::size_t b = 1; b < n_bus; ++b)
    if (seen[b] > 0 && !net.ders.contains(BusId(b)))
      report(ViolationKind::MissingDer, "bus " + std::to_string(b) + " has no DER entry");
  for (const auto& [bus, der] : net.ders) {
    if (bus.is_slack() || !known(bus) || der.bus != bus) {
      report(ViolationKind::UnknownBus, "DER entry for invalid bus " + std::to_string(bus.value));
      continue;
    }
    if (!(der.q_min <= 0.0 && der.q_max >= 0.0))
      report(ViolationKind::DerLimits, "DER at bus " + std::to_string(bus.value) + " must satisfy q_min <= 0 <= q_max");
    if (!(der.cost > 0.0)) report(ViolationKind::DerCost, "DER at bus " + std::to_string(bus.value) + " needs cost > 0");
  }

  if (!(net.v0 > 0.0) || !(net.v_min < net.v_max))
    report(ViolationKind::VoltageLimits, "need v0 > 0 and v_min < v_max");
  return out;
}

Tree::Tree(const RadialNetwork& net) {
  if (auto v = validate_topology(net); !v.empty()) {
    std::string msg = "invalid radial network:";
    for (const auto& e : v) msg += "\n  " + e.message;
    throw Error(msg);
  }
  const std::size_t n = net.buses.size();
  parent_.assign(n, 0);
  feeder_.assign(n, 0);
  depth_.assign(n, 0);
  children_.assign(n, {});
  for (std::size_t k = 0; k < net.cables.size(); ++k) {
    const auto& c = net.cables[k];
    parent_[c.to.value] = c.from.value;
    feeder_[c.to.value] = k;
    children_[c.from.value].push_back(c.to);
  }
  for (auto& ch : children_) std::sort(ch.begin(), ch.end());
  order_.reserve(n);
  order_.push_back(BusId(0));
  for (std::size_t head = 0; head < order_.size(); ++head) {
    for (auto c : children_[order_[head].value]) {
      depth_[c.value] = depth_[order_[head].value] + 1;
      order_.push_back(c);
    }
  }
}

BusId Tree::lowest_common_ancestor(BusId a, BusId b) const {
  std::size_t x = a.value, y = b.value;
  while (depth_[x] > depth_[y]) x = parent_[x];
  while (depth_[y] > depth_[x]) y = parent_[y];
  while (x != y) {
    x = parent_[x];
    y = parent_[y];
  }
  return BusId(x);
}

std::vector<Cable> path_cables(const RadialNetwork& net, BusId bus) {
  const Tree tree(net);
  if (bus.value >= tree.bus_count()) throw Error("unknown bus id " + std::to_string(bus.value));
  std::vector<Cable> path;
  for (BusId b = bus; !b.is_slack(); b = tree.parent(b)) path.push_back(net.cables[tree.feeder_cable(b)]);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace ofo
