#include "ofo/agent_sim.hpp"

#include "ofo/error.hpp"
#include "ofo/kernels.hpp"

#include "common/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace ofo {

namespace kd = kernels::detail;

const std::vector<BusId>& CommGraph::of(BusId b) const {
  static const std::vector<BusId> empty;
  auto it = neighbors.find(b);
  return it == neighbors.end() ? empty : it->second;
}

bool CommGraph::has_edge(BusId a, BusId b) const {
  const auto& n = of(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::vector<BusId> CommGraph::controllable_neighbors(BusId b) const {
  std::vector<BusId> out;
  for (BusId n : of(b))
    if (!n.is_slack()) out.push_back(n);
  return out;
}

std::size_t CommGraph::edge_count() const {
  std::size_t directed = 0;
  for (const auto& [_, n] : neighbors) directed += n.size();
  return directed / 2;
}

CommGraph build_comm_graph(const RadialNetwork& net) {
  const Tree tree(net);
  CommGraph g;
  for (const Bus& b : net.buses) g.neighbors[b.id];
  for (const Cable& c : net.cables) {
    g.neighbors[c.from].push_back(c.to);
    g.neighbors[c.to].push_back(c.from);
  }
  for (auto& [_, n] : g.neighbors) std::sort(n.begin(), n.end());
  return g;
}

std::string_view phase_name(AgentPhase p) {
  switch (p) {
    case AgentPhase::Outer: return "outer";
    case AgentPhase::Exploration: return "exploration";
    case AgentPhase::Inner: return "inner";
  }
  return "?";
}

std::vector<AgentState> make_agents(const RadialNetwork& net, const SensitivityMatrices& sens, const Box& box) {
  const Eigen::Index n = net.size();
  if (sens.size() != n || box.size() != n) throw DimensionError("agents: network, sensitivities and box disagree");
  const CommGraph graph = build_comm_graph(net);
  const Vector costs = net.costs();
  std::vector<AgentState> agents(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    AgentState& a = agents[static_cast<std::size_t>(i)];
    a.bus = BusId::from_index(i);
    a.q_min = box.lower[i];
    a.q_max = box.upper[i];
    std::vector<BusId> row = graph.controllable_neighbors(a.bus);
    row.push_back(a.bus);
    std::sort(row.begin(), row.end());
    for (BusId j : row) a.weights.emplace_back(j, sens.x_inv(i, j.index()) * costs[j.index()]);
  }
  return agents;
}

namespace {

class Postman {
 public:
  Postman(const CommGraph& graph, long round, Enforcement enforcement)
      : graph_(graph), round_(round), enforcement_(enforcement) {}

  void send(BusId from, BusId to, std::string name, double value) {
    if (!graph_.has_edge(from, to) && enforcement_ == Enforcement::Enforce) {
      std::ostringstream os;
      os << "round " << round_ << ": bus " << from << " sent '" << name << "' to non-neighbor bus " << to;
      throw LocalityViolation(os.str());
    }
    log_.push_back({from, to, round_, std::move(name), value});
  }

  std::vector<Message> take() { return std::move(log_); }

 private:
  const CommGraph& graph_;
  long round_;
  Enforcement enforcement_;
  std::vector<Message> log_;
};

AgentState& agent_at(std::vector<AgentState>& agents, BusId b) {
  if (b.is_slack() || b.value > agents.size()) {
    std::ostringstream os;
    os << "no agent at bus " << b;
    throw Error(os.str());
  }
  return agents[static_cast<std::size_t>(b.index())];
}

double own_row_dot(const AgentState& a) {
  double s = 0.0;
  for (const auto& [j, w] : a.weights) {
    double qj;
    if (j == a.bus) {
      qj = a.q;
    } else {
      auto it = a.inbox.find(j);
      if (it == a.inbox.end()) {
        std::ostringstream os;
        os << "agent " << a.bus << " has no setpoint from neighbor " << j;
        throw Error(os.str());
      }
      qj = it->second;
    }
    s += w * qj;
  }
  return s;
}

}  // namespace

std::vector<Message> run_round(std::vector<AgentState>& agents, const CommGraph& graph, const Vector& v_meas,
                               AgentPhase phase, long round, const AgentParameters& params,
                               Enforcement enforcement) {
  if (v_meas.size() != static_cast<Eigen::Index>(agents.size()))
    throw DimensionError("run_round: measurement length does not match the agent count");
  const ControllerConfig& cfg = params.cfg;
  Postman post(graph, round, enforcement);

  switch (phase) {
    case AgentPhase::Outer: {
      for (const AgentState& a : agents)
        for (BusId n : graph.controllable_neighbors(a.bus)) post.send(a.bus, n, "q", a.q);
      std::vector<Message> sent = post.take();
      for (const Message& m : sent) agent_at(agents, m.to).inbox[m.from] = m.value;
      for (AgentState& a : agents) {
        const double v = v_meas[a.bus.index()];
        a.v_outer = v;
        a.lambda = kd::dual_upper(a.lambda, v, cfg.v_max, cfg.alpha_d, cfg.r_d);
        a.mu = kd::dual_lower(a.mu, v, cfg.v_min, cfg.alpha_d, cfg.r_d);
        a.q_dot = tentative_element(a.q, own_row_dot(a), a.lambda, a.mu, cfg.alpha, cfg.r_p);
        a.implemented = kd::blend(a.q, a.q_dot, cfg.epsilon);
      }
      return sent;
    }
    case AgentPhase::Exploration:
      for (AgentState& a : agents) {
        a.v_target = kd::extrapolate(a.v_outer, v_meas[a.bus.index()], cfg.epsilon);
        a.u = cfg.inner_start == InnerStart::PreviousSetpoint ? a.q : kd::clip(a.q_dot, a.q_min, a.q_max);
        a.tau = 0;
        a.implemented = a.u;
      }
      return post.take();
    case AgentPhase::Inner:
      for (AgentState& a : agents) {
        a.u = kd::projected(a.u, v_meas[a.bus.index()] - a.v_target, params.alpha_u, a.q_min, a.q_max);
        ++a.tau;
        if (a.tau >= cfg.inner_iterations) a.q = a.u;
        a.implemented = a.u;
      }
      return post.take();
  }
  return {};
}

std::vector<Message> run_round(std::vector<AgentState>& agents, const CommGraph& graph, const PlantCallback& plant,
                               AgentPhase phase, long round, const AgentParameters& params,
                               Enforcement enforcement) {
  Vector q(static_cast<Eigen::Index>(agents.size()));
  for (const AgentState& a : agents) q[a.bus.index()] = a.implemented;
  return run_round(agents, graph, plant(q), phase, round, params, enforcement);
}

LocalityReport assert_locality(const std::vector<Message>& log, const CommGraph& graph) {
  LocalityReport r;
  r.checked = log.size();
  for (const Message& m : log)
    if (!graph.has_edge(m.from, m.to)) r.offending.push_back(m);
  r.pass = r.offending.empty();
  return r;
}

void write_message_log(std::ostream& out, const std::vector<Message>& log) {
  out << "round,from,to,name,value\n";
  for (const Message& m : log)
    out << m.round << ',' << m.from << ',' << m.to << ',' << m.name << ',' << text::format(m.value) << '\n';
}

void save_message_log(const std::vector<Message>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write message log " + path.string());
  write_message_log(out, log);
  if (!out) throw Error("error writing message log " + path.string());
}

AgentNestedController::AgentNestedController(const RadialNetwork& net, const SensitivityMatrices& sens,
                                             const ControllerConfig& cfg)
    : graph_(build_comm_graph(net)) {
  cfg.validate();
  const NestedModel model = make_nested_model(net, sens, cfg);
  agents_ = make_agents(net, sens, model.box);
  params_ = {cfg, model.alpha_u};
  duals_ = DualState::zeros(net.size());
  refresh();
}

void AgentNestedController::refresh() {
  const auto n = static_cast<Eigen::Index>(agents_.size());
  implemented_.resize(n);
  double spread = 0.0;
  for (const AgentState& a : agents_) {
    implemented_[a.bus.index()] = a.implemented;
    duals_.lambda[a.bus.index()] = a.lambda;
    duals_.mu[a.bus.index()] = a.mu;
    spread = std::max(spread, std::abs(a.q_dot - a.q));
  }
  allowance_ = params_.cfg.epsilon * spread;
}

void AgentNestedController::observe(const Vector& v_meas) {
  std::vector<Message> sent = run_round(agents_, graph_, v_meas, phase_, round_, params_, Enforcement::Enforce);
  per_round_.push_back(sent.size());
  log_.insert(log_.end(), std::make_move_iterator(sent.begin()), std::make_move_iterator(sent.end()));
  ++round_;
  switch (phase_) {
    case AgentPhase::Outer: phase_ = AgentPhase::Exploration; break;
    case AgentPhase::Exploration: phase_ = AgentPhase::Inner; break;
    case AgentPhase::Inner:
      if (!agents_.empty() && agents_.front().tau >= params_.cfg.inner_iterations) {
        phase_ = AgentPhase::Outer;
        ++iterations_;
      }
      break;
  }
  refresh();
}

AgentCentralizedController::AgentCentralizedController(const RadialNetwork& net, const SensitivityMatrices& sens,
                                                       const ControllerConfig& cfg, Enforcement enforcement)
    : graph_(build_comm_graph(net)), x_(sens.x), costs_(net.costs()), box_(net.der_box()), cfg_(cfg),
      enforcement_(enforcement), q_(Vector::Zero(net.size())), duals_(DualState::zeros(net.size())) {
  cfg_.validate();
}

void AgentCentralizedController::observe(const Vector& v_meas) {
  const Eigen::Index n = q_.size();
  if (v_meas.size() != n) throw DimensionError("measurement length does not match the agent count");
  Postman post(graph_, round_, enforcement_);
  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    duals_.lambda[i] = kd::dual_upper(duals_.lambda[i], v_meas[i], cfg_.v_max, cfg_.alpha_d, cfg_.r_d);
    duals_.mu[i] = kd::dual_lower(duals_.mu[i], v_meas[i], cfg_.v_min, cfg_.alpha_d, cfg_.r_d);
    w[i] = duals_.lambda[i] - duals_.mu[i] + cfg_.r_p * q_[i];
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) post.send(BusId::from_index(i), BusId::from_index(j), "dual_term", w[i]);
  const Vector xw = x_ * w;
  for (Eigen::Index i = 0; i < n; ++i)
    q_[i] = kd::projected(q_[i], costs_[i] * q_[i] + xw[i], cfg_.alpha, box_.lower[i], box_.upper[i]);
  std::vector<Message> sent = post.take();
  log_.insert(log_.end(), std::make_move_iterator(sent.begin()), std::make_move_iterator(sent.end()));
  ++round_;
}

}  // namespace ofo
