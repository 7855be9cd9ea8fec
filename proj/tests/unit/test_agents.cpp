#include "ofo/agent_sim.hpp"
#include "ofo/error.hpp"
#include "ofo/power_flow.hpp"
#include "ofo/scenario.hpp"

#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace ofo;
using ofo::test::tree_network;

namespace {

RadialNetwork chain(std::size_t n) {
  std::vector<std::size_t> parent(n + 1);
  for (std::size_t j = 1; j <= n; ++j) parent[j] = j - 1;
  return tree_network(parent, std::vector<double>(n + 1, 0.01), std::vector<double>(n + 1, 0.02));
}

RadialNetwork star(std::size_t n) {
  return tree_network(std::vector<std::size_t>(n + 1, 0), std::vector<double>(n + 1, 0.01),
                      std::vector<double>(n + 1, 0.02));
}

struct Rig {
  RadialNetwork net;
  SensitivityMatrices sens;
  CommGraph graph;
  std::vector<AgentState> agents;
  AgentParameters params;
};

Rig rig(RadialNetwork net) {
  Rig r{std::move(net), {}, {}, {}, {}};
  r.sens = build_sensitivities(r.net);
  r.graph = build_comm_graph(r.net);
  r.agents = make_agents(r.net, r.sens, r.net.der_box());
  r.params.alpha_u = 0.9 * max_inner_step_size(r.sens.x);
  return r;
}

}  // namespace

TEST_CASE("comm graph follows the cables") {
  const CommGraph c = build_comm_graph(chain(4));
  CHECK(c.edge_count() == 4);
  CHECK(c.of(BusId(2)) == std::vector<BusId>{BusId(1), BusId(3)});
  CHECK(c.of(BusId(1)) == std::vector<BusId>{BusId(0), BusId(2)});
  CHECK(c.controllable_neighbors(BusId(1)) == std::vector<BusId>{BusId(2)});
  CHECK(c.has_edge(BusId(3), BusId(4)));
  CHECK_FALSE(c.has_edge(BusId(1), BusId(3)));

  const CommGraph s = build_comm_graph(star(5));
  CHECK(s.edge_count() == 5);
  for (std::size_t j = 1; j <= 5; ++j) {
    CHECK(s.controllable_neighbors(BusId(j)).empty());
    CHECK(s.has_edge(BusId(0), BusId(j)));
  }
  CHECK_FALSE(s.has_edge(BusId(1), BusId(2)));

  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const CommGraph g = build_comm_graph(test::random_tree(rng, 12));
    CHECK(g.edge_count() == 12);
    for (const auto& [a, list] : g.neighbors)
      for (BusId b : list) CHECK(g.has_edge(b, a));
  }
}

TEST_CASE("agents hold only their own X^-1 row entries") {
  Rig r = rig(chain(5));
  REQUIRE(r.agents.size() == 5);
  for (const AgentState& a : r.agents) {
    std::vector<BusId> expected = r.graph.controllable_neighbors(a.bus);
    expected.push_back(a.bus);
    std::sort(expected.begin(), expected.end());
    std::vector<BusId> held;
    for (const auto& [b, w] : a.weights) held.push_back(b);
    CHECK(held == expected);
  }
}

TEST_CASE("message counts per round") {
  const std::size_t n = 6;
  Rig r = rig(chain(n));
  const Vector v = Vector::Constant(n, 1.0);
  CHECK(run_round(r.agents, r.graph, v, AgentPhase::Outer, 0, r.params).size() == 2 * (n - 1));
  CHECK(run_round(r.agents, r.graph, v, AgentPhase::Exploration, 1, r.params).empty());
  for (long k = 2; k < 6; ++k) CHECK(run_round(r.agents, r.graph, v, AgentPhase::Inner, k, r.params).empty());

  Rig s = rig(star(4));
  CHECK(run_round(s.agents, s.graph, Vector(Vector::Constant(4, 1.0)), AgentPhase::Outer, 0, s.params).empty());
}

TEST_CASE("agent rounds are deterministic") {
  auto once = [] {
    Rig r = rig(chain(5));
    std::vector<Message> all;
    const Vector v = Vector::LinSpaced(5, 1.03, 1.07);
    for (long k = 0; k < 12; ++k) {
      const AgentPhase p = k % 6 == 0 ? AgentPhase::Outer : k % 6 == 1 ? AgentPhase::Exploration : AgentPhase::Inner;
      const auto m = run_round(r.agents, r.graph, v, p, k, r.params);
      all.insert(all.end(), m.begin(), m.end());
    }
    return all;
  };
  CHECK(once() == once());
}

TEST_CASE("nested agents respect locality and match the monolithic controller") {
  const auto sc = test::static_case();
  const auto sens = build_sensitivities(sc.net);
  ControllerConfig cfg;
  cfg.v_min = sc.net.v_min;
  cfg.v_max = sc.net.v_max;
  AgentNestedController agents(sc.net, sens, cfg);
  auto mono = make_controller(ControllerKind::Nested, {sc.net, sens, cfg});
  const SweepSolver solver(sc.net);
  for (int k = 0; k < 300; ++k) {
    REQUIRE(agents.setpoint() == mono->setpoint());
    const Vector v = solver.solve({sc.disturbance.p, mono->setpoint() - sc.disturbance.q_demand}).voltages.v;
    agents.observe(v);
    mono->observe(v);
    CHECK(agents.iterations() == mono->iterations());
    CHECK(agents.excursion_allowance() == mono->excursion_allowance());
  }
  CHECK(agents.duals()->lambda == mono->duals()->lambda);
  CHECK(agents.duals()->mu == mono->duals()->mu);

  const LocalityReport rep = assert_locality(agents.message_log(), agents.graph());
  CHECK(rep.pass);
  CHECK(rep.checked == agents.message_log().size());
  CHECK(rep.checked > 0);
  const std::size_t rounds_per_iter = 2 + static_cast<std::size_t>(cfg.inner_iterations);
  for (std::size_t k = 0; k < agents.messages_per_round().size(); ++k)
    CHECK(agents.messages_per_round()[k] == (k % rounds_per_iter == 0 ? 2 * sc.net.cables.size() -
                                                                               2 * agents.graph().of(BusId(0)).size()
                                                                         : 0));
}

TEST_CASE("locality check flags the centralized harness and injected messages") {
  const auto sc = test::static_case();
  const auto sens = build_sensitivities(sc.net);
  ControllerConfig cfg;
  AgentCentralizedController central(sc.net, sens, cfg);
  const SweepSolver solver(sc.net);
  for (int k = 0; k < 3; ++k)
    central.observe(solver.solve({sc.disturbance.p, central.setpoint() - sc.disturbance.q_demand}).voltages.v);
  const LocalityReport rep = assert_locality(central.message_log(), central.graph());
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.offending.empty());
  for (const Message& m : rep.offending) CHECK_FALSE(central.graph().has_edge(m.from, m.to));

  AgentNestedController nested(sc.net, sens, cfg);
  for (int k = 0; k < 6; ++k)
    nested.observe(solver.solve({sc.disturbance.p, nested.setpoint() - sc.disturbance.q_demand}).voltages.v);
  std::vector<Message> log = nested.message_log();
  const Message bad{BusId(1), BusId(9), 0, "q", 0.0};
  REQUIRE_FALSE(nested.graph().has_edge(bad.from, bad.to));
  log.push_back(bad);
  const LocalityReport injected = assert_locality(log, nested.graph());
  CHECK_FALSE(injected.pass);
  REQUIRE(injected.offending.size() == 1);
  CHECK(injected.offending.front() == bad);

  CHECK_THROWS_AS(AgentCentralizedController(sc.net, sens, cfg, Enforcement::Enforce)
                      .observe(Vector::Constant(sc.net.size(), 1.0)),
                  LocalityViolation);
}

TEST_CASE("message log CSV") {
  std::ostringstream out;
  write_message_log(out, {{BusId(1), BusId(2), 3, "q", 0.25}, {BusId(2), BusId(1), 3, "q", -1e-3}});
  CHECK(out.str() == "round,from,to,name,value\n3,1,2,q,0.25\n3,2,1,q,-0.001\n");
}

TEST_CASE("agent runs through run_dynamic equal the monolithic run") {
  const auto sc = test::static_case();
  const ScenarioTimeSeries ts = constant_series(sc.net, 20, 6.0, 0.8);
  RunConfig rc;
  rc.controller = ControllerKind::Nested;
  const RunResult mono = run_dynamic(sc.net, ts, rc);
  rc.agents = true;
  const RunResult agents = run_dynamic(sc.net, ts, rc);
  REQUIRE(mono.instants() == agents.instants());
  for (std::size_t k = 0; k < mono.instants(); ++k) {
    CHECK(mono.setpoints[k] == agents.setpoints[k]);
    CHECK(mono.voltages[k] == agents.voltages[k]);
  }
}
