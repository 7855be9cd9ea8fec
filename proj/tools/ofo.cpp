#include "ofo/agent_sim.hpp"
#include "ofo/controllers.hpp"
#include "ofo/error.hpp"
#include "ofo/feeder_generator.hpp"
#include "ofo/kernels.hpp"
#include "ofo/network_io.hpp"
#include "ofo/scenario.hpp"
#include "ofo/sensitivity.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

using namespace ofo;

struct GenNetwork {
  std::uint64_t seed = 1;
  std::size_t buses = 10;
  std::string branching = "chain-heavy";
  FeederOptions feeder;
  std::string out;
};

struct GenProfiles {
  std::uint64_t seed = 1;
  std::string net;
  double hours = 0.5;
  double dt = 6.0;
  std::string units = "pu";
  std::string out;
};

struct Run {
  std::string net;
  std::string profiles;
  std::string units = "pu";
  std::string controller = "nested";
  std::string config;
  std::string out;
  bool agents = false;
  bool is_static = false;
  double pv_scale = 1.0;
  std::string message_log;
};

struct Compare {
  std::string net;
  std::string profiles;
  std::string units = "pu";
  std::vector<std::string> controllers{"none", "droop", "two-metric", "truncated", "nested", "centralized"};
  std::string config;
  std::string out;
};

RunConfig base_config(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void print_metrics(const RunResult& r) {
  const Metrics& m = r.metrics;
  std::cout << "controller            " << r.controller << '\n'
            << "instants              " << r.instants() << '\n'
            << "outer iterations      " << r.outer_iterations << '\n';
  if (r.converged) std::cout << "converged at k        " << r.converged_iteration << '\n';
  std::cout << std::scientific << std::setprecision(4)
            << "AVV (bus " << BusId::from_index(m.monitor_bus) << ", monitor)  " << m.avv_monitor << '\n'
            << "AVV worst (bus " << BusId::from_index(m.worst_bus) << ")    " << m.avv_worst_bus << '\n'
            << "max violation         " << m.max_violation << '\n'
            << "max capacity excess   " << m.max_capacity_violation << '\n'
            << std::fixed << std::setprecision(4) << "controller ms/instant " << m.mean_iter_time_ms << '\n';
  std::cout.unsetf(std::ios::floatfield);
}

int gen_network(const GenNetwork& o) {
  const RadialNetwork net = generate_synthetic_feeder(o.seed, o.buses, parse_branching(o.branching), o.feeder);
  save_network(net, o.out);
  std::cout << "wrote " << o.out << " (" << net.buses.size() << " buses, s_base " << net.s_base_kva << " kVA)\n";
  return 0;
}

int gen_profiles(const GenProfiles& o) {
  const RadialNetwork net = load_network(o.net);
  const ScenarioTimeSeries ts = generate_profiles(o.seed, net, o.hours * 3600.0, o.dt);
  save_profiles(ts, net, o.out, parse_units(o.units));
  std::cout << "wrote " << o.out << " (" << ts.samples() << " samples of " << ts.dt << " s)\n";
  return 0;
}

int run(const Run& o) {
  const RadialNetwork net = load_network(o.net);
  RunConfig rc = base_config(o.config);
  rc.controller = parse_controller_kind(o.controller);
  if (o.agents) rc.agents = true;
  RunResult r;
  if (o.is_static) {
    if (!o.profiles.empty()) throw Error("--static and --profiles are mutually exclusive");
    r = run_static(net, {o.pv_scale * net.p_rated() - net.base_p_demand(), net.base_q_demand()}, rc);
  } else {
    if (o.profiles.empty()) throw Error("run needs --profiles (or --static)");
    r = run_dynamic(net, load_profiles(o.profiles, net, parse_units(o.units)), rc);
  }
  if (!o.out.empty()) export_results(r, o.out);
  print_metrics(r);
  if (!o.message_log.empty()) {
    if (rc.controller != ControllerKind::Nested) throw Error("--message-log needs the nested controller");
    // Replay the run through the agent harness to capture its messages.
    const SensitivityMatrices sens = build_sensitivities(net);
    RunConfig arc = rc;
    arc.agents = true;
    auto ctrl = make_run_controller(net, sens, arc);
    auto& agents = dynamic_cast<AgentNestedController&>(*ctrl);
    for (const Vector& v : r.voltages) agents.observe(v);
    const LocalityReport rep = assert_locality(agents.message_log(), agents.graph());
    save_message_log(agents.message_log(), o.message_log);
    std::cout << "messages              " << rep.checked << " (locality " << (rep.pass ? "ok" : "VIOLATED") << ")\n";
  }
  if (r.aborted()) throw PlantFault(r.abort_reason);
  return 0;
}

int compare_cmd(const Compare& o) {
  const RadialNetwork net = load_network(o.net);
  const ScenarioTimeSeries ts = load_profiles(o.profiles, net, parse_units(o.units));
  std::vector<ControllerKind> kinds;
  for (const auto& c : o.controllers) kinds.push_back(parse_controller_kind(c));
  const Comparison c = compare(net, ts, kinds, base_config(o.config));
  write_comparison_table(std::cout, c);
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream csv(std::filesystem::path(o.out) / "comparison.csv");
    write_comparison_csv(csv, c);
    for (const RunResult& r : c.runs) export_results(r, std::filesystem::path(o.out) / r.controller);
  }
  return 0;
}

int check(const std::string& path) {
  const RadialNetwork net = load_network(path);
  const auto violations = validate_topology(net);
  if (!violations.empty()) {
    for (const auto& v : violations) std::cout << "violation: " << v.message << '\n';
    throw Error(std::to_string(violations.size()) + " topology violation(s) in " + path);
  }
  const SensitivityMatrices s = build_sensitivities(net);
  const Eigen::Index monitor = most_sensitive_bus(s);
  std::size_t edges = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    for (Eigen::Index j = i + 1; j < s.size(); ++j) edges += s.adjacency(i, j) ? 1 : 0;
  std::cout << std::setprecision(6) << "topology              ok (" << net.buses.size() << " buses, "
            << net.cables.size() << " cables, " << net.ders.size() << " DERs)\n"
            << "base                  " << net.s_base_kva << " kVA, " << net.v_base_kv << " kV, z_base "
            << net.z_base_ohm() << " ohm\n"
            << "lambda_max(X)         " << max_eigenvalue(s.x) << '\n'
            << "lambda_min(X)         " << min_eigenvalue(s.x) << '\n'
            << "max inner step 2/lmax " << max_inner_step_size(s.x) << '\n'
            << "lambda_max(X^-1)      " << max_eigenvalue(s.x_inv) << '\n'
            << "inverse residual      " << s.inverse_residual << '\n'
            << "sparsity residual     " << s.sparsity_residual << " (tolerance " << kSparsityTolerance << ")\n"
            << "controllable edges    " << edges << '\n'
            << "most sensitive bus    " << BusId::from_index(monitor) << " (X_ii = " << s.x(monitor, monitor)
            << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested online feedback optimization for reactive power control on radial feeders"};
  app.require_subcommand(1);
  std::string kernels = "auto";
  app.add_option("--kernels", kernels, "Numeric kernel backend: scalar, avx2 or auto")
      ->check(CLI::IsMember({"scalar", "avx2", "auto"}))
      ->capture_default_str();

  GenNetwork gn;
  auto* c_gn = app.add_subcommand("gen-network", "Generate a synthetic radial feeder");
  c_gn->add_option("--seed", gn.seed, "Random seed")->capture_default_str();
  c_gn->add_option("--buses", gn.buses, "Bus count including the substation (bus 0)")->capture_default_str();
  c_gn->add_option("--branching", gn.branching, "chain, chain-heavy or random")->capture_default_str();
  c_gn->add_option("--target-rise", gn.feeder.target_rise, "Linearized voltage rise from rated PV, pu")
      ->capture_default_str();
  c_gn->add_option("--q-ratio", gn.feeder.q_ratio, "DER reactive capacity as a fraction of PV rating")
      ->capture_default_str();
  c_gn->add_option("--v0", gn.feeder.v0, "Substation voltage, pu")->capture_default_str();
  c_gn->add_option("--out", gn.out, "Output network file")->required();

  GenProfiles gp;
  auto* c_gp = app.add_subcommand("gen-profiles", "Generate synthetic PV and load profiles for a network");
  c_gp->add_option("--seed", gp.seed, "Random seed")->capture_default_str();
  c_gp->add_option("--net", gp.net, "Network file")->required()->check(CLI::ExistingFile);
  c_gp->add_option("--hours", gp.hours, "Duration in hours")->capture_default_str();
  c_gp->add_option("--dt", gp.dt, "Sample spacing in seconds")->capture_default_str();
  c_gp->add_option("--units", gp.units, "pu or si (kW, kvar)")->check(CLI::IsMember({"pu", "si"}))->capture_default_str();
  c_gp->add_option("--out", gp.out, "Output profile CSV")->required();

  Run rn;
  auto* c_run = app.add_subcommand("run", "Simulate one controller against the AC plant");
  c_run->add_option("--net", rn.net, "Network file")->required()->check(CLI::ExistingFile);
  c_run->add_option("--profiles", rn.profiles, "Profile CSV")->check(CLI::ExistingFile);
  c_run->add_option("--units", rn.units, "Units of the profile CSV: pu or si")
      ->check(CLI::IsMember({"pu", "si"}))
      ->capture_default_str();
  c_run->add_option("--controller", rn.controller, "centralized, nested, two-metric, truncated, droop or none")
      ->check(CLI::IsMember({"centralized", "nested", "two-metric", "truncated", "droop", "none"}))
      ->capture_default_str();
  c_run->add_option("--config", rn.config, "Run config file (key = value)")->check(CLI::ExistingFile);
  c_run->add_option("--out", rn.out, "Directory for result CSVs");
  c_run->add_flag("--agents", rn.agents, "Run the nested controller as message-passing agents");
  c_run->add_flag("--static", rn.is_static, "Freeze the disturbance at base load and rated PV instead of profiles");
  c_run->add_option("--pv-scale", rn.pv_scale, "PV fraction for --static runs")->capture_default_str();
  c_run->add_option("--message-log", rn.message_log, "Write the agent message log CSV (nested only)");

  Compare cp;
  auto* c_cmp = app.add_subcommand("compare", "Run several controllers on one scenario and tabulate AVV");
  c_cmp->add_option("--net", cp.net, "Network file")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--profiles", cp.profiles, "Profile CSV")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--units", cp.units, "Units of the profile CSV: pu or si")
      ->check(CLI::IsMember({"pu", "si"}))
      ->capture_default_str();
  c_cmp->add_option("--controllers", cp.controllers, "Controllers to compare")
      ->check(CLI::IsMember({"centralized", "nested", "two-metric", "truncated", "droop", "none"}))
      ->capture_default_str();
  c_cmp->add_option("--config", cp.config, "Run config file shared by all controllers")->check(CLI::ExistingFile);
  c_cmp->add_option("--out", cp.out, "Directory for comparison.csv and per-controller results");

  std::string check_net;
  auto* c_chk = app.add_subcommand("check", "Validate a network and print sensitivity diagnostics");
  c_chk->add_option("--net", check_net, "Network file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    kernels::set_backend(kernels::parse_backend(kernels));
    if (*c_gn) return gen_network(gn);
    if (*c_gp) return gen_profiles(gp);
    if (*c_run) return run(rn);
    if (*c_cmp) return compare_cmd(cp);
    if (*c_chk) return check(check_net);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
