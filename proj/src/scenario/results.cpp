#include "ofo/scenario.hpp"

#include "ofo/error.hpp"

#include "common/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace ofo {
namespace {

using text::format;

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void close(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error("error writing " + path.string());
}

void header(std::ostream& out, std::string_view lead, std::string_view prefix, Eigen::Index n) {
  out << lead;
  for (Eigen::Index i = 0; i < n; ++i) out << ',' << prefix << BusId::from_index(i);
}

void row(std::ostream& out, const Vector& v) {
  for (double x : v) out << ',' << format(x);
}

}  // namespace

void export_results(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  const Eigen::Index n = r.metrics.avv_per_bus.size();

  {
    const auto path = dir / "voltages.csv";
    auto out = open(path);
    header(out, "instant,t", "v_", n);
    out << '\n';
    for (std::size_t k = 0; k < r.instants(); ++k) {
      out << k << ',' << format(r.time[k]);
      row(out, r.voltages[k]);
      out << '\n';
    }
    close(out, path);
  }
  {
    const auto path = dir / "setpoints.csv";
    auto out = open(path);
    header(out, "instant,t,iteration", "q_", n);
    out << '\n';
    for (std::size_t k = 0; k < r.instants(); ++k) {
      out << k << ',' << format(r.time[k]) << ',' << r.iteration[k];
      row(out, r.setpoints[k]);
      out << '\n';
    }
    close(out, path);
  }
  {
    const auto path = dir / "duals.csv";
    auto out = open(path);
    header(out, "instant,t", "lambda_", n);
    for (Eigen::Index i = 0; i < n; ++i) out << ",mu_" << BusId::from_index(i);
    out << '\n';
    for (std::size_t k = 0; k < r.lambda.size(); ++k) {
      out << k << ',' << format(r.time[k]);
      row(out, r.lambda[k]);
      row(out, r.mu[k]);
      out << '\n';
    }
    close(out, path);
  }
  {
    const auto path = dir / "metrics.csv";
    auto out = open(path);
    const Metrics& m = r.metrics;
    out << "key,value\n"
        << "controller," << r.controller << '\n'
        << "instants," << r.instants() << '\n'
        << "outer_iterations," << r.outer_iterations << '\n'
        << "converged," << (r.converged ? 1 : 0) << '\n'
        << "aborted," << (r.aborted() ? 1 : 0) << '\n'
        << "avv_worst_bus," << format(m.avv_worst_bus) << '\n'
        << "worst_bus," << BusId::from_index(m.worst_bus) << '\n'
        << "monitor_bus," << BusId::from_index(m.monitor_bus) << '\n'
        << "avv_monitor," << format(m.avv_monitor) << '\n'
        << "max_violation," << format(m.max_violation) << '\n'
        << "max_capacity_violation," << format(m.max_capacity_violation) << '\n'
        << "mean_setpoint_deviation," << format(m.mean_setpoint_deviation_vs_reference) << '\n';
    for (Eigen::Index i = 0; i < n; ++i) out << "avv_" << BusId::from_index(i) << ',' << format(m.avv_per_bus[i]) << '\n';
    close(out, path);
  }
  {
    const auto path = dir / "timing.csv";
    auto out = open(path);
    out << "instant,controller_ms\n";
    for (std::size_t k = 0; k < r.iter_time_ms.size(); ++k) out << k << ',' << format(r.iter_time_ms[k]) << '\n';
    out << "mean," << format(r.metrics.mean_iter_time_ms) << '\n';
    close(out, path);
  }
}

Comparison compare(const RadialNetwork& net, const ScenarioTimeSeries& ts, const std::vector<ControllerKind>& kinds,
                   const RunConfig& base) {
  if (kinds.empty()) throw Error("compare: no controllers given");
  Comparison c;
  const RunResult* centralized = nullptr;
  for (ControllerKind k : kinds) {
    RunConfig rc = base;
    rc.controller = k;
    if (k != ControllerKind::Nested) rc.agents = false;
    c.runs.push_back(run_dynamic(net, ts, rc));
    if (c.runs.back().aborted())
      throw PlantFault("compare: " + std::string(controller_name(k)) + " run aborted: " + c.runs.back().abort_reason);
  }
  for (std::size_t i = 0; i < kinds.size(); ++i)
    if (kinds[i] == ControllerKind::Centralized) centralized = &c.runs[i];
  c.monitor_bus = c.runs.front().metrics.monitor_bus;
  for (RunResult& r : c.runs) {
    if (centralized) set_reference(r, *centralized);
    CompareRow row;
    row.controller = r.controller;
    row.avv_monitor = r.metrics.avv_monitor;
    row.avv_worst = r.metrics.avv_worst_bus;
    if (centralized && centralized->metrics.avv_monitor > 0.0)
      row.ratio_vs_centralized = r.metrics.avv_monitor / centralized->metrics.avv_monitor;
    row.max_violation = r.metrics.max_violation;
    row.mean_setpoint_deviation = r.metrics.mean_setpoint_deviation_vs_reference;
    row.mean_iter_time_ms = r.metrics.mean_iter_time_ms;
    c.rows.push_back(row);
  }
  std::stable_sort(c.rows.begin(), c.rows.end(),
                   [](const CompareRow& a, const CompareRow& b) { return a.avv_monitor > b.avv_monitor; });
  return c;
}

void write_comparison_table(std::ostream& out, const Comparison& c) {
  std::ostringstream title;
  title << "Average voltage violation at bus " << BusId::from_index(c.monitor_bus) << " (most sensitive)";
  out << title.str() << '\n' << std::string(title.str().size(), '-') << '\n';
  out << std::left << std::setw(14) << "approach" << std::right << std::setw(14) << "AVV [pu]" << std::setw(16)
      << "w.r.t. central" << std::setw(14) << "worst AVV" << std::setw(14) << "max viol" << std::setw(13)
      << "ms/instant" << '\n';
  for (const CompareRow& r : c.rows) {
    std::ostringstream ratio;
    if (r.ratio_vs_centralized) ratio << std::fixed << std::setprecision(2) << *r.ratio_vs_centralized;
    else ratio << "-";
    out << std::left << std::setw(14) << r.controller << std::right << std::scientific << std::setprecision(3)
        << std::setw(14) << r.avv_monitor << std::setw(16) << ratio.str() << std::setw(14) << r.avv_worst
        << std::setw(14) << r.max_violation << std::fixed << std::setprecision(4) << std::setw(13)
        << r.mean_iter_time_ms << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

void write_comparison_csv(std::ostream& out, const Comparison& c) {
  out << "controller,avv_monitor,ratio_vs_centralized,avv_worst,max_violation,mean_setpoint_deviation\n";
  for (const CompareRow& r : c.rows)
    out << r.controller << ',' << format(r.avv_monitor) << ','
        << (r.ratio_vs_centralized ? format(*r.ratio_vs_centralized) : std::string()) << ',' << format(r.avv_worst)
        << ',' << format(r.max_violation) << ',' << format(r.mean_setpoint_deviation) << '\n';
}

}  // namespace ofo
