#include "ofo/scenario.hpp"

#include "ofo/error.hpp"

#include "common/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>

namespace ofo {

void ScenarioTimeSeries::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error("time series: dt must be positive, got " + text::format(dt));
  if (!std::isfinite(t0)) throw Error("time series: t0 is not finite");
  if (q_demand.rows() != p_demand.rows() || p_generation.rows() != p_demand.rows() ||
      q_demand.cols() != p_demand.cols() || p_generation.cols() != p_demand.cols())
    throw Error("time series: p_demand, q_demand and p_generation differ in shape");
  if (samples() == 0) throw Error("time series has no samples");
  if (!p_demand.allFinite() || !q_demand.allFinite() || !p_generation.allFinite())
    throw Error("time series contains non-finite values");
}

ScenarioTimeSeries constant_series(const RadialNetwork& net, std::size_t samples, double dt, double pv_scale) {
  const auto k = static_cast<Eigen::Index>(samples);
  ScenarioTimeSeries ts;
  ts.dt = dt;
  ts.p_demand = net.base_p_demand().transpose().replicate(k, 1);
  ts.q_demand = net.base_q_demand().transpose().replicate(k, 1);
  ts.p_generation = (pv_scale * net.p_rated()).transpose().replicate(k, 1);
  ts.validate();
  return ts;
}

ScenarioTimeSeries generate_profiles(std::uint64_t seed, const RadialNetwork& net, double duration_s, double dt,
                                     const ProfileOptions& o) {
  if (!(duration_s > 0.0)) throw Error("profile duration must be positive");
  if (!(dt > 0.0)) throw Error("profile dt must be positive");
  if (o.cloud_min_samples < 1 || o.cloud_max_samples < o.cloud_min_samples)
    throw Error("cloud event length bounds are inconsistent");
  const auto samples = static_cast<Eigen::Index>(std::max(1.0, std::floor(duration_s / dt + 1e-9)));
  const Eigen::Index n = net.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Vector shape(samples);
  for (Eigen::Index k = 0; k < samples; ++k) {
    const double phase = samples > 1 ? static_cast<double>(k) / static_cast<double>(samples - 1) : 0.5;
    shape[k] = o.pv_floor + (o.pv_peak - o.pv_floor) * std::sin(std::numbers::pi * phase);
  }

  // Cloud passages shade the whole feeder at once.
  Vector shade = Vector::Ones(samples);
  const double hours = duration_s / 3600.0;
  std::poisson_distribution<int> event_count(o.cloud_events_per_hour * hours);
  const int events = event_count(rng);
  std::uniform_int_distribution<std::size_t> length(o.cloud_min_samples, o.cloud_max_samples);
  for (int e = 0; e < events; ++e) {
    const auto start = static_cast<Eigen::Index>(unit(rng) * static_cast<double>(samples));
    const auto len = static_cast<Eigen::Index>(length(rng));
    const double depth = o.cloud_depth_min + (o.cloud_depth_max - o.cloud_depth_min) * unit(rng);
    for (Eigen::Index k = start; k < std::min(samples, start + len); ++k) shade[k] = std::min(shade[k], 1.0 - depth);
  }

  ScenarioTimeSeries ts;
  ts.dt = dt;
  ts.p_demand.resize(samples, n);
  ts.q_demand.resize(samples, n);
  ts.p_generation.resize(samples, n);
  const Vector rated = net.p_rated();
  const Vector pd = net.base_p_demand();
  const Vector qd = net.base_q_demand();
  for (Eigen::Index i = 0; i < n; ++i) {
    double flicker = 0.0;
    for (Eigen::Index k = 0; k < samples; ++k) {
      flicker = o.pv_noise_memory * flicker + o.pv_noise_std * normal(rng);
      const double pv = std::clamp(shape[k] * shade[k] + flicker, 0.0, 1.0);
      ts.p_generation(k, i) = rated[i] * pv;
      const double load = std::clamp(1.0 + o.load_noise_std * normal(rng), 0.5, 1.5);
      ts.p_demand(k, i) = pd[i] * load;
      ts.q_demand(k, i) = qd[i] * load;
    }
  }
  ts.validate();
  return ts;
}

Units parse_units(std::string_view name) {
  if (name == "pu") return Units::PerUnit;
  if (name == "si") return Units::SI;
  throw Error("unknown units '" + std::string(name) + "' (expected pu or si)");
}

void write_profiles(std::ostream& out, const ScenarioTimeSeries& ts, const RadialNetwork& net, Units units) {
  ts.validate();
  if (ts.buses() != net.size()) throw DimensionError("profile bus count does not match the network");
  const double scale = units == Units::SI ? net.s_base_kva : 1.0;
  out << "t,bus,p_demand,q_demand,p_gen\n";
  for (std::size_t k = 0; k < ts.samples(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < ts.buses(); ++i)
      out << text::format(ts.time(k)) << ',' << BusId::from_index(i) << ',' << text::format(ts.p_demand(r, i) * scale)
          << ',' << text::format(ts.q_demand(r, i) * scale) << ',' << text::format(ts.p_generation(r, i) * scale)
          << '\n';
  }
}

void save_profiles(const ScenarioTimeSeries& ts, const RadialNetwork& net, const std::filesystem::path& path,
                   Units units) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write profiles " + path.string());
  write_profiles(out, ts, net, units);
  if (!out) throw Error("error writing profiles " + path.string());
}

ScenarioTimeSeries read_profiles(std::istream& in, const RadialNetwork& net, Units units, const std::string& source) {
  const Eigen::Index n = net.size();
  const double scale = units == Units::SI ? 1.0 / net.s_base_kva : 1.0;
  struct Row {
    double pd, qd, pg;
  };
  std::vector<double> times;
  std::vector<std::vector<std::optional<Row>>> rows;

  std::string raw;
  std::size_t line = 0;
  bool header = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto s = text::strip_comment(raw);
    if (s.empty()) continue;
    const auto f = text::split(s, ',');
    if (!header) {
      if (f.size() != 5 || f[0] != "t" || f[1] != "bus" || f[2] != "p_demand" || f[3] != "q_demand" ||
          f[4] != "p_gen")
        throw ParseError(source, line, "expected header 't,bus,p_demand,q_demand,p_gen'");
      header = true;
      continue;
    }
    if (f.size() != 5) throw ParseError(source, line, "expected 5 fields, got " + std::to_string(f.size()));
    const double t = text::to_double(f[0], source, line, "t");
    const auto bus = text::to_uint(f[1], source, line, "bus");
    if (bus == 0 || static_cast<Eigen::Index>(bus) > n)
      throw ParseError(source, line, "bus " + std::to_string(bus) + " is not a controllable bus of the network");
    if (times.empty() || t != times.back()) {
      if (!times.empty() && !(t > times.back())) throw ParseError(source, line, "timestamps must increase");
      times.push_back(t);
      rows.emplace_back(static_cast<std::size_t>(n));
    }
    auto& slot = rows.back()[bus - 1];
    if (slot) throw ParseError(source, line, "duplicate row for bus " + std::to_string(bus) + " at t=" + std::string(f[0]));
    slot = Row{text::to_double(f[2], source, line, "p_demand") * scale,
               text::to_double(f[3], source, line, "q_demand") * scale,
               text::to_double(f[4], source, line, "p_gen") * scale};
  }
  if (!header) throw ParseError(source, 0, "empty profile file");
  if (times.empty()) throw ParseError(source, 0, "no samples");

  ScenarioTimeSeries ts;
  ts.t0 = times.front();
  ts.dt = times.size() > 1 ? times[1] - times[0] : 1.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double expected = ts.t0 + ts.dt * static_cast<double>(k);
    if (std::abs(times[k] - expected) > 1e-9 * std::max(1.0, std::abs(expected)))
      throw ParseError(source, 0, "non-uniform spacing at t=" + text::format(times[k]));
  }
  const auto samples = static_cast<Eigen::Index>(times.size());
  ts.p_demand.resize(samples, n);
  ts.q_demand.resize(samples, n);
  ts.p_generation.resize(samples, n);
  for (Eigen::Index k = 0; k < samples; ++k)
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = rows[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      if (!r)
        throw ParseError(source, 0, "missing bus " + std::to_string(i + 1) + " at t=" + text::format(times[k]));
      ts.p_demand(k, i) = r->pd;
      ts.q_demand(k, i) = r->qd;
      ts.p_generation(k, i) = r->pg;
    }
  ts.validate();
  return ts;
}

ScenarioTimeSeries load_profiles(const std::filesystem::path& path, const RadialNetwork& net, Units units) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open profiles " + path.string());
  return read_profiles(in, net, units, path.string());
}

}  // namespace ofo
