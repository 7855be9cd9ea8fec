#include "ofo/scenario.hpp"

#include "ofo/error.hpp"

#include "common/text.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <ostream>

namespace ofo {

void RunConfig::validate() const {
  cfg.validate();
  if (!(plant.tol > 0.0)) throw Error("invalid run config: plant_tol must be > 0");
  if (plant.max_iter < 1) throw Error("invalid run config: plant_max_iter must be >= 1");
  if (!(measurement.noise_std >= 0.0)) throw Error("invalid run config: noise_std must be >= 0");
  if (!(instant_seconds > 0.0)) throw Error("invalid run config: instant_seconds must be > 0");
  if (max_outer < 1) throw Error("invalid run config: max_outer must be >= 1");
  if (agents && controller != ControllerKind::Nested)
    throw Error("invalid run config: agents = true needs the nested controller");
}

namespace {

using Setter = std::function<void(RunConfig&, std::string_view, const std::string&, std::size_t)>;

Setter number(double ControllerConfig::*field) {
  return [field](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
    rc.cfg.*field = text::to_double(v, src, line, "value");
  };
}

bool to_bool(std::string_view v, const std::string& src, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(src, line, "expected true or false, got '" + std::string(v) + "'");
}

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"controller",
       [](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
         try {
           rc.controller = parse_controller_kind(v);
         } catch (const Error& e) {
           throw ParseError(src, line, e.what());
         }
       }},
      {"alpha", number(&ControllerConfig::alpha)},
      {"alpha_d", number(&ControllerConfig::alpha_d)},
      {"alpha_u", number(&ControllerConfig::alpha_u)},
      {"r_p", number(&ControllerConfig::r_p)},
      {"r_d", number(&ControllerConfig::r_d)},
      {"epsilon", number(&ControllerConfig::epsilon)},
      {"inner_iterations",
       [](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
         rc.cfg.inner_iterations = static_cast<int>(text::to_uint(v, src, line, "inner_iterations"));
       }},
      {"v_min",
       [](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
         rc.cfg.v_min = text::to_double(v, src, line, "v_min");
         rc.limits_from_network = false;
       }},
      {"v_max",
       [](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
         rc.cfg.v_max = text::to_double(v, src, line, "v_max");
         rc.limits_from_network = false;
       }},
      {"box_deflation", number(&ControllerConfig::box_deflation)},
      {"inner_start",
       [](RunConfig& rc, std::string_view v, const std::string& src, std::size_t line) {
         if (v == "previous") rc.cfg.inner_start = InnerStart::PreviousSetpoint;
         else if (v == "clipped-tentative") rc.cfg.inner_start = InnerStart::ClippedTentative;
         else throw ParseError(src, line, "inner_start must be previous or clipped-tentative");
       }},
      {"droop_v1", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.cfg.droop.v1 = text::to_double(v, s, l, "droop_v1"); }},
      {"droop_v2", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.cfg.droop.v2 = text::to_double(v, s, l, "droop_v2"); }},
      {"droop_v3", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.cfg.droop.v3 = text::to_double(v, s, l, "droop_v3"); }},
      {"droop_v4", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.cfg.droop.v4 = text::to_double(v, s, l, "droop_v4"); }},
      {"droop_response", number(&ControllerConfig::droop_response)},
      {"agents", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.agents = to_bool(v, s, l); }},
      {"plant_tol", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.plant.tol = text::to_double(v, s, l, "plant_tol"); }},
      {"plant_max_iter", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.plant.max_iter = static_cast<int>(text::to_uint(v, s, l, "plant_max_iter")); }},
      {"noise_std", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.measurement.noise_std = text::to_double(v, s, l, "noise_std"); }},
      {"seed", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.measurement.seed = text::to_uint(v, s, l, "seed"); }},
      {"instant_seconds", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.instant_seconds = text::to_double(v, s, l, "instant_seconds"); }},
      {"max_outer", [](RunConfig& rc, std::string_view v, const std::string& s, std::size_t l) {
         rc.max_outer = static_cast<long>(text::to_uint(v, s, l, "max_outer")); }},
  };
  return table;
}

}  // namespace

RunConfig read_run_config(std::istream& in, const std::string& source, RunConfig rc) {
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto s = text::strip_comment(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, line, "expected 'key = value'");
    const auto key = text::trim(s.substr(0, eq));
    const auto value = text::trim(s.substr(eq + 1));
    if (value.empty()) throw ParseError(source, line, "missing value for '" + std::string(key) + "'");
    const auto& table = setters();
    auto it = table.find(key);
    if (it == table.end()) throw ParseError(source, line, "unknown key '" + std::string(key) + "'");
    it->second(rc, value, source, line);
  }
  try {
    rc.validate();
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return read_run_config(in, path.string(), std::move(base));
}

void write_run_config(std::ostream& out, const RunConfig& rc) {
  using text::format;
  const ControllerConfig& c = rc.cfg;
  out << "controller = " << controller_name(rc.controller) << '\n'
      << "alpha = " << format(c.alpha) << '\n'
      << "alpha_d = " << format(c.alpha_d) << '\n'
      << "alpha_u = " << format(c.alpha_u) << '\n'
      << "r_p = " << format(c.r_p) << '\n'
      << "r_d = " << format(c.r_d) << '\n'
      << "epsilon = " << format(c.epsilon) << '\n'
      << "inner_iterations = " << c.inner_iterations << '\n';
  if (!rc.limits_from_network) out << "v_min = " << format(c.v_min) << "\nv_max = " << format(c.v_max) << '\n';
  out << "box_deflation = " << format(c.box_deflation) << '\n'
      << "inner_start = " << (c.inner_start == InnerStart::PreviousSetpoint ? "previous" : "clipped-tentative") << '\n'
      << "droop_v1 = " << format(c.droop.v1) << '\n'
      << "droop_v2 = " << format(c.droop.v2) << '\n'
      << "droop_v3 = " << format(c.droop.v3) << '\n'
      << "droop_v4 = " << format(c.droop.v4) << '\n'
      << "droop_response = " << format(c.droop_response) << '\n'
      << "agents = " << (rc.agents ? "true" : "false") << '\n'
      << "plant_tol = " << format(rc.plant.tol) << '\n'
      << "plant_max_iter = " << rc.plant.max_iter << '\n'
      << "noise_std = " << format(rc.measurement.noise_std) << '\n'
      << "seed = " << rc.measurement.seed << '\n'
      << "instant_seconds = " << format(rc.instant_seconds) << '\n'
      << "max_outer = " << rc.max_outer << '\n';
}

}  // namespace ofo
