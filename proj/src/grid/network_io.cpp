#include "ofo/network_io.hpp"

#include "common/text.hpp"
#include "ofo/error.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace ofo {
namespace {

enum class Section { Header, Buses, Cables, Ders };

void expect_fields(const std::vector<std::string_view>& f, std::size_t n, const std::string& src, std::size_t line,
                   const char* section) {
  if (f.size() != n)
    throw ParseError(src, line, std::string(section) + " row needs " + std::to_string(n) + " fields, found " +
                                    std::to_string(f.size()));
}

bool close(double a, double b, double rtol) { return std::abs(a - b) <= rtol * std::max(std::abs(a), std::abs(b)); }

}  // namespace

RadialNetwork read_network(std::istream& in, const std::string& src) {
  struct RawBus {
    std::size_t line;
    std::uint64_t id;
    double p_kw, q_kvar;
  };
  struct RawCable {
    std::size_t line;
    std::uint64_t from, to;
    double r_ohm, x_ohm;
  };
  struct RawDer {
    std::size_t line;
    std::uint64_t bus;
    double p_kw, qmin_kvar, qmax_kvar, cost;
  };
  std::vector<RawBus> buses;
  std::vector<RawCable> cables;
  std::vector<RawDer> ders;
  std::optional<double> v0, v_min, v_max, s_base, v_base;

  Section section = Section::Header;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto s = text::strip_comment(raw);
    if (s.empty()) continue;
    if (s == "BUSES") { section = Section::Buses; continue; }
    if (s == "CABLES") { section = Section::Cables; continue; }
    if (s == "DERS") { section = Section::Ders; continue; }

    if (section == Section::Header) {
      const auto eq = s.find('=');
      if (eq == std::string_view::npos) throw ParseError(src, line, "expected 'key = value' or a section name");
      const auto key = text::trim(s.substr(0, eq));
      const double value = text::to_double(text::trim(s.substr(eq + 1)), src, line, key);
      if (key == "v0") v0 = value;
      else if (key == "v_min") v_min = value;
      else if (key == "v_max") v_max = value;
      else if (key == "s_base_kva") s_base = value;
      else if (key == "v_base_kv") v_base = value;
      else throw ParseError(src, line, "unknown key '" + std::string(key) + "'");
      continue;
    }

    const auto f = text::split(s, ',');
    switch (section) {
      case Section::Buses:
        expect_fields(f, 3, src, line, "BUSES");
        buses.push_back({line, text::to_uint(f[0], src, line, "bus id"), text::to_double(f[1], src, line, "p_demand_kw"),
                         text::to_double(f[2], src, line, "q_demand_kvar")});
        break;
      case Section::Cables:
        expect_fields(f, 4, src, line, "CABLES");
        cables.push_back({line, text::to_uint(f[0], src, line, "from"), text::to_uint(f[1], src, line, "to"),
                          text::to_double(f[2], src, line, "r_ohm"), text::to_double(f[3], src, line, "x_ohm")});
        break;
      case Section::Ders:
        expect_fields(f, 5, src, line, "DERS");
        ders.push_back({line, text::to_uint(f[0], src, line, "bus"), text::to_double(f[1], src, line, "p_rated_kw"),
                        text::to_double(f[2], src, line, "q_min_kvar"), text::to_double(f[3], src, line, "q_max_kvar"),
                        text::to_double(f[4], src, line, "cost")});
        break;
      case Section::Header: break;
    }
  }

  if (!v0) throw ParseError(src, 0, "missing slack voltage (v0)");
  if (!s_base || !(*s_base > 0.0)) throw ParseError(src, 0, "missing or nonpositive s_base_kva");
  if (!v_base || !(*v_base > 0.0)) throw ParseError(src, 0, "missing or nonpositive v_base_kv");

  RadialNetwork net;
  net.v0 = *v0;
  net.v_min = v_min.value_or(0.95);
  net.v_max = v_max.value_or(1.05);
  net.s_base_kva = *s_base;
  net.v_base_kv = *v_base;
  const double z = net.z_base_ohm();
  const double sb = net.s_base_kva;

  std::set<std::uint64_t> ids;
  for (const auto& b : buses) {
    if (!ids.insert(b.id).second) throw ParseError(src, b.line, "duplicate bus id " + std::to_string(b.id));
    net.buses.push_back({BusId(b.id), b.p_kw / sb, b.q_kvar / sb});
  }
  for (const auto& c : cables) net.cables.push_back({BusId(c.from), BusId(c.to), c.r_ohm / z, c.x_ohm / z});
  for (const auto& d : ders) {
    if (net.ders.contains(BusId(d.bus))) throw ParseError(src, d.line, "duplicate DER for bus " + std::to_string(d.bus));
    net.ders[BusId(d.bus)] = DerSpec{BusId(d.bus), d.qmin_kvar / sb, d.qmax_kvar / sb, d.cost, d.p_kw / sb};
  }
  return net;
}

RadialNetwork load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file " + path.string());
  return read_network(in, path.string());
}

void write_network(std::ostream& out, const RadialNetwork& net) {
  using text::format;
  const double z = net.z_base_ohm();
  const double sb = net.s_base_kva;
  out << "# radial network; powers in kW/kvar, impedances in ohm, voltages in pu\n";
  out << "s_base_kva = " << format(net.s_base_kva) << "\n";
  out << "v_base_kv = " << format(net.v_base_kv) << "\n";
  out << "v0 = " << format(net.v0) << "\n";
  out << "v_min = " << format(net.v_min) << "\n";
  out << "v_max = " << format(net.v_max) << "\n\n";
  out << "BUSES\n# id,p_demand_kw,q_demand_kvar\n";
  for (const auto& b : net.buses)
    out << b.id << "," << format(b.base_p_demand * sb) << "," << format(b.base_q_demand * sb) << "\n";
  out << "\nCABLES\n# from,to,r_ohm,x_ohm\n";
  for (const auto& c : net.cables)
    out << c.from << "," << c.to << "," << format(c.resistance * z) << "," << format(c.reactance * z) << "\n";
  out << "\nDERS\n# bus,p_rated_kw,q_min_kvar,q_max_kvar,cost\n";
  for (const auto& [bus, d] : net.ders)
    out << bus << "," << format(d.p_rated * sb) << "," << format(d.q_min * sb) << "," << format(d.q_max * sb) << ","
        << format(d.cost) << "\n";
}

void save_network(const RadialNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write network file " + path.string());
  write_network(out, net);
  if (!out) throw Error("error while writing " + path.string());
}

bool approx_equal(const RadialNetwork& a, const RadialNetwork& b, double rtol) {
  if (a.buses.size() != b.buses.size() || a.cables.size() != b.cables.size() || a.ders.size() != b.ders.size())
    return false;
  if (!close(a.v0, b.v0, rtol) || !close(a.v_min, b.v_min, rtol) || !close(a.v_max, b.v_max, rtol) ||
      !close(a.s_base_kva, b.s_base_kva, rtol) || !close(a.v_base_kv, b.v_base_kv, rtol))
    return false;
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    const auto &x = a.buses[i], &y = b.buses[i];
    if (x.id != y.id || !close(x.base_p_demand, y.base_p_demand, rtol) || !close(x.base_q_demand, y.base_q_demand, rtol))
      return false;
  }
  for (std::size_t i = 0; i < a.cables.size(); ++i) {
    const auto &x = a.cables[i], &y = b.cables[i];
    if (x.from != y.from || x.to != y.to || !close(x.resistance, y.resistance, rtol) ||
        !close(x.reactance, y.reactance, rtol))
      return false;
  }
  for (auto ia = a.ders.begin(), ib = b.ders.begin(); ia != a.ders.end(); ++ia, ++ib) {
    const auto &x = ia->second, &y = ib->second;
    if (ia->first != ib->first || x.bus != y.bus || !close(x.q_min, y.q_min, rtol) || !close(x.q_max, y.q_max, rtol) ||
        !close(x.cost, y.cost, rtol) || !close(x.p_rated, y.p_rated, rtol))
      return false;
  }
  return true;
}

}  // namespace ofo
