#include "ofo/feeder_generator.hpp"

#include "ofo/error.hpp"

#include <random>
#include <string>

namespace ofo {

Branching parse_branching(std::string_view name) {
  if (name == "chain") return Branching::Chain;
  if (name == "chain-heavy") return Branching::ChainHeavy;
  if (name == "random") return Branching::Random;
  throw Error("unknown branching policy '" + std::string(name) + "' (expected chain, chain-heavy or random)");
}

std::string_view branching_name(Branching b) {
  switch (b) {
    case Branching::Chain: return "chain";
    case Branching::ChainHeavy: return "chain-heavy";
    case Branching::Random: return "random";
  }
  return "?";
}

RadialNetwork generate_synthetic_feeder(std::uint64_t seed, std::size_t n_buses, Branching branching,
                                        const FeederOptions& o) {
  if (n_buses < 2) throw Error("a feeder needs at least 2 buses, got " + std::to_string(n_buses));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::size_t n = n_buses - 1;
  RadialNetwork net;
  net.v0 = o.v0;
  net.v_min = o.v_min;
  net.v_max = o.v_max;
  net.v_base_kv = o.v_base_kv;

  std::vector<std::size_t> parent(n_buses, 0);
  for (std::size_t j = 2; j < n_buses; ++j) {
    switch (branching) {
      case Branching::Chain: parent[j] = j - 1; break;
      case Branching::ChainHeavy:
        parent[j] = unit(rng) < o.chain_probability ? j - 1 : static_cast<std::size_t>(unit(rng) * j);
        break;
      case Branching::Random: parent[j] = static_cast<std::size_t>(unit(rng) * j); break;
    }
    if (parent[j] >= j) parent[j] = j - 1;
  }

  for (std::size_t j = 1; j < n_buses; ++j)
    net.cables.push_back({BusId(parent[j]), BusId(j), uniform(o.r_min, o.r_max), uniform(o.x_min, o.x_max)});

  std::vector<double> pv_kw(n_buses, 0.0), load_frac(n_buses, 0.0);
  for (std::size_t j = 1; j < n_buses; ++j) {
    pv_kw[j] = uniform(o.pv_min_kw, o.pv_max_kw);
    load_frac[j] = uniform(o.load_min, o.load_max);
  }

  // Linearized rise at bus i from rated PV everywhere is sum_j R_ij p_j.
  // R_ij is the resistance shared by both paths, so accumulate each cable's
  // resistance times the PV downstream of it.
  std::vector<double> downstream_kw(pv_kw);
  for (std::size_t j = n; j >= 1; --j) downstream_kw[parent[j]] += downstream_kw[j];
  std::vector<double> rise(n_buses, 0.0);
  double worst = 0.0;
  for (std::size_t j = 1; j < n_buses; ++j) {
    rise[j] = rise[parent[j]] + net.cables[j - 1].resistance * downstream_kw[j];
    worst = std::max(worst, rise[j]);
  }
  net.s_base_kva = worst / o.target_rise;

  net.buses.push_back({BusId(0), 0.0, 0.0});
  for (std::size_t j = 1; j < n_buses; ++j) {
    const double p_rated = pv_kw[j] / net.s_base_kva;
    const double p_load = load_frac[j] * p_rated;
    net.buses.push_back({BusId(j), p_load, o.load_power_factor_q * p_load});
    net.ders[BusId(j)] = DerSpec{BusId(j), -o.q_ratio * p_rated, o.q_ratio * p_rated, 1.0, p_rated};
  }
  return net;
}

}  // namespace ofo
