#pragma once

#include "ofo/network.hpp"

#include <cstdint>
#include <string_view>

namespace ofo {

enum class Branching {
  Chain,       ///< single feeder, every bus hangs off the previous one
  ChainHeavy,  ///< mostly a chain with occasional laterals
  Random,      ///< uniform random recursive tree
};

Branching parse_branching(std::string_view name);
std::string_view branching_name(Branching b);

/// Knobs of the synthetic feeder. Defaults give a feeder whose no-control
/// voltage at peak PV and base load exceeds v_max while full reactive
/// absorption brings it back inside the band.
struct FeederOptions {
  double r_min = 0.005, r_max = 0.05;  ///< pu per cable
  double x_min = 0.005, x_max = 0.05;  ///< pu per cable
  double pv_min_kw = 3.0, pv_max_kw = 10.0;
  /// q range is +/- q_ratio * rated PV power.
  double q_ratio = 0.4;
  /// Base demand per bus as a fraction of its PV rating.
  double load_min = 0.05, load_max = 0.2;
  double load_power_factor_q = 0.3;
  /// Largest linearized voltage rise produced by rated PV alone; sets s_base.
  double target_rise = 0.1;
  double v0 = 1.02;
  double v_min = 0.95, v_max = 1.05;
  double v_base_kv = 0.4;
  /// Probability that a ChainHeavy bus continues the chain.
  double chain_probability = 0.8;
};

/// Seed-reproducible radial feeder with `n_buses` buses including the
/// substation. Throws ofo::Error if n_buses < 2.
RadialNetwork generate_synthetic_feeder(std::uint64_t seed, std::size_t n_buses, Branching branching,
                                        const FeederOptions& options = {});

}  // namespace ofo
