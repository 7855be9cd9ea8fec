#pragma once

#include "ofo/network.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ofo {

/// Reads the line-oriented network format (see README). Values are SI in the
/// file and per-unit in memory. Throws ParseError with line context.
/// Topology invariants are not checked here; call validate_topology.
RadialNetwork read_network(std::istream& in, const std::string& source = "<network>");
RadialNetwork load_network(const std::filesystem::path& path);

void write_network(std::ostream& out, const RadialNetwork& net);
void save_network(const RadialNetwork& net, const std::filesystem::path& path);

/// Structural equality with a relative tolerance on every numeric field, for
/// comparing a network with its SI round trip.
bool approx_equal(const RadialNetwork& a, const RadialNetwork& b, double rtol = 1e-12);

}  // namespace ofo
