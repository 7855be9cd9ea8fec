#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <functional>
#include <ostream>

namespace ofo {

using Vector = Eigen::VectorXd;
/// Row-major: row i of a matrix is contiguous for the kernels.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bus index within a radial network. Bus 0 is the substation (slack).
struct BusId {
  std::size_t value = 0;

  constexpr BusId() = default;
  constexpr explicit BusId(std::size_t v) : value(v) {}

  constexpr bool is_slack() const { return value == 0; }
  /// Position of a non-slack bus in the N-dimensional controller vectors.
  constexpr Eigen::Index index() const { return static_cast<Eigen::Index>(value) - 1; }
  static constexpr BusId from_index(Eigen::Index i) { return BusId(static_cast<std::size_t>(i) + 1); }

  friend constexpr auto operator<=>(const BusId&, const BusId&) = default;
  friend std::ostream& operator<<(std::ostream& os, BusId b) { return os << b.value; }
};

/// Closed box [lower, upper] for the reactive setpoints, one interval per bus.
struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index size() const { return lower.size(); }
  bool contains(const Vector& q) const {
    return ((q.array() >= lower.array()) && (q.array() <= upper.array())).all();
  }
};

}  // namespace ofo

template <>
struct std::hash<ofo::BusId> {
  std::size_t operator()(ofo::BusId b) const noexcept { return std::hash<std::size_t>{}(b.value); }
};
