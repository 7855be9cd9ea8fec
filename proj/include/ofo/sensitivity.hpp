#pragma once

#include "ofo/network.hpp"
#include "ofo/types.hpp"

#include <utility>
#include <vector>

namespace ofo {

/// Relative magnitude below which an X^-1 entry counts as structurally zero.
inline constexpr double kSparsityTolerance = 1e-9;

struct SensitivityMatrices {
  Matrix r;      ///< dv/dp, pu/pu
  Matrix x;      ///< dv/dq, pu/pu
  Matrix x_inv;  ///< adjacency-sparse inverse of x
  /// True on the diagonal and for electrically adjacent non-slack buses.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> adjacency;

  /// ||x_inv * x - I||_2 / ||I||_2.
  double inverse_residual = 0.0;
  /// max |x_inv(i,j)| over non-adjacent pairs, relative to max |x_inv|.
  double sparsity_residual = 0.0;

  Eigen::Index size() const { return x.rows(); }
};

/// Builds R and X by path intersection, inverts X densely and verifies the
/// inverse against the adjacency pattern. Throws ofo::Error on an invalid
/// network or a failed inversion/verification.
SensitivityMatrices build_sensitivities(const RadialNetwork& net);

double max_eigenvalue(const Matrix& symmetric);
double min_eigenvalue(const Matrix& symmetric);

/// Sparse rows of X^-1 C restricted to each bus and its neighbours, column
/// indices ascending. This is everything a distributed agent is provisioned
/// with.
struct NeighborRows {
  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;

  Eigen::Index size() const { return static_cast<Eigen::Index>(rows.size()); }
  /// Sum over the stored entries of row i times q, in ascending column order.
  double row_dot(Eigen::Index i, const Vector& q) const;
};

NeighborRows neighbor_rows(const SensitivityMatrices& sens, const Vector& costs);

/// X with every entry outside the adjacency pattern zeroed.
Matrix truncated_x(const SensitivityMatrices& sens);

}  // namespace ofo
