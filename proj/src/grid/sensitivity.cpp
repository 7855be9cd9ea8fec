#include "ofo/sensitivity.hpp"

#include "ofo/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>

namespace ofo {

SensitivityMatrices build_sensitivities(const RadialNetwork& net) {
  const Tree tree(net);
  const Eigen::Index n = net.size();

  // Cumulative impedance from the substation; entry (i,j) of R/X is the value
  // at the deepest bus shared by both paths.
  std::vector<double> cum_r(tree.bus_count(), 0.0), cum_x(tree.bus_count(), 0.0);
  for (BusId b : tree.order()) {
    if (b.is_slack()) continue;
    const Cable& c = net.cables[tree.feeder_cable(b)];
    cum_r[b.value] = cum_r[tree.parent(b).value] + c.resistance;
    cum_x[b.value] = cum_x[tree.parent(b).value] + c.reactance;
  }

  SensitivityMatrices s;
  s.r.resize(n, n);
  s.x.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const BusId lca = tree.lowest_common_ancestor(BusId::from_index(i), BusId::from_index(j));
      s.r(i, j) = s.r(j, i) = cum_r[lca.value];
      s.x(i, j) = s.x(j, i) = cum_x[lca.value];
    }
  }

  s.adjacency.setConstant(n, n, false);
  for (Eigen::Index i = 0; i < n; ++i) s.adjacency(i, i) = true;
  for (const auto& c : net.cables) {
    if (c.from.is_slack()) continue;
    s.adjacency(c.from.index(), c.to.index()) = true;
    s.adjacency(c.to.index(), c.from.index()) = true;
  }

  if (n == 0) return s;

  if (Eigen::LLT<Matrix> llt_r(s.r); llt_r.info() != Eigen::Success)
    throw Error("sensitivity matrix R is not positive definite");
  Eigen::LLT<Matrix> llt(s.x);
  if (llt.info() != Eigen::Success) throw Error("sensitivity matrix X is not positive definite; cannot invert X");
  s.x_inv = llt.solve(Matrix::Identity(n, n));
  s.x_inv = (0.5 * (s.x_inv + s.x_inv.transpose())).eval();

  const Matrix err = s.x_inv * s.x - Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(err.transpose() * err, Eigen::EigenvaluesOnly);
  s.inverse_residual = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));

  const double scale = s.x_inv.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!s.adjacency(i, j)) worst = std::max(worst, std::abs(s.x_inv(i, j)));
  s.sparsity_residual = worst / scale;

  if (!(s.inverse_residual <= kSparsityTolerance))
    throw Error("inverse of X failed verification: residual " + std::to_string(s.inverse_residual));
  if (!(s.sparsity_residual <= kSparsityTolerance))
    throw Error("inverse of X violates the adjacency sparsity pattern: relative residual " +
                std::to_string(s.sparsity_residual));
  return s;
}

double max_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double NeighborRows::row_dot(Eigen::Index i, const Vector& q) const {
  double s = 0.0;
  for (const auto& [j, w] : rows[static_cast<std::size_t>(i)]) s += w * q[j];
  return s;
}

NeighborRows neighbor_rows(const SensitivityMatrices& sens, const Vector& costs) {
  const Eigen::Index n = sens.size();
  if (costs.size() != n) throw DimensionError("cost vector length does not match X");
  NeighborRows out;
  out.rows.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (sens.adjacency(i, j)) out.rows[static_cast<std::size_t>(i)].emplace_back(j, sens.x_inv(i, j) * costs[j]);
  return out;
}

Matrix truncated_x(const SensitivityMatrices& sens) {
  return sens.adjacency.select(sens.x, Matrix::Zero(sens.size(), sens.size()));
}

}  // namespace ofo
