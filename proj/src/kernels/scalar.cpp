#include "ofo/kernels.hpp"

namespace ofo::kernels::detail {
namespace {

void projected_step_scalar(double* u, const double* g, double step, const double* lo, const double* hi,
                           std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) u[i] = projected(u[i], g[i], step, lo[i], hi[i]);
}

void projected_step_diff_scalar(double* u, const double* a, const double* b, double step, const double* lo,
                                const double* hi, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) u[i] = projected(u[i], a[i] - b[i], step, lo[i], hi[i]);
}

void dual_ascent_scalar(double* lambda, double* mu, const double* v, double v_min, double v_max, double step,
                        double reg, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    lambda[i] = dual_upper(lambda[i], v[i], v_max, step, reg);
    mu[i] = dual_lower(mu[i], v[i], v_min, step, reg);
  }
}

void blend_scalar(double* out, const double* a, const double* b, double t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::blend(a[i], b[i], t);
}

void extrapolate_scalar(double* out, const double* base, const double* probe, double eps, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = detail::extrapolate(base[i], probe[i], eps);
}

void accumulate_violation_scalar(double* acc, const double* v, double v_min, double v_max, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += violation(v[i], v_min, v_max);
}

void gemv_scalar(const double* a, std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = a + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

}  // namespace

const Table& scalar_table() {
  static const Table table{projected_step_scalar, projected_step_diff_scalar, dual_ascent_scalar, blend_scalar,
                           extrapolate_scalar,    accumulate_violation_scalar, gemv_scalar};
  return table;
}

}  // namespace ofo::kernels::detail
