#pragma once

// Arithmetic inner loops of the controllers and metrics, with a portable
// scalar reference and an AVX2 variant picked at runtime.
//
// Element-wise kernels are bit-identical across backends: both perform the
// same IEEE operations in the same order and no fused multiply-add is used.
// Reductions (gemv) use a different summation order per backend and may
// differ in the last bits.

#include <cstddef>
#include <span>
#include <string_view>

namespace ofo::kernels {

enum class Backend { Scalar, Avx2 };

bool backend_supported(Backend b);
Backend active_backend();
/// Throws ofo::Error if the backend is not available on this CPU/build.
void set_backend(Backend b);
std::string_view backend_name(Backend b);
/// Parses "scalar", "avx2" or "auto" (best supported).
Backend parse_backend(std::string_view name);

/// u <- clip(u - step * g, lo, hi)
void projected_step(std::span<double> u, std::span<const double> g, double step,
                    std::span<const double> lo, std::span<const double> hi);

/// u <- clip(u - step * (a - b), lo, hi)
void projected_step_diff(std::span<double> u, std::span<const double> a, std::span<const double> b,
                         double step, std::span<const double> lo, std::span<const double> hi);

/// lambda <- max(lambda + step * ((v - v_max) - reg * lambda), 0)
/// mu     <- max(mu     + step * ((v_min - v) - reg * mu), 0)
void dual_ascent(std::span<double> lambda, std::span<double> mu, std::span<const double> v, double v_min,
                 double v_max, double step, double reg);

/// out <- a + t * (b - a)
void blend(std::span<double> out, std::span<const double> a, std::span<const double> b, double t);

/// out <- base + (probe - base) / eps
void extrapolate(std::span<double> out, std::span<const double> base, std::span<const double> probe, double eps);

/// acc <- acc + max(v - v_max, 0) + max(v_min - v, 0)
void accumulate_violation(std::span<double> acc, std::span<const double> v, double v_min, double v_max);

/// y <- A x for a dense row-major n x n matrix.
void gemv(std::span<const double> a, std::size_t n, std::span<const double> x, std::span<double> y);

namespace detail {

// Scalar element operations. They mirror MAXPD/MINPD semantics (the second
// operand wins on ties) so the AVX2 lanes reproduce them exactly. Agents in
// the message-passing simulator use these too.
constexpr double max_pd(double a, double b) { return a > b ? a : b; }
constexpr double min_pd(double a, double b) { return a < b ? a : b; }
constexpr double clip(double x, double lo, double hi) { return min_pd(max_pd(x, lo), hi); }

constexpr double projected(double u, double g, double step, double lo, double hi) {
  return clip(u - step * g, lo, hi);
}

constexpr double dual_upper(double lambda, double v, double v_max, double step, double reg) {
  return max_pd(lambda + step * ((v - v_max) - reg * lambda), 0.0);
}

constexpr double dual_lower(double mu, double v, double v_min, double step, double reg) {
  return max_pd(mu + step * ((v_min - v) - reg * mu), 0.0);
}

constexpr double blend(double a, double b, double t) { return a + t * (b - a); }

constexpr double extrapolate(double base, double probe, double eps) { return base + (probe - base) / eps; }

constexpr double violation(double v, double v_min, double v_max) {
  return max_pd(v - v_max, 0.0) + max_pd(v_min - v, 0.0);
}

// Function table implemented once per backend.
struct Table {
  void (*projected_step)(double*, const double*, double, const double*, const double*, std::size_t);
  void (*projected_step_diff)(double*, const double*, const double*, double, const double*, const double*,
                              std::size_t);
  void (*dual_ascent)(double*, double*, const double*, double, double, double, double, std::size_t);
  void (*blend)(double*, const double*, const double*, double, std::size_t);
  void (*extrapolate)(double*, const double*, const double*, double, std::size_t);
  void (*accumulate_violation)(double*, const double*, double, double, std::size_t);
  void (*gemv)(const double*, std::size_t, const double*, double*);
};

const Table& scalar_table();
/// nullptr when the build has no AVX2 translation unit.
const Table* avx2_table();

}  // namespace detail

}  // namespace ofo::kernels
