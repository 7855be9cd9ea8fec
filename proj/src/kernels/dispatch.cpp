#include "ofo/error.hpp"
#include "ofo/kernels.hpp"

#include <atomic>
#include <string>

namespace ofo::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend best_backend() { return backend_supported(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar; }

const detail::Table* table_for(Backend b) {
  return b == Backend::Avx2 ? detail::avx2_table() : &detail::scalar_table();
}

struct Active {
  std::atomic<const detail::Table*> table;
  std::atomic<Backend> backend;
  Active() : table(table_for(best_backend())), backend(best_backend()) {}
};

Active& active() {
  static Active a;
  return a;
}

const detail::Table& table() { return *active().table.load(std::memory_order_relaxed); }

void check_size(std::size_t expected, std::size_t got) {
  if (expected != got)
    throw DimensionError("kernel operand size mismatch: " + std::to_string(expected) + " vs " + std::to_string(got));
}

}  // namespace

bool backend_supported(Backend b) {
  if (b == Backend::Scalar) return true;
  return detail::avx2_table() != nullptr && cpu_has_avx2();
}

Backend active_backend() { return active().backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_supported(b)) throw Error(std::string("kernel backend not supported here: ") + std::string(backend_name(b)));
  active().table.store(table_for(b), std::memory_order_relaxed);
  active().backend.store(b, std::memory_order_relaxed);
}

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  if (name == "auto") return best_backend();
  throw Error("unknown kernel backend '" + std::string(name) + "' (expected scalar, avx2 or auto)");
}

void projected_step(std::span<double> u, std::span<const double> g, double step, std::span<const double> lo,
                    std::span<const double> hi) {
  check_size(u.size(), g.size());
  check_size(u.size(), lo.size());
  check_size(u.size(), hi.size());
  table().projected_step(u.data(), g.data(), step, lo.data(), hi.data(), u.size());
}

void projected_step_diff(std::span<double> u, std::span<const double> a, std::span<const double> b, double step,
                         std::span<const double> lo, std::span<const double> hi) {
  check_size(u.size(), a.size());
  check_size(u.size(), b.size());
  check_size(u.size(), lo.size());
  check_size(u.size(), hi.size());
  table().projected_step_diff(u.data(), a.data(), b.data(), step, lo.data(), hi.data(), u.size());
}

void dual_ascent(std::span<double> lambda, std::span<double> mu, std::span<const double> v, double v_min,
                 double v_max, double step, double reg) {
  check_size(lambda.size(), mu.size());
  check_size(lambda.size(), v.size());
  table().dual_ascent(lambda.data(), mu.data(), v.data(), v_min, v_max, step, reg, v.size());
}

void blend(std::span<double> out, std::span<const double> a, std::span<const double> b, double t) {
  check_size(out.size(), a.size());
  check_size(out.size(), b.size());
  table().blend(out.data(), a.data(), b.data(), t, out.size());
}

void extrapolate(std::span<double> out, std::span<const double> base, std::span<const double> probe, double eps) {
  check_size(out.size(), base.size());
  check_size(out.size(), probe.size());
  table().extrapolate(out.data(), base.data(), probe.data(), eps, out.size());
}

void accumulate_violation(std::span<double> acc, std::span<const double> v, double v_min, double v_max) {
  check_size(acc.size(), v.size());
  table().accumulate_violation(acc.data(), v.data(), v_min, v_max, v.size());
}

void gemv(std::span<const double> a, std::size_t n, std::span<const double> x, std::span<double> y) {
  check_size(n * n, a.size());
  check_size(n, x.size());
  check_size(n, y.size());
  table().gemv(a.data(), n, x.data(), y.data());
}

}  // namespace ofo::kernels
