#pragma once

// Dense double-precision vector kernels used by the denoisers, the DDIM
// updates and the feature extractor. Every kernel has a portable scalar
// reference implementation; an AVX2/FMA variant is selected at runtime when
// the CPU supports it. Results of the two backends agree to rounding but are
// not bit-identical (different summation order and fused multiply-add).

#include <cstddef>
#include <span>
#include <string_view>

namespace noisesearch::kernels {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  // sum_i (v_i - alpha * x_i)^2
  double (*scaled_sq_dist)(const double* v, const double* x, double alpha, std::size_t n);
  // y_i += a * x_i
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // out_i = a * x_i + b * y_i
  void (*lincomb)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
};

const KernelTable& scalar_table();
// Null when the library was built without the AVX2 translation unit.
const KernelTable* avx2_table();

bool cpu_has_avx2();

Backend active_backend();
// Throws std::invalid_argument when the requested backend is unavailable.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double scaled_sq_dist(std::span<const double> v, std::span<const double> x, double alpha) {
  return active().scaled_sq_dist(v.data(), x.data(), alpha, v.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void lincomb(double a, std::span<const double> x, double b, std::span<const double> y,
                    std::span<double> out) {
  active().lincomb(a, x.data(), b, y.data(), out.data(), x.size());
}

// RAII guard that pins a backend for a scope (tests and benchmarks).
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

}  // namespace noisesearch::kernels
