#include <atomic>
#include <stdexcept>

#include "noisesearch/kernels.hpp"

namespace noisesearch::kernels {

#ifndef NOISESEARCH_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(NOISESEARCH_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

Backend detect() {
  return (avx2_table() != nullptr && cpu_has_avx2()) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && (avx2_table() == nullptr || !cpu_has_avx2()))
    throw std::invalid_argument("AVX2 kernels are not available on this build or CPU");
  current().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

const KernelTable& active() {
  return active_backend() == Backend::Avx2 ? *avx2_table() : scalar_table();
}

}  // namespace noisesearch::kernels
