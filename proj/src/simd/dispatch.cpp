#include <atomic>
#include <cstdlib>
#include <string>

#include "lsfm/simd/kernels.hpp"

namespace lsfm::simd {
namespace {

bool cpu_has_avx2() {
#if defined(LSFM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  Backend b = detected_backend();
  if (const char* env = std::getenv("LSFM_INVLAB_SIMD")) {
    const std::string v(env);
    if (v == "scalar") b = Backend::scalar;
    else if (v == "avx2" && backend_available(Backend::avx2)) b = Backend::avx2;
  }
  return b;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

Backend detected_backend() {
  return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

Backend set_backend(Backend b) {
  if (!backend_available(b)) b = Backend::scalar;
  return current().exchange(b);
}

const KernelTable& table_for(Backend b) {
#if defined(LSFM_HAVE_AVX2)
  if (b == Backend::avx2 && backend_available(Backend::avx2)) return avx2_table();
#else
  (void)b;
#endif
  return scalar_table();
}

const KernelTable& table() { return table_for(active_backend()); }

}  // namespace lsfm::simd
