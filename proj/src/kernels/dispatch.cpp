#include <cstdlib>
#include <stdexcept>
#include <string>

#include "ganssl/kernels.hpp"

namespace ganssl::kern {

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable& choose() {
  if (const char* env = std::getenv("GANSSL_KERNEL_BACKEND")) {
    const std::string want = env;
    if (want == "scalar") return scalar_table();
    if (want == "avx2") {
      if (!avx2_available())
        throw std::runtime_error("GANSSL_KERNEL_BACKEND=avx2 but CPU lacks AVX2/FMA");
      return avx2_table();
    }
    if (want == "blas") return blas_table();
    throw std::runtime_error("unknown GANSSL_KERNEL_BACKEND: " + want);
  }
  return blas_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& t = choose();
  return t;
}

std::string active_backend_name() { return active().name; }

}  // namespace ganssl::kern
