#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "qlb/kernels.h"

namespace qlb::kernels {

namespace detail {

#ifdef QLB_HAVE_AVX2_TU
const Ops* avx2_ops_impl();
#endif

const Ops* avx2_ops() {
#ifdef QLB_HAVE_AVX2_TU
  if (__builtin_cpu_supports("avx2")) return avx2_ops_impl();
#endif
  return nullptr;
}

}  // namespace detail

namespace {

struct Dispatch {
  const detail::Ops* ops;
  Backend backend;
};

Dispatch pick_initial() {
  const char* env = std::getenv("QLB_KERNELS");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) {
    return {&detail::scalar_ops(), Backend::scalar};
  }
  const detail::Ops* avx2 = detail::avx2_ops();
  if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    if (avx2 == nullptr) {
      throw std::runtime_error("QLB_KERNELS=avx2 requested but AVX2 is unavailable");
    }
    return {avx2, Backend::avx2};
  }
  if (avx2 != nullptr) return {avx2, Backend::avx2};
  return {&detail::scalar_ops(), Backend::scalar};
}

Dispatch& dispatch() {
  static Dispatch d = pick_initial();
  return d;
}

}  // namespace

Backend active_backend() { return dispatch().backend; }

const char* backend_name() {
  return dispatch().backend == Backend::avx2 ? "avx2" : "scalar";
}

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
  return detail::avx2_ops() != nullptr;
}

void force_backend(Backend b) {
  if (b == Backend::scalar) {
    dispatch() = {&detail::scalar_ops(), Backend::scalar};
    return;
  }
  const detail::Ops* avx2 = detail::avx2_ops();
  if (avx2 == nullptr) throw std::runtime_error("AVX2 backend unavailable");
  dispatch() = {avx2, Backend::avx2};
}

void zaxpy(cplx a, const cplx* x, cplx* y, std::size_t n) {
  dispatch().ops->zaxpy(a, x, y, n);
}

void zaxpby(cplx a, const cplx* x, cplx b, cplx* y, std::size_t n) {
  dispatch().ops->zaxpby(a, x, b, y, n);
}

void zscal(cplx a, cplx* x, std::size_t n) { dispatch().ops->zscal(a, x, n); }

double znorm2(const cplx* x, std::size_t n) {
  return dispatch().ops->znorm2(x, n);
}

void zgemm(const cplx* a, const cplx* b, cplx* c,
           std::size_t n, std::size_t k, std::size_t m) {
  dispatch().ops->zgemm(a, b, c, n, k, m);
}

void collide_d2q4_row(double* f0, double* f1, double* f2, double* f3,
                      const double* a4x4, const double* q, std::size_t n) {
  dispatch().ops->collide_d2q4_row(f0, f1, f2, f3, a4x4, q, n);
}

}  // namespace qlb::kernels
