// Scalar reference kernels. These define the arithmetic contract: the SIMD
// variants must reproduce the same operation order (see kernels.h).

#include "qlb/kernels.h"

namespace qlb::kernels::detail {

namespace {

// Explicit complex multiply; std::complex::operator* is avoided so the
// instruction sequence matches the vector path exactly.
inline cplx cmul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

void zaxpy_scalar(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx t = cmul(a, x[i]);
    y[i] = {y[i].real() + t.real(), y[i].imag() + t.imag()};
  }
}

void zaxpby_scalar(cplx a, const cplx* x, cplx b, cplx* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const cplx t = cmul(a, x[i]);
    const cplx s = cmul(b, y[i]);
    y[i] = {t.real() + s.real(), t.imag() + s.imag()};
  }
}

void zscal_scalar(cplx a, cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = cmul(a, x[i]);
}

double znorm2_scalar(const cplx* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  }
  return acc;
}

void zgemm_scalar(const cplx* a, const cplx* b, cplx* c,
                  std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n * m; ++i) c[i] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const cplx ail = a[i * k + l];
      const cplx* brow = b + l * m;
      cplx* crow = c + i * m;
      for (std::size_t j = 0; j < m; ++j) {
        const cplx t = cmul(ail, brow[j]);
        crow[j] = {crow[j].real() + t.real(), crow[j].imag() + t.imag()};
      }
    }
  }
}

void collide_scalar(double* f0, double* f1, double* f2, double* f3,
                    const double* a, const double* q, std::size_t n) {
  for (std::size_t s = 0; s < n; ++s) {
    const double rho = ((f0[s] + f1[s]) + f2[s]) + f3[s];
    const double d0 = f0[s] - q[0] * rho;
    const double d1 = f1[s] - q[1] * rho;
    const double d2 = f2[s] - q[2] * rho;
    const double d3 = f3[s] - q[3] * rho;
    f0[s] -= (a[0] * d0 + a[1] * d1) + (a[2] * d2 + a[3] * d3);
    f1[s] -= (a[4] * d0 + a[5] * d1) + (a[6] * d2 + a[7] * d3);
    f2[s] -= (a[8] * d0 + a[9] * d1) + (a[10] * d2 + a[11] * d3);
    f3[s] -= (a[12] * d0 + a[13] * d1) + (a[14] * d2 + a[15] * d3);
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      zaxpy_scalar, zaxpby_scalar, zscal_scalar,
      znorm2_scalar, zgemm_scalar, collide_scalar,
  };
  return ops;
}

}  // namespace qlb::kernels::detail
