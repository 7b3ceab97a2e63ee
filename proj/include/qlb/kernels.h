// kernels.h — data-parallel inner loops: complex block arithmetic and the
// D2Q4 collision row. Scalar reference implementations plus AVX2 variants,
// selected at runtime (override with QLB_KERNELS=scalar|avx2).
//
// The AVX2 variants use no FMA and keep the scalar accumulation order, so
// every kernel except znorm2 (lane-wise reduction) is bit-identical to the
// reference; the equivalence tests assert exactly that.

#pragma once

#include <complex>
#include <cstddef>

namespace qlb::kernels {

using cplx = std::complex<double>;

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();
bool backend_available(Backend b);
// Test hook: switch the dispatch table. Throws if the backend is unavailable.
// Not thread-safe; call before spawning work.
void force_backend(Backend b);

// y[i] += a·x[i]
void zaxpy(cplx a, const cplx* x, cplx* y, std::size_t n);
// y[i] = a·x[i] + b·y[i]
void zaxpby(cplx a, const cplx* x, cplx b, cplx* y, std::size_t n);
// x[i] *= a
void zscal(cplx a, cplx* x, std::size_t n);
// Σ_i |x[i]|²
double znorm2(const cplx* x, std::size_t n);
// Row-major C(n×m) = A(n×k)·B(k×m). C must not alias A or B.
void zgemm(const cplx* a, const cplx* b, cplx* c,
           std::size_t n, std::size_t k, std::size_t m);
// One lattice row of D2Q4 collisions: with ρ = f0+f1+f2+f3 per site and
// feq_j = q[j]·ρ (q[j] = w·(1+u_j) precomputed by the caller),
// f_i -= Σ_j A[i][j]·(f_j − feq_j). a4x4 is row-major.
void collide_d2q4_row(double* f0, double* f1, double* f2, double* f3,
                      const double* a4x4, const double* q, std::size_t n);

namespace detail {

struct Ops {
  void (*zaxpy)(cplx, const cplx*, cplx*, std::size_t);
  void (*zaxpby)(cplx, const cplx*, cplx, cplx*, std::size_t);
  void (*zscal)(cplx, cplx*, std::size_t);
  double (*znorm2)(const cplx*, std::size_t);
  void (*zgemm)(const cplx*, const cplx*, cplx*,
                std::size_t, std::size_t, std::size_t);
  void (*collide_d2q4_row)(double*, double*, double*, double*,
                           const double*, const double*, std::size_t);
};

const Ops& scalar_ops();
const Ops* avx2_ops();  // nullptr when unavailable

}  // namespace detail

}  // namespace qlb::kernels
