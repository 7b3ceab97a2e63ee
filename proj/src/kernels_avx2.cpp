// AVX2 kernel variants. Compiled with -mavx2 only (no FMA): each lane runs
// the same mul/add sequence as the scalar reference, so results are
// bit-identical except for the znorm2 reduction order.

#include <immintrin.h>

#include "qlb/kernels.h"

namespace qlb::kernels::detail {

namespace {

inline cplx cmul(cplx a, cplx b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

// Product of the fixed scalar (are/aim broadcast) with two packed complex.
inline __m256d cmul2(__m256d are, __m256d aim, __m256d x) {
  const __m256d t1 = _mm256_mul_pd(x, are);
  const __m256d xs = _mm256_permute_pd(x, 0x5);  // swap re/im per element
  const __m256d t2 = _mm256_mul_pd(xs, aim);
  return _mm256_addsub_pd(t1, t2);
}

void zaxpy_avx2(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const __m256d are = _mm256_set1_pd(a.real());
  const __m256d aim = _mm256_set1_pd(a.imag());
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(yv, cmul2(are, aim, xv)));
  }
  for (; i < n; ++i) {
    const cplx t = cmul(a, x[i]);
    y[i] = {y[i].real() + t.real(), y[i].imag() + t.imag()};
  }
}

void zaxpby_avx2(cplx a, const cplx* x, cplx b, cplx* y, std::size_t n) {
  const __m256d are = _mm256_set1_pd(a.real());
  const __m256d aim = _mm256_set1_pd(a.imag());
  const __m256d bre = _mm256_set1_pd(b.real());
  const __m256d bim = _mm256_set1_pd(b.imag());
  const double* xd = reinterpret_cast<const double*>(x);
  double* yd = reinterpret_cast<double*>(y);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    const __m256d yv = _mm256_loadu_pd(yd + 2 * i);
    const __m256d t = cmul2(are, aim, xv);
    const __m256d s = cmul2(bre, bim, yv);
    _mm256_storeu_pd(yd + 2 * i, _mm256_add_pd(t, s));
  }
  for (; i < n; ++i) {
    const cplx t = cmul(a, x[i]);
    const cplx s = cmul(b, y[i]);
    y[i] = {t.real() + s.real(), t.imag() + s.imag()};
  }
}

void zscal_avx2(cplx a, cplx* x, std::size_t n) {
  const __m256d are = _mm256_set1_pd(a.real());
  const __m256d aim = _mm256_set1_pd(a.imag());
  double* xd = reinterpret_cast<double*>(x);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    _mm256_storeu_pd(xd + 2 * i, cmul2(are, aim, xv));
  }
  for (; i < n; ++i) x[i] = cmul(a, x[i]);
}

double znorm2_avx2(const cplx* x, std::size_t n) {
  const double* xd = reinterpret_cast<const double*>(x);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d xv = _mm256_loadu_pd(xd + 2 * i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(xv, xv));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    total += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
  }
  return total;
}

void zgemm_avx2(const cplx* a, const cplx* b, cplx* c,
                std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n * m; ++i) c[i] = {0.0, 0.0};
  double* cd = reinterpret_cast<double*>(c);
  const double* bd = reinterpret_cast<const double*>(b);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const cplx ail = a[i * k + l];
      const __m256d are = _mm256_set1_pd(ail.real());
      const __m256d aim = _mm256_set1_pd(ail.imag());
      const double* brow = bd + 2 * l * m;
      double* crow = cd + 2 * i * m;
      std::size_t j = 0;
      for (; j + 2 <= m; j += 2) {
        const __m256d bv = _mm256_loadu_pd(brow + 2 * j);
        const __m256d cv = _mm256_loadu_pd(crow + 2 * j);
        _mm256_storeu_pd(crow + 2 * j, _mm256_add_pd(cv, cmul2(are, aim, bv)));
      }
      for (; j < m; ++j) {
        const cplx t = cmul(ail, b[l * m + j]);
        cplx& dst = c[i * m + j];
        dst = {dst.real() + t.real(), dst.imag() + t.imag()};
      }
    }
  }
}

void collide_avx2(double* f0, double* f1, double* f2, double* f3,
                  const double* a, const double* q, std::size_t n) {
  const __m256d q0 = _mm256_set1_pd(q[0]), q1 = _mm256_set1_pd(q[1]);
  const __m256d q2 = _mm256_set1_pd(q[2]), q3 = _mm256_set1_pd(q[3]);
  __m256d av[16];
  for (int i = 0; i < 16; ++i) av[i] = _mm256_set1_pd(a[i]);
  std::size_t s = 0;
  for (; s + 4 <= n; s += 4) {
    const __m256d v0 = _mm256_loadu_pd(f0 + s);
    const __m256d v1 = _mm256_loadu_pd(f1 + s);
    const __m256d v2 = _mm256_loadu_pd(f2 + s);
    const __m256d v3 = _mm256_loadu_pd(f3 + s);
    const __m256d rho =
        _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(v0, v1), v2), v3);
    const __m256d d0 = _mm256_sub_pd(v0, _mm256_mul_pd(q0, rho));
    const __m256d d1 = _mm256_sub_pd(v1, _mm256_mul_pd(q1, rho));
    const __m256d d2 = _mm256_sub_pd(v2, _mm256_mul_pd(q2, rho));
    const __m256d d3 = _mm256_sub_pd(v3, _mm256_mul_pd(q3, rho));
    const auto relax = [&](const __m256d* row) {
      const __m256d t01 = _mm256_add_pd(_mm256_mul_pd(row[0], d0),
                                        _mm256_mul_pd(row[1], d1));
      const __m256d t23 = _mm256_add_pd(_mm256_mul_pd(row[2], d2),
                                        _mm256_mul_pd(row[3], d3));
      return _mm256_add_pd(t01, t23);
    };
    _mm256_storeu_pd(f0 + s, _mm256_sub_pd(v0, relax(av + 0)));
    _mm256_storeu_pd(f1 + s, _mm256_sub_pd(v1, relax(av + 4)));
    _mm256_storeu_pd(f2 + s, _mm256_sub_pd(v2, relax(av + 8)));
    _mm256_storeu_pd(f3 + s, _mm256_sub_pd(v3, relax(av + 12)));
  }
  for (; s < n; ++s) {
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

const Ops* avx2_ops_impl() {
  static const Ops ops = {
      zaxpy_avx2, zaxpby_avx2, zscal_avx2,
      znorm2_avx2, zgemm_avx2, collide_avx2,
  };
  return &ops;
}

}  // namespace qlb::kernels::detail
