#include "fbmcsim/kernels.hpp"

#if defined(__x86_64__)
#include <immintrin.h>
#endif

namespace fbmcsim::kernels {

namespace scalar {

cd dot_conj(const cd* a, const cd* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ai * br - ar * bi;
    }
    return {re, im};
}

void axpy(cd alpha, const cd* x, cd* y, std::size_t n) {
    const double cr = alpha.real(), ci = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += cd{cr * xr - ci * xi, cr * xi + ci * xr};
    }
}

double energy(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

}  // namespace scalar

#if defined(__x86_64__)
namespace avx2 {

bool available() { return __builtin_cpu_supports("avx2") != 0; }

// Two complex doubles per 256-bit lane, interleaved (re, im, re, im).
__attribute__((target("avx2,fma"))) cd dot_conj(const cd* a, const cd* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc_re = _mm256_setzero_pd();
    __m256d acc_im = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d va = _mm256_loadu_pd(pa + 2 * i);          // ar0 ai0 ar1 ai1
        __m256d vb = _mm256_loadu_pd(pb + 2 * i);          // br0 bi0 br1 bi1
        __m256d vbs = _mm256_permute_pd(vb, 0x5);          // bi0 br0 bi1 br1
        acc_re = _mm256_fmadd_pd(va, vb, acc_re);          // ar*br, ai*bi
        acc_im = _mm256_fmadd_pd(va, vbs, acc_im);         // ar*bi, ai*br
    }
    alignas(32) double tr[4], ti[4];
    _mm256_store_pd(tr, acc_re);
    _mm256_store_pd(ti, acc_im);
    double re = (tr[0] + tr[1]) + (tr[2] + tr[3]);
    double im = (ti[1] - ti[0]) + (ti[3] - ti[2]);
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ai * br - ar * bi;
    }
    return {re, im};
}

__attribute__((target("avx2,fma"))) void axpy(cd alpha, const cd* x, cd* y, std::size_t n) {
    const double* px = reinterpret_cast<const double*>(x);
    double* py = reinterpret_cast<double*>(y);
    const __m256d vr = _mm256_set1_pd(alpha.real());
    const __m256d vi = _mm256_setr_pd(-alpha.imag(), alpha.imag(), -alpha.imag(), alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        __m256d vx = _mm256_loadu_pd(px + 2 * i);   // xr0 xi0 xr1 xi1
        __m256d vy = _mm256_loadu_pd(py + 2 * i);
        __m256d vxs = _mm256_permute_pd(vx, 0x5);   // xi0 xr0 xi1 xr1
        vy = _mm256_fmadd_pd(vr, vx, vy);           // + cr*xr, cr*xi
        vy = _mm256_fmadd_pd(vi, vxs, vy);          // + (-ci*xi), ci*xr
        _mm256_storeu_pd(py + 2 * i, vy);
    }
    for (; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += cd{alpha.real() * xr - alpha.imag() * xi, alpha.real() * xi + alpha.imag() * xr};
    }
}

__attribute__((target("avx2,fma"))) double energy(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    alignas(32) double t[4];
    _mm256_store_pd(t, acc);
    double s = (t[0] + t[1]) + (t[2] + t[3]);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

}  // namespace avx2
#endif

namespace {
#if defined(__x86_64__)
const bool g_use_avx2 = avx2::available();
#else
const bool g_use_avx2 = false;
#endif
}  // namespace

cd dot_conj(const cd* a, const cd* b, std::size_t n) {
#if defined(__x86_64__)
    if (g_use_avx2) return avx2::dot_conj(a, b, n);
#endif
    return scalar::dot_conj(a, b, n);
}

void axpy(cd alpha, const cd* x, cd* y, std::size_t n) {
#if defined(__x86_64__)
    if (g_use_avx2) {
        avx2::axpy(alpha, x, y, n);
        return;
    }
#endif
    scalar::axpy(alpha, x, y, n);
}

double energy(const double* x, std::size_t n) {
#if defined(__x86_64__)
    if (g_use_avx2) return avx2::energy(x, n);
#endif
    return scalar::energy(x, n);
}

const char* backend() { return g_use_avx2 ? "avx2" : "scalar"; }

}  // namespace fbmcsim::kernels
