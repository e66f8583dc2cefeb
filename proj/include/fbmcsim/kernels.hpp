#pragma once

#include <complex>
#include <cstddef>

// Hot inner-loop kernels: scalar reference implementations plus SIMD
// variants selected once at startup. All variants are bit-compatible in
// result ordering (same accumulation order per lane count is NOT
// guaranteed, so comparisons are tolerance-based; see tests).

namespace fbmcsim::kernels {

using cd = std::complex<double>;

namespace scalar {
cd dot_conj(const cd* a, const cd* b, std::size_t n);
void axpy(cd alpha, const cd* x, cd* y, std::size_t n);
double energy(const double* x, std::size_t n);
}  // namespace scalar

#if defined(__AVX2__) || defined(__x86_64__)
namespace avx2 {
cd dot_conj(const cd* a, const cd* b, std::size_t n);
void axpy(cd alpha, const cd* x, cd* y, std::size_t n);
double energy(const double* x, std::size_t n);
bool available();
}  // namespace avx2
#endif

// Dispatched entry points. sum_l a[l] * conj(b[l])
cd dot_conj(const cd* a, const cd* b, std::size_t n);
// y[i] += alpha * x[i]
void axpy(cd alpha, const cd* x, cd* y, std::size_t n);
// sum x[i]^2
double energy(const double* x, std::size_t n);

// Name of the active backend ("avx2" or "scalar").
const char* backend();

}  // namespace fbmcsim::kernels
