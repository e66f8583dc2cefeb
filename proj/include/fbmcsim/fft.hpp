#pragma once

#include <complex>
#include <vector>

namespace fbmcsim {

// In-place forward DFT, unnormalized: X[m] = sum_p x[p] e^{-j2pi mp/n}.
// Radix-2 for power-of-two sizes, naive DFT otherwise.
void dft(std::vector<std::complex<double>>& x);

// In-place unnormalized inverse: x[p] = sum_m X[m] e^{+j2pi mp/n}.
void idft(std::vector<std::complex<double>>& x);

}  // namespace fbmcsim
