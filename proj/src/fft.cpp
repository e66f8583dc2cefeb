#include "fbmcsim/fft.hpp"

#include <cmath>
#include <numbers>

namespace fbmcsim {

namespace {

using cd = std::complex<double>;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<cd>& x, int sign) {
    const std::size_t n = x.size();
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        const cd wlen{std::cos(ang), std::sin(ang)};
        for (std::size_t i = 0; i < n; i += len) {
            cd w{1.0, 0.0};
            for (std::size_t k = 0; k < len / 2; ++k) {
                cd u = x[i + k];
                cd v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

void dft_naive(std::vector<cd>& x, int sign) {
    const std::size_t n = x.size();
    std::vector<cd> out(n);
    for (std::size_t m = 0; m < n; ++m) {
        cd acc{0.0, 0.0};
        for (std::size_t p = 0; p < n; ++p) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(m * p) /
                               static_cast<double>(n);
            acc += x[p] * cd{std::cos(ang), std::sin(ang)};
        }
        out[m] = acc;
    }
    x = std::move(out);
}

}  // namespace

void dft(std::vector<cd>& x) {
    if (is_pow2(x.size()))
        fft_radix2(x, -1);
    else
        dft_naive(x, -1);
}

void idft(std::vector<cd>& x) {
    if (is_pow2(x.size()))
        fft_radix2(x, +1);
    else
        dft_naive(x, +1);
}

}  // namespace fbmcsim
