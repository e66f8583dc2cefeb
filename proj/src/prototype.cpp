#include "fbmcsim/prototype.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fbmcsim/kernels.hpp"

namespace fbmcsim {

PrototypeFilter design_phydyas(int num_subcarriers, int overlap) {
    if (num_subcarriers < 2 || num_subcarriers % 2 != 0)
        throw std::invalid_argument("design_phydyas: M must be even and >= 2");
    if (overlap < 2 || overlap > 4)
        throw std::invalid_argument("design_phydyas: overlap factor must be in {2,3,4}");

    // Frequency-sampling coefficients (Bellanger / PHYDYAS)
    static const double kH2[] = {std::numbers::sqrt2 / 2.0};
    static const double kH3[] = {0.91143783, 0.41143783};
    static const double kH4[] = {0.971960, std::numbers::sqrt2 / 2.0, 0.235147};
    const double* h = overlap == 2 ? kH2 : overlap == 3 ? kH3 : kH4;

    const int len = overlap * num_subcarriers;
    PrototypeFilter filter;
    filter.num_subcarriers = num_subcarriers;
    filter.overlap = overlap;
    filter.coeffs.assign(static_cast<std::size_t>(len), 0.0);
    for (int l = 1; l < len; ++l) {
        double v = 1.0;
        for (int q = 1; q < overlap; ++q) {
            const double sign = (q % 2 == 0) ? 1.0 : -1.0;
            v += 2.0 * sign * h[q - 1] *
                 std::cos(2.0 * std::numbers::pi * q * l / static_cast<double>(len));
        }
        filter.coeffs[static_cast<std::size_t>(l)] = v;
    }
    const double norm = std::sqrt(kernels::energy(filter.coeffs.data(), filter.coeffs.size()));
    for (double& c : filter.coeffs) c /= norm;
    return filter;
}

}  // namespace fbmcsim
