#pragma once

#include <vector>

namespace fbmcsim {

// Unit-energy PHYDYAS prototype filter. Length kappa*M with coeffs[0] == 0
// (frequency-sampling closed form, first sample zero-padded so the length
// stays a multiple of M/2).
struct PrototypeFilter {
    std::vector<double> coeffs;
    int num_subcarriers = 0;  // M
    int overlap = 0;          // kappa

    int length() const { return static_cast<int>(coeffs.size()); }
};

// M even and >= 2, kappa in {2, 3, 4}; throws std::invalid_argument otherwise.
PrototypeFilter design_phydyas(int num_subcarriers, int overlap);

}  // namespace fbmcsim
