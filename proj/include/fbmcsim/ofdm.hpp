#pragma once

#include <vector>

#include "fbmcsim/channel.hpp"
#include "fbmcsim/equalizer.hpp"
#include "fbmcsim/modem.hpp"

namespace fbmcsim {

// CP-OFDM reference arm sharing subcarrier count and combiners with the
// filter-bank chain. Unitary (I)FFT, so unit-power frequency symbols give
// unit-power time samples.
struct OfdmConfig {
    int num_subcarriers = 64;
    int cp_length = 16;
};

// Frequency-domain grid [k][m][n] of complex symbols.
struct OfdmFrame {
    int num_users = 0;
    int num_subcarriers = 0;
    int num_symbols = 0;
    std::vector<cd> data;
    std::vector<double> power_coeffs;  // mu_k, applied as sqrt(mu) at tx

    OfdmFrame() = default;
    OfdmFrame(int users, int subcarriers, int symbols)
        : num_users(users),
          num_subcarriers(subcarriers),
          num_symbols(symbols),
          data(static_cast<std::size_t>(users) * subcarriers * symbols, cd{}),
          power_coeffs(static_cast<std::size_t>(users), 1.0) {}
    cd& at(int k, int m, int n) {
        return data[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_symbols + n];
    }
    cd at(int k, int m, int n) const {
        return data[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_symbols + n];
    }
};

// Per-user time-domain signals, (M + cp) samples per symbol.
std::vector<std::vector<cd>> ofdm_modulate(const OfdmFrame& frame, const OfdmConfig& config);

// Strip CP, unitary DFT, then apply the combiner bank per subcarrier.
// Requires cp_length >= channel length - 1 (ISI-free); throws otherwise.
UserStreams ofdm_detect(const std::vector<std::vector<cd>>& received, const OfdmConfig& config,
                        const CombinerBank& bank, int channel_length);

}  // namespace fbmcsim
