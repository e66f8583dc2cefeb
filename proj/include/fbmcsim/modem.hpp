#pragma once

#include <complex>
#include <vector>

#include "fbmcsim/prototype.hpp"

namespace fbmcsim {

using cd = std::complex<double>;

// Real data symbols s_{m,n} per user, plus linear power coefficients mu_k.
struct SymbolFrame {
    int num_users = 0;
    int num_subcarriers = 0;
    int num_slots = 0;  // half-symbol (T/2) slots
    std::vector<double> symbols;      // [k][m][n]
    std::vector<double> power_coeffs; // mu_k, linear

    SymbolFrame() = default;
    SymbolFrame(int users, int subcarriers, int slots)
        : num_users(users),
          num_subcarriers(subcarriers),
          num_slots(slots),
          symbols(static_cast<std::size_t>(users) * subcarriers * slots, 0.0),
          power_coeffs(static_cast<std::size_t>(users), 1.0) {}

    double& at(int k, int m, int n) {
        return symbols[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_slots + n];
    }
    double at(int k, int m, int n) const {
        return symbols[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_slots + n];
    }
};

// Phase-adjusted analyzed samples z_{m,n} per antenna.
struct DemodGrid {
    int num_antennas = 0;
    int num_subcarriers = 0;
    int num_slots = 0;
    std::vector<cd> samples;  // [i][m][n]

    DemodGrid() = default;
    DemodGrid(int antennas, int subcarriers, int slots)
        : num_antennas(antennas),
          num_subcarriers(subcarriers),
          num_slots(slots),
          samples(static_cast<std::size_t>(antennas) * subcarriers * slots, cd{}) {}

    cd& at(int i, int m, int n) {
        return samples[(static_cast<std::size_t>(i) * num_subcarriers + m) * num_slots + n];
    }
    cd at(int i, int m, int n) const {
        return samples[(static_cast<std::size_t>(i) * num_subcarriers + m) * num_slots + n];
    }
};

// Modulated, phase-adjusted pulse f_{m,n}: samples[i] = f[i] carried at
// absolute time offset + i.
struct BasisPulse {
    int offset = 0;  // n*M/2
    std::vector<cd> samples;
};

BasisPulse basis_pulse(const PrototypeFilter& filter, int m, int n);

// Signal length for a frame of n_slots: n_slots*M/2 + kappa*M - M/2.
int synthesis_length(const PrototypeFilter& filter, int num_slots);

// x_k[l] = sqrt(mu_k) sum_{m,n} s_{m,n}^k f_{m,n}[l], one signal per user.
std::vector<std::vector<cd>> synthesize(const SymbolFrame& frame, const PrototypeFilter& filter);

// Single-antenna analysis: z_{m,n} = <r, f_{m,n}> (phase factor removed by
// the conjugated pulse). Throws std::invalid_argument when the signal is too
// short to cover num_slots.
DemodGrid analyze(const std::vector<cd>& signal, const PrototypeFilter& filter, int num_slots);

// Max over (m,n) != (m',n') in [0,freq_span) x [0,time_span) of
// |Re<f_{m,n}, f_{m',n'}>|, and of |Re<f_{m,n}, f_{m,n}> - 1|.
double orthogonality_residual(const PrototypeFilter& filter, int freq_span, int time_span);

}  // namespace fbmcsim
