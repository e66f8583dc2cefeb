#pragma once

#include <complex>
#include <string>
#include <vector>

#include "fbmcsim/rng.hpp"

namespace fbmcsim {

using cd = std::complex<double>;

// Per-lag average power p[l], unit sum when normalized.
struct PdpProfile {
    std::vector<double> taps;

    int length() const { return static_cast<int>(taps.size()); }
    double sum() const;
    void normalize();
};

struct TdlTap {
    double delay_ns;  // delay for a 1 ns RMS delay spread (normalized table)
    double power_db;
};

// Embedded 3GPP TDL-C table (24 taps, unit RMS delay spread).
const std::vector<TdlTap>& tdlc_table();

// Parse a "delay_ns power_db" per-line table file ('#' comments allowed).
std::vector<TdlTap> load_tdl_table(const std::string& path);

// Scale the normalized table to rms_delay_s, drop taps more than
// threshold_db below the strongest, bin onto the sample grid (nearest bin,
// linear powers summed) and normalize to unit sum.
PdpProfile tdlc_pdp(double rms_delay_s, double sample_rate_hz, double threshold_db = -30.0);
PdpProfile tdl_pdp(const std::vector<TdlTap>& table, double rms_delay_s, double sample_rate_hz,
                   double threshold_db = -30.0);

// p[l] proportional to e^{-decay * l}, length taps, unit sum.
PdpProfile exponential_pdp(double decay, int length);

// Independent CN(0, p_{i,k}[l]) taps per (antenna, user, lag).
struct ChannelRealization {
    int num_antennas = 0;
    int num_users = 0;
    int length = 0;  // L
    std::vector<cd> taps;  // [i][k][l]

    cd& at(int i, int k, int l) {
        return taps[(static_cast<std::size_t>(i) * num_users + k) * length + l];
    }
    cd at(int i, int k, int l) const {
        return taps[(static_cast<std::size_t>(i) * num_users + k) * length + l];
    }
    // h_{i,k} as a contiguous span
    const cd* user_taps(int i, int k) const {
        return taps.data() + (static_cast<std::size_t>(i) * num_users + k) * length;
    }
};

// Same PDP for every antenna of a given user (co-located array).
ChannelRealization draw_realization(const std::vector<PdpProfile>& pdp_per_user, int num_antennas,
                                    Philox& rng);

// Per-(antenna, user) variance scale on top of the per-user PDP; used by the
// cell-free layout where sum_l p_{i,k}[l] = beta_{i,k}.
ChannelRealization draw_realization_scaled(const std::vector<PdpProfile>& pdp_per_user,
                                           const std::vector<double>& gain_per_antenna_user,
                                           int num_antennas, Philox& rng);

// r_i[l] = sum_k (x_k * h_{i,k})[l] + eta_i[l]; output length = input + L - 1.
std::vector<std::vector<cd>> apply_channel_awgn(const std::vector<std::vector<cd>>& signals,
                                                const ChannelRealization& realization,
                                                double noise_power, Philox& rng);

}  // namespace fbmcsim
