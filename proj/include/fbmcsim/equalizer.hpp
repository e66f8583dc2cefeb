#pragma once

#include <Eigen/Dense>
#include <vector>

#include "fbmcsim/channel.hpp"
#include "fbmcsim/modem.hpp"
#include "fbmcsim/prototype.hpp"

namespace fbmcsim {

enum class CombinerKind { Mrc, Zf, Mmse };

// Per-subcarrier N x K combining matrices W_m.
struct CombinerBank {
    CombinerKind kind = CombinerKind::Mrc;
    int num_antennas = 0;
    int num_users = 0;
    std::vector<Eigen::MatrixXcd> weights;   // [m], N x K
    std::vector<Eigen::VectorXd> mrc_norms;  // [m], K (MRC only)
    bool rank_deficient = false;             // ZF fell back to a pseudo-inverse
};

// H_m(i,k) = sum_l h_{i,k}[l] e^{-j2pi ml/M}, one N x K matrix per m.
std::vector<Eigen::MatrixXcd> subcarrier_gains(const ChannelRealization& realization, int M);

CombinerBank build_combiner(const std::vector<Eigen::MatrixXcd>& gains, CombinerKind kind,
                            double sigma_eta2);

// Combined per-user streams y_{k,m}[n] = (W_m^H z_{m,n})_k over the leading
// bank.num_antennas antennas of the grid.
struct UserStreams {
    int num_users = 0;
    int num_subcarriers = 0;
    int num_slots = 0;
    std::vector<cd> data;  // [k][m][n]

    UserStreams() = default;
    UserStreams(int users, int subcarriers, int slots)
        : num_users(users),
          num_subcarriers(subcarriers),
          num_slots(slots),
          data(static_cast<std::size_t>(users) * subcarriers * slots, cd{}) {}
    cd& at(int k, int m, int n) {
        return data[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_slots + n];
    }
    cd at(int k, int m, int n) const {
        return data[(static_cast<std::size_t>(k) * num_subcarriers + m) * num_slots + n];
    }
};

UserStreams combine_stream(const DemodGrid& grid, const CombinerBank& bank);

enum class EqChannelMode { Exact, AsymptoticPdp };

// h^{(eqvlt)}_{k,k',m}[l]; asymptotic mode holds pbar_{m,k}[l] delta_{kk'}.
struct EquivalentChannel {
    EqChannelMode mode = EqChannelMode::Exact;
    int num_users = 0;
    int num_subcarriers = 0;
    int length = 0;
    std::vector<cd> taps;  // [k][k'][m][l]

    cd& at(int k, int kp, int m, int l) {
        return taps[((static_cast<std::size_t>(k) * num_users + kp) * num_subcarriers + m) *
                        length + l];
    }
    cd at(int k, int kp, int m, int l) const {
        return taps[((static_cast<std::size_t>(k) * num_users + kp) * num_subcarriers + m) *
                        length + l];
    }
};

// Exact mode: sum_i conj(W_m^{i,k}) sqrt(mu_{k'}) h_{i,k'}[l].
EquivalentChannel equivalent_channel(const CombinerBank& bank, const ChannelRealization& taps,
                                     const std::vector<double>& power_coeffs);

// Asymptotic-PDP mode: taps p_k[l] e^{j2pi lm/M} delta_{kk'}.
EquivalentChannel equivalent_channel_pdp(const std::vector<PdpProfile>& pdp_per_user, int M);

// Composite pulse at T/2 spacing; taps[idx] holds g[idx - center].
struct CompositePulse {
    std::vector<cd> taps;
    int center = 0;

    cd at(int q) const {
        const int idx = q + center;
        return (idx < 0 || idx >= static_cast<int>(taps.size())) ? cd{} : taps[static_cast<std::size_t>(idx)];
    }
};

// g_k[n] = (f * p_k * f) downsampled by M/2; independent of m.
CompositePulse composite_pulse_pdp(const PdpProfile& pdp, const PrototypeFilter& filter);

// g_mm^{k,k}[n] from the own-user equivalent channel on subcarrier m, with
// the residual subcarrier modulation removed by the decimation step.
CompositePulse composite_pulse_subcarrier(const EquivalentChannel& eq, int k, int m,
                                          const PrototypeFilter& filter);

// Ideal Nyquist target (f * f) downsampled by M/2.
CompositePulse ideal_composite_target(const PrototypeFilter& filter);

enum class FseDesignKind { ZfLs, Mmse };

struct FseTaps {
    Eigen::VectorXcd taps;  // length L_FSE, T/2 spacing
    int delay = 0;          // decision delay in half-symbol units
    bool regularized = false;
};

// Per-(user, subcarrier) FSE tap vectors.
struct FseBank {
    int num_users = 0;
    int num_subcarriers = 0;
    std::vector<FseTaps> taps;  // [k][m]

    FseTaps& at(int k, int m) { return taps[static_cast<std::size_t>(k) * num_subcarriers + m]; }
    const FseTaps& at(int k, int m) const {
        return taps[static_cast<std::size_t>(k) * num_subcarriers + m];
    }
};

// Least-squares fit of (g * c) to the delayed ideal target; MMSE adds a
// ridge term noise_level * I. L_FSE must be odd.
FseTaps design_fse(const CompositePulse& pulse, const CompositePulse& target, int num_taps,
                   FseDesignKind kind, double noise_level);

// shat[n] = Re{ sum_j c[j] j^{d-j} y[n+d-j] }: the j^{n} staggering of the
// combined stream is folded into the taps so the FSE designed on g applies
// directly.
std::vector<double> equalize_stream(const UserStreams& streams, int k, int m, const FseTaps& fse);

// phat_k[l] = (1/N) sum_i |hhat_{i,k}[l]|^2 for one user.
PdpProfile approximate_pdp(const ChannelRealization& estimates, int user);

enum class CorrectionMode { None, ColocatedScale, SubtractTermSmall, SubtractTermCellfree };

struct ErrorStatsView {
    double sigma_et2 = 0.0;
    double sigma_ef2 = 0.0;
    CorrectionMode mode = CorrectionMode::None;
};

struct CorrectionContext {
    int num_antennas = 0;
    std::vector<double> power_coeffs;       // mu_k
    std::vector<double> sum_beta_per_user;  // sum_i beta_{i,k}
};

// Colocated scaling on a PDP: p / (1 + sigma_ef^2).
PdpProfile apply_csi_correction(const PdpProfile& pdp, const ErrorStatsView& stats);

// Subtract-term corrections on the own-user equivalent taps.
EquivalentChannel apply_csi_correction(const EquivalentChannel& eq, const ErrorStatsView& stats,
                                       const CorrectionContext& context);

}  // namespace fbmcsim
