#include "fbmcsim/equalizer.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fbmcsim {

namespace {

cd unit_phasor(double ang) { return {std::cos(ang), std::sin(ang)}; }

// j^v for integer v
cd jpow(int v) {
    switch (((v % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

}  // namespace

std::vector<Eigen::MatrixXcd> subcarrier_gains(const ChannelRealization& realization, int M) {
    if (realization.length > M)
        throw std::invalid_argument("subcarrier_gains: channel longer than DFT size");
    const int N = realization.num_antennas;
    const int K = realization.num_users;
    std::vector<Eigen::MatrixXcd> gains(static_cast<std::size_t>(M),
                                        Eigen::MatrixXcd::Zero(N, K));
    for (int m = 0; m < M; ++m) {
        auto& H = gains[static_cast<std::size_t>(m)];
        for (int i = 0; i < N; ++i) {
            for (int k = 0; k < K; ++k) {
                cd acc{};
                for (int l = 0; l < realization.length; ++l) {
                    const double ang = -2.0 * std::numbers::pi * m * l / static_cast<double>(M);
                    acc += realization.at(i, k, l) * unit_phasor(ang);
                }
                H(i, k) = acc;
            }
        }
    }
    return gains;
}

CombinerBank build_combiner(const std::vector<Eigen::MatrixXcd>& gains, CombinerKind kind,
                            double sigma_eta2) {
    if (gains.empty()) throw std::invalid_argument("build_combiner: no subcarrier gains");
    CombinerBank bank;
    bank.kind = kind;
    bank.num_antennas = static_cast<int>(gains.front().rows());
    bank.num_users = static_cast<int>(gains.front().cols());
    const int K = bank.num_users;
    bank.weights.reserve(gains.size());

    for (const auto& H : gains) {
        switch (kind) {
            case CombinerKind::Mrc: {
                Eigen::VectorXd d = H.colwise().squaredNorm().real().transpose();
                Eigen::MatrixXcd W = H;
                for (int k = 0; k < K; ++k) W.col(k) /= d(k);
                bank.weights.push_back(std::move(W));
                bank.mrc_norms.push_back(std::move(d));
                break;
            }
            case CombinerKind::Zf: {
                const Eigen::MatrixXcd gram = H.adjoint() * H;
                Eigen::LLT<Eigen::MatrixXcd> llt(gram);
                // condition guard: fall back to a tolerance pseudo-inverse
                Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
                    H, Eigen::ComputeThinU | Eigen::ComputeThinV);
                const double smax = svd.singularValues()(0);
                const double smin = svd.singularValues()(svd.singularValues().size() - 1);
                if (llt.info() == Eigen::Success && smin > 1e-10 * smax) {
                    bank.weights.push_back(llt.solve(H.adjoint()).adjoint());
                } else {
                    bank.rank_deficient = true;
                    Eigen::VectorXd inv = svd.singularValues();
                    for (int s = 0; s < inv.size(); ++s)
                        inv(s) = inv(s) > 1e-10 * smax ? 1.0 / inv(s) : 0.0;
                    // W = H (H^H H)^+ = U S^+ V^H ... expressed via the SVD of H
                    bank.weights.push_back(svd.matrixU() * inv.asDiagonal() *
                                           svd.matrixV().adjoint());
                }
                break;
            }
            case CombinerKind::Mmse: {
                Eigen::MatrixXcd reg = H.adjoint() * H;
                reg.diagonal().array() += sigma_eta2;
                bank.weights.push_back(
                    Eigen::LLT<Eigen::MatrixXcd>(reg).solve(H.adjoint()).adjoint());
                break;
            }
        }
    }
    return bank;
}

UserStreams combine_stream(const DemodGrid& grid, const CombinerBank& bank) {
    const int N = bank.num_antennas;
    const int K = bank.num_users;
    const int M = grid.num_subcarriers;
    if (static_cast<int>(bank.weights.size()) != M || grid.num_antennas < N)
        throw std::invalid_argument("combine_stream: dimension mismatch");
    UserStreams out(K, M, grid.num_slots);
    Eigen::VectorXcd z(N);
    for (int m = 0; m < M; ++m) {
        const Eigen::MatrixXcd Wh = bank.weights[static_cast<std::size_t>(m)].adjoint();
        for (int n = 0; n < grid.num_slots; ++n) {
            for (int i = 0; i < N; ++i) z(i) = grid.at(i, m, n);
            const Eigen::VectorXcd y = Wh * z;
            for (int k = 0; k < K; ++k) out.at(k, m, n) = y(k);
        }
    }
    return out;
}

EquivalentChannel equivalent_channel(const CombinerBank& bank, const ChannelRealization& taps,
                                     const std::vector<double>& power_coeffs) {
    const int N = bank.num_antennas;
    const int K = bank.num_users;
    const int M = static_cast<int>(bank.weights.size());
    if (taps.num_users != K || taps.num_antennas < N)
        throw std::invalid_argument("equivalent_channel: dimension mismatch");
    EquivalentChannel eq;
    eq.mode = EqChannelMode::Exact;
    eq.num_users = K;
    eq.num_subcarriers = M;
    eq.length = taps.length;
    eq.taps.assign(static_cast<std::size_t>(K) * K * M * taps.length, cd{});
    for (int m = 0; m < M; ++m) {
        const auto& W = bank.weights[static_cast<std::size_t>(m)];
        for (int k = 0; k < K; ++k) {
            for (int kp = 0; kp < K; ++kp) {
                const double amp = std::sqrt(power_coeffs[static_cast<std::size_t>(kp)]);
                for (int l = 0; l < taps.length; ++l) {
                    cd acc{};
                    for (int i = 0; i < N; ++i)
                        acc += std::conj(W(i, k)) * taps.at(i, kp, l);
                    eq.at(k, kp, m, l) = amp * acc;
                }
            }
        }
    }
    return eq;
}

EquivalentChannel equivalent_channel_pdp(const std::vector<PdpProfile>& pdp_per_user, int M) {
    const int K = static_cast<int>(pdp_per_user.size());
    int L = 0;
    for (const auto& p : pdp_per_user) L = std::max(L, p.length());
    EquivalentChannel eq;
    eq.mode = EqChannelMode::AsymptoticPdp;
    eq.num_users = K;
    eq.num_subcarriers = M;
    eq.length = L;
    eq.taps.assign(static_cast<std::size_t>(K) * K * M * L, cd{});
    for (int k = 0; k < K; ++k) {
        const auto& p = pdp_per_user[static_cast<std::size_t>(k)];
        for (int m = 0; m < M; ++m) {
            for (int l = 0; l < p.length(); ++l) {
                const double ang = 2.0 * std::numbers::pi * l * m / static_cast<double>(M);
                eq.at(k, k, m, l) = p.taps[static_cast<std::size_t>(l)] * unit_phasor(ang);
            }
        }
    }
    return eq;
}

namespace {

// (f_m * h * f_m) sampled at kappa*M + q*M/2, with the residual modulation
// (-1)^{mq} removed; this is the transfer the combined stream sees from a
// symbol at slot n' to slot n'+q (up to the j^{-q} staggering handled at
// application time).
CompositePulse composite_from_taps(const std::vector<cd>& channel, int m,
                                   const PrototypeFilter& filter) {
    const int plen = filter.length();
    const int M = filter.num_subcarriers;
    const int half = M / 2;
    const int L = static_cast<int>(channel.size());

    std::vector<cd> fm(static_cast<std::size_t>(plen));
    for (int i = 0; i < plen; ++i) {
        const double ang = 2.0 * std::numbers::pi * m * i / static_cast<double>(M);
        fm[static_cast<std::size_t>(i)] = filter.coeffs[static_cast<std::size_t>(i)] * unit_phasor(ang);
    }
    // f_m * h
    std::vector<cd> fh(static_cast<std::size_t>(plen + L - 1), cd{});
    for (int l = 0; l < L; ++l) {
        if (channel[static_cast<std::size_t>(l)] == cd{}) continue;
        for (int i = 0; i < plen; ++i)
            fh[static_cast<std::size_t>(i + l)] += fm[static_cast<std::size_t>(i)] * channel[static_cast<std::size_t>(l)];
    }
    // sample (f_m * h * f_m) only at the decimated instants
    const int full_len = plen + L - 1 + plen - 1;
    const int qmin = -(plen / half);                       // kappa*M + q*half >= 0
    const int qmax = (full_len - 1 - plen) / half;         // kappa*M + q*half < full_len
    CompositePulse pulse;
    pulse.center = -qmin;
    pulse.taps.assign(static_cast<std::size_t>(qmax - qmin + 1), cd{});
    for (int q = qmin; q <= qmax; ++q) {
        const int t = plen + q * half;  // kappa*M + q*M/2
        cd acc{};
        const int alo = std::max(0, t - static_cast<int>(fh.size()) + 1);
        const int ahi = std::min(plen - 1, t);
        for (int a = alo; a <= ahi; ++a)
            acc += fm[static_cast<std::size_t>(a)] * fh[static_cast<std::size_t>(t - a)];
        if ((m * q) % 2 != 0) acc = -acc;
        pulse.taps[static_cast<std::size_t>(q - qmin)] = acc;
    }
    return pulse;
}

}  // namespace

CompositePulse composite_pulse_pdp(const PdpProfile& pdp, const PrototypeFilter& filter) {
    std::vector<cd> channel(pdp.taps.begin(), pdp.taps.end());
    return composite_from_taps(channel, 0, filter);
}

CompositePulse composite_pulse_subcarrier(const EquivalentChannel& eq, int k, int m,
                                          const PrototypeFilter& filter) {
    std::vector<cd> channel(static_cast<std::size_t>(eq.length));
    for (int l = 0; l < eq.length; ++l) channel[static_cast<std::size_t>(l)] = eq.at(k, k, m, l);
    return composite_from_taps(channel, m, filter);
}

CompositePulse ideal_composite_target(const PrototypeFilter& filter) {
    std::vector<cd> delta{cd{1.0, 0.0}};
    return composite_from_taps(delta, 0, filter);
}

FseTaps design_fse(const CompositePulse& pulse, const CompositePulse& target, int num_taps,
                   FseDesignKind kind, double noise_level) {
    if (num_taps < 1 || num_taps % 2 == 0)
        throw std::invalid_argument("design_fse: tap count must be odd and >= 1");
    double pulse_energy = 0.0;
    for (const cd& g : pulse.taps) pulse_energy += std::norm(g);
    if (pulse_energy < 1e-12)
        throw std::domain_error("design_fse: degenerate (near-zero) composite pulse");

    const int ng = static_cast<int>(pulse.taps.size());
    const int rows = ng + num_taps - 1;

    // peak of g, ties toward smaller delay
    int peak = 0;
    double best = -1.0;
    for (int i = 0; i < ng; ++i) {
        const double mag = std::abs(pulse.taps[static_cast<std::size_t>(i)]);
        if (mag > best + 1e-15) {
            best = mag;
            peak = i;
        }
    }
    const int delay = (num_taps - 1) / 2 + (peak - pulse.center);

    Eigen::MatrixXcd conv = Eigen::MatrixXcd::Zero(rows, num_taps);
    for (int j = 0; j < num_taps; ++j)
        for (int i = 0; i < ng; ++i) conv(i + j, j) = pulse.taps[static_cast<std::size_t>(i)];
    Eigen::VectorXcd want = Eigen::VectorXcd::Zero(rows);
    for (int r = 0; r < rows; ++r) want(r) = target.at(r - pulse.center - delay);

    FseTaps out;
    out.delay = delay;
    Eigen::MatrixXcd normal = conv.adjoint() * conv;
    if (kind == FseDesignKind::Mmse) {
        // The T/2-spaced stream noise is not white: its covariance between
        // taps j and j' is proportional to the analysis-pulse Gram at lag
        // j - j', which (after the quarter-phase staggering cancels) is the
        // ideal Nyquist target evaluated there. Regularize with that
        // Toeplitz form so longer equalizers do not amplify correlated
        // noise.
        for (int j = 0; j < num_taps; ++j)
            for (int jp = 0; jp < num_taps; ++jp)
                normal(j, jp) += noise_level * target.at(j - jp);
    }
    const Eigen::VectorXcd rhs = conv.adjoint() * want;
    Eigen::LLT<Eigen::MatrixXcd> llt(normal);
    if (llt.info() == Eigen::Success) {
        out.taps = llt.solve(rhs);
    } else {
        out.regularized = true;
        normal.diagonal().array() += 1e-10 * normal.diagonal().real().maxCoeff();
        out.taps = Eigen::LLT<Eigen::MatrixXcd>(normal).solve(rhs);
    }
    return out;
}

std::vector<double> equalize_stream(const UserStreams& streams, int k, int m, const FseTaps& fse) {
    const int n_slots = streams.num_slots;
    const int nt = static_cast<int>(fse.taps.size());
    std::vector<double> out(static_cast<std::size_t>(n_slots), 0.0);
    for (int n = 0; n < n_slots; ++n) {
        cd acc{};
        for (int j = 0; j < nt; ++j) {
            const int idx = n + fse.delay - j;
            if (idx < 0 || idx >= n_slots) continue;
            acc += fse.taps(j) * jpow(fse.delay - j) * streams.at(k, m, idx);
        }
        out[static_cast<std::size_t>(n)] = acc.real();
    }
    return out;
}

PdpProfile approximate_pdp(const ChannelRealization& estimates, int user) {
    PdpProfile pdp;
    pdp.taps.assign(static_cast<std::size_t>(estimates.length), 0.0);
    for (int l = 0; l < estimates.length; ++l) {
        double acc = 0.0;
        for (int i = 0; i < estimates.num_antennas; ++i)
            acc += std::norm(estimates.at(i, user, l));
        pdp.taps[static_cast<std::size_t>(l)] = acc / static_cast<double>(estimates.num_antennas);
    }
    return pdp;
}

PdpProfile apply_csi_correction(const PdpProfile& pdp, const ErrorStatsView& stats) {
    if (stats.sigma_et2 < 0.0 || stats.sigma_ef2 < 0.0)
        throw std::invalid_argument("apply_csi_correction: negative error variance");
    PdpProfile out = pdp;
    if (stats.mode == CorrectionMode::ColocatedScale) {
        for (double& t : out.taps) t /= 1.0 + stats.sigma_ef2;
    }
    return out;
}

EquivalentChannel apply_csi_correction(const EquivalentChannel& eq, const ErrorStatsView& stats,
                                       const CorrectionContext& context) {
    if (stats.sigma_et2 < 0.0 || stats.sigma_ef2 < 0.0)
        throw std::invalid_argument("apply_csi_correction: negative error variance");
    EquivalentChannel out = eq;
    if (stats.mode == CorrectionMode::None) return out;
    const int M = eq.num_subcarriers;
    for (int k = 0; k < eq.num_users; ++k) {
        double term = 0.0;
        switch (stats.mode) {
            case CorrectionMode::ColocatedScale:
                for (int m = 0; m < M; ++m)
                    for (int l = 0; l < eq.length; ++l)
                        out.at(k, k, m, l) /= 1.0 + stats.sigma_ef2;
                continue;
            case CorrectionMode::SubtractTermSmall:
                term = stats.sigma_et2 / (1.0 + stats.sigma_ef2);
                break;
            case CorrectionMode::SubtractTermCellfree: {
                const double n = static_cast<double>(context.num_antennas);
                term = n * stats.sigma_et2 *
                       std::sqrt(context.power_coeffs[static_cast<std::size_t>(k)]) /
                       (context.sum_beta_per_user[static_cast<std::size_t>(k)] + n * stats.sigma_ef2);
                break;
            }
            default:
                break;
        }
        for (int m = 0; m < M; ++m) {
            for (int l = 0; l < eq.length; ++l) {
                const double ang = 2.0 * std::numbers::pi * l * m / static_cast<double>(M);
                out.at(k, k, m, l) -= term * unit_phasor(ang);
            }
        }
    }
    return out;
}

}  // namespace fbmcsim
