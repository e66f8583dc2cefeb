#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "fbmcsim/modem.hpp"
#include "fbmcsim/prototype.hpp"

namespace fbmcsim {

// Interleaved multiuser pilot comb on a single pilot slot: user k occupies
// subcarriers {k + jK mod M}, +/-1 PRBS pilot values, kappa-1 guard slots
// after the pilot block.
struct PilotPlan {
    int num_users = 0;
    int taps_per_user = 0;  // L == N_p per user (minimum-pilot design)
    int num_subcarriers = 0;
    int pilot_slot = 0;
    int guard_slots = 0;
    std::vector<std::vector<int>> subcarriers;  // [k][i]
    std::vector<std::vector<double>> values;    // [k][i], +/-1

    int rows() const { return num_users * taps_per_user; }
};

constexpr std::uint64_t kDefaultPilotSeed = 0x5EED;

// K*L <= M required; throws std::invalid_argument otherwise.
PilotPlan build_pilot_plan(int num_users, int channel_length, int num_subcarriers,
                           std::uint64_t seed = kDefaultPilotSeed, int guard_slots = 3);

// Linear model zbar = Abar hbar + etabar over the pilot frame, with the MVU
// solve cached. The covariance scale sigma_eta^2 factors out of the
// estimator, so the cached operator is noise-independent and mse_total
// rescales linearly with sigma_eta^2.
struct EstimationModel {
    PilotPlan plan;
    Eigen::MatrixXcd system_matrix;     // Abar, (K*Np) x (K*L)
    Eigen::MatrixXcd noise_cov_unit;    // C for sigma_eta^2 == 1
    Eigen::MatrixXcd mvu_operator;      // (A^H C^-1 A)^-1 A^H C^-1
    double sigma_eta2 = 0.0;
    double mse_total = 0.0;             // tr{(A^H C^-1 A)^-1}, C at sigma_eta2
    double sigma_et2 = 0.0;             // mse_total / (K L)
    double sigma_ef2 = 0.0;             // L sigma_et2
};

EstimationModel assemble_model(const PilotPlan& plan, const PrototypeFilter& filter,
                               double sigma_eta2);

// Stack the demodulated pilot samples of one antenna in plan order.
Eigen::VectorXcd extract_pilot_samples(const DemodGrid& grid, const PilotPlan& plan, int antenna);

// hhat = MVU(zbar); length K*L, user-major.
Eigen::VectorXcd estimate_channels(const EstimationModel& model, const Eigen::VectorXcd& zbar);

// (sigma_et^2, sigma_ef^2)
std::pair<double, double> error_stats(const EstimationModel& model);

}  // namespace fbmcsim
