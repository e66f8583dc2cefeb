#include "fbmcsim/chanest.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "fbmcsim/kernels.hpp"
#include "fbmcsim/rng.hpp"

namespace fbmcsim {

PilotPlan build_pilot_plan(int num_users, int channel_length, int num_subcarriers,
                           std::uint64_t seed, int guard_slots) {
    if (num_users < 1 || channel_length < 1)
        throw std::invalid_argument("build_pilot_plan: users and channel length must be >= 1");
    if (num_users * channel_length > num_subcarriers)
        throw std::invalid_argument("build_pilot_plan: K*L exceeds subcarrier capacity M");

    PilotPlan plan;
    plan.num_users = num_users;
    plan.taps_per_user = channel_length;
    plan.num_subcarriers = num_subcarriers;
    plan.guard_slots = guard_slots;
    plan.subcarriers.resize(static_cast<std::size_t>(num_users));
    plan.values.resize(static_cast<std::size_t>(num_users));
    Philox prbs(seed, 0, 0);
    for (int k = 0; k < num_users; ++k) {
        auto& subs = plan.subcarriers[static_cast<std::size_t>(k)];
        auto& vals = plan.values[static_cast<std::size_t>(k)];
        for (int j = 0; j < channel_length; ++j) {
            subs.push_back((k + j * num_users) % num_subcarriers);
            vals.push_back((prbs() & 1u) ? 1.0 : -1.0);
        }
    }
    return plan;
}

namespace {

// Pilot-only frame of one user (data symbols zero).
SymbolFrame pilot_frame(const PilotPlan& plan, int user) {
    SymbolFrame frame(1, plan.num_subcarriers, 1);
    const auto& subs = plan.subcarriers[static_cast<std::size_t>(user)];
    const auto& vals = plan.values[static_cast<std::size_t>(user)];
    for (std::size_t i = 0; i < subs.size(); ++i)
        frame.at(0, subs[i], plan.pilot_slot) = vals[i];
    return frame;
}

}  // namespace

EstimationModel assemble_model(const PilotPlan& plan, const PrototypeFilter& filter,
                               double sigma_eta2) {
    if (plan.num_subcarriers != filter.num_subcarriers)
        throw std::invalid_argument("assemble_model: plan/filter subcarrier mismatch");
    const int K = plan.num_users;
    const int L = plan.taps_per_user;
    const int rows = plan.rows();
    const int cols = K * L;

    EstimationModel model;
    model.plan = plan;
    model.sigma_eta2 = sigma_eta2;
    model.system_matrix.resize(rows, cols);

    // Column (k2, l) is the demodulated pilot response to a unit channel tap
    // at lag l for user k2; equivalent to the literal triple-sum elements but
    // evaluated through the modem.
    for (int k2 = 0; k2 < K; ++k2) {
        const auto signal = synthesize(pilot_frame(plan, k2), filter);
        const auto& x = signal.front();
        std::vector<cd> shifted(x.size() + static_cast<std::size_t>(L), cd{});
        for (int l = 0; l < L; ++l) {
            std::fill(shifted.begin(), shifted.end(), cd{});
            std::copy(x.begin(), x.end(), shifted.begin() + l);
            const DemodGrid grid = analyze(shifted, filter, 1);
            const int col = k2 * L + l;
            for (int k1 = 0; k1 < K; ++k1) {
                const auto& subs = plan.subcarriers[static_cast<std::size_t>(k1)];
                for (std::size_t i = 0; i < subs.size(); ++i) {
                    model.system_matrix(k1 * L + static_cast<int>(i), col) =
                        grid.at(0, subs[i], plan.pilot_slot);
                }
            }
        }
    }

    // Unit-noise covariance: C(i,j) = <f_j, f_i> over the pilot slot pulses.
    std::vector<BasisPulse> pulses;
    pulses.reserve(static_cast<std::size_t>(rows));
    for (int k = 0; k < K; ++k)
        for (int sub : plan.subcarriers[static_cast<std::size_t>(k)])
            pulses.push_back(basis_pulse(filter, sub, plan.pilot_slot));
    model.noise_cov_unit.resize(rows, rows);
    for (int i = 0; i < rows; ++i) {
        for (int j = i; j < rows; ++j) {
            const cd v = kernels::dot_conj(pulses[static_cast<std::size_t>(j)].samples.data(),
                                           pulses[static_cast<std::size_t>(i)].samples.data(),
                                           pulses[static_cast<std::size_t>(i)].samples.size());
            model.noise_cov_unit(i, j) = v;
            model.noise_cov_unit(j, i) = std::conj(v);
        }
    }

    Eigen::LLT<Eigen::MatrixXcd> llt_cov(model.noise_cov_unit);
    if (llt_cov.info() != Eigen::Success)
        throw std::runtime_error("assemble_model: ill-posed plan (noise covariance not PD)");
    const Eigen::MatrixXcd whitened = llt_cov.solve(model.system_matrix);  // C^-1 A
    const Eigen::MatrixXcd gram = model.system_matrix.adjoint() * whitened;
    Eigen::LLT<Eigen::MatrixXcd> llt_gram(gram);
    if (llt_gram.info() != Eigen::Success)
        throw std::runtime_error("assemble_model: ill-posed plan (A^H C^-1 A singular)");
    model.mvu_operator = llt_gram.solve(whitened.adjoint());
    const Eigen::MatrixXcd gram_inv =
        llt_gram.solve(Eigen::MatrixXcd::Identity(cols, cols));
    model.mse_total = sigma_eta2 * gram_inv.trace().real();
    model.sigma_et2 = model.mse_total / static_cast<double>(K * L);
    model.sigma_ef2 = static_cast<double>(L) * model.sigma_et2;
    return model;
}

Eigen::VectorXcd extract_pilot_samples(const DemodGrid& grid, const PilotPlan& plan, int antenna) {
    Eigen::VectorXcd z(plan.rows());
    int row = 0;
    for (int k = 0; k < plan.num_users; ++k)
        for (int sub : plan.subcarriers[static_cast<std::size_t>(k)])
            z(row++) = grid.at(antenna, sub, plan.pilot_slot);
    return z;
}

Eigen::VectorXcd estimate_channels(const EstimationModel& model, const Eigen::VectorXcd& zbar) {
    if (zbar.size() != model.mvu_operator.cols())
        throw std::invalid_argument("estimate_channels: pilot vector dimension mismatch");
    return model.mvu_operator * zbar;
}

std::pair<double, double> error_stats(const EstimationModel& model) {
    return {model.sigma_et2, model.sigma_ef2};
}

}  // namespace fbmcsim
