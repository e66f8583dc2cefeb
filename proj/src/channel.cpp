#include "fbmcsim/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fbmcsim/kernels.hpp"

namespace fbmcsim {

double PdpProfile::sum() const {
    double s = 0.0;
    for (double t : taps) s += t;
    return s;
}

void PdpProfile::normalize() {
    const double s = sum();
    if (s <= 0.0) throw std::domain_error("PdpProfile: cannot normalize zero profile");
    for (double& t : taps) t /= s;
}

const std::vector<TdlTap>& tdlc_table() {
    // 3GPP TR 38.901 Table 7.7.2-3 (TDL-C), delays normalized to unit RMS
    // delay spread. Kept in sync with data/tdlc.txt.
    static const std::vector<TdlTap> table = {
        {0.0000, -4.4},  {0.2099, -1.2},  {0.2219, -3.5},  {0.2329, -5.2},
        {0.2176, -2.5},  {0.6366, 0.0},   {0.6448, -2.2},  {0.6560, -3.9},
        {0.6584, -7.4},  {0.7935, -7.1},  {0.8213, -10.7}, {0.9336, -11.1},
        {1.2285, -5.1},  {1.3083, -6.8},  {2.1704, -8.7},  {2.7105, -13.2},
        {4.2589, -13.9}, {4.6003, -13.9}, {5.4902, -15.8}, {6.3774, -17.1},
        {6.7307, -16.0}, {7.4184, -18.7}, {8.7245, -19.8}, {10.3623, -22.9},
    };
    return table;
}

std::vector<TdlTap> load_tdl_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_tdl_table: cannot open " + path);
    std::vector<TdlTap> table;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        TdlTap tap{};
        if (ss >> tap.delay_ns >> tap.power_db) table.push_back(tap);
    }
    if (table.empty()) throw std::runtime_error("load_tdl_table: no taps in " + path);
    return table;
}

PdpProfile tdl_pdp(const std::vector<TdlTap>& table, double rms_delay_s, double sample_rate_hz,
                   double threshold_db) {
    if (rms_delay_s <= 0.0 || sample_rate_hz <= 0.0)
        throw std::invalid_argument("tdl_pdp: rms delay and sample rate must be positive");

    double max_db = table.front().power_db;
    for (const TdlTap& t : table) max_db = std::max(max_db, t.power_db);

    int last_bin = 0;
    std::vector<double> binned;
    for (const TdlTap& t : table) {
        if (t.power_db < max_db + threshold_db) continue;
        // table delays are for a 1 ns RMS delay spread, so scaling is direct
        const double delay_s = t.delay_ns * (rms_delay_s / 1e-9) * 1e-9;
        const int bin = static_cast<int>(std::lround(delay_s * sample_rate_hz));
        if (bin >= static_cast<int>(binned.size())) binned.resize(static_cast<std::size_t>(bin) + 1, 0.0);
        binned[static_cast<std::size_t>(bin)] += std::pow(10.0, t.power_db / 10.0);
        last_bin = std::max(last_bin, bin);
    }
    binned.resize(static_cast<std::size_t>(last_bin) + 1);
    PdpProfile pdp{std::move(binned)};
    pdp.normalize();
    return pdp;
}

PdpProfile tdlc_pdp(double rms_delay_s, double sample_rate_hz, double threshold_db) {
    return tdl_pdp(tdlc_table(), rms_delay_s, sample_rate_hz, threshold_db);
}

PdpProfile exponential_pdp(double decay, int length) {
    if (length < 1) throw std::invalid_argument("exponential_pdp: length must be >= 1");
    PdpProfile pdp;
    pdp.taps.resize(static_cast<std::size_t>(length));
    for (int l = 0; l < length; ++l) pdp.taps[static_cast<std::size_t>(l)] = std::exp(-decay * l);
    pdp.normalize();
    return pdp;
}

namespace {

ChannelRealization draw_impl(const std::vector<PdpProfile>& pdp_per_user,
                             const std::vector<double>* scale, int num_antennas, Philox& rng) {
    const int K = static_cast<int>(pdp_per_user.size());
    if (num_antennas < 1 || K < 1)
        throw std::invalid_argument("draw_realization: need at least one antenna and user");
    int L = 0;
    for (const PdpProfile& p : pdp_per_user) L = std::max(L, p.length());

    ChannelRealization out;
    out.num_antennas = num_antennas;
    out.num_users = K;
    out.length = L;
    out.taps.assign(static_cast<std::size_t>(num_antennas) * K * L, cd{});
    for (int i = 0; i < num_antennas; ++i) {
        for (int k = 0; k < K; ++k) {
            const PdpProfile& p = pdp_per_user[static_cast<std::size_t>(k)];
            const double g = scale ? (*scale)[static_cast<std::size_t>(i) * K + k] : 1.0;
            for (int l = 0; l < p.length(); ++l) {
                const double var = g * p.taps[static_cast<std::size_t>(l)];
                if (var > 0.0) out.at(i, k, l) = std::sqrt(var) * rng.cgaussian();
            }
        }
    }
    return out;
}

}  // namespace

ChannelRealization draw_realization(const std::vector<PdpProfile>& pdp_per_user, int num_antennas,
                                    Philox& rng) {
    return draw_impl(pdp_per_user, nullptr, num_antennas, rng);
}

ChannelRealization draw_realization_scaled(const std::vector<PdpProfile>& pdp_per_user,
                                           const std::vector<double>& gain_per_antenna_user,
                                           int num_antennas, Philox& rng) {
    return draw_impl(pdp_per_user, &gain_per_antenna_user, num_antennas, rng);
}

std::vector<std::vector<cd>> apply_channel_awgn(const std::vector<std::vector<cd>>& signals,
                                                const ChannelRealization& realization,
                                                double noise_power, Philox& rng) {
    const int K = static_cast<int>(signals.size());
    if (K != realization.num_users)
        throw std::invalid_argument("apply_channel_awgn: user count mismatch");
    std::size_t in_len = 0;
    for (const auto& s : signals) in_len = std::max(in_len, s.size());
    const std::size_t out_len = in_len + static_cast<std::size_t>(realization.length) - 1;

    std::vector<std::vector<cd>> received(static_cast<std::size_t>(realization.num_antennas));
    for (int i = 0; i < realization.num_antennas; ++i) {
        auto& r = received[static_cast<std::size_t>(i)];
        r.assign(out_len, cd{});
        for (int k = 0; k < K; ++k) {
            const auto& x = signals[static_cast<std::size_t>(k)];
            for (int l = 0; l < realization.length; ++l) {
                const cd h = realization.at(i, k, l);
                if (h != cd{}) kernels::axpy(h, x.data(), r.data() + l, x.size());
            }
        }
        if (noise_power > 0.0) {
            const double amp = std::sqrt(noise_power);
            for (cd& v : r) v += amp * rng.cgaussian();
        }
    }
    return received;
}

}  // namespace fbmcsim
