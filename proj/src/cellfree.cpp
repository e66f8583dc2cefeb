#include "fbmcsim/cellfree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace fbmcsim {

std::vector<double> CellFreeLayout::beta_per_antenna_user() const {
    std::vector<double> out(static_cast<std::size_t>(num_antennas()) * num_users);
    for (int i = 0; i < num_antennas(); ++i)
        for (int k = 0; k < num_users; ++k)
            out[static_cast<std::size_t>(i) * num_users + k] = beta(i, k);
    return out;
}

std::vector<double> CellFreeLayout::sum_beta_per_user() const {
    std::vector<double> out(static_cast<std::size_t>(num_users), 0.0);
    for (int i = 0; i < num_antennas(); ++i)
        for (int k = 0; k < num_users; ++k) out[static_cast<std::size_t>(k)] += beta(i, k);
    return out;
}

double wrap_distance_km(std::pair<double, double> a, std::pair<double, double> b,
                        double area_side_km) {
    double best = std::numeric_limits<double>::infinity();
    for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
            const double ex = a.first - (b.first + dx * area_side_km);
            const double ey = a.second - (b.second + dy * area_side_km);
            best = std::min(best, std::hypot(ex, ey));
        }
    }
    return best;
}

namespace {

// COST-Hata three-slope model collapsed to its far-field slope:
// 10 log10 beta = -135 - 35 log10(d_km) - shadow_db.
double cost_hata_beta_db(double d_km, double shadow_db) {
    return -135.0 - 35.0 * std::log10(d_km) - shadow_db;
}

}  // namespace

CellFreeLayout build_layout(int num_aps, int antennas_per_ap, int num_users, double area_side_km,
                            Philox& rng) {
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_aps))));
    if (side * side != num_aps)
        throw std::invalid_argument("build_layout: num_aps must be a perfect square");
    if (antennas_per_ap < 1 || num_users < 1 || area_side_km <= 0.0)
        throw std::invalid_argument("build_layout: invalid dimensions");

    CellFreeLayout layout;
    layout.num_aps = num_aps;
    layout.antennas_per_ap = antennas_per_ap;
    layout.num_users = num_users;
    layout.area_side_km = area_side_km;

    // Regular grid at cell centers.
    const double step = area_side_km / side;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            layout.ap_positions.emplace_back((c + 0.5) * step, (r + 0.5) * step);

    // Uniform user drop, resampled until every wrap-around AP distance is at
    // least the 10 m floor.
    for (int k = 0; k < num_users; ++k) {
        for (;;) {
            const std::pair<double, double> pos{rng.uniform(0.0, area_side_km),
                                                rng.uniform(0.0, area_side_km)};
            bool ok = true;
            for (const auto& ap : layout.ap_positions) {
                if (wrap_distance_km(ap, pos, area_side_km) < kMinDistanceKm) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                layout.user_positions.push_back(pos);
                break;
            }
        }
    }

    layout.dist_km.resize(static_cast<std::size_t>(num_aps) * num_users);
    layout.shadow_db.resize(layout.dist_km.size());
    layout.beta_ap.resize(layout.dist_km.size());
    for (int a = 0; a < num_aps; ++a) {
        for (int k = 0; k < num_users; ++k) {
            const std::size_t idx = static_cast<std::size_t>(a) * num_users + k;
            layout.dist_km[idx] =
                wrap_distance_km(layout.ap_positions[static_cast<std::size_t>(a)],
                                 layout.user_positions[static_cast<std::size_t>(k)], area_side_km);
            layout.shadow_db[idx] = kShadowStdDb * rng.gaussian();
            layout.beta_ap[idx] =
                std::pow(10.0, cost_hata_beta_db(layout.dist_km[idx], layout.shadow_db[idx]) / 10.0);
        }
    }
    return layout;
}

double noise_power(double temp_k, double boltzmann, double bandwidth_hz, double nf_db) {
    return temp_k * boltzmann * bandwidth_hz * std::pow(10.0, nf_db / 10.0);
}

PowerControl fractional_power_control(const std::vector<double>& sum_beta_per_user, double nu,
                                      double p_max) {
    if (sum_beta_per_user.empty())
        throw std::invalid_argument("fractional_power_control: no users");
    PowerControl control;
    control.nu = nu;
    control.p_max = p_max;
    double max_raw = 0.0;
    std::vector<double> raw;
    raw.reserve(sum_beta_per_user.size());
    for (double sb : sum_beta_per_user) {
        if (sb <= 0.0)
            throw std::invalid_argument("fractional_power_control: nonpositive beta sum");
        const double r = std::pow(sb, -nu);
        raw.push_back(r);
        max_raw = std::max(max_raw, r);
    }
    for (double r : raw) control.mu.push_back(p_max * r / max_raw);
    return control;
}

void dump_layout_csv(const CellFreeLayout& layout, const PowerControl& control,
                     std::ostream& out) {
    out << "entity,index,x_km,y_km,mu_watt\n";
    for (int a = 0; a < layout.num_aps; ++a)
        out << "ap," << a << ',' << layout.ap_positions[static_cast<std::size_t>(a)].first << ','
            << layout.ap_positions[static_cast<std::size_t>(a)].second << ",\n";
    for (int k = 0; k < layout.num_users; ++k)
        out << "user," << k << ',' << layout.user_positions[static_cast<std::size_t>(k)].first
            << ',' << layout.user_positions[static_cast<std::size_t>(k)].second << ','
            << control.mu[static_cast<std::size_t>(k)] << '\n';
}

}  // namespace fbmcsim
