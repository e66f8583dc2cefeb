#pragma once

#include <iosfwd>
#include <vector>

#include "fbmcsim/rng.hpp"

namespace fbmcsim {

// AP grid + user drop with wrap-around distances and COST-Hata large-scale
// gains. All antennas of one AP share beta, shadowing, and distance.
struct CellFreeLayout {
    int num_aps = 0;
    int antennas_per_ap = 0;
    int num_users = 0;
    double area_side_km = 0.0;
    std::vector<std::pair<double, double>> ap_positions;    // km
    std::vector<std::pair<double, double>> user_positions;  // km
    std::vector<double> dist_km;     // [ap][user], wrap-around
    std::vector<double> shadow_db;   // [ap][user]
    std::vector<double> beta_ap;     // [ap][user], linear

    int num_antennas() const { return num_aps * antennas_per_ap; }
    double beta(int antenna, int user) const {
        return beta_ap[static_cast<std::size_t>(antenna / antennas_per_ap) * num_users + user];
    }
    // beta flattened per (antenna, user), for draw_realization_scaled
    std::vector<double> beta_per_antenna_user() const;
    std::vector<double> sum_beta_per_user() const;
};

constexpr double kMinDistanceKm = 0.01;  // 10 m
constexpr double kShadowStdDb = 2.8284271247461903;  // sqrt(8) dB shadowing std

// num_aps must be a perfect square (regular grid); users resampled until at
// least 10 m from every AP image.
CellFreeLayout build_layout(int num_aps, int antennas_per_ap, int num_users, double area_side_km,
                            Philox& rng);

// Wrap-around (torus) distance over the 9 images.
double wrap_distance_km(std::pair<double, double> a, std::pair<double, double> b,
                        double area_side_km);

// sigma^2 = T * k_B * B * 10^(NF/10), watts.
double noise_power(double temp_k, double boltzmann, double bandwidth_hz, double nf_db);

struct PowerControl {
    std::vector<double> mu;  // W, max equals p_max
    double nu = 0.0;
    double p_max = 0.0;
};

// mu_k = P_max (sum_i beta_{i,k})^-nu / max_j (sum_i beta_{i,j})^-nu.
PowerControl fractional_power_control(const std::vector<double>& sum_beta_per_user, double nu,
                                      double p_max);

void dump_layout_csv(const CellFreeLayout& layout, const PowerControl& control, std::ostream& out);

}  // namespace fbmcsim
