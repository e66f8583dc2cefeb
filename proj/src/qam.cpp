#include "fbmcsim/qam.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fbmcsim {

namespace {

std::uint32_t binary_to_gray(std::uint32_t b) { return b ^ (b >> 1); }

}  // namespace

QamConstellation make_qam(int order) {
    if (order != 4 && order != 64) throw std::invalid_argument("make_qam: order must be 4 or 64");
    QamConstellation qam;
    qam.order = order;
    qam.bits_per_axis = (order == 4) ? 1 : 3;
    const int levels = 1 << qam.bits_per_axis;
    // Levels +/-1, +/-3, ... scaled to unit average symbol energy:
    // E{a^2} per axis = (levels^2 - 1)/3 before scaling, symbol energy twice that.
    const double scale = std::sqrt(3.0 / (2.0 * (levels * levels - 1)));
    qam.pam_levels.assign(static_cast<std::size_t>(levels), 0.0);
    for (int b = 0; b < levels; ++b) {
        const double amp = (2 * b - (levels - 1)) * scale;
        qam.pam_levels[binary_to_gray(static_cast<std::uint32_t>(b))] = amp;
    }
    return qam;
}

double pam_map(const QamConstellation& qam, std::uint32_t gray_label) {
    if (gray_label >= qam.pam_levels.size()) throw std::invalid_argument("pam_map: bad label");
    return qam.pam_levels[gray_label];
}

std::uint32_t pam_demap(const QamConstellation& qam, double value) {
    std::uint32_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::uint32_t g = 0; g < qam.pam_levels.size(); ++g) {
        const double d = std::abs(value - qam.pam_levels[g]);
        if (d < best_dist) {
            best_dist = d;
            best = g;
        }
    }
    return best;
}

std::complex<double> qam_map(const QamConstellation& qam, std::uint32_t label_re,
                             std::uint32_t label_im) {
    return {pam_map(qam, label_re), pam_map(qam, label_im)};
}

int label_bit_errors(const QamConstellation& qam, std::uint32_t sent, std::uint32_t received) {
    const std::uint32_t mask = (1u << qam.bits_per_axis) - 1u;
    return std::popcount((sent ^ received) & mask);
}

}  // namespace fbmcsim
