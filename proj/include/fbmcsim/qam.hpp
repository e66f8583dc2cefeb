#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace fbmcsim {

// Gray-coded square QAM built from two independent Gray PAM axes, unit
// average symbol energy (so each axis has variance 1/2).
struct QamConstellation {
    int order = 4;          // 4 or 64
    int bits_per_axis = 1;  // log2(order)/2
    std::vector<double> pam_levels;  // Gray-indexed amplitude per axis label

    int bits_per_symbol() const { return 2 * bits_per_axis; }
};

QamConstellation make_qam(int order);

// Map bits (MSB-first per axis label) to one PAM amplitude.
double pam_map(const QamConstellation& qam, std::uint32_t gray_label);

// Nearest-level hard decision back to the Gray label.
std::uint32_t pam_demap(const QamConstellation& qam, double value);

std::complex<double> qam_map(const QamConstellation& qam, std::uint32_t label_re,
                             std::uint32_t label_im);

// Hamming distance between two axis labels of bits_per_axis bits.
int label_bit_errors(const QamConstellation& qam, std::uint32_t sent, std::uint32_t received);

}  // namespace fbmcsim
