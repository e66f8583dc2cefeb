#include "fbmcsim/ofdm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbmcsim/fft.hpp"

namespace fbmcsim {

std::vector<std::vector<cd>> ofdm_modulate(const OfdmFrame& frame, const OfdmConfig& config) {
    if (frame.num_subcarriers != config.num_subcarriers)
        throw std::invalid_argument("ofdm_modulate: subcarrier mismatch");
    const int M = config.num_subcarriers;
    const int cp = config.cp_length;
    const double unit = 1.0 / std::sqrt(static_cast<double>(M));
    std::vector<std::vector<cd>> out(static_cast<std::size_t>(frame.num_users));
    for (int k = 0; k < frame.num_users; ++k) {
        const double amp = std::sqrt(frame.power_coeffs[static_cast<std::size_t>(k)]);
        auto& sig = out[static_cast<std::size_t>(k)];
        sig.assign(static_cast<std::size_t>(frame.num_symbols) * (M + cp), cd{});
        std::vector<cd> block(static_cast<std::size_t>(M));
        for (int n = 0; n < frame.num_symbols; ++n) {
            for (int m = 0; m < M; ++m) block[static_cast<std::size_t>(m)] = frame.at(k, m, n);
            idft(block);  // unnormalized; scale to unitary below
            cd* dst = sig.data() + static_cast<std::size_t>(n) * (M + cp);
            for (int i = 0; i < M; ++i) dst[cp + i] = amp * unit * block[static_cast<std::size_t>(i)];
            for (int i = 0; i < cp; ++i) dst[i] = dst[M + i];
        }
    }
    return out;
}

UserStreams ofdm_detect(const std::vector<std::vector<cd>>& received, const OfdmConfig& config,
                        const CombinerBank& bank, int channel_length) {
    const int M = config.num_subcarriers;
    const int cp = config.cp_length;
    if (cp < channel_length - 1)
        throw std::invalid_argument("ofdm_detect: cyclic prefix shorter than channel memory");
    if (static_cast<int>(received.size()) < bank.num_antennas)
        throw std::invalid_argument("ofdm_detect: fewer antennas than combiner expects");
    const int block = M + cp;
    const int num_symbols = static_cast<int>(received.front().size()) / block;
    const double unit = 1.0 / std::sqrt(static_cast<double>(M));

    // Demodulate each antenna, then combine per subcarrier.
    std::vector<std::vector<cd>> grids(static_cast<std::size_t>(bank.num_antennas));
    std::vector<cd> seg(static_cast<std::size_t>(M));
    for (int i = 0; i < bank.num_antennas; ++i) {
        auto& grid = grids[static_cast<std::size_t>(i)];
        grid.assign(static_cast<std::size_t>(M) * num_symbols, cd{});
        for (int n = 0; n < num_symbols; ++n) {
            const cd* src = received[static_cast<std::size_t>(i)].data() +
                            static_cast<std::size_t>(n) * block + cp;
            std::copy(src, src + M, seg.begin());
            dft(seg);
            for (int m = 0; m < M; ++m)
                grid[static_cast<std::size_t>(m) * num_symbols + n] =
                    unit * seg[static_cast<std::size_t>(m)];
        }
    }

    UserStreams streams(bank.num_users, M, num_symbols);
    for (int m = 0; m < M; ++m) {
        const Eigen::MatrixXcd& W = bank.weights[static_cast<std::size_t>(m)];
        for (int n = 0; n < num_symbols; ++n) {
            for (int k = 0; k < bank.num_users; ++k) {
                cd acc{};
                for (int i = 0; i < bank.num_antennas; ++i)
                    acc += std::conj(W(i, k)) *
                           grids[static_cast<std::size_t>(i)]
                                [static_cast<std::size_t>(m) * num_symbols + n];
                streams.at(k, m, n) = acc;
            }
        }
    }
    return streams;
}

}  // namespace fbmcsim
