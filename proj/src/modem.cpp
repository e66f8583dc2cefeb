#include "fbmcsim/modem.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fbmcsim/fft.hpp"
#include "fbmcsim/kernels.hpp"

namespace fbmcsim {

namespace {

// e^{j pi v / 2} for integer v
cd quarter_phase(int v) {
    switch (((v % 4) + 4) % 4) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

}  // namespace

BasisPulse basis_pulse(const PrototypeFilter& filter, int m, int n) {
    const int M = filter.num_subcarriers;
    if (m < 0 || m >= M) throw std::out_of_range("basis_pulse: subcarrier index");
    const int len = filter.length();
    BasisPulse pulse;
    pulse.offset = n * M / 2;
    pulse.samples.resize(static_cast<std::size_t>(len));
    const cd phase = quarter_phase(m + n);
    for (int i = 0; i < len; ++i) {
        const int l = i + pulse.offset;  // absolute time index
        const double ang = 2.0 * std::numbers::pi * m * l / static_cast<double>(M);
        pulse.samples[static_cast<std::size_t>(i)] =
            filter.coeffs[static_cast<std::size_t>(i)] * cd{std::cos(ang), std::sin(ang)} * phase;
    }
    return pulse;
}

int synthesis_length(const PrototypeFilter& filter, int num_slots) {
    const int M = filter.num_subcarriers;
    return num_slots * M / 2 + filter.length() - M / 2;
}

std::vector<std::vector<cd>> synthesize(const SymbolFrame& frame, const PrototypeFilter& filter) {
    const int M = filter.num_subcarriers;
    if (frame.num_subcarriers != M)
        throw std::invalid_argument("synthesize: frame/filter subcarrier mismatch");
    const int len = synthesis_length(filter, frame.num_slots);
    const int plen = filter.length();

    std::vector<std::vector<cd>> signals(static_cast<std::size_t>(frame.num_users));
    std::vector<cd> v(static_cast<std::size_t>(M));
    for (int k = 0; k < frame.num_users; ++k) {
        auto& x = signals[static_cast<std::size_t>(k)];
        x.assign(static_cast<std::size_t>(len), cd{});
        const double amp = std::sqrt(frame.power_coeffs[static_cast<std::size_t>(k)]);
        for (int n = 0; n < frame.num_slots; ++n) {
            const int offset = n * M / 2;
            bool any = false;
            for (int m = 0; m < M; ++m) {
                const double s = frame.at(k, m, n);
                // phase e^{j pi (m+n)/2} plus the modulation's e^{j pi m n}
                // picked up by shifting the time origin to the slot offset
                cd w = quarter_phase(m + n);
                if ((m * n) % 2 != 0) w = -w;
                v[static_cast<std::size_t>(m)] = s * w;
                any = any || s != 0.0;
            }
            if (!any) continue;
            idft(v);  // u[p] = sum_m v_m e^{j2pi mp/M}
            for (int i = 0; i < plen; ++i) {
                x[static_cast<std::size_t>(offset + i)] +=
                    amp * filter.coeffs[static_cast<std::size_t>(i)] *
                    v[static_cast<std::size_t>(i % M)];
            }
        }
    }
    return signals;
}

DemodGrid analyze(const std::vector<cd>& signal, const PrototypeFilter& filter, int num_slots) {
    const int M = filter.num_subcarriers;
    const int plen = filter.length();
    const int needed = synthesis_length(filter, num_slots);
    if (static_cast<int>(signal.size()) < needed)
        throw std::invalid_argument("analyze: signal too short for requested slots");

    DemodGrid grid(1, M, num_slots);
    std::vector<cd> folded(static_cast<std::size_t>(M));
    for (int n = 0; n < num_slots; ++n) {
        const int offset = n * M / 2;
        std::fill(folded.begin(), folded.end(), cd{});
        for (int i = 0; i < plen; ++i) {
            folded[static_cast<std::size_t>(i % M)] +=
                signal[static_cast<std::size_t>(offset + i)] *
                filter.coeffs[static_cast<std::size_t>(i)];
        }
        dft(folded);  // Z[m] = sum_p folded[p] e^{-j2pi mp/M}
        for (int m = 0; m < M; ++m) {
            cd w = std::conj(quarter_phase(m + n));
            if ((m * n) % 2 != 0) w = -w;
            grid.at(0, m, n) = folded[static_cast<std::size_t>(m)] * w;
        }
    }
    return grid;
}

double orthogonality_residual(const PrototypeFilter& filter, int freq_span, int time_span) {
    if (freq_span < 1 || time_span < 1)
        throw std::invalid_argument("orthogonality_residual: spans must be >= 1");
    const int M = filter.num_subcarriers;
    const int total = (time_span - 1) * M / 2 + filter.length();

    // lay every pulse out on a common time axis
    std::vector<std::vector<cd>> pulses;
    pulses.reserve(static_cast<std::size_t>(freq_span * time_span));
    for (int m = 0; m < freq_span; ++m) {
        for (int n = 0; n < time_span; ++n) {
            const BasisPulse p = basis_pulse(filter, m, n);
            std::vector<cd> full(static_cast<std::size_t>(total), cd{});
            for (std::size_t i = 0; i < p.samples.size(); ++i)
                full[static_cast<std::size_t>(p.offset) + i] = p.samples[i];
            pulses.push_back(std::move(full));
        }
    }

    double residual = 0.0;
    for (std::size_t a = 0; a < pulses.size(); ++a) {
        for (std::size_t b = a; b < pulses.size(); ++b) {
            const cd ip = kernels::dot_conj(pulses[a].data(), pulses[b].data(),
                                            static_cast<std::size_t>(total));
            const double target = (a == b) ? 1.0 : 0.0;
            residual = std::max(residual, std::abs(ip.real() - target));
        }
    }
    return residual;
}

}  // namespace fbmcsim
