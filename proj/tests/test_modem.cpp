#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fbmcsim/modem.hpp"
#include "fbmcsim/prototype.hpp"
#include "fbmcsim/rng.hpp"

using fbmcsim::analyze;
using fbmcsim::basis_pulse;
using fbmcsim::cd;
using fbmcsim::DemodGrid;
using fbmcsim::design_phydyas;
using fbmcsim::Philox;
using fbmcsim::PrototypeFilter;
using fbmcsim::SymbolFrame;
using fbmcsim::synthesize;

namespace {

SymbolFrame random_frame(int users, int M, int slots, Philox& rng) {
    SymbolFrame frame(users, M, slots);
    for (auto& s : frame.symbols) s = rng.gaussian() * std::sqrt(0.5);
    return frame;
}

// Direct inner-product demodulation: the normative definition.
cd direct_sample(const std::vector<cd>& signal, const PrototypeFilter& filter, int m, int n) {
    const auto pulse = basis_pulse(filter, m, n);
    cd acc{};
    for (std::size_t i = 0; i < pulse.samples.size(); ++i) {
        const std::size_t l = static_cast<std::size_t>(pulse.offset) + i;
        if (l < signal.size()) acc += signal[l] * std::conj(pulse.samples[i]);
    }
    return acc;
}

}  // namespace

TEST_CASE("basis pulse identity cases") {
    const auto filter = design_phydyas(16, 4);
    const auto p00 = basis_pulse(filter, 0, 0);
    CHECK(p00.offset == 0);
    for (int l = 0; l < filter.length(); ++l) {
        CHECK(p00.samples[static_cast<std::size_t>(l)].real() ==
              doctest::Approx(filter.coeffs[static_cast<std::size_t>(l)]).epsilon(1e-14));
        CHECK(p00.samples[static_cast<std::size_t>(l)].imag() == doctest::Approx(0.0));
    }
    const auto p01 = basis_pulse(filter, 0, 1);
    CHECK(p01.offset == 8);
    for (int l = 0; l < filter.length(); ++l) {
        const cd expected = cd{0.0, 1.0} * filter.coeffs[static_cast<std::size_t>(l)];
        CHECK(std::abs(p01.samples[static_cast<std::size_t>(l)] - expected) < 1e-14);
    }
}

TEST_CASE("synthesis of a single symbol equals its basis pulse") {
    const auto filter = design_phydyas(16, 4);
    SymbolFrame frame(1, 16, 1);
    frame.at(0, 3, 0) = 1.0;
    const auto sig = synthesize(frame, filter);
    const auto pulse = basis_pulse(filter, 3, 0);
    REQUIRE(sig.front().size() == pulse.samples.size());
    for (std::size_t i = 0; i < pulse.samples.size(); ++i)
        CHECK(std::abs(sig.front()[i] - pulse.samples[i]) < 1e-12);
}

TEST_CASE("fast analysis matches direct inner products to 1e-12") {
    const auto filter = design_phydyas(32, 4);
    const int slots = 9;
    Philox rng(11, 0, 0);
    std::vector<cd> signal(static_cast<std::size_t>(fbmcsim::synthesis_length(filter, slots)));
    for (auto& x : signal) x = rng.cgaussian();

    const DemodGrid grid = analyze(signal, filter, slots);
    for (int m = 0; m < 32; ++m)
        for (int n = 0; n < slots; ++n)
            CHECK(std::abs(grid.at(0, m, n) - direct_sample(signal, filter, m, n)) < 1e-12);
}

TEST_CASE("fast synthesis matches per-pulse superposition to 1e-12") {
    const auto filter = design_phydyas(16, 4);
    const int slots = 5;
    Philox rng(12, 0, 0);
    const SymbolFrame frame = random_frame(1, 16, slots, rng);
    const auto fast = synthesize(frame, filter);

    std::vector<cd> direct(fast.front().size(), cd{});
    for (int m = 0; m < 16; ++m)
        for (int n = 0; n < slots; ++n) {
            const auto pulse = basis_pulse(filter, m, n);
            for (std::size_t i = 0; i < pulse.samples.size(); ++i)
                direct[static_cast<std::size_t>(pulse.offset) + i] +=
                    frame.at(0, m, n) * pulse.samples[i];
        }
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK(std::abs(fast.front()[i] - direct[i]) < 1e-12);
}

TEST_CASE("loopback recovers symbols with SIR above 50 dB") {
    const auto filter = design_phydyas(64, 4);
    const int slots = 20;
    Philox rng(13, 0, 0);
    const SymbolFrame frame = random_frame(1, 64, slots, rng);
    const auto sig = synthesize(frame, filter);
    const DemodGrid grid = analyze(sig.front(), filter, slots);

    // Interior slots only; frame edges lack the full pulse overlap.
    double sig_pow = 0.0;
    double err_pow = 0.0;
    for (int m = 0; m < 64; ++m)
        for (int n = 4; n < slots - 4; ++n) {
            const double s = frame.at(0, m, n);
            const double err = grid.at(0, m, n).real() - s;
            sig_pow += s * s;
            err_pow += err * err;
        }
    const double sir_db = 10.0 * std::log10(sig_pow / err_pow);
    CHECK(sir_db > 50.0);
}

TEST_CASE("lone unit symbol has self-gain 1 after phase adjustment") {
    const auto filter = design_phydyas(64, 4);
    SymbolFrame frame(1, 64, 9);
    frame.at(0, 5, 4) = 1.0;
    const auto sig = synthesize(frame, filter);
    const DemodGrid grid = analyze(sig.front(), filter, 9);
    CHECK(grid.at(0, 5, 4).real() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("orthogonality residual is small and monotone in the span") {
    const auto filter = design_phydyas(64, 4);
    const double r35 = fbmcsim::orthogonality_residual(filter, 3, 5);
    CHECK(r35 < 1e-2);
    // Widening the scan can only add candidate pairs, so the max cannot drop.
    const double r39 = fbmcsim::orthogonality_residual(filter, 3, 9);
    CHECK(r39 >= r35);
    CHECK(r39 < 1e-2);
}

TEST_CASE("analysis is time-invariant under half-symbol shifts") {
    const auto filter = design_phydyas(16, 4);
    const int slots = 8;
    Philox rng(14, 0, 0);
    const SymbolFrame frame = random_frame(1, 16, slots, rng);
    const auto sig = synthesize(frame, filter);

    std::vector<cd> shifted(sig.front().size() + 8, cd{});
    std::copy(sig.front().begin(), sig.front().end(), shifted.begin() + 8);
    const DemodGrid g0 = analyze(sig.front(), filter, slots);
    const DemodGrid g1 = analyze(shifted, filter, slots + 1);

    // Shift by M/2 moves the grid by one slot; the absolute-time modulation
    // and quarter-phase conventions contribute a deterministic rotation
    // (-1)^m * (-j) per slot of delay.
    for (int m = 0; m < 16; ++m)
        for (int n = 0; n < slots; ++n) {
            const cd rot = (m % 2 == 0 ? 1.0 : -1.0) * cd{0.0, -1.0};
            CHECK(std::abs(g1.at(0, m, n + 1) - rot * g0.at(0, m, n)) < 1e-12);
        }
}

TEST_CASE("analyze rejects short signals") {
    const auto filter = design_phydyas(16, 4);
    std::vector<cd> tiny(10, cd{});
    CHECK_THROWS_AS(analyze(tiny, filter, 4), std::invalid_argument);
}

TEST_CASE("analysis noise covariance matches the pulse Gram matrix") {
    const auto filter = design_phydyas(16, 4);
    // z = <noise, f_{m,n}>: covariance of (z_a, z_b) is sigma^2 <f_b, f_a>.
    const auto pa = basis_pulse(filter, 2, 2);
    const auto pb = basis_pulse(filter, 3, 3);
    cd expected{};
    {
        const int lo = std::max(pa.offset, pb.offset);
        const int hi = std::min(pa.offset + static_cast<int>(pa.samples.size()),
                                pb.offset + static_cast<int>(pb.samples.size()));
        for (int l = lo; l < hi; ++l)
            expected += std::conj(pb.samples[static_cast<std::size_t>(l - pb.offset)]) *
                        pa.samples[static_cast<std::size_t>(l - pa.offset)];
        expected = std::conj(expected);
    }
    Philox rng(15, 0, 0);
    const int trials = 20000;
    cd acc{};
    const int len = fbmcsim::synthesis_length(filter, 6);
    std::vector<cd> noise(static_cast<std::size_t>(len));
    for (int t = 0; t < trials; ++t) {
        for (auto& x : noise) x = rng.cgaussian();
        const DemodGrid grid = analyze(noise, filter, 6);
        acc += grid.at(0, 2, 2) * std::conj(grid.at(0, 3, 3));
    }
    acc /= static_cast<double>(trials);
    CHECK(std::abs(acc - expected) < 0.05);
}
