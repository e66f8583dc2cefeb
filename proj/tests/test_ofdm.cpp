#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fbmcsim/channel.hpp"
#include "fbmcsim/equalizer.hpp"
#include "fbmcsim/ofdm.hpp"
#include "fbmcsim/rng.hpp"

using namespace fbmcsim;

namespace {

ChannelRealization identity_channel(int antennas, int users) {
    ChannelRealization r;
    r.num_antennas = antennas;
    r.num_users = users;
    r.length = 1;
    r.taps.assign(static_cast<std::size_t>(antennas) * users, cd{});
    // One-to-one mapping so N = K streams separate trivially.
    for (int i = 0; i < antennas; ++i) r.taps[static_cast<std::size_t>(i) * users + i % users] = cd{1.0, 0.0};
    return r;
}

}  // namespace

TEST_CASE("a lone unit symbol spreads to constant-magnitude time samples") {
    OfdmConfig config{8, 3};
    OfdmFrame frame(1, 8, 2);
    frame.at(0, 5, 1) = cd{1.0, 0.0};
    frame.power_coeffs[0] = 0.25;
    const auto sig = ofdm_modulate(frame, config);
    REQUIRE(sig.front().size() == static_cast<std::size_t>(2 * (8 + 3)));
    const double expected = std::sqrt(0.25) / std::sqrt(8.0);
    // First symbol is empty.
    for (int i = 0; i < 11; ++i) CHECK(std::abs(sig.front()[static_cast<std::size_t>(i)]) < 1e-14);
    for (int i = 11; i < 22; ++i)
        CHECK(std::abs(sig.front()[static_cast<std::size_t>(i)]) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("the cyclic prefix copies the block tail") {
    OfdmConfig config{16, 5};
    OfdmFrame frame(1, 16, 3);
    Philox rng(2, 0, 0);
    for (auto& v : frame.data) v = rng.cgaussian();
    const auto sig = ofdm_modulate(frame, config);
    for (int n = 0; n < 3; ++n) {
        const std::size_t base = static_cast<std::size_t>(n) * 21;
        for (int i = 0; i < 5; ++i)
            CHECK(sig.front()[base + static_cast<std::size_t>(i)] ==
                  sig.front()[base + static_cast<std::size_t>(16 + i)]);
    }
}

TEST_CASE("modulate-detect is an identity through a clean channel") {
    OfdmConfig config{16, 4};
    const int K = 2;
    OfdmFrame frame(K, 16, 3);
    Philox rng(3, 0, 0);
    for (auto& v : frame.data) v = rng.cgaussian();
    const auto tx = ofdm_modulate(frame, config);

    const ChannelRealization channel = identity_channel(K, K);
    Philox unused(0, 0, 0);
    const auto rx = apply_channel_awgn(tx, channel, 0.0, unused);

    const auto gains = subcarrier_gains(channel, 16);
    const CombinerBank bank = build_combiner(gains, CombinerKind::Zf, 0.0);
    const UserStreams y = ofdm_detect(rx, config, bank, channel.length);
    for (int k = 0; k < K; ++k)
        for (int m = 0; m < 16; ++m)
            for (int n = 0; n < 3; ++n) CHECK(std::abs(y.at(k, m, n) - frame.at(k, m, n)) < 1e-12);
}

TEST_CASE("ZF recovery through a frequency-selective channel is exact") {
    OfdmConfig config{32, 8};
    const int N = 4;
    const int K = 2;
    const int L = 6;
    OfdmFrame frame(K, 32, 4);
    Philox rng(4, 0, 0);
    for (auto& v : frame.data) v = rng.cgaussian();
    frame.power_coeffs = {1.0, 0.3};
    const auto tx = ofdm_modulate(frame, config);

    ChannelRealization channel;
    channel.num_antennas = N;
    channel.num_users = K;
    channel.length = L;
    channel.taps.resize(static_cast<std::size_t>(N) * K * L);
    for (auto& t : channel.taps) t = rng.cgaussian();
    Philox unused(0, 0, 0);
    const auto rx = apply_channel_awgn(tx, channel, 0.0, unused);

    const auto gains = subcarrier_gains(channel, 32);
    const CombinerBank bank = build_combiner(gains, CombinerKind::Zf, 0.0);
    const UserStreams y = ofdm_detect(rx, config, bank, L);
    for (int k = 0; k < K; ++k) {
        const double amp = std::sqrt(frame.power_coeffs[static_cast<std::size_t>(k)]);
        for (int m = 0; m < 32; ++m)
            for (int n = 0; n < 4; ++n)
                CHECK(std::abs(y.at(k, m, n) - amp * frame.at(k, m, n)) < 1e-9);
    }
}

TEST_CASE("a cyclic prefix shorter than the channel memory is rejected") {
    OfdmConfig config{16, 4};
    const CombinerBank bank =
        build_combiner(subcarrier_gains(identity_channel(1, 1), 16), CombinerKind::Mrc, 0.0);
    std::vector<std::vector<cd>> rx{std::vector<cd>(40, cd{})};
    CHECK_THROWS_AS(ofdm_detect(rx, config, bank, 6), std::invalid_argument);
}
