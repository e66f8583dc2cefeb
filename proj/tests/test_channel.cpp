#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "fbmcsim/channel.hpp"
#include "fbmcsim/rng.hpp"

using fbmcsim::apply_channel_awgn;
using fbmcsim::cd;
using fbmcsim::ChannelRealization;
using fbmcsim::draw_realization;
using fbmcsim::PdpProfile;
using fbmcsim::Philox;

TEST_CASE("TDL-C binning matches an independent table walk") {
    const double rms = 100e-9;
    const double fs = 15.36e6;
    const double threshold_db = -30.0;
    const auto& table = fbmcsim::tdlc_table();

    // Oracle: scale, threshold, bin, normalize -- written independently.
    double max_db = -1e9;
    for (const auto& t : table) max_db = std::max(max_db, t.power_db);
    std::vector<double> binned;
    for (const auto& t : table) {
        if (t.power_db < max_db + threshold_db) continue;
        const double delay_s = t.delay_ns * (rms / 1e-9) * 1e-9;
        const int bin = static_cast<int>(std::lround(delay_s * fs));
        if (bin >= static_cast<int>(binned.size())) binned.resize(static_cast<std::size_t>(bin) + 1, 0.0);
        binned[static_cast<std::size_t>(bin)] += std::pow(10.0, t.power_db / 10.0);
    }
    double sum = 0.0;
    for (double p : binned) sum += p;
    for (double& p : binned) p /= sum;

    const PdpProfile pdp = fbmcsim::tdlc_pdp(rms, fs, threshold_db);
    REQUIRE(pdp.length() == static_cast<int>(binned.size()));
    for (int l = 0; l < pdp.length(); ++l)
        CHECK(pdp.taps[static_cast<std::size_t>(l)] ==
              doctest::Approx(binned[static_cast<std::size_t>(l)]).epsilon(1e-12));
    CHECK(pdp.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tiny delay spread collapses to a single tap") {
    const PdpProfile pdp = fbmcsim::tdlc_pdp(1e-12, 15.36e6);
    CHECK(pdp.length() == 1);
    CHECK(pdp.taps[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("channel length grows with delay spread") {
    const PdpProfile a = fbmcsim::tdlc_pdp(90e-9, 15.36e6);
    const PdpProfile b = fbmcsim::tdlc_pdp(110e-9, 15.36e6);
    CHECK(b.length() >= a.length());
}

TEST_CASE("data file matches the embedded table") {
    const auto file_table = fbmcsim::load_tdl_table("data/tdlc.txt");
    const auto& embedded = fbmcsim::tdlc_table();
    REQUIRE(file_table.size() == embedded.size());
    for (std::size_t i = 0; i < embedded.size(); ++i) {
        CHECK(file_table[i].delay_ns == doctest::Approx(embedded[i].delay_ns).epsilon(1e-12));
        CHECK(file_table[i].power_db == doctest::Approx(embedded[i].power_db).epsilon(1e-12));
    }
}

TEST_CASE("tap variances follow the PDP") {
    PdpProfile pdp;
    pdp.taps = {0.5, 0.3, 0.2};
    const std::vector<PdpProfile> pdps{pdp};
    Philox rng(21, 0, 0);
    const int draws = 100000;
    std::vector<double> var(3, 0.0);
    for (int t = 0; t < draws / 100; ++t) {
        const ChannelRealization r = draw_realization(pdps, 100, rng);
        for (int i = 0; i < 100; ++i)
            for (int l = 0; l < 3; ++l) var[static_cast<std::size_t>(l)] += std::norm(r.at(i, 0, l));
    }
    for (int l = 0; l < 3; ++l)
        CHECK(var[static_cast<std::size_t>(l)] / draws ==
              doctest::Approx(pdp.taps[static_cast<std::size_t>(l)]).epsilon(0.03));
}

TEST_CASE("drawing is deterministic per seed") {
    PdpProfile pdp;
    pdp.taps = {0.7, 0.3};
    const std::vector<PdpProfile> pdps{pdp, pdp};
    Philox rng_a(33, 5, 2);
    Philox rng_b(33, 5, 2);
    const ChannelRealization a = draw_realization(pdps, 3, rng_a);
    const ChannelRealization b = draw_realization(pdps, 3, rng_b);
    REQUIRE(a.taps.size() == b.taps.size());
    for (std::size_t i = 0; i < a.taps.size(); ++i) CHECK(a.taps[i] == b.taps[i]);
}

TEST_CASE("identity channel with zero noise is a passthrough") {
    PdpProfile pdp;
    pdp.taps = {1.0};
    ChannelRealization r;
    r.num_antennas = 1;
    r.num_users = 1;
    r.length = 1;
    r.taps = {cd{1.0, 0.0}};
    Philox rng(1, 0, 0);
    std::vector<std::vector<cd>> x{{cd{1.0, 2.0}, cd{-0.5, 0.25}, cd{0.0, 1.0}}};
    const auto y = apply_channel_awgn(x, r, 0.0, rng);
    REQUIRE(y.front().size() == x.front().size());
    for (std::size_t i = 0; i < x.front().size(); ++i) CHECK(y.front()[i] == x.front()[i]);
}

TEST_CASE("channel application matches a direct convolution oracle") {
    Philox rng(44, 0, 0);
    const int L = 5;
    const int N = 2;
    const int K = 3;
    ChannelRealization r;
    r.num_antennas = N;
    r.num_users = K;
    r.length = L;
    r.taps.resize(static_cast<std::size_t>(N) * K * L);
    for (auto& t : r.taps) t = rng.cgaussian();
    std::vector<std::vector<cd>> x(static_cast<std::size_t>(K));
    for (auto& sig : x) {
        sig.resize(17);
        for (auto& v : sig) v = rng.cgaussian();
    }
    Philox noise_rng(45, 0, 0);
    const auto y = apply_channel_awgn(x, r, 0.0, noise_rng);
    REQUIRE(static_cast<int>(y.size()) == N);
    REQUIRE(y.front().size() == x.front().size() + L - 1);
    for (int i = 0; i < N; ++i)
        for (std::size_t n = 0; n < y.front().size(); ++n) {
            cd expected{};
            for (int k = 0; k < K; ++k)
                for (int l = 0; l < L; ++l) {
                    const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(n) - l;
                    if (idx >= 0 && idx < static_cast<std::ptrdiff_t>(x.front().size()))
                        expected += x[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx)] *
                                    r.at(i, k, l);
                }
            CHECK(std::abs(y[static_cast<std::size_t>(i)][n] - expected) < 1e-12);
        }
}

TEST_CASE("noise power is calibrated") {
    ChannelRealization r;
    r.num_antennas = 1;
    r.num_users = 1;
    r.length = 1;
    r.taps = {cd{0.0, 0.0}};
    std::vector<std::vector<cd>> x{std::vector<cd>(20000, cd{})};
    Philox rng(55, 0, 0);
    const auto y = apply_channel_awgn(x, r, 2.0, rng);
    double p = 0.0;
    for (const auto& v : y.front()) p += std::norm(v);
    CHECK(p / static_cast<double>(y.front().size()) == doctest::Approx(2.0).epsilon(0.05));
}
