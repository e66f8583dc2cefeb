#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "fbmcsim/cellfree.hpp"
#include "fbmcsim/rng.hpp"

using fbmcsim::build_layout;
using fbmcsim::CellFreeLayout;
using fbmcsim::fractional_power_control;
using fbmcsim::noise_power;
using fbmcsim::Philox;
using fbmcsim::PowerControl;
using fbmcsim::wrap_distance_km;

TEST_CASE("AP grid covers the area at cell centers") {
    Philox rng(1, 0, 0);
    const CellFreeLayout layout = build_layout(9, 4, 2, 1.2, rng);
    REQUIRE(layout.ap_positions.size() == 9);
    CHECK(layout.num_antennas() == 36);
    std::set<double> xs, ys;
    for (const auto& p : layout.ap_positions) {
        xs.insert(p.first);
        ys.insert(p.second);
    }
    const std::vector<double> expected{0.2, 0.6, 1.0};
    REQUIRE(xs.size() == 3);
    REQUIRE(ys.size() == 3);
    int i = 0;
    for (double x : xs) CHECK(x == doctest::Approx(expected[static_cast<std::size_t>(i++)]));
    i = 0;
    for (double y : ys) CHECK(y == doctest::Approx(expected[static_cast<std::size_t>(i++)]));
}

TEST_CASE("non-square AP counts are rejected") {
    Philox rng(1, 0, 0);
    CHECK_THROWS_AS(build_layout(8, 4, 2, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(build_layout(9, 0, 2, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(build_layout(9, 4, 2, -1.0, rng), std::invalid_argument);
}

TEST_CASE("wrap-around distance is a torus metric") {
    const double side = 1.0;
    // Points near opposite edges are close through the wrap.
    CHECK(wrap_distance_km({0.05, 0.5}, {0.95, 0.5}, side) == doctest::Approx(0.1));
    CHECK(wrap_distance_km({0.05, 0.05}, {0.95, 0.95}, side) ==
          doctest::Approx(std::hypot(0.1, 0.1)));
    // Symmetric and never longer than the direct distance.
    CHECK(wrap_distance_km({0.1, 0.2}, {0.8, 0.9}, side) ==
          doctest::Approx(wrap_distance_km({0.8, 0.9}, {0.1, 0.2}, side)));
    CHECK(wrap_distance_km({0.1, 0.2}, {0.8, 0.9}, side) <= std::hypot(0.7, 0.7));
    // Interior pair: plain Euclidean distance.
    CHECK(wrap_distance_km({0.4, 0.4}, {0.5, 0.6}, side) == doctest::Approx(std::hypot(0.1, 0.2)));
}

TEST_CASE("users respect the 10 m distance floor") {
    Philox rng(7, 0, 0);
    const CellFreeLayout layout = build_layout(16, 2, 40, 0.25, rng);
    for (const auto& u : layout.user_positions)
        for (const auto& ap : layout.ap_positions)
            CHECK(wrap_distance_km(ap, u, 0.25) >= fbmcsim::kMinDistanceKm);
}

TEST_CASE("large-scale gain follows the path-loss model") {
    Philox rng(3, 0, 0);
    const CellFreeLayout layout = build_layout(4, 1, 3, 1.0, rng);
    for (int a = 0; a < 4; ++a)
        for (int k = 0; k < 3; ++k) {
            const std::size_t idx = static_cast<std::size_t>(a) * 3 + k;
            const double expected_db =
                -135.0 - 35.0 * std::log10(layout.dist_km[idx]) - layout.shadow_db[idx];
            CHECK(10.0 * std::log10(layout.beta_ap[idx]) == doctest::Approx(expected_db).epsilon(1e-12));
            // All antennas of an AP share the value.
            CHECK(layout.beta(a, k) == layout.beta_ap[idx]);
        }
    // Sanity anchor: 1 km with zero shadowing is -135 dB.
    CHECK(std::pow(10.0, (-135.0 - 35.0 * std::log10(1.0)) / 10.0) ==
          doctest::Approx(std::pow(10.0, -13.5)).epsilon(1e-12));
}

TEST_CASE("beta aggregation helpers are consistent") {
    Philox rng(5, 0, 0);
    const CellFreeLayout layout = build_layout(4, 3, 2, 1.0, rng);
    const auto flat = layout.beta_per_antenna_user();
    REQUIRE(flat.size() == static_cast<std::size_t>(12 * 2));
    for (int i = 0; i < 12; ++i)
        for (int k = 0; k < 2; ++k)
            CHECK(flat[static_cast<std::size_t>(i) * 2 + k] == layout.beta(i, k));
    const auto sums = layout.sum_beta_per_user();
    for (int k = 0; k < 2; ++k) {
        double s = 0.0;
        for (int i = 0; i < 12; ++i) s += layout.beta(i, k);
        CHECK(sums[static_cast<std::size_t>(k)] == doctest::Approx(s).epsilon(1e-12));
    }
}

TEST_CASE("thermal noise power identities") {
    const double base = noise_power(290.0, 1.380649e-23, 20e6, 0.0);
    CHECK(base == doctest::Approx(290.0 * 1.380649e-23 * 20e6).epsilon(1e-12));
    CHECK(noise_power(290.0, 1.380649e-23, 40e6, 0.0) == doctest::Approx(2.0 * base).epsilon(1e-12));
    const double with_nf = noise_power(290.0, 1.380649e-23, 20e6, 9.0);
    CHECK(with_nf == doctest::Approx(6.3604e-13).epsilon(1e-3));
}

TEST_CASE("fractional power control") {
    {
        const PowerControl pc = fractional_power_control({1e-13, 5e-12, 2e-11}, 0.0, 0.2);
        for (double mu : pc.mu) CHECK(mu == doctest::Approx(0.2).epsilon(1e-12));
    }
    {
        // nu = 0.5: the weaker user (smaller beta sum) gets more power; with a
        // 4:1 beta ratio, the mu ratio is exactly 2.
        const PowerControl pc = fractional_power_control({1e-13, 4e-13}, 0.5, 0.2);
        CHECK(pc.mu[0] == doctest::Approx(0.2).epsilon(1e-12));
        CHECK(pc.mu[0] / pc.mu[1] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(*std::max_element(pc.mu.begin(), pc.mu.end()) == doctest::Approx(0.2));
    }
    {
        // Scale invariance: multiplying all beta sums leaves mu unchanged.
        const PowerControl a = fractional_power_control({1e-13, 7e-13, 3e-12}, 0.5, 0.2);
        const PowerControl b = fractional_power_control({1e-10, 7e-10, 3e-9}, 0.5, 0.2);
        for (std::size_t i = 0; i < a.mu.size(); ++i)
            CHECK(a.mu[i] == doctest::Approx(b.mu[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fractional_power_control({}, 0.5, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(fractional_power_control({1e-13, 0.0}, 0.5, 0.2), std::invalid_argument);
}

TEST_CASE("layout CSV dump lists APs and users") {
    Philox rng(9, 0, 0);
    const CellFreeLayout layout = build_layout(4, 4, 3, 1.0, rng);
    const PowerControl pc = fractional_power_control(layout.sum_beta_per_user(), 0.5, 0.2);
    std::ostringstream out;
    fbmcsim::dump_layout_csv(layout, pc, out);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "entity,index,x_km,y_km,mu_watt");
    int aps = 0;
    int users = 0;
    while (std::getline(in, line)) {
        if (line.rfind("ap,", 0) == 0) ++aps;
        if (line.rfind("user,", 0) == 0) ++users;
    }
    CHECK(aps == 4);
    CHECK(users == 3);
}
