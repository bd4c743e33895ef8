#include <doctest.h>

#include "gflstab/params.hpp"

using namespace gflstab;

TEST_CASE("gain rule at the study bandwidths") {
    const BandwidthSpec bw = BandwidthSpec::from_hz(15.0, 2.0);
    const SystemParams p = SystemParams::make_default(bw);

    // PLL: proportional gain equals the loop bandwidth, integral is the
    // damping fraction of it.
    CHECK(p.k_p_pll == doctest::Approx(2 * kPi * 15).epsilon(1e-14));
    CHECK(p.k_i_pll == doctest::Approx(0.25 * 2 * kPi * 15).epsilon(1e-14));

    // DVC: second-order design on the DC storage. At 2 Hz and C_dc = 12.5,
    // omega_s = 100 pi, the pi factors cancel to exact decimals.
    CHECK(p.k_p_dvc == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(p.k_i_dvc == doctest::Approx(kPi / 4).epsilon(1e-13));

    CHECK(p.omega_tvc == 0);
    CHECK(p.l_g_over_ws == doctest::Approx(0.47 / (2 * kPi * 50)).epsilon(1e-15));
    CHECK(p.c_tilde() == doctest::Approx(12.5 / (2 * kPi * 50)).epsilon(1e-15));
}

TEST_CASE("gain scaling: PLL linear, DVC quadratic in bandwidth") {
    const SystemParams a =
        SystemParams::make_default(BandwidthSpec::from_hz(5.0, 1.0));
    const SystemParams b =
        SystemParams::make_default(BandwidthSpec::from_hz(10.0, 2.0));
    CHECK(b.k_p_pll == doctest::Approx(2 * a.k_p_pll).epsilon(1e-13));
    CHECK(b.k_i_pll == doctest::Approx(2 * a.k_i_pll).epsilon(1e-13));
    CHECK(b.k_p_dvc == doctest::Approx(2 * a.k_p_dvc).epsilon(1e-13));
    CHECK(b.k_i_dvc == doctest::Approx(4 * a.k_i_dvc).epsilon(1e-13));
}

TEST_CASE("tvc bandwidth is carried through") {
    const SystemParams p =
        SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0, 20.0));
    CHECK(p.omega_tvc == doctest::Approx(2 * kPi * 20).epsilon(1e-14));
    CHECK(p.k_v == 2.0);
    CHECK(p.v_t_ref == 0.81);
}

TEST_CASE("set_bandwidths rederives gains after parameter edits") {
    SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0));
    p.c_dc = 25.0;
    p.set_bandwidths(BandwidthSpec::from_hz(15.0, 2.0));
    CHECK(p.k_p_dvc == doctest::Approx(0.5).epsilon(1e-13));
    CHECK(p.k_p_pll == doctest::Approx(2 * kPi * 15).epsilon(1e-14));
}

TEST_CASE("validate rejects nonsense") {
    SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0));
    CHECK_NOTHROW(p.validate());
    SystemParams bad = p;
    bad.c_dc = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.u_g = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = p;
    bad.limits.v_dc_min = 4.0;  // above v_dc_max
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
