#include <doctest.h>

#include <cmath>

#include "gflstab/equilibria.hpp"
#include "gflstab/model.hpp"

using namespace gflstab;

namespace {

SystemParams base_params() {
    return SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0));
}

SystemParams tvc_params() {
    return SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0, 20.0));
}

}  // namespace

TEST_CASE("algebraic loop closed form matches fixed-point iteration") {
    const SystemParams p = base_params();
    const FullState states[] = {
        {0.3, 0.05, 1.1, 0.2, 0.0},
        {-0.4, -0.1, 0.7, -0.5, 0.1},
        {1.2, 0.3, 2.0, 1.5, -0.3},
    };
    for (const FullState& s : states) {
        RhsAux aux;
        const FullState d = rhs_full(s, p, true, &aux);

        // delta_dot solves w = k_p (A + w L i_d) + x_int; the loop gain
        // |k_p L i_d| < 1 here, so plain iteration converges.
        const double a = p.x_g * s.i_d + p.r_g * s.i_q - p.u_g * std::sin(s.delta);
        double w = 0;
        for (int it = 0; it < 200; ++it)
            w = p.k_p_pll * (a + w * p.l_g_over_ws * s.i_d) + s.x_int_pll;
        CHECK(d.delta == doctest::Approx(w).epsilon(1e-12));
        CHECK(aux.delta_dot == doctest::Approx(w).epsilon(1e-12));
        CHECK(aux.v_tq ==
              doctest::Approx(a + w * p.l_g_over_ws * s.i_d).epsilon(1e-12));
    }
}

TEST_CASE("terminal voltage and power forms at a pinned state") {
    const SystemParams p = base_params();
    const FullState s{0.5, 0.02, 1.3, 0.1, -0.2};
    RhsAux aux;
    const FullState d = rhs_full(s, p, false, &aux);

    const double expect_p = s.i_d * p.u_g * std::cos(s.delta) -
                            s.i_q * p.u_g * std::sin(s.delta) +
                            (s.i_d * s.i_d + s.i_q * s.i_q) * p.r_g;
    CHECK(aux.p == doctest::Approx(expect_p).epsilon(1e-14));

    const double expect_vtd = p.u_g * std::cos(s.delta) - p.x_g * s.i_q +
                              s.i_q * aux.delta_dot * p.l_g_over_ws;
    CHECK(aux.v_td == doctest::Approx(expect_vtd).epsilon(1e-14));

    const double c_t = p.c_dc / p.omega_s;
    CHECK(d.dv2 == doctest::Approx(2.0 / c_t * (p.p_in - aux.p)).epsilon(1e-14));
    CHECK(d.i_d == doctest::Approx(p.k_i_dvc * s.dv2 + p.k_p_dvc * d.dv2).epsilon(1e-14));
    CHECK(d.x_int_pll == doctest::Approx(p.k_i_pll * aux.v_tq).epsilon(1e-14));
}

TEST_CASE("i_q is frozen with the TVC off and driven with it on") {
    const SystemParams p = tvc_params();
    const FullState s{0.4, 0.0, 1.2, 0.0, 0.05};
    CHECK(rhs_full(s, p, false).i_q == 0.0);

    RhsAux aux;
    const FullState d = rhs_full(s, p, true, &aux);
    const double expect =
        p.omega_tvc * (-s.i_q + p.k_v * (aux.v_td - p.v_t_ref));
    CHECK(d.i_q == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("rhs vanishes at the frozen rest points") {
    {
        const SystemParams p = base_params();
        const FullState sep{0.6072979795723406, 0.0, 1.2141503529378674, 0.0, 0.0};
        const FullState d = rhs_full(sep, p, false);
        for (double v : d.to_array()) CHECK(std::abs(v) < 1e-9);
        RhsAux aux;
        (void)rhs_full(sep, p, false, &aux);
        CHECK(aux.p == doctest::Approx(p.p_in).epsilon(1e-10));
    }
    {
        const SystemParams p = tvc_params();
        const FullState sep{0.6134843484478573, 0.0, 1.2249024450226373, 0.0,
                            0.007883480928033676};
        const FullState d = rhs_full(sep, p, true);
        for (double v : d.to_array()) CHECK(std::abs(v) < 1e-8);
    }
}

TEST_CASE("algebraic singularity is reported, not divided through") {
    const SystemParams p = base_params();
    FullState s{0.2, 0.0, 1.0 / (p.k_p_pll * p.l_g_over_ws), 0.0, 0.0};
    CHECK_THROWS_AS(rhs_full(s, p, false), SingularityError);
}

TEST_CASE("limits clamp state and raise flags") {
    const SystemParams p = base_params();

    FullState s{0.1, 0.0, 3.1, 0.0, -2.9};
    ClampResult r = apply_limits(s, p);
    CHECK(r.state.i_d == 2.5);
    CHECK(r.state.i_q == -2.5);
    CHECK(r.flags.i_d_limited);
    CHECK(r.flags.i_q_limited);
    CHECK(!r.flags.chopper);

    // dv2 band comes from v_dc in [2, 3] with the 2.5 reference.
    FullState hi{0.1, 0.0, 1.0, 3.5, 0.0};
    r = apply_limits(hi, p);
    CHECK(r.state.dv2 == doctest::Approx(3.0 * 3.0 - 2.5 * 2.5).epsilon(1e-14));
    CHECK(r.flags.chopper);

    FullState lo{0.1, 0.0, 1.0, -2.5, 0.0};
    r = apply_limits(lo, p);
    CHECK(r.state.dv2 == doctest::Approx(2.0 * 2.0 - 2.5 * 2.5).epsilon(1e-14));
    CHECK(r.flags.chopper);

    FullState ok{0.1, 0.0, 1.0, 0.5, 0.2};
    r = apply_limits(ok, p);
    CHECK(!r.flags.any());
    CHECK(r.state.i_d == 1.0);
}
