#include <doctest.h>

#include <cmath>

#include "gflstab/equilibria.hpp"

using namespace gflstab;

namespace {

SystemParams plain_params() {
    return SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0));
}

SystemParams tvc_params() {
    return SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0, 20.0));
}

}  // namespace

TEST_CASE("current-plane pairs against the frozen roots") {
    const SystemParams p = plain_params();
    const EquilibriumPair plain = find_dvc_equilibria(p, false);
    REQUIRE(plain.exists);
    CHECK(plain.sep.c0 == doctest::Approx(1.2211594186).epsilon(1e-8));
    CHECK(plain.uep.c0 == doctest::Approx(1.7423274489).epsilon(1e-8));
    CHECK(plain.sep.c1 == 0.0);
    CHECK(plain.uep.c1 == 0.0);
    CHECK(plain.sep.c0 < plain.uep.c0);

    // The bare unstable root solves X^2 i^4 - U^2 i^2 + P^2 = 0 in closed form.
    const double x2 = p.x_g * p.x_g;
    const double closed =
        std::sqrt((1.0 + std::sqrt(1.0 - 4.0 * x2)) / (2.0 * x2));
    CHECK(plain.uep.c0 == doctest::Approx(closed).epsilon(1e-10));

    const EquilibriumPair tvc = find_dvc_equilibria(tvc_params(), true);
    REQUIRE(tvc.exists);
    CHECK(tvc.sep.c0 == doctest::Approx(1.2298629239).epsilon(1e-8));
    CHECK(tvc.uep.c0 == doctest::Approx(2.0993042494).epsilon(1e-8));

    // Voltage support widens the basin extent in the current coordinate.
    CHECK(tvc.uep.c0 > plain.uep.c0);
}

TEST_CASE("angle-plane pairs against the frozen roots") {
    const EquilibriumPair plain = find_pll_equilibria(plain_params(), false);
    REQUIRE(plain.exists);
    CHECK(plain.sep.c0 == doctest::Approx(0.6113151528).epsilon(1e-8));
    CHECK(plain.uep.c0 == doctest::Approx(0.9594811740).epsilon(1e-8));

    const EquilibriumPair tvc = find_pll_equilibria(tvc_params(), true);
    REQUIRE(tvc.exists);
    CHECK(tvc.sep.c0 == doctest::Approx(0.6163192818).epsilon(1e-8));
    CHECK(tvc.uep.c0 == doctest::Approx(1.4073539215).epsilon(1e-8));
    CHECK(tvc.uep.c0 > plain.uep.c0);
}

TEST_CASE("injected reactive current widens the gap between the roots") {
    SystemParams p = plain_params();
    const EquilibriumPair base = find_dvc_equilibria(p, false);
    p.i_q_fixed = -0.3;
    const EquilibriumPair wide = find_dvc_equilibria(p, false);
    REQUIRE(base.exists);
    REQUIRE(wide.exists);
    CHECK(wide.uep.c0 - wide.sep.c0 > base.uep.c0 - base.sep.c0);
    CHECK(wide.margin > base.margin);
}

TEST_CASE("existence threshold and saddle-node merge") {
    SystemParams p = plain_params();
    const double u_star = existence_threshold(p);
    CHECK(u_star == doctest::Approx(std::sqrt(2.0 * p.p_in * p.x_g)).epsilon(1e-12));
    CHECK(u_star == doctest::Approx(0.9695359715).epsilon(1e-9));

    p.u_g = u_star;
    const EquilibriumPair merged = find_dvc_equilibria(p, false);
    CHECK(merged.exists);
    CHECK(merged.saddle_node);
    CHECK(merged.sep.c0 == doctest::Approx(merged.uep.c0).epsilon(1e-6));

    p.u_g = u_star + 1e-3;
    const EquilibriumPair pair = find_dvc_equilibria(p, false);
    CHECK(pair.exists);
    CHECK(!pair.saddle_node);
    CHECK(pair.sep.c0 < pair.uep.c0);

    p.u_g = 0.9;
    const EquilibriumPair none = find_dvc_equilibria(p, false);
    CHECK(!none.exists);
    CHECK(none.margin < 0);
}

TEST_CASE("voltage support restores existence below the bare threshold") {
    SystemParams p = tvc_params();
    p.u_g = 0.9;
    const EquilibriumPair pair = find_dvc_equilibria(p, true);
    CHECK(pair.exists);
}

TEST_CASE("full rest points against the frozen coordinates") {
    {
        const SystemParams p = plain_params();
        const FullState sep = full_equilibrium(p, false);
        CHECK(sep.delta == doctest::Approx(0.6072979795723406).epsilon(1e-9));
        CHECK(sep.i_d == doctest::Approx(1.2141503529378674).epsilon(1e-9));
        CHECK(std::abs(sep.x_int_pll) < 1e-10);
        CHECK(std::abs(sep.dv2) < 1e-10);
        CHECK(sep.i_q == 0.0);

        const FullState uep = full_equilibrium_unstable(p, false);
        CHECK(uep.delta == doctest::Approx(0.9677536406870321).epsilon(1e-9));
        CHECK(uep.i_d == doctest::Approx(1.7523697176607058).epsilon(1e-9));

        for (double v : rhs_full(sep, p, false).to_array()) CHECK(std::abs(v) < 1e-9);
        for (double v : rhs_full(uep, p, false).to_array()) CHECK(std::abs(v) < 1e-9);
    }
    {
        const SystemParams p = tvc_params();
        const FullState sep = full_equilibrium(p, true);
        CHECK(sep.delta == doctest::Approx(0.6134843484478573).epsilon(1e-9));
        CHECK(sep.i_d == doctest::Approx(1.2249024450226373).epsilon(1e-9));
        CHECK(sep.i_q == doctest::Approx(0.007883480928033676).epsilon(1e-6));

        const FullState uep = full_equilibrium_unstable(p, true);
        CHECK(uep.delta == doctest::Approx(1.4185792173634110).epsilon(1e-9));
        CHECK(uep.i_d == doctest::Approx(2.1059463644500590).epsilon(1e-9));
        CHECK(uep.i_q == doctest::Approx(-0.6787319823988583).epsilon(1e-6));
    }
}

TEST_CASE("no full rest point below the existence threshold") {
    SystemParams p = plain_params();
    p.u_g = 0.9;
    CHECK_THROWS_AS(full_equilibrium(p, false), NoEquilibriumError);
}

TEST_CASE("plane classification: attracting SEP, saddle UEP") {
    const SystemParams p = plain_params();
    {
        const EquilibriumPair pair = find_dvc_equilibria(p, false);
        const auto sep =
            classify_equilibrium(pair.sep, BandwidthOrdering::PllFastDvcSlow, p);
        CHECK(sep.kind != EquilibriumKind::Saddle);
        CHECK(sep.kind != EquilibriumKind::Unstable);
        const auto uep =
            classify_equilibrium(pair.uep, BandwidthOrdering::PllFastDvcSlow, p);
        CHECK(uep.kind == EquilibriumKind::Saddle);
        CHECK(uep.eigenvalues[0].real() * uep.eigenvalues[1].real() < 0);
    }
    {
        const SystemParams q = SystemParams::make_default(BandwidthSpec::from_hz(2, 15));
        const EquilibriumPair pair = find_pll_equilibria(q, false);
        const auto sep =
            classify_equilibrium(pair.sep, BandwidthOrdering::DvcFastPllSlow, q);
        CHECK(sep.kind != EquilibriumKind::Saddle);
        CHECK(sep.kind != EquilibriumKind::Unstable);
        const auto uep =
            classify_equilibrium(pair.uep, BandwidthOrdering::DvcFastPllSlow, q);
        CHECK(uep.kind == EquilibriumKind::Saddle);
    }
}

TEST_CASE("classification of a hand-built field") {
    // x' = -x, y' = -2y: stable node at the origin.
    const PlaneRhs node = [](const ReducedState& s) {
        return ReducedState{-s.c0, -2.0 * s.c1};
    };
    CHECK(classify_equilibrium({0, 0}, node).kind == EquilibriumKind::StableNode);

    // x' = -x + 5y, y' = -5x - y: stable focus.
    const PlaneRhs focus = [](const ReducedState& s) {
        return ReducedState{-s.c0 + 5 * s.c1, -5 * s.c0 - s.c1};
    };
    CHECK(classify_equilibrium({0, 0}, focus).kind == EquilibriumKind::StableFocus);

    // x' = x, y' = -y: saddle.
    const PlaneRhs saddle = [](const ReducedState& s) {
        return ReducedState{s.c0, -s.c1};
    };
    CHECK(classify_equilibrium({0, 0}, saddle).kind == EquilibriumKind::Saddle);
}
