#include <doctest.h>

#include <cmath>

#include "gflstab/roa.hpp"

using namespace gflstab;

namespace {

// Planar field with a known basin: sep (-1,0), saddle (0,0), stable manifold
// of the saddle is exactly the vertical axis, basin of the sep is {c0 < 0}.
const PlaneRhs kBistable = [](const ReducedState& s) {
    return ReducedState{s.c0 * (s.c0 + 1.0), -s.c1};
};

}  // namespace

TEST_CASE("synthetic saddle: traced boundary is the vertical axis") {
    const ReducedState sep{-1, 0}, uep{0, 0};
    const RoaBoundary b = trace_stable_manifold(kBistable, sep, uep);

    CHECK(b.exited_box_a);
    CHECK(b.exited_box_b);
    CHECK(b.sep_enclosed);

    const auto curve = b.curve();
    REQUIRE(curve.size() >= 3);
    for (const ReducedState& pt : curve) CHECK(std::abs(pt.c0) < 1e-6);
    // Ends are clipped to the default box edge at |c1| = 3 span units.
    CHECK(std::abs(std::abs(curve.front().c1) - 3.0) < 1e-6);
    CHECK(std::abs(std::abs(curve.back().c1) - 3.0) < 1e-6);

    CHECK(in_roa(b, {-2.0, 0.0}) == RoaVerdict::Inside);
    CHECK(in_roa(b, {-1.0, 0.0}) == RoaVerdict::Inside);
    CHECK(in_roa(b, {-0.5, 2.0}) == RoaVerdict::Inside);
    CHECK(in_roa(b, {1.0, 0.0}) == RoaVerdict::Outside);
    CHECK(in_roa(b, {2.2, 0.5}) == RoaVerdict::Outside);
    CHECK(in_roa(b, {0.0, 1.0}) == RoaVerdict::Indeterminate);
    CHECK(in_roa(b, {0.0, 0.0}) == RoaVerdict::Indeterminate);
}

TEST_CASE("tracer rejects non-saddles and degenerate spans") {
    const ReducedState sep{-1, 0};
    CHECK_THROWS_AS(trace_stable_manifold(kBistable, ReducedState{0, 0},
                                          ReducedState{-1, 0}),
                    RoaError);
    CHECK_THROWS_AS(trace_stable_manifold(kBistable, sep, sep), RoaError);
}

TEST_CASE("current-plane boundary of the built-in model") {
    const SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    const RoaBoundary b =
        trace_stable_manifold(BandwidthOrdering::PllFastDvcSlow, p);

    CHECK(b.sep.c0 == doctest::Approx(1.2211594186).epsilon(1e-7));
    CHECK(b.uep.c0 == doctest::Approx(1.7423274489).epsilon(1e-7));
    CHECK(b.sep_enclosed);
    // The window stays strictly inside the fast-map domain |i_d| < U/X.
    CHECK(b.box.hi0 < p.u_g / p.x_g);
    CHECK(b.box.hi0 > 2.0);

    CHECK(in_roa(b, b.sep) == RoaVerdict::Inside);
    CHECK(in_roa(b, b.uep) == RoaVerdict::Indeterminate);
    CHECK(in_roa(b, b.curve()[1]) == RoaVerdict::Indeterminate);
}

TEST_CASE("the UEP separates converging and escaping rays") {
    const SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    const EquilibriumPair pair = find_dvc_equilibria(p, false);
    REQUIRE(pair.exists);

    const RhsFn rhs = [&p](double, const StateVec& x, StateVec& dx) {
        const ReducedState d = rhs_reduced(BandwidthOrdering::PllFastDvcSlow,
                                           ReducedState{x[0], x[1]}, p);
        dx = {d.c0, d.c1, 0, 0, 0};
    };
    IntegratorOptions integ;
    integ.rtol = 1e-10;
    integ.atol = 1e-12;

    const double gap = pair.uep.c0 - pair.sep.c0;
    const Trajectory inward =
        integrate(2, rhs, {pair.uep.c0 - 1e-3 * gap, 0, 0, 0, 0}, 0, 10, integ);
    REQUIRE(!inward.truncated);
    CHECK(inward.back_state()[0] == doctest::Approx(pair.sep.c0).epsilon(1e-6));

    const Trajectory outward =
        integrate(2, rhs, {pair.uep.c0 + 1e-3 * gap, 0, 0, 0, 0}, 0, 10, integ);
    const bool escaped = outward.truncated ||
                         std::abs(outward.back_state()[0] - pair.sep.c0) > 0.1;
    CHECK(escaped);
}

TEST_CASE("traced boundary agrees with the brute-force oracle") {
    const SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    const RoaBoundary b =
        trace_stable_manifold(BandwidthOrdering::PllFastDvcSlow, p);
    GridSpec spec;
    spec.box = b.box;
    spec.n0 = 40;
    spec.n1 = 40;
    const RoaGrid grid =
        brute_force_roa(BandwidthOrdering::PllFastDvcSlow, p, spec);
    REQUIRE(grid.cells.size() == 1600);

    const AgreementStats st = agreement(b, grid);
    CHECK(st.total == 1600);
    CHECK(st.mutually_determinate > 1000);
    CHECK(st.fraction >= 0.97);
}

TEST_CASE("cells beyond the fast-map domain are divergent") {
    const SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    GridSpec spec;
    spec.box = {1.9, 2.4, -0.1, 0.1};
    spec.n0 = 6;
    spec.n1 = 1;
    const RoaGrid grid =
        brute_force_roa(BandwidthOrdering::PllFastDvcSlow, p, spec);
    for (int i0 = 0; i0 < 6; ++i0) {
        CHECK(grid.at(i0, 0) != CellOutcome::Converged);
        if (grid.center(i0, 0).c0 > p.u_g / p.x_g)
            CHECK(grid.at(i0, 0) == CellOutcome::Diverged);
    }
}

TEST_CASE("standalone PLL plane at a held current") {
    const SystemParams p = SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
    const RoaBoundary b = pll_alone_roa(p, 1.0);
    const double d0 = std::asin(p.x_g * 1.0 / p.u_g);
    CHECK(b.sep.c0 == doctest::Approx(d0).epsilon(1e-12));
    CHECK(b.sep.c1 == 0.0);
    CHECK(b.uep.c0 == doctest::Approx(kPi - d0).epsilon(1e-12));
    CHECK(in_roa(b, b.sep) == RoaVerdict::Inside);

    const PlaneRhs rhs = pll_alone_rhs(p, 1.0);
    const ReducedState at_sep = rhs(b.sep);
    CHECK(std::abs(at_sep.c0) < 1e-12);
    CHECK(std::abs(at_sep.c1) < 1e-12);

    CHECK_THROWS_AS(pll_alone_roa(p, 2.2), NoEquilibriumError);
}

TEST_CASE("composite view carries the fast validity frontier") {
    {
        const SystemParams p =
            SystemParams::make_default(BandwidthSpec::from_hz(15, 2));
        const CompositeRoa c = composite_roa(p);
        CHECK(c.cls.ordering == BandwidthOrdering::PllFastDvcSlow);
        CHECK(!c.cls.advisory);
        REQUIRE(!c.fast_limits.empty());
        bool found = false;
        for (const ValidityLine& l : c.fast_limits)
            if (l.label == "pll-fast-current-bound") {
                found = true;
                CHECK(l.axis == 0);
                CHECK(l.value > c.slow.sep.c0);
                CHECK(std::isfinite(l.value));
            }
        CHECK(found);
    }
    {
        const SystemParams p =
            SystemParams::make_default(BandwidthSpec::from_hz(2, 15));
        const CompositeRoa c = composite_roa(p);
        CHECK(c.cls.ordering == BandwidthOrdering::DvcFastPllSlow);
        bool angle = false, reach = false;
        for (const ValidityLine& l : c.fast_limits) {
            if (l.label == "dvc-fast-angle-bound") {
                angle = true;
                CHECK(l.value == doctest::Approx(kPi / 2).epsilon(1e-12));
            }
            if (l.label == "current-limit-reach") {
                reach = true;
                // i_q = 0 here, so the limiter line sits at acos(P/(I U)).
                CHECK(l.value ==
                      doctest::Approx(std::acos(p.p_in / (p.limits.i_limit * p.u_g)))
                          .epsilon(1e-6));
            }
        }
        CHECK(angle);
        CHECK(reach);
    }
    {
        const SystemParams p =
            SystemParams::make_default(BandwidthSpec::from_hz(18, 3));
        CHECK(composite_roa(p).cls.advisory);
    }
}

TEST_CASE("agreement degenerates gracefully with no determinate cells") {
    const RoaBoundary b =
        trace_stable_manifold(kBistable, ReducedState{-1, 0}, ReducedState{0, 0});
    RoaGrid grid;
    grid.spec.box = b.box;
    grid.spec.n0 = 4;
    grid.spec.n1 = 4;
    grid.cells.assign(16, CellOutcome::Indeterminate);
    const AgreementStats st = agreement(b, grid);
    CHECK(st.mutually_determinate == 0);
    CHECK(st.fraction == 1.0);
}
