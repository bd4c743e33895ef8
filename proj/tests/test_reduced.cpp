#include <doctest.h>

#include <cmath>

#include "gflstab/reduced.hpp"

using namespace gflstab;

namespace {

SystemParams dvc_slow_params() {  // PLL fast
    return SystemParams::make_default(BandwidthSpec::from_hz(15.0, 2.0));
}

SystemParams pll_slow_params() {  // DVC fast
    return SystemParams::make_default(BandwidthSpec::from_hz(2.0, 15.0));
}

}  // namespace

TEST_CASE("ordering classification and separation ratios") {
    OrderingClass c = classify_ordering(BandwidthSpec::from_hz(15, 2));
    CHECK(c.ordering == BandwidthOrdering::PllFastDvcSlow);
    CHECK(c.separation_ratio == doctest::Approx(7.5).epsilon(1e-12));
    CHECK(!c.advisory);

    c = classify_ordering(BandwidthSpec::from_hz(2, 15));
    CHECK(c.ordering == BandwidthOrdering::DvcFastPllSlow);
    CHECK(c.separation_ratio == doctest::Approx(7.5).epsilon(1e-12));

    c = classify_ordering(BandwidthSpec::from_hz(15, 2, 20));
    CHECK(c.ordering == BandwidthOrdering::PllTvcFastDvcSlow);
    CHECK(c.separation_ratio == doctest::Approx(7.5).epsilon(1e-12));

    c = classify_ordering(BandwidthSpec::from_hz(2, 15, 20));
    CHECK(c.ordering == BandwidthOrdering::TvcDvcFastPllSlow);
    CHECK(c.separation_ratio == doctest::Approx(7.5).epsilon(1e-12));

    c = classify_ordering(BandwidthSpec::from_hz(18, 3));
    CHECK(c.separation_ratio == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(c.advisory);
}

TEST_CASE("fast algebraic maps at pinned points") {
    const SystemParams p = dvc_slow_params();

    CHECK(alg_pll_fast(1.0, p) == doctest::Approx(std::asin(0.47)).epsilon(1e-15));
    CHECK_THROWS_AS(alg_pll_fast(2.2, p), DomainError);

    // (P_in + i_q U sin30) / (U cos30) with i_q = -0.5 lands on sqrt(3)/2.
    CHECK(alg_dvc_fast(kPi / 6, -0.5, p) ==
          doctest::Approx(0.8660254037844386).epsilon(1e-12));
    CHECK_THROWS_AS(alg_dvc_fast(kPi / 2, 0.0, p), DomainError);

    // -k_v/(k_v X_g + 1) (V_t_ref - U_g) at delta = 0.
    CHECK(alg_tvc(0.0, p) == doctest::Approx(0.19587628865979381).epsilon(1e-12));
}

TEST_CASE("power curve shape") {
    const SystemParams p = dvc_slow_params();

    // Maximum at i = U/(sqrt(2) X) with value U^2/(2X).
    const double i_star = p.u_g / (std::sqrt(2.0) * p.x_g);
    CHECK(p_of_id(i_star, 0.0, p) ==
          doctest::Approx(p.u_g * p.u_g / (2 * p.x_g)).epsilon(1e-13));
    CHECK(p_of_id(i_star - 1e-3, 0.0, p) < p_of_id(i_star, 0.0, p));
    CHECK(p_of_id(i_star + 1e-3, 0.0, p) < p_of_id(i_star, 0.0, p));

    // Unimodal on [0, U/X]: increasing then decreasing.
    const double edge = p.u_g / p.x_g;
    bool decreasing = false;
    double prev = p_of_id(0.0, 0.0, p);
    for (int k = 1; k <= 200; ++k) {
        const double v = p_of_id(edge * k / 201.0, 0.0, p);
        if (v < prev) decreasing = true;
        if (decreasing) CHECK(v < prev);
        prev = v;
    }

    // Negative reactive current raises the curve.
    CHECK(p_of_id(1.0, -0.3, p) > p_of_id(1.0, 0.0, p));
    CHECK_THROWS_AS(p_of_id(2.2, 0.0, p), DomainError);
}

TEST_CASE("synchronizing curve shape") {
    const SystemParams p = pll_slow_params();

    CHECK(h_of_delta(kPi / 4, 0.0, p) == doctest::Approx(0.5).epsilon(1e-14));
    // Period pi when i_q = 0.
    CHECK(h_of_delta(0.3 + kPi, 0.0, p) ==
          doctest::Approx(h_of_delta(0.3, 0.0, p)).epsilon(1e-12));

    // Blended curve: recovers h at k_v -> 0 and V_ref U sin(delta) as k_v grows.
    SystemParams small = p;
    small.k_v = 1e-9;
    CHECK(h_prime_of_delta(0.7, small) ==
          doctest::Approx(h_of_delta(0.7, 0.0, small)).epsilon(1e-6));
    SystemParams big = p;
    big.k_v = 1e9;
    CHECK(h_prime_of_delta(0.7, big) ==
          doctest::Approx(big.v_t_ref * big.u_g * std::sin(0.7)).epsilon(1e-6));

    // Frozen rehearsal point just below the blended-curve crossing.
    CHECK(h_prime_of_delta(80.3 * kPi / 180.0, p) ==
          doctest::Approx(0.4724).epsilon(2e-4));

    // The voltage-controlled blend clears the bare curve past its peak.
    for (double d = 0.9; d < 1.5; d += 0.1)
        CHECK(h_prime_of_delta(d, p) > h_of_delta(d, 0.0, p));
}

TEST_CASE("slow PLL field is continuous across the current rail") {
    const SystemParams p = pll_slow_params();
    // i_q = 0: the implied current hits i_limit where cos(delta) = P_in/(i_limit U).
    const double d_star = std::acos(p.p_in / (p.limits.i_limit * p.u_g));
    const double x = 0.03;
    const ReducedState below{d_star - 1e-9, x};
    const ReducedState above{d_star + 1e-9, x};
    const ReducedState fb = rhs_reduced(BandwidthOrdering::DvcFastPllSlow, below, p);
    const ReducedState fa = rhs_reduced(BandwidthOrdering::DvcFastPllSlow, above, p);
    CHECK(std::abs(fb.c0 - fa.c0) < 1e-5 * std::max(1.0, std::abs(fb.c0)));
    CHECK(std::abs(fb.c1 - fa.c1) < 1e-5 * std::max(1.0, std::abs(fb.c1)));

    // Deep past the rail (cos <= 0) the field stays finite.
    CHECK_NOTHROW(rhs_reduced(BandwidthOrdering::DvcFastPllSlow, {2.5, 0.1}, p));
    CHECK_NOTHROW(rhs_reduced(BandwidthOrdering::DvcFastPllSlow, {kPi, -0.2}, p));
}

TEST_CASE("validity clauses for the locked-PLL reduction") {
    const SystemParams p = dvc_slow_params();
    CHECK(pll_fast_validity(1.0, p).ok);
    const ValidityResult r = pll_fast_validity(2.2, p);
    CHECK(!r.ok);
    CHECK(r.violated_clause == 1);

    bool ok = true;
    (void)rhs_reduced(BandwidthOrdering::PllFastDvcSlow, {1.0, 0.0}, p, &ok);
    CHECK(ok);
}

TEST_CASE("project and lift are inverse on the slow chart") {
    const SystemParams p = dvc_slow_params();
    for (const BandwidthOrdering o :
         {BandwidthOrdering::PllFastDvcSlow, BandwidthOrdering::DvcFastPllSlow,
          BandwidthOrdering::PllTvcFastDvcSlow, BandwidthOrdering::TvcDvcFastPllSlow}) {
        const ReducedState s{is_dvc_slow(o) ? 1.1 : 0.5, 0.08};
        const ReducedState back = project_slow(o, lift_slow(o, s, p));
        CHECK(back.c0 == doctest::Approx(s.c0).epsilon(1e-14));
        CHECK(back.c1 == doctest::Approx(s.c1).epsilon(1e-14));
    }

    // Lifting past the rail parks the current at the limiter.
    const FullState f =
        lift_slow(BandwidthOrdering::DvcFastPllSlow, {1.35, 0.0}, p);
    CHECK(f.i_d == p.limits.i_limit);
}

TEST_CASE("reduced fields agree with the full model on the fast manifold") {
    // With the line resistance removed the quasi-steady elimination is exact,
    // so on the lifted manifold the slow components of both fields coincide.
    SystemParams p = dvc_slow_params();
    p.r_g = 0.0;
    {
        const BandwidthOrdering o = BandwidthOrdering::PllFastDvcSlow;
        const ReducedState rs{1.1, 0.3};
        const FullState lifted = lift_slow(o, rs, p);
        const FullState d = rhs_full(lifted, p, false);
        const ReducedState dr = rhs_reduced(o, rs, p);
        CHECK(d.i_d == doctest::Approx(dr.c0).epsilon(1e-10));
        CHECK(d.dv2 == doctest::Approx(dr.c1).epsilon(1e-10));
    }
    SystemParams q = pll_slow_params();
    q.r_g = 0.0;
    {
        const BandwidthOrdering o = BandwidthOrdering::DvcFastPllSlow;
        const ReducedState rs{0.5, 0.02};
        const FullState lifted = lift_slow(o, rs, q);
        const FullState d = rhs_full(lifted, q, false);
        const ReducedState dr = rhs_reduced(o, rs, q);
        CHECK(d.delta == doctest::Approx(dr.c0).epsilon(1e-10));
        CHECK(d.x_int_pll == doctest::Approx(dr.c1).epsilon(1e-10));
    }
    SystemParams t = SystemParams::make_default(BandwidthSpec::from_hz(2, 15, 20));
    t.r_g = 0.0;
    {
        const BandwidthOrdering o = BandwidthOrdering::TvcDvcFastPllSlow;
        const ReducedState rs{0.5, 0.02};
        const FullState lifted = lift_slow(o, rs, t);
        const FullState d = rhs_full(lifted, t, true);
        const ReducedState dr = rhs_reduced(o, rs, t);
        CHECK(d.delta == doctest::Approx(dr.c0).epsilon(1e-10));
        CHECK(d.x_int_pll == doctest::Approx(dr.c1).epsilon(1e-10));
    }
}

TEST_CASE("boundary layer corrections vanish on the manifold") {
    {
        const SystemParams p = dvc_slow_params();
        const BandwidthOrdering o = BandwidthOrdering::PllFastDvcSlow;
        const FullState on = lift_slow(o, {1.0, 0.1}, p);
        const BoundaryLayerCorrection c = boundary_layer_correction(o, on, p);
        CHECK(std::abs(c.offset0) < 1e-12);
        CHECK(std::abs(c.offset1) < 1e-12);
        CHECK(c.decay_rate > 0);
    }
    {
        const SystemParams p = pll_slow_params();
        const BandwidthOrdering o = BandwidthOrdering::DvcFastPllSlow;
        const FullState on = lift_slow(o, {0.5, 0.0}, p);
        const BoundaryLayerCorrection c = boundary_layer_correction(o, on, p);
        CHECK(std::abs(c.offset0) < 1e-7);
        CHECK(std::abs(c.offset1) < 1e-7);
        CHECK(c.decay_rate > 0);
    }
}

TEST_CASE("off-manifold initial states produce a finite, signed correction") {
    const SystemParams p = dvc_slow_params();
    const BandwidthOrdering o = BandwidthOrdering::PllFastDvcSlow;
    FullState off = lift_slow(o, {1.0, 0.0}, p);
    off.delta += 0.1;  // PLL lags its locked angle
    const BoundaryLayerCorrection c = boundary_layer_correction(o, off, p);
    CHECK(std::abs(c.offset1) > 1e-6);
    CHECK(c.decay_rate > 0);
}
