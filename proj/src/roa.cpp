#include "gflstab/roa.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "gflstab/integrate.hpp"
#include "gflstab/pool.hpp"

namespace gflstab {

namespace {

double dist(const ReducedState& a, const ReducedState& b) {
    return std::hypot(a.c0 - b.c0, a.c1 - b.c1);
}

struct Jac2 {
    double a, b, c, d;
    double trace() const { return a + d; }
    double det() const { return a * d - b * c; }
};

Jac2 jacobian(const PlaneRhs& rhs, const ReducedState& x, double scale) {
    const double h = 1e-6 * std::max(1.0, scale);
    const ReducedState f0p = rhs({x.c0 + h, x.c1});
    const ReducedState f0m = rhs({x.c0 - h, x.c1});
    const ReducedState f1p = rhs({x.c0, x.c1 + h});
    const ReducedState f1m = rhs({x.c0, x.c1 - h});
    return {(f0p.c0 - f0m.c0) / (2 * h), (f1p.c0 - f1m.c0) / (2 * h),
            (f0p.c1 - f0m.c1) / (2 * h), (f1p.c1 - f1m.c1) / (2 * h)};
}

/// Unit eigenvector of the negative (stable) eigenvalue of a saddle Jacobian.
ReducedState stable_direction(const Jac2& j) {
    const double disc = std::sqrt(j.trace() * j.trace() - 4 * j.det());
    const double lam = 0.5 * (j.trace() - disc);
    const ReducedState v1{j.b, lam - j.a};
    const ReducedState v2{lam - j.d, j.c};
    const double n1 = std::hypot(v1.c0, v1.c1);
    const double n2 = std::hypot(v2.c0, v2.c1);
    const ReducedState v = n1 >= n2 ? v1 : v2;
    const double n = std::max(n1, n2);
    if (!(n > 0)) throw RoaError("stable eigenvector is numerically zero");
    return {v.c0 / n, v.c1 / n};
}

/// Replaces the last point (just outside the box) with the exact crossing of
/// the segment prev -> last through the box perimeter.
void clip_end_to_box(std::vector<ReducedState>& pts, const PlaneBox& box) {
    if (pts.size() < 2) return;
    const ReducedState& a = pts[pts.size() - 2];
    const ReducedState& b = pts.back();
    double t_hit = 1;
    auto consider = [&](double num, double den) {
        if (den == 0) return;
        const double t = num / den;
        if (t > 0 && t < t_hit) t_hit = t;
    };
    consider(box.lo0 - a.c0, b.c0 - a.c0);
    consider(box.hi0 - a.c0, b.c0 - a.c0);
    consider(box.lo1 - a.c1, b.c1 - a.c1);
    consider(box.hi1 - a.c1, b.c1 - a.c1);
    pts.back() = {a.c0 + t_hit * (b.c0 - a.c0), a.c1 + t_hit * (b.c1 - a.c1)};
    pts.back().c0 = std::clamp(pts.back().c0, box.lo0, box.hi0);
    pts.back().c1 = std::clamp(pts.back().c1, box.lo1, box.hi1);
}

std::vector<ReducedState> trace_branch(const PlaneRhs& rhs, const ReducedState& seed,
                                       const PlaneBox& box, double arc_budget,
                                       const IntegratorOptions& iopts,
                                       bool* exited_box) {
    RhsFn backward = [&rhs](double, const StateVec& x, StateVec& dx) {
        const ReducedState d = rhs({x[0], x[1]});
        dx = {-d.c0, -d.c1, 0, 0, 0};
    };

    struct Walk {
        double arc = 0;
        ReducedState prev;
        bool exited = false;
    };
    auto walk = std::make_shared<Walk>();
    walk->prev = seed;
    StopFn stop = [walk, &box, arc_budget](double, const StateVec& x) {
        const ReducedState cur{x[0], x[1]};
        walk->arc += dist(cur, walk->prev);
        walk->prev = cur;
        if (!box.contains(cur)) {
            walk->exited = true;
            return true;
        }
        return walk->arc > arc_budget;
    };

    const Trajectory tr = integrate(2, backward, {seed.c0, seed.c1, 0, 0, 0}, 0,
                                    1e4, iopts, {}, nullptr, stop);

    std::vector<ReducedState> pts;
    pts.reserve(tr.size());
    for (const StateVec& s : tr.states) pts.push_back({s[0], s[1]});
    if (walk->exited) clip_end_to_box(pts, box);
    *exited_box = walk->exited;
    return pts;
}

// -- box perimeter ------------------------------------------------------------

ReducedState box_corner(const PlaneBox& b, int k) {
    switch (((k % 4) + 4) % 4) {
        case 0: return {b.lo0, b.lo1};
        case 1: return {b.hi0, b.lo1};
        case 2: return {b.hi0, b.hi1};
        default: return {b.lo0, b.hi1};
    }
}

/// Perimeter coordinate: corner k sits at s = k, sides are unit-length.
double perimeter_pos(const PlaneBox& b, const ReducedState& p) {
    const double d_bot = std::abs(p.c1 - b.lo1);
    const double d_rgt = std::abs(p.c0 - b.hi0);
    const double d_top = std::abs(p.c1 - b.hi1);
    const double d_lft = std::abs(p.c0 - b.lo0);
    const double m = std::min({d_bot, d_rgt, d_top, d_lft});
    const double w0 = std::max(b.width0(), 1e-300);
    const double w1 = std::max(b.width1(), 1e-300);
    if (m == d_bot) return 0 + std::clamp((p.c0 - b.lo0) / w0, 0.0, 1.0);
    if (m == d_rgt) return 1 + std::clamp((p.c1 - b.lo1) / w1, 0.0, 1.0);
    if (m == d_top) return 2 + std::clamp((b.hi0 - p.c0) / w0, 0.0, 1.0);
    return 3 + std::clamp((b.hi1 - p.c1) / w1, 0.0, 1.0);
}

/// Corners passed when walking the perimeter from s_from to s_to.
std::vector<ReducedState> perimeter_walk(const PlaneBox& b, double s_from,
                                         double s_to, bool ccw) {
    std::vector<ReducedState> out;
    if (ccw) {
        const double d = std::fmod(s_to - s_from + 8, 4);
        for (int i = 1; i <= 4; ++i) {
            const double sc = std::floor(s_from) + i;
            if (sc - s_from >= d) break;
            out.push_back(box_corner(b, static_cast<int>(sc)));
        }
    } else {
        const double d = std::fmod(s_from - s_to + 8, 4);
        for (int i = 1; i <= 4; ++i) {
            const double sc = std::ceil(s_from) - i;
            if (s_from - sc >= d) break;
            out.push_back(box_corner(b, static_cast<int>(sc)));
        }
    }
    return out;
}

int winding_number(const std::vector<ReducedState>& poly, const ReducedState& p) {
    int wn = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const ReducedState& a = poly[i];
        const ReducedState& b = poly[(i + 1) % n];
        const double side = (b.c0 - a.c0) * (p.c1 - a.c1) - (p.c0 - a.c0) * (b.c1 - a.c1);
        if (a.c1 <= p.c1) {
            if (b.c1 > p.c1 && side > 0) ++wn;
        } else {
            if (b.c1 <= p.c1 && side < 0) --wn;
        }
    }
    return wn;
}

double segment_distance(const ReducedState& p, const ReducedState& a,
                        const ReducedState& b) {
    const double vx = b.c0 - a.c0, vy = b.c1 - a.c1;
    const double wx = p.c0 - a.c0, wy = p.c1 - a.c1;
    const double vv = vx * vx + vy * vy;
    const double t = vv > 0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
    return std::hypot(wx - t * vx, wy - t * vy);
}

}  // namespace

std::vector<ReducedState> RoaBoundary::curve() const {
    std::vector<ReducedState> c;
    c.reserve(branch_a.size() + branch_b.size() + 1);
    c.insert(c.end(), branch_a.rbegin(), branch_a.rend());
    c.push_back(uep);
    c.insert(c.end(), branch_b.begin(), branch_b.end());
    return c;
}

const char* roa_verdict_name(RoaVerdict v) {
    switch (v) {
        case RoaVerdict::Inside: return "inside";
        case RoaVerdict::Outside: return "outside";
        case RoaVerdict::Indeterminate: return "indeterminate";
    }
    return "?";
}

const char* cell_outcome_name(CellOutcome c) {
    switch (c) {
        case CellOutcome::Converged: return "converged";
        case CellOutcome::Diverged: return "diverged";
        case CellOutcome::Indeterminate: return "indeterminate";
    }
    return "?";
}

RoaBoundary trace_stable_manifold(const PlaneRhs& rhs, const ReducedState& sep,
                                  const ReducedState& uep, const TraceOptions& opts) {
    const double span = dist(sep, uep);
    if (!(span > 0)) throw RoaError("SEP and UEP coincide; no boundary to trace");

    const EquilibriumClassification cls = classify_equilibrium(uep, rhs);
    if (cls.kind != EquilibriumKind::Saddle)
        throw RoaError("boundary tracing needs a saddle UEP; Jacobian has no "
                       "real eigenvalue pair of opposite sign here");

    RoaBoundary b;
    b.sep = sep;
    b.uep = uep;
    b.band = 2 * opts.trace_tol;

    if (opts.box) {
        b.box = *opts.box;
    } else {
        const double half = opts.box_scale * span;
        const double mid0 = 0.5 * (sep.c0 + uep.c0);
        const double mid1 = 0.5 * (sep.c1 + uep.c1);
        b.box = {mid0 - half, mid0 + half, mid1 - half, mid1 + half};
    }
    if (!b.box.contains(sep) || !b.box.contains(uep))
        throw RoaError("domain box excludes an equilibrium");

    b.roam = opts.roam ? *opts.roam : b.box;
    if (!b.roam.contains(sep) || !b.roam.contains(uep))
        throw RoaError("roam window excludes an equilibrium");

    const ReducedState v = stable_direction(jacobian(rhs, uep, span));
    const double off = opts.eta * span;
    const double arc_budget = opts.arc_cap * span;

    b.branch_a = trace_branch(rhs, {uep.c0 + off * v.c0, uep.c1 + off * v.c1},
                              b.roam, arc_budget, opts.integ, &b.exited_box_a);
    b.branch_b = trace_branch(rhs, {uep.c0 - off * v.c0, uep.c1 - off * v.c1},
                              b.roam, arc_budget, opts.integ, &b.exited_box_b);

    b.polygon = b.curve();
    if (b.exited_box_a && b.exited_box_b && !b.branch_a.empty() && !b.branch_b.empty()) {
        const double s_b = perimeter_pos(b.roam, b.branch_b.back());
        const double s_a = perimeter_pos(b.roam, b.branch_a.back());
        auto with_walk = [&](bool ccw) {
            std::vector<ReducedState> poly = b.polygon;
            const std::vector<ReducedState> corners =
                perimeter_walk(b.roam, s_b, s_a, ccw);
            poly.insert(poly.end(), corners.begin(), corners.end());
            return poly;
        };
        std::vector<ReducedState> ccw_poly = with_walk(true);
        if (winding_number(ccw_poly, sep) != 0) {
            b.polygon = std::move(ccw_poly);
        } else {
            std::vector<ReducedState> cw_poly = with_walk(false);
            if (winding_number(cw_poly, sep) != 0) b.polygon = std::move(cw_poly);
            else b.polygon = std::move(ccw_poly);
        }
    }
    b.sep_enclosed = winding_number(b.polygon, sep) != 0;
    return b;
}

RoaBoundary trace_stable_manifold(BandwidthOrdering o, const SystemParams& p,
                                  const TraceOptions& opts_in) {
    const bool tvc = ordering_uses_tvc(o);
    const EquilibriumPair pair =
        is_dvc_slow(o) ? find_dvc_equilibria(p, tvc) : find_pll_equilibria(p, tvc);
    if (!pair.exists)
        throw NoEquilibriumError("no slow-plane equilibrium pair; the power "
                                 "balance has no solution at these parameters");

    const SystemParams pc = p;
    PlaneRhs rhs = [o, pc](const ReducedState& s) { return rhs_reduced(o, s, pc); };

    TraceOptions opts = opts_in;
    if (!opts.box) {
        const double span = dist(pair.sep, pair.uep);
        const double half = opts.box_scale * span;
        PlaneBox box{0.5 * (pair.sep.c0 + pair.uep.c0) - half,
                     0.5 * (pair.sep.c0 + pair.uep.c0) + half,
                     0.5 * (pair.sep.c1 + pair.uep.c1) - half,
                     0.5 * (pair.sep.c1 + pair.uep.c1) + half};
        if (is_dvc_slow(o)) {
            // The locked-PLL maps exist only for |X_g i_d| < U_g; keep a strip
            // inside so branches exit the box before the field's domain ends.
            const double edge = p.u_g / p.x_g * (1 - 1e-3);
            box.hi0 = std::min(box.hi0, edge);
            box.lo0 = std::max(box.lo0, -edge);
        }
        opts.box = box;
    }
    if (!opts.roam) {
        // The manifold wraps over the basin well outside the reported window
        // before it settles into an exit direction; give it room so the curve
        // re-enters the window instead of stopping at the first edge.
        PlaneBox roam = *opts.box;
        const double mid0 = 0.5 * (roam.lo0 + roam.hi0);
        const double mid1 = 0.5 * (roam.lo1 + roam.hi1);
        roam.lo0 = mid0 - 4 * (mid0 - roam.lo0);
        roam.hi0 = mid0 + 4 * (roam.hi0 - mid0);
        roam.lo1 = mid1 - 4 * (mid1 - roam.lo1);
        roam.hi1 = mid1 + 4 * (roam.hi1 - mid1);
        if (is_dvc_slow(o)) {
            const double edge = p.u_g / p.x_g * (1 - 1e-3);
            roam.hi0 = std::min(roam.hi0, edge);
            roam.lo0 = std::max(roam.lo0, -edge);
        }
        opts.roam = roam;
    }
    return trace_stable_manifold(rhs, pair.sep, pair.uep, opts);
}

PlaneRhs pll_alone_rhs(const SystemParams& p, double i_d) {
    const double denom = 1 - p.k_p_pll * p.l_g_over_ws * i_d;
    if (std::abs(denom) < 1e-9)
        throw SingularityError("PLL algebraic loop is singular at this current");
    const SystemParams pc = p;
    return [pc, i_d, denom](const ReducedState& s) {
        const double a = pc.x_g * i_d - pc.u_g * std::sin(s.c0);
        const double v_tq = (a + s.c1 * i_d * pc.l_g_over_ws) / denom;
        return ReducedState{(pc.k_p_pll * a + s.c1) / denom, pc.k_i_pll * v_tq};
    };
}

RoaBoundary pll_alone_roa(const SystemParams& p, double i_d,
                          const TraceOptions& opts) {
    const double arg = p.x_g * i_d / p.u_g;
    if (!(std::abs(arg) < 1))
        throw NoEquilibriumError("standalone PLL locks only for |X_g i_d| < U_g");
    const double d = std::asin(arg);
    return trace_stable_manifold(pll_alone_rhs(p, i_d), {d, 0}, {kPi - d, 0}, opts);
}

CompositeRoa composite_roa(const SystemParams& p, const TraceOptions& opts) {
    BandwidthSpec bw;
    bw.omega_pll = p.omega_pll;
    bw.omega_dvc = p.omega_dvc;
    if (p.omega_tvc > 0) bw.omega_tvc = p.omega_tvc;

    CompositeRoa comp;
    comp.cls = classify_ordering(bw);
    comp.slow = trace_stable_manifold(comp.cls.ordering, p, opts);

    if (is_dvc_slow(comp.cls.ordering)) {
        // Largest current for which every locked-PLL validity clause holds.
        double lo = 0, hi = p.u_g / p.x_g * (1 - 1e-12);
        if (pll_fast_validity(hi, p).ok) {
            comp.fast_limits.push_back({0, hi, "pll-fast-current-bound"});
        } else {
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (pll_fast_validity(mid, p).ok ? lo : hi) = mid;
            }
            comp.fast_limits.push_back({0, lo, "pll-fast-current-bound"});
        }
    } else {
        comp.fast_limits.push_back({0, 0.5 * kPi, "dvc-fast-angle-bound"});
        // Angle at which the power-balance current reaches the limiter rail.
        const bool tvc = ordering_uses_tvc(comp.cls.ordering);
        auto excess = [&](double delta) {
            const double iq = tvc ? alg_tvc(delta, p) : p.i_q_fixed;
            return p.p_in + iq * p.u_g * std::sin(delta) -
                   p.limits.i_limit * p.u_g * std::cos(delta);
        };
        double lo = comp.slow.sep.c0, hi = 0.5 * kPi - 1e-9;
        if (excess(lo) < 0 && excess(hi) > 0) {
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (excess(mid) < 0 ? lo : hi) = mid;
            }
            comp.fast_limits.push_back({0, 0.5 * (lo + hi), "current-limit-reach"});
        }
    }
    return comp;
}

RoaVerdict in_roa(const RoaBoundary& b, const ReducedState& pt) {
    const std::vector<ReducedState> c = b.curve();
    for (std::size_t i = 0; i + 1 < c.size(); ++i)
        if (segment_distance(pt, c[i], c[i + 1]) <= b.band)
            return RoaVerdict::Indeterminate;
    return winding_number(b.polygon, pt) != 0 ? RoaVerdict::Inside
                                              : RoaVerdict::Outside;
}

ReducedState RoaGrid::center(int i0, int i1) const {
    return {spec.box.lo0 + (i0 + 0.5) * spec.box.width0() / spec.n0,
            spec.box.lo1 + (i1 + 0.5) * spec.box.width1() / spec.n1};
}

RoaGrid brute_force_roa(const PlaneRhs& rhs, const ReducedState& sep,
                        const GridSpec& spec, double slow_rate,
                        const BruteForceOptions& opts) {
    if (spec.n0 <= 0 || spec.n1 <= 0)
        throw std::invalid_argument("brute_force_roa: empty grid");

    double horizon = opts.horizon;
    if (!(horizon > 0)) {
        // Swing allowance plus the time the slowest SEP eigenvalue needs to
        // pull the whole grid diagonal inside the ball. The least-damped mode
        // can sit far below the loop bandwidth, so the bandwidth alone is not
        // a usable settling rate.
        const Jac2 j = jacobian(rhs, sep, std::max(spec.box.width0(), spec.box.width1()));
        const double disc = j.trace() * j.trace() - 4 * j.det();
        const double re_slow =
            disc >= 0 ? 0.5 * (j.trace() + std::sqrt(disc)) : 0.5 * j.trace();
        const double swing = 10.0 / std::max(slow_rate, 1e-12);
        if (re_slow < 0) {
            const double diag = std::hypot(spec.box.width0(), spec.box.width1());
            horizon = swing +
                      1.5 * std::log(std::max(diag / opts.ball_radius, 10.0)) / (-re_slow);
        } else {
            horizon = 8 * swing;
        }
    }

    RoaGrid grid;
    grid.spec = spec;
    grid.cells.assign(std::size_t(spec.n0) * spec.n1, CellOutcome::Indeterminate);

    // Escape test: one full box extent beyond the grid on every side.
    PlaneBox escape = spec.box;
    escape.lo0 -= spec.box.width0();
    escape.hi0 += spec.box.width0();
    escape.lo1 -= spec.box.width1();
    escape.hi1 += spec.box.width1();

    const double tail_start = horizon * (1 - opts.tail_fraction);

    run_parallel(grid.cells.size(), resolve_workers(static_cast<int>(opts.workers)),
                 [&](std::size_t idx) {
        const int i0 = static_cast<int>(idx) % spec.n0;
        const int i1 = static_cast<int>(idx) / spec.n0;
        const ReducedState x0 = grid.center(i0, i1);

        RhsFn f = [&rhs](double, const StateVec& x, StateVec& dx) {
            const ReducedState d = rhs({x[0], x[1]});
            dx = {d.c0, d.c1, 0, 0, 0};
        };
        StopFn stop = [&escape](double, const StateVec& x) {
            return !escape.contains({x[0], x[1]});
        };

        Trajectory tr;
        try {
            tr = integrate(2, f, {x0.c0, x0.c1, 0, 0, 0}, 0, horizon, opts.integ,
                           {}, nullptr, stop);
        } catch (const std::exception&) {
            grid.cells[idx] = CellOutcome::Diverged;  // field undefined at the cell
            return;
        }

        if (tr.truncated) {
            // Left the escape window or ground to a halt at a domain edge.
            grid.cells[idx] = CellOutcome::Diverged;
            return;
        }
        bool inside_tail = true;
        bool saw_tail = false;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (tr.t[i] < tail_start) continue;
            saw_tail = true;
            if (std::abs(tr.states[i][0] - sep.c0) > opts.ball_radius ||
                std::abs(tr.states[i][1] - sep.c1) > opts.ball_radius) {
                inside_tail = false;
                break;
            }
        }
        grid.cells[idx] = saw_tail && inside_tail ? CellOutcome::Converged
                                                  : CellOutcome::Indeterminate;
    });
    return grid;
}

RoaGrid brute_force_roa(BandwidthOrdering o, const SystemParams& p,
                        const GridSpec& spec, const BruteForceOptions& opts) {
    const bool tvc = ordering_uses_tvc(o);
    const EquilibriumPair pair =
        is_dvc_slow(o) ? find_dvc_equilibria(p, tvc) : find_pll_equilibria(p, tvc);
    if (!pair.exists)
        throw NoEquilibriumError("no slow-plane equilibrium pair; nothing to "
                                 "converge to");
    const SystemParams pc = p;
    PlaneRhs rhs = [o, pc](const ReducedState& s) { return rhs_reduced(o, s, pc); };
    const double slow_rate = is_dvc_slow(o) ? p.omega_dvc : p.omega_pll;
    return brute_force_roa(rhs, pair.sep, spec, slow_rate, opts);
}

AgreementStats agreement(const RoaBoundary& b, const RoaGrid& grid) {
    AgreementStats st;
    st.total = grid.cells.size();
    for (int i1 = 0; i1 < grid.spec.n1; ++i1) {
        for (int i0 = 0; i0 < grid.spec.n0; ++i0) {
            const CellOutcome oracle = grid.at(i0, i1);
            if (oracle == CellOutcome::Indeterminate) continue;
            const RoaVerdict v = in_roa(b, grid.center(i0, i1));
            if (v == RoaVerdict::Indeterminate) continue;
            ++st.mutually_determinate;
            const bool agree = (oracle == CellOutcome::Converged &&
                                v == RoaVerdict::Inside) ||
                               (oracle == CellOutcome::Diverged &&
                                v == RoaVerdict::Outside);
            if (agree) ++st.agreeing;
        }
    }
    st.fraction = st.mutually_determinate
                      ? double(st.agreeing) / double(st.mutually_determinate)
                      : 1.0;
    return st;
}

}  // namespace gflstab
