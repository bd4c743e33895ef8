#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gflstab/equilibria.hpp"
#include "gflstab/integrate.hpp"
#include "gflstab/reduced.hpp"

namespace gflstab {

struct RoaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Axis-aligned window in the slow plane.
struct PlaneBox {
    double lo0 = 0, hi0 = 0, lo1 = 0, hi1 = 0;
    bool contains(const ReducedState& s) const {
        return s.c0 >= lo0 && s.c0 <= hi0 && s.c1 >= lo1 && s.c1 <= hi1;
    }
    double width0() const { return hi0 - lo0; }
    double width1() const { return hi1 - lo1; }
};

struct TraceOptions {
    double eta = 1e-5;       // seed offset along the stable eigenvector,
                             // relative to the sep-uep distance
    double arc_cap = 50;     // arc-length budget, in units of |sep - uep|
    double box_scale = 3;    // default box half-width in units of the span
    std::optional<PlaneBox> box;  // overrides the derived box
    // Stop region for the branches; defaults to `box`. A wider window lets the
    // curve wrap around the basin and re-enter the reported box instead of
    // being cut at the first edge crossing.
    std::optional<PlaneBox> roam;
    double trace_tol = 1e-4;      // half the indeterminate band width
    IntegratorOptions integ{1e-10, 1e-12, 0, 0, 50'000'000, false};
};

/// Stable manifold of the slow-plane saddle, traced backward in time as two
/// branches seeded on either side of the UEP. Points run from the UEP
/// outward; ends that left the roam window are clipped to its perimeter.
struct RoaBoundary {
    ReducedState sep;
    ReducedState uep;
    std::vector<ReducedState> branch_a;  // seeded at uep + eta*v_s
    std::vector<ReducedState> branch_b;  // seeded at uep - eta*v_s
    bool exited_box_a = false;           // false means the arc/time budget hit first
    bool exited_box_b = false;
    PlaneBox box;        // reporting window (grids, plots, comparisons)
    PlaneBox roam;       // stop region the branch ends are clipped to
    double band = 2e-4;  // indeterminate half-band around the curve
    bool sep_enclosed = false;
    // Closed winding polygon: the curve plus a roam-perimeter walk on the side
    // that encloses the SEP (closing edges are implicit).
    std::vector<ReducedState> polygon;

    /// Boundary polyline end-to-end: branch_a reversed, the UEP, branch_b.
    std::vector<ReducedState> curve() const;
};

enum class RoaVerdict { Inside, Outside, Indeterminate };
const char* roa_verdict_name(RoaVerdict v);

/// Winding test against the closed polygon formed by the two branches and,
/// when both left the roam window, the perimeter walk on whichever side
/// encloses the SEP. Points within `band` of the traced curve are
/// Indeterminate.
RoaVerdict in_roa(const RoaBoundary& b, const ReducedState& pt);

/// Traces the boundary for a built-in reduced ordering. Throws
/// NoEquilibriumError when the plane has no equilibrium pair and RoaError
/// when the UEP fails the saddle check.
RoaBoundary trace_stable_manifold(BandwidthOrdering o, const SystemParams& p,
                                  const TraceOptions& opts = {});

/// Same machinery for an arbitrary planar field with a known saddle.
RoaBoundary trace_stable_manifold(const PlaneRhs& rhs, const ReducedState& sep,
                                  const ReducedState& uep,
                                  const TraceOptions& opts = {});

/// Standalone PLL plane (delta, x_int_pll) with the d-axis current held
/// fixed: SEP at (asin(X_g i_d / U_g), 0), UEP at (pi - asin, 0).
RoaBoundary pll_alone_roa(const SystemParams& p, double i_d,
                          const TraceOptions& opts = {});

/// The standalone PLL field itself, usable with the generic tracer and the
/// brute-force oracle. Throws SingularityError when the algebraic loop is
/// degenerate at this current.
PlaneRhs pll_alone_rhs(const SystemParams& p, double i_d);

/// Fast-subsystem validity frontier drawn into the slow plane: a straight
/// line `coord[axis] = value` beyond which the eliminated loops are not
/// trustworthy.
struct ValidityLine {
    int axis = 0;
    double value = 0;
    std::string label;
};

struct CompositeRoa {
    OrderingClass cls;
    RoaBoundary slow;
    std::vector<ValidityLine> fast_limits;
};

/// Slow-manifold boundary plus the fast validity lines for the ordering the
/// bandwidth spec implies. cls.advisory is set when the separation ratio is
/// below the trust threshold.
CompositeRoa composite_roa(const SystemParams& p, const TraceOptions& opts = {});

// -- brute-force oracle --------------------------------------------------------

struct GridSpec {
    PlaneBox box;
    int n0 = 100;
    int n1 = 100;
};

enum class CellOutcome : unsigned char { Converged, Diverged, Indeterminate };
const char* cell_outcome_name(CellOutcome c);

struct RoaGrid {
    GridSpec spec;
    std::vector<CellOutcome> cells;  // row-major, index i1 * n0 + i0
    ReducedState center(int i0, int i1) const;
    CellOutcome at(int i0, int i1) const { return cells[std::size_t(i1) * spec.n0 + i0]; }
};

struct BruteForceOptions {
    double horizon = 0;       // 0 derives one from the SEP's slowest
                              // eigenvalue and the grid diagonal
    double ball_radius = 1e-3;
    double tail_fraction = 0.1;
    unsigned workers = 0;     // 0 resolves via flag/env/hardware
    IntegratorOptions integ{1e-8, 1e-10, 0, 0, 50'000'000, false};
};

/// Integrates every cell center forward and classifies it: Converged when the
/// run completes with the trailing window inside the ball around the SEP,
/// Diverged when the field's domain is left or the state escapes far outside
/// the grid, Indeterminate otherwise.
RoaGrid brute_force_roa(BandwidthOrdering o, const SystemParams& p,
                        const GridSpec& spec, const BruteForceOptions& opts = {});

RoaGrid brute_force_roa(const PlaneRhs& rhs, const ReducedState& sep,
                        const GridSpec& spec, double slow_rate,
                        const BruteForceOptions& opts = {});

struct AgreementStats {
    std::size_t total = 0;
    std::size_t mutually_determinate = 0;
    std::size_t agreeing = 0;
    double fraction = 0;  // agreeing / mutually_determinate
};

/// Cell-by-cell comparison of the traced boundary against the brute-force
/// grid, over cells where both sides are determinate.
AgreementStats agreement(const RoaBoundary& b, const RoaGrid& grid);

}  // namespace gflstab
