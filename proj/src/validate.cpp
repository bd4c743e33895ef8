#include "gflstab/validate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gflstab {

namespace {

double fast_block_rate(BandwidthOrdering o, const SystemParams& p) {
    double r = is_dvc_slow(o) ? p.omega_pll : p.omega_dvc;
    if (ordering_uses_tvc(o) && p.omega_tvc > 0) r = std::min(r, p.omega_tvc);
    return r;
}

ReducedState slow_of_full(BandwidthOrdering o, const StateVec& x) {
    return project_slow(o, FullState::from_array(x));
}

/// Max-norm slow-coordinate deviation between the full and reduced runs,
/// uniformly sampled with a settling margin excluded after t = 0 and after
/// every event.
double layer_excluded_deviation(BandwidthOrdering o, const Scenario& sc,
                                const ValidateOptions& opts) {
    SimOptions so = opts.sim;
    so.integ.store_dense = true;
    so.early_stop_unbounded = false;
    const SimResult full = simulate_scenario(ModelChoice::full_model(), sc, so);
    const SimResult red = simulate_scenario(ModelChoice::reduced_model(o), sc, so);

    const double t_end = std::min({opts.window_cap, sc.horizon, full.traj.t.back(),
                                   red.traj.t.back()});
    const double skip = opts.layer_skip / fast_block_rate(o, sc.params);
    std::vector<double> layer_starts{0.0};
    for (const Event& e : sc.events) layer_starts.push_back(e.time);

    double dev = 0;
    for (int i = 0; i <= opts.samples; ++i) {
        const double t = t_end * i / opts.samples;
        bool in_layer = false;
        for (double s : layer_starts)
            if (t >= s && t < s + skip) {
                in_layer = true;
                break;
            }
        if (in_layer) continue;
        const ReducedState sf = slow_of_full(o, full.traj.evaluate(t));
        const StateVec xr = red.traj.evaluate(t);
        dev = std::max({dev, std::abs(sf.c0 - xr[0]), std::abs(sf.c1 - xr[1])});
    }
    return dev;
}

/// Same scenario with the fast block at double bandwidth. This halves the
/// separation parameter while leaving the slow subsystem (and therefore the
/// reduced baseline trajectory) untouched.
Scenario halved_separation(const Scenario& sc, BandwidthOrdering o) {
    Scenario s = sc;
    BandwidthSpec bw;
    bw.omega_pll = s.params.omega_pll;
    bw.omega_dvc = s.params.omega_dvc;
    if (s.params.omega_tvc > 0) bw.omega_tvc = s.params.omega_tvc;
    if (is_dvc_slow(o))
        bw.omega_pll *= 2.0;
    else
        bw.omega_dvc *= 2.0;
    if (ordering_uses_tvc(o) && bw.omega_tvc) *bw.omega_tvc *= 2.0;
    s.params.set_bandwidths(bw);
    return s;
}

struct FirstWindow {
    double raw = 0;
    double corrected = 0;
    double end = 0;
};

/// Deviation over the initial settling window, with and without the
/// boundary-layer initial-value correction, under the parameters in force
/// right after the t = 0 events.
FirstWindow first_window_errors(BandwidthOrdering o, const Scenario& sc,
                                const ValidateOptions& opts) {
    SimOptions so = opts.sim;
    so.integ.store_dense = true;
    so.early_stop_unbounded = false;
    const SimResult full = simulate_scenario(ModelChoice::full_model(), sc, so);

    FirstWindow fw;
    fw.end = std::min(opts.first_window, sc.horizon);
    for (const Event& e : sc.events)
        if (e.time > 0) {
            fw.end = std::min(fw.end, e.time);
            break;
        }

    SystemParams pf = sc.params;
    const double u_nom = sc.params.u_g;
    for (const Event& e : sc.events) {
        if (e.time > 0) break;
        FullState dummy;
        apply_event(e, dummy, pf, sc.sag_convention, u_nom);
    }

    const FullState x0 = FullState::from_array(full.traj.states.front());
    const ReducedState s0 = project_slow(o, x0);
    const BoundaryLayerCorrection corr = boundary_layer_correction(o, x0, pf);

    auto run_reduced = [&](const ReducedState& ic) {
        RhsFn f = [&](double, const StateVec& x, StateVec& dx) {
            const ReducedState d = rhs_reduced(o, {x[0], x[1]}, pf);
            dx = {d.c0, d.c1, 0, 0, 0};
        };
        IntegratorOptions io = opts.sim.integ;
        io.store_dense = true;
        return integrate(2, f, {ic.c0, ic.c1, 0, 0, 0}, 0, fw.end, io, {}, nullptr,
                         nullptr);
    };
    const Trajectory plain = run_reduced(s0);
    const Trajectory shifted =
        run_reduced({s0.c0 + corr.offset0, s0.c1 + corr.offset1});

    for (int i = 0; i <= opts.samples; ++i) {
        const double t = fw.end * i / opts.samples;
        const ReducedState sf = slow_of_full(o, full.traj.evaluate(t));
        const StateVec xp = plain.evaluate(t);
        fw.raw = std::max({fw.raw, std::abs(xp[0] - sf.c0), std::abs(xp[1] - sf.c1)});
        const StateVec xs = shifted.evaluate(t);
        fw.corrected = std::max({fw.corrected,
                                 std::abs(xs[0] - corr.remaining0(t) - sf.c0),
                                 std::abs(xs[1] - corr.remaining1(t) - sf.c1)});
    }
    return fw;
}

}  // namespace

ReductionReport validate_reduction(const Scenario& sc, const ValidateOptions& opts) {
    sc.validate();
    BandwidthSpec bw;
    bw.omega_pll = sc.params.omega_pll;
    bw.omega_dvc = sc.params.omega_dvc;
    if (sc.params.omega_tvc > 0) bw.omega_tvc = sc.params.omega_tvc;
    const OrderingClass cls = classify_ordering(bw);

    ReductionReport r;
    r.ordering = cls.ordering;
    r.separation_ratio = cls.separation_ratio;
    r.advisory = cls.advisory;
    r.err_base = layer_excluded_deviation(cls.ordering, sc, opts);
    r.err_half =
        layer_excluded_deviation(cls.ordering, halved_separation(sc, cls.ordering), opts);
    r.ratio = r.err_base > 0 ? r.err_half / r.err_base : 0;

    const FirstWindow fw = first_window_errors(cls.ordering, sc, opts);
    r.first_window_raw = fw.raw;
    r.first_window_corrected = fw.corrected;
    r.window_end = fw.end;
    return r;
}

}  // namespace gflstab
