#include "gflstab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gflstab {

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Stable: return "Stable";
        case Outcome::Unstable: return "Unstable";
        case Outcome::Undetermined: return "Undetermined";
    }
    return "?";
}

const char* reason_name(VerdictReason r) {
    switch (r) {
        case VerdictReason::ConvergedToSep: return "converged-to-SEP";
        case VerdictReason::CurrentLimitDiverged: return "current-limit-hit-and-diverged";
        case VerdictReason::DcClampPersistent: return "dc-clamp-engaged-persistently";
        case VerdictReason::DeltaUnbounded: return "delta-unbounded";
        case VerdictReason::HorizonExhausted: return "horizon-exhausted";
    }
    return "?";
}

std::string StabilityVerdict::describe() const {
    std::string s = std::string(outcome_name(outcome)) + " (" + reason_name(reason) + ")";
    if (slip_count > 0) s += " slips=" + std::to_string(slip_count);
    return s;
}

namespace {

constexpr double kWrapTwoPi = 2 * kPi;

double wrap_to_pi(double a) {
    a = std::fmod(a + kPi, kWrapTwoPi);
    if (a < 0) a += kWrapTwoPi;
    return a - kPi;
}

// Lift that stays total at railed/invalid fast coordinates so trajectory rows
// and CSV diagnostics exist even where the fast map has no solution.
FullState lift_or_fallback(BandwidthOrdering o, const ReducedState& rs,
                           const SystemParams& p) {
    try {
        return lift_slow(o, rs, p);
    } catch (const DomainError&) {
        FullState f;
        if (is_dvc_slow(o)) {
            f.i_d = rs.c0;
            f.dv2 = rs.c1;
            f.delta = std::copysign(0.5 * kPi, p.x_g * rs.c0);
            f.x_int_pll = 0;
            f.i_q = ordering_uses_tvc(o) ? alg_tvc(f.delta, p) : p.i_q_fixed;
        } else {
            f.delta = rs.c0;
            f.x_int_pll = rs.c1;
            f.i_q = ordering_uses_tvc(o) ? alg_tvc(rs.c0, p) : p.i_q_fixed;
            f.i_d = std::copysign(p.limits.i_limit, p.p_in);
            f.dv2 = 0;
        }
        return f;
    }
}

struct CoordLayout {
    std::vector<int> compare;  // full-layout indices entering the ball test
    bool delta_is_state = false;
};

CoordLayout layout_for(const ModelChoice& model) {
    CoordLayout l;
    if (!model.reduced) {
        l.compare = {0, 1, 2, 3, 4};
        l.delta_is_state = true;
    } else if (is_dvc_slow(model.ordering)) {
        l.compare = {2, 3};
    } else {
        l.compare = {0, 1};
        l.delta_is_state = true;
    }
    return l;
}

// Replays parameter-affecting events up to each row so per-row auxiliary
// outputs use the parameter set active at that time.
class ParamTimeline {
  public:
    ParamTimeline(const Scenario& sc) : sc_(sc), params_(sc.params),
                                        u_nominal_(sc.params.u_g) {}

    const SystemParams& at(double t) {
        while (next_ < sc_.events.size() && sc_.events[next_].time <= t) {
            FullState dummy;
            apply_event(sc_.events[next_], dummy, params_, sc_.sag_convention,
                        u_nominal_);
            ++next_;
        }
        return params_;
    }

  private:
    const Scenario& sc_;
    SystemParams params_;
    double u_nominal_;
    std::size_t next_ = 0;
};

}  // namespace

StabilityVerdict classify_stability(const Trajectory& traj,
                                    const std::optional<StateVec>& sep,
                                    const SystemParams& final_params,
                                    const ModelChoice& model, double horizon,
                                    const SimOptions& opts) {
    StabilityVerdict v;
    if (traj.size() == 0) return v;

    const CoordLayout layout = layout_for(model);
    const double t0 = traj.t.front();
    const double t_end = traj.t.back();
    const double tail_span = opts.tail_fraction * (horizon - t0);
    const double tail_start = t_end - tail_span;
    std::size_t tail_begin = traj.size();
    for (std::size_t i = 0; i < traj.size(); ++i)
        if (traj.t[i] >= tail_start - 1e-12) {
            tail_begin = i;
            break;
        }

    // Angle slips relative to the SEP, counted anywhere along the run.
    if (layout.delta_is_state && sep) {
        double max_dev = 0;
        for (const StateVec& s : traj.states)
            max_dev = std::max(max_dev, std::abs(s[0] - (*sep)[0]));
        v.slip_count = static_cast<int>(max_dev / kWrapTwoPi);
    }

    const bool complete = !traj.truncated && t_end >= horizon - 1e-9;

    if (complete && sep && tail_begin < traj.size()) {
        bool inside = true;
        for (std::size_t i = tail_begin; i < traj.size() && inside; ++i) {
            for (int c : layout.compare) {
                const double d = c == 0 && layout.delta_is_state
                                     ? wrap_to_pi(traj.states[i][c] - (*sep)[c])
                                     : traj.states[i][c] - (*sep)[c];
                if (std::abs(d) > opts.ball_radius) {
                    inside = false;
                    break;
                }
            }
        }
        if (inside) {
            v.outcome = Outcome::Stable;
            v.reason = VerdictReason::ConvergedToSep;
            return v;
        }
    }

    if (layout.delta_is_state) {
        for (const StateVec& s : traj.states)
            if (std::abs(s[0]) > opts.delta_unbound) {
                v.outcome = Outcome::Unstable;
                v.reason = VerdictReason::DeltaUnbounded;
                return v;
            }
    }

    // Divergence signatures are only trusted in the tail so that transient
    // limiter engagement during the fault window is not misread.
    std::size_t chopper_rows = 0, tail_rows = 0;
    for (std::size_t i = tail_begin; i < traj.size(); ++i) {
        ++tail_rows;
        if (traj.flags[i].chopper) ++chopper_rows;
        if (traj.flags[i].i_d_limited) {
            double didt = 0;
            bool domain_exit = false;
            try {
                if (!model.reduced) {
                    FullState fs = FullState::from_array(traj.states[i]);
                    const FullState d =
                        rhs_full(fs, final_params, final_params.omega_tvc > 0);
                    didt = d.i_d;
                } else {
                    const ReducedState rs{traj.states[i][2], traj.states[i][3]};
                    didt = rhs_reduced(model.ordering, rs, final_params).c0;
                }
            } catch (const std::exception&) {
                domain_exit = true;  // fast map gone at the rail: divergent
            }
            const double i_d = model.reduced && !is_dvc_slow(model.ordering)
                                   ? 0.0
                                   : traj.states[i][2];
            const bool outward = (i_d > 0 && didt > 0) || (i_d < 0 && didt < 0);
            if (domain_exit || outward) {
                v.outcome = Outcome::Unstable;
                v.reason = VerdictReason::CurrentLimitDiverged;
                return v;
            }
        }
    }
    if (tail_rows > 0 && 2 * chopper_rows > tail_rows) {
        v.outcome = Outcome::Unstable;
        v.reason = VerdictReason::DcClampPersistent;
        return v;
    }

    v.outcome = Outcome::Undetermined;
    v.reason = VerdictReason::HorizonExhausted;
    return v;
}

SimResult simulate_scenario(const ModelChoice& model, const Scenario& scenario,
                            const SimOptions& opts_in) {
    scenario.validate();
    SimOptions opts = opts_in;
    if (opts.integ.h_max <= 0) opts.integ.h_max = 1e-3;

    // Reduced charts cannot express some events; reject up front.
    if (model.reduced) {
        for (const Event& ev : scenario.events) {
            if (std::holds_alternative<TvcToggle>(ev.kind))
                throw std::invalid_argument(
                    "simulate_scenario: TVC toggles change the reduced chart and are "
                    "only supported on the full model");
            if (std::holds_alternative<PhaseJump>(ev.kind) && is_dvc_slow(model.ordering))
                throw std::invalid_argument(
                    "simulate_scenario: phase jump needs the angle as a state; the "
                    "DVC-slow chart eliminates it");
        }
    }

    SystemParams params = scenario.params;  // mutated by events during the run
    const double u_nominal = params.u_g;
    const bool pre_tvc = params.omega_tvc > 0;

    FullState x0_full;
    if (scenario.initial_state) {
        x0_full = *scenario.initial_state;
    } else {
        x0_full = full_equilibrium(params, pre_tvc);
    }

    SimResult result;
    result.model = model;

    // Event schedule shared by both branches; `apply` mutates the captured
    // params (and for phase jumps, the state vector).
    auto make_schedule = [&](bool reduced) {
        std::vector<ScheduledEvent> sched;
        for (const Event& ev : scenario.events) {
            ScheduledEvent se;
            se.time = ev.time;
            se.label = ev.label();
            const Event ev_copy = ev;
            const SagConvention conv = scenario.sag_convention;
            SystemParams* pp = &params;
            if (!reduced) {
                se.apply = [ev_copy, conv, u_nominal, pp](StateVec& x) {
                    FullState fs = FullState::from_array(x);
                    apply_event(ev_copy, fs, *pp, conv, u_nominal);
                    x = fs.to_array();
                };
            } else {
                const bool pll_slow = !is_dvc_slow(model.ordering);
                se.apply = [ev_copy, conv, u_nominal, pp, pll_slow](StateVec& x) {
                    if (const auto* pj = std::get_if<PhaseJump>(&ev_copy.kind)) {
                        if (pll_slow) x[0] += pj->dphi;
                        return;
                    }
                    FullState dummy;
                    apply_event(ev_copy, dummy, *pp, conv, u_nominal);
                };
            }
            sched.push_back(std::move(se));
        }
        return sched;
    };

    if (!model.reduced) {
        RhsFn rhs = [&params](double, const StateVec& x, StateVec& dx) {
            FullState fs = FullState::from_array(x);
            const FullState d = rhs_full(fs, params, params.omega_tvc > 0);
            dx = d.to_array();
        };
        ClampFn clamp = [&params](double, StateVec& x) {
            FullState fs = FullState::from_array(x);
            const ClampResult cr = apply_limits(fs, params);
            x = cr.state.to_array();
            return cr.flags;
        };
        StopFn stop;
        if (opts.early_stop_unbounded) {
            const double bound = opts.delta_unbound;
            stop = [bound](double, const StateVec& x) {
                return std::abs(x[0]) > bound;
            };
        }
        result.traj = integrate(5, rhs, x0_full.to_array(), 0, scenario.horizon,
                                opts.integ, make_schedule(false), clamp, stop);
    } else {
        const BandwidthOrdering o = model.ordering;
        const ReducedState r0 = project_slow(o, x0_full);
        RhsFn rhs = [&params, o](double, const StateVec& x, StateVec& dx) {
            const ReducedState d = rhs_reduced(o, ReducedState{x[0], x[1]}, params);
            dx = {d.c0, d.c1, 0, 0, 0};
        };
        ClampFn clamp;
        if (is_dvc_slow(o)) {
            clamp = [&params](double, StateVec& x) {
                SaturationFlags fl{};
                const double il = params.limits.i_limit;
                if (std::abs(x[0]) > il) {
                    x[0] = std::copysign(il, x[0]);
                    fl.i_d_limited = true;
                }
                const double lo = params.limits.v_dc_min * params.limits.v_dc_min -
                                  params.v_dc_ref * params.v_dc_ref;
                const double hi = params.limits.v_dc_max * params.limits.v_dc_max -
                                  params.v_dc_ref * params.v_dc_ref;
                if (x[1] < lo) {
                    x[1] = lo;
                    fl.chopper = true;
                } else if (x[1] > hi) {
                    x[1] = hi;
                    fl.chopper = true;
                }
                return fl;
            };
        }
        StopFn stop;
        if (!is_dvc_slow(o) && opts.early_stop_unbounded) {
            const double bound = opts.delta_unbound;
            stop = [bound](double, const StateVec& x) {
                return std::abs(x[0]) > bound;
            };
        }
        Trajectory tr = integrate(2, rhs, {r0.c0, r0.c1, 0, 0, 0}, 0,
                                  scenario.horizon, opts.integ, make_schedule(true),
                                  clamp, stop);

        // Rewrite rows into full layout with lifted fast coordinates.
        ParamTimeline lift_timeline(scenario);
        Trajectory full_rows = tr;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const SystemParams& pt = lift_timeline.at(tr.t[i]);
            const FullState fs =
                lift_or_fallback(o, ReducedState{tr.states[i][0], tr.states[i][1]}, pt);
            full_rows.states[i] = fs.to_array();
        }
        result.traj = std::move(full_rows);
    }

    result.final_params = params;

    // Per-row auxiliary outputs under the parameters active at each time.
    {
        ParamTimeline aux_timeline(scenario);
        const std::size_t n = result.traj.size();
        result.traj.aux_p.resize(n);
        result.traj.aux_vtd.resize(n);
        result.traj.aux_vtq.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const SystemParams& pt = aux_timeline.at(result.traj.t[i]);
            RhsAux aux{};
            try {
                FullState fs = FullState::from_array(result.traj.states[i]);
                (void)rhs_full(fs, pt, pt.omega_tvc > 0, &aux);
            } catch (const std::exception&) {
                aux.p = aux.v_td = aux.v_tq = std::numeric_limits<double>::quiet_NaN();
            }
            result.traj.aux_p[i] = aux.p;
            result.traj.aux_vtd[i] = aux.v_td;
            result.traj.aux_vtq[i] = aux.v_tq;
        }
    }

    // SEP of the post-event system. With the TVC off the integrator freezes
    // i_q wherever it last was, so the classification equilibrium must use
    // that frozen value rather than the nominal fixed current.
    SystemParams sep_params = params;
    const bool final_tvc = params.omega_tvc > 0;
    if (!model.reduced && !final_tvc && result.traj.size() > 0)
        sep_params.i_q_fixed = result.traj.states.back()[4];

    std::optional<StateVec> sep;
    try {
        if (!model.reduced) {
            sep = full_equilibrium(sep_params, final_tvc).to_array();
        } else {
            const bool tvc = ordering_uses_tvc(model.ordering);
            const EquilibriumPair pair = is_dvc_slow(model.ordering)
                                             ? find_dvc_equilibria(sep_params, tvc)
                                             : find_pll_equilibria(sep_params, tvc);
            if (pair.exists) {
                const FullState lifted = lift_or_fallback(model.ordering, pair.sep,
                                                          sep_params);
                sep = lifted.to_array();
            }
        }
    } catch (const std::exception&) {
        sep.reset();
    }
    result.sep = sep;

    result.verdict = classify_stability(result.traj, sep, params, model,
                                        scenario.horizon, opts);
    return result;
}

CctResult cct_search(const ModelChoice& model, const Scenario& templ, double t_lo,
                     double t_hi, double resolution, const SimOptions& opts,
                     double settle_time) {
    if (!(resolution > 0)) throw std::invalid_argument("cct_search: resolution <= 0");
    if (!(t_hi > t_lo)) throw std::invalid_argument("cct_search: t_hi <= t_lo");

    CctResult res;
    res.resolution = resolution;

    const long n = std::max<long>(
        1, static_cast<long>(std::ceil((t_hi - t_lo) / resolution - 1e-9)));
    auto grid_time = [&](long k) { return k >= n ? t_hi : t_lo + k * resolution; };

    Scenario base = templ;
    base.horizon = std::max(templ.horizon, t_hi + settle_time);

    auto probe = [&](long k) {
        Scenario s = with_clear_time(base, grid_time(k));
        s.horizon = grid_time(k) + settle_time;
        const SimResult r = simulate_scenario(model, s, opts);
        CctTracePoint pt;
        pt.clear_time = grid_time(k);
        pt.verdict = r.verdict;
        pt.accepted = r.verdict.outcome == Outcome::Stable && r.verdict.slip_count == 0;
        res.trace.push_back(pt);
        return pt.accepted;
    };

    const bool lo_ok = probe(0);
    const bool hi_ok = probe(n);
    if (!lo_ok) {
        throw BracketError(
            "cct_search: lower clearing time " + std::to_string(t_lo) + " is " +
            res.trace[0].verdict.describe() + ", upper " + std::to_string(t_hi) +
            " is " + res.trace[1].verdict.describe() +
            "; the bracket needs a stable lower endpoint");
    }
    if (hi_ok) {
        res.status = CctStatus::NoCctInRange;
        res.cct = t_hi;
        return res;
    }

    long lo = 0, hi = n;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (probe(mid))
            lo = mid;
        else
            hi = mid;
    }
    res.status = CctStatus::Found;
    res.cct = grid_time(lo);
    return res;
}

}  // namespace gflstab
