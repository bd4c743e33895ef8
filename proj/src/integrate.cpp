#include "gflstab/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gflstab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33, kA63 = 46732.0 / 5247,
                 kA64 = 49.0 / 176, kA65 = -5103.0 / 18656;
constexpr double kB1 = 35.0 / 384, kB3 = 500.0 / 1113, kB4 = 125.0 / 192,
                 kB5 = -2187.0 / 6784, kB6 = 11.0 / 84;
constexpr double kC2 = 1.0 / 5, kC3 = 3.0 / 10, kC4 = 4.0 / 5, kC5 = 8.0 / 9;
// b - bhat difference for the embedded 4th-order estimate.
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;
// Dense-output weights.
constexpr double kD1 = -12715105075.0 / 11282082432.0;
constexpr double kD3 = 87487479700.0 / 32700410799.0;
constexpr double kD4 = -10690763975.0 / 1880347072.0;
constexpr double kD5 = 701980252875.0 / 199316789632.0;
constexpr double kD6 = -1453857185.0 / 822651844.0;
constexpr double kD7 = 69997945.0 / 29380423.0;

double tiny_step(double t) {
    return 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
}

}  // namespace

StateVec Trajectory::evaluate(double time) const {
    if (dense.empty())
        throw std::logic_error("Trajectory::evaluate requires store_dense output");
    auto it = std::upper_bound(dense.begin(), dense.end(), time,
                               [](double v, const DenseSegment& s) { return v < s.t0; });
    if (it != dense.begin()) --it;
    const DenseSegment& seg = *it;
    double theta = (time - seg.t0) / seg.h;
    theta = std::clamp(theta, 0.0, 1.0);
    const double theta1 = 1.0 - theta;
    StateVec out{};
    for (int i = 0; i < dim; ++i) {
        out[i] = seg.rcont[0][i] +
                 theta * (seg.rcont[1][i] +
                          theta1 * (seg.rcont[2][i] +
                                    theta * (seg.rcont[3][i] + theta1 * seg.rcont[4][i])));
    }
    return out;
}

Trajectory integrate(int dim, const RhsFn& rhs, StateVec x, double t0, double t1,
                     const IntegratorOptions& opts, std::vector<ScheduledEvent> schedule,
                     const ClampFn& clamp, const StopFn& stop) {
    if (dim < 1 || dim > 5) throw std::invalid_argument("integrate: dim must be in [1,5]");
    if (!(opts.rtol > 0) || !(opts.atol > 0))
        throw std::invalid_argument("integrate: tolerances must be positive");
    if (!(t1 >= t0)) throw std::invalid_argument("integrate: t1 < t0");
    for (int i = 0; i < dim; ++i)
        if (!std::isfinite(x[i])) throw std::invalid_argument("integrate: x0 not finite");

    std::sort(schedule.begin(), schedule.end(),
              [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.time < b.time; });

    Trajectory traj;
    traj.dim = dim;

    std::size_t next_event = 0;
    double t = t0;

    auto apply_events_at = [&](double when, StateVec& y) {
        bool applied = false;
        while (next_event < schedule.size() && schedule[next_event].time <= when) {
            const ScheduledEvent& ev = schedule[next_event];
            if (ev.apply) ev.apply(y);
            traj.events.emplace_back(when, ev.label);
            ++next_event;
            applied = true;
        }
        return applied;
    };

    // Events scheduled at or before t0 fire before the first sample.
    apply_events_at(t0, x);
    SaturationFlags row_flags{};
    if (clamp) row_flags = clamp(t, x);
    traj.t.push_back(t);
    traj.states.push_back(x);
    traj.flags.push_back(row_flags);
    if (stop && stop(t, x)) {
        traj.truncated = true;
        traj.stopped_early = true;
        traj.diagnostic = "stop condition met at start";
        return traj;
    }
    if (t1 <= t0 + tiny_step(t0)) return traj;

    StateVec k1{}, k2{}, k3{}, k4{}, k5{}, k6{}, k7{}, ynew{}, ytmp{};
    rhs(t, x, k1);  // a singular RHS at the initial state propagates
    bool have_k1 = true;

    // Initial step size: standard two-evaluation heuristic.
    double h = opts.h_init;
    if (h <= 0) {
        double d0 = 0, d1 = 0;
        for (int i = 0; i < dim; ++i) {
            const double sc = opts.atol + opts.rtol * std::abs(x[i]);
            d0 += (x[i] / sc) * (x[i] / sc);
            d1 += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / dim);
        d1 = std::sqrt(d1 / dim);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, t1 - t0);
        double d2 = 0;
        try {
            for (int i = 0; i < dim; ++i) ytmp[i] = x[i] + h0 * k1[i];
            rhs(t + h0, ytmp, k2);
            for (int i = 0; i < dim; ++i) {
                const double sc = opts.atol + opts.rtol * std::abs(x[i]);
                const double d = (k2[i] - k1[i]) / sc;
                d2 += d * d;
            }
            d2 = std::sqrt(d2 / dim) / h0;
        } catch (const std::exception&) {
            d2 = 1.0 / h0;
        }
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                      : std::pow(0.01 / dm, 0.2);
        h = std::min({100 * h0, h1, t1 - t0});
        if (h <= 0) h = 1e-6;
    }
    if (opts.h_max > 0) h = std::min(h, opts.h_max);

    bool just_rejected = false;
    std::size_t steps = 0;

    while (t < t1 - tiny_step(t)) {
        if (++steps > opts.max_steps) {
            traj.truncated = true;
            traj.diagnostic = "maximum step count exceeded";
            return traj;
        }
        if (!have_k1) {
            try {
                rhs(t, x, k1);
            } catch (const std::exception& e) {
                traj.truncated = true;
                traj.diagnostic = std::string("RHS failed at accepted state: ") + e.what();
                return traj;
            }
            have_k1 = true;
        }

        const double barrier =
            next_event < schedule.size() ? std::min(schedule[next_event].time, t1) : t1;

        // Degenerate sliver up to the barrier: advance without a step.
        if (barrier - t <= tiny_step(t)) {
            t = barrier;
            bool changed = apply_events_at(t, x);
            SaturationFlags fl{};
            if (clamp) fl = clamp(t, x);
            if (changed || fl.any()) have_k1 = false;
            traj.t.push_back(t);
            traj.states.push_back(x);
            traj.flags.push_back(fl);
            if (stop && stop(t, x)) {
                traj.truncated = true;
                traj.stopped_early = true;
                traj.diagnostic = "stop condition met";
                return traj;
            }
            continue;
        }

        if (opts.h_max > 0) h = std::min(h, opts.h_max);
        bool hit_barrier = false;
        if (t + h >= barrier) {
            h = barrier - t;
            hit_barrier = true;
        }
        if (h < tiny_step(t)) {
            traj.truncated = true;
            traj.diagnostic = "step size underflow at t = " + std::to_string(t);
            return traj;
        }

        // Stages 2..7; stage 7 doubles as the FSAL first stage of the next step.
        bool stage_failed = false;
        std::string stage_error;
        try {
            for (int i = 0; i < dim; ++i) ytmp[i] = x[i] + h * kA21 * k1[i];
            rhs(t + kC2 * h, ytmp, k2);
            for (int i = 0; i < dim; ++i)
                ytmp[i] = x[i] + h * (kA31 * k1[i] + kA32 * k2[i]);
            rhs(t + kC3 * h, ytmp, k3);
            for (int i = 0; i < dim; ++i)
                ytmp[i] = x[i] + h * (kA41 * k1[i] + kA42 * k2[i] + kA43 * k3[i]);
            rhs(t + kC4 * h, ytmp, k4);
            for (int i = 0; i < dim; ++i)
                ytmp[i] = x[i] + h * (kA51 * k1[i] + kA52 * k2[i] + kA53 * k3[i] +
                                      kA54 * k4[i]);
            rhs(t + kC5 * h, ytmp, k5);
            for (int i = 0; i < dim; ++i)
                ytmp[i] = x[i] + h * (kA61 * k1[i] + kA62 * k2[i] + kA63 * k3[i] +
                                      kA64 * k4[i] + kA65 * k5[i]);
            rhs(t + h, ytmp, k6);
            for (int i = 0; i < dim; ++i)
                ynew[i] = x[i] + h * (kB1 * k1[i] + kB3 * k3[i] + kB4 * k4[i] +
                                      kB5 * k5[i] + kB6 * k6[i]);
            rhs(t + h, ynew, k7);
        } catch (const std::exception& e) {
            stage_failed = true;
            stage_error = e.what();
        }

        if (stage_failed) {
            h *= 0.25;
            just_rejected = true;
            if (h < tiny_step(t)) {
                traj.truncated = true;
                traj.diagnostic = "step size underflow after RHS failure: " + stage_error;
                return traj;
            }
            continue;
        }

        // Embedded error estimate, tolerance-scaled RMS norm.
        double err = 0, err_abs = 0;
        for (int i = 0; i < dim; ++i) {
            const double e = h * (kE1 * k1[i] + kE3 * k3[i] + kE4 * k4[i] +
                                  kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
            const double sc =
                opts.atol + opts.rtol * std::max(std::abs(x[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
            err_abs += e * e;
        }
        err = std::sqrt(err / dim);
        err_abs = std::sqrt(err_abs / dim);

        if (!std::isfinite(err) || err > 1.0) {
            double fac = std::isfinite(err) ? std::max(0.2, 0.9 * std::pow(err, -0.2))
                                            : 0.1;
            fac = std::min(fac, 1.0);
            h *= fac;
            just_rejected = true;
            if (h < tiny_step(t)) {
                traj.truncated = true;
                traj.diagnostic = "step size underflow at t = " + std::to_string(t);
                return traj;
            }
            continue;
        }

        // Accepted.
        const double t_new = hit_barrier ? barrier : t + h;
        traj.sum_error_estimate += err_abs;
        traj.max_error_estimate = std::max(traj.max_error_estimate, err_abs);

        if (opts.store_dense) {
            DenseSegment seg;
            seg.t0 = t;
            seg.h = t_new - t;
            for (int i = 0; i < dim; ++i) {
                const double ydiff = ynew[i] - x[i];
                const double bspl = h * k1[i] - ydiff;
                seg.rcont[0][i] = x[i];
                seg.rcont[1][i] = ydiff;
                seg.rcont[2][i] = bspl;
                seg.rcont[3][i] = ydiff - h * k7[i] - bspl;
                seg.rcont[4][i] = h * (kD1 * k1[i] + kD3 * k3[i] + kD4 * k4[i] +
                                       kD5 * k5[i] + kD6 * k6[i] + kD7 * k7[i]);
            }
            traj.dense.push_back(seg);
        }

        t = t_new;
        x = ynew;
        k1 = k7;  // FSAL

        SaturationFlags fl{};
        if (clamp) {
            StateVec before = x;
            fl = clamp(t, x);
            if (fl.any() || before != x) have_k1 = false;
        }
        if (hit_barrier && next_event < schedule.size() &&
            schedule[next_event].time <= t) {
            if (apply_events_at(t, x)) {
                have_k1 = false;
                if (clamp) {
                    const SaturationFlags fl2 = clamp(t, x);
                    fl.i_d_limited |= fl2.i_d_limited;
                    fl.i_q_limited |= fl2.i_q_limited;
                    fl.chopper |= fl2.chopper;
                }
            }
        }

        traj.t.push_back(t);
        traj.states.push_back(x);
        traj.flags.push_back(fl);

        if (stop && stop(t, x)) {
            traj.truncated = true;
            traj.stopped_early = true;
            traj.diagnostic = "stop condition met";
            return traj;
        }

        double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        fac = std::clamp(fac, 0.2, just_rejected ? 1.0 : 5.0);
        just_rejected = false;
        h *= fac;
    }
    return traj;
}

}  // namespace gflstab
