#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gflstab/model.hpp"

namespace gflstab {

// State vectors travel in fixed-width arrays; systems of dimension n < 5 use
// the first n slots and leave the rest zero.
using StateVec = std::array<double, 5>;

using RhsFn = std::function<void(double t, const StateVec& x, StateVec& dxdt)>;

// Mutates the state in place at an accepted step boundary and reports which
// limits engaged. Returning flags with any()==true invalidates the FSAL stage.
using ClampFn = std::function<SaturationFlags(double t, StateVec& x)>;

// Checked at accepted steps; returning true ends the run early.
using StopFn = std::function<bool(double t, const StateVec& x)>;

// Scheduled discontinuity. The integrator lands a step exactly on `time`,
// applies `apply` (may be null for a pure marker), and records `label` on
// that sample row. The stored state at the event time is the post-event one.
struct ScheduledEvent {
    double time = 0;
    std::string label;
    std::function<void(StateVec& x)> apply;
};

struct IntegratorOptions {
    double rtol = 1e-8;
    double atol = 1e-10;
    double h_init = 0;   // 0 = choose automatically
    double h_max = 0;    // 0 = unlimited
    std::size_t max_steps = 50'000'000;
    bool store_dense = false;  // keep per-step interpolation coefficients
};

// Interpolation coefficients for one accepted step, Horner form in the
// normalized step coordinate.
struct DenseSegment {
    double t0 = 0;
    double h = 0;
    std::array<StateVec, 5> rcont;
};

struct Trajectory {
    int dim = 5;
    std::vector<double> t;
    std::vector<StateVec> states;
    std::vector<SaturationFlags> flags;
    std::vector<std::pair<double, std::string>> events;

    // Filled by simulate_scenario for full-layout trajectories; empty for raw
    // integrate() output.
    std::vector<double> aux_p, aux_vtd, aux_vtq;

    bool truncated = false;
    bool stopped_early = false;  // a stop predicate ended the run, not an error
    std::string diagnostic;

    // Accumulated (summed) and largest unscaled local error estimates over
    // accepted steps; used by the tolerance-refinement check.
    double sum_error_estimate = 0;
    double max_error_estimate = 0;

    std::vector<DenseSegment> dense;

    std::size_t size() const { return t.size(); }
    const StateVec& back_state() const { return states.back(); }

    // Dense-output evaluation; requires store_dense at integration time and
    // t within [t.front(), t.back()].
    StateVec evaluate(double time) const;
};

// Adaptive Dormand-Prince 5(4) with first-same-as-last reuse and dense
// output. Events are hit exactly by step splitting; clamps run at accepted
// step boundaries only. Step-size underflow yields a truncated trajectory
// with a diagnostic rather than an exception; an exception from the very
// first RHS evaluation propagates.
Trajectory integrate(int dim, const RhsFn& rhs, StateVec x0, double t0, double t1,
                     const IntegratorOptions& opts = {},
                     std::vector<ScheduledEvent> schedule = {},
                     const ClampFn& clamp = nullptr, const StopFn& stop = nullptr);

}  // namespace gflstab
