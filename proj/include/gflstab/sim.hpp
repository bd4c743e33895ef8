#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gflstab/equilibria.hpp"
#include "gflstab/integrate.hpp"
#include "gflstab/reduced.hpp"
#include "gflstab/scenarios.hpp"

namespace gflstab {

struct ModelChoice {
    bool reduced = false;
    BandwidthOrdering ordering = BandwidthOrdering::PllFastDvcSlow;

    static ModelChoice full_model() { return {}; }
    static ModelChoice reduced_model(BandwidthOrdering o) { return {true, o}; }
};

enum class Outcome { Stable, Unstable, Undetermined };

enum class VerdictReason {
    ConvergedToSep,
    CurrentLimitDiverged,
    DcClampPersistent,
    DeltaUnbounded,
    HorizonExhausted,
};

const char* outcome_name(Outcome o);
const char* reason_name(VerdictReason r);

struct StabilityVerdict {
    Outcome outcome = Outcome::Undetermined;
    VerdictReason reason = VerdictReason::HorizonExhausted;
    // Completed 2*pi excursions of delta away from the SEP anywhere along the
    // trajectory. A verdict can be Stable with slips > 0 when the angle
    // re-locks one or more turns away; CCT acceptance requires slips == 0.
    int slip_count = 0;
    std::string describe() const;  // "Stable (converged-to-SEP)"
};

struct SimOptions {
    IntegratorOptions integ;      // h_max == 0 is replaced by 1 ms
    double ball_radius = 1e-3;    // max-norm convergence ball around the SEP
    double tail_fraction = 0.1;   // trailing share of the horizon examined
    double delta_unbound = 4 * kPi;
    bool early_stop_unbounded = true;  // end the run once |delta| passes the bound
};

struct SimResult {
    Trajectory traj;  // rows always in full-state layout; reduced runs carry
                      // lifted fast coordinates alongside the integrated slow ones
    StabilityVerdict verdict;
    // Equilibrium of the post-event parameter set used for classification,
    // in full-state layout; absent when none exists (e.g. uncleared sag).
    std::optional<StateVec> sep;
    SystemParams final_params;
    ModelChoice model;
};

// Equilibrates at the pre-event parameters (unless the scenario pins an
// initial state), applies the event sequence, integrates to the horizon and
// classifies the outcome. Reduced runs integrate the two slow coordinates
// and reject events that have no meaning in that chart (phase jumps in the
// DVC-slow chart, TVC toggles). Throws NoEquilibriumError when no pre-event
// equilibrium exists.
SimResult simulate_scenario(const ModelChoice& model, const Scenario& scenario,
                            const SimOptions& opts = {});

// Tail-window classification. Stable: the run reached the horizon and every
// sample in the trailing window lies within ball_radius of the SEP, angles
// compared modulo 2*pi. Unstable: |delta| passed delta_unbound anywhere, the
// current limiter was engaged in the tail while the unclamped rate still
// pointed into the rail, or the DC clamp was engaged for more than half of
// the tail. Otherwise Undetermined.
StabilityVerdict classify_stability(const Trajectory& traj,
                                    const std::optional<StateVec>& sep,
                                    const SystemParams& final_params,
                                    const ModelChoice& model, double horizon,
                                    const SimOptions& opts = {});

struct CctTracePoint {
    double clear_time = 0;
    StabilityVerdict verdict;
    bool accepted = false;  // Stable with zero slips
};

enum class CctStatus { Found, NoCctInRange };

struct CctResult {
    CctStatus status = CctStatus::Found;
    double cct = 0;  // largest tested acceptable clearing time, grid-quantized
    double resolution = 0;
    std::vector<CctTracePoint> trace;  // every evaluated clearing time, in order
};

struct BracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bisects the fault-clearing time of `templ` (which must contain exactly one
// clear event) over the grid t_lo + k*resolution. A clearing time is accepted
// only when the verdict is Stable with zero angle slips; Undetermined counts
// as not stable. Throws BracketError when t_lo itself is not accepted; an
// accepted t_hi yields status NoCctInRange. Each probe run uses horizon
// clear_time + settle_time.
CctResult cct_search(const ModelChoice& model, const Scenario& templ, double t_lo,
                     double t_hi, double resolution = 0.005,
                     const SimOptions& opts = {}, double settle_time = 30.0);

}  // namespace gflstab
