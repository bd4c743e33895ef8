#pragma once

#include "gflstab/sim.hpp"

namespace gflstab {

/// Full-vs-reduced comparison for one scenario, reported at the configured
/// bandwidths and again with the fast block at double bandwidth (halving the
/// separation parameter). Deviations are max-norm over the slow coordinates,
/// sampled on a uniform grid with a settling window skipped after every event.
struct ReductionReport {
    BandwidthOrdering ordering;
    double separation_ratio = 0;
    bool advisory = false;       // separation below the trust threshold
    double err_base = 0;         // layer-excluded deviation at the given spec
    double err_half = 0;         // same at half the separation parameter
    double ratio = 0;            // err_half / err_base
    double first_window_raw = 0;        // deviation over the initial layer window
    double first_window_corrected = 0;  // same with the layer correction applied
    double window_end = 0;              // extent of that initial window (s)
};

struct ValidateOptions {
    double window_cap = 0.4;   // deviation window end (s), capped by the horizon
    double layer_skip = 3.0;   // settling margin after events, in fast time units
    double first_window = 0.05;  // initial-layer comparison extent (s)
    int samples = 800;
    SimOptions sim;
};

ReductionReport validate_reduction(const Scenario& sc,
                                   const ValidateOptions& opts = {});

}  // namespace gflstab
