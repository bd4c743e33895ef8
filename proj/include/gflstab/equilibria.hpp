#pragma once

#include <complex>
#include <functional>

#include "gflstab/model.hpp"
#include "gflstab/reduced.hpp"

namespace gflstab {

/// SEP/UEP pair of a scalar power-balance curve. `margin` is the headroom
/// between the curve maximum and its target level; `exists` is false when the
/// target exceeds the maximum. A merge within tolerance is reported as a
/// saddle-node with zero margin.
struct EquilibriumPair {
    ReducedState sep;
    ReducedState uep;
    bool exists = false;
    double margin = 0;
    bool saddle_node = false;
};

/// Roots of p(i_d) = P_in (or p'(i_d) = P_in with use_tvc) on either side of
/// the curve maximum. Slow coordinates are (i_d, dv2) with dv2 = 0 at rest.
EquilibriumPair find_dvc_equilibria(const SystemParams& p, bool use_tvc);

/// Roots of h(delta) = X_g P_in (or h'(delta) = X_g P_in) on either side of
/// the curve maximum. Slow coordinates are (delta, x_int_pll), x_int = 0 at rest.
EquilibriumPair find_pll_equilibria(const SystemParams& p, bool use_tvc);

/// Minimal grid voltage for which the i_q = 0 power balance has a solution.
double existence_threshold(const SystemParams& p);

struct NoEquilibriumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rest point of the full 5-state model, found by damped Newton seeded from
/// the reduced SEP. Residual max-norm below 1e-10 on success. Throws
/// NoEquilibriumError (citing the existence threshold) when the reduced
/// curve has no crossing or Newton fails to converge.
FullState full_equilibrium(const SystemParams& p, bool tvc_enabled);

/// As above but seeded from the reduced UEP, giving the full-model saddle.
FullState full_equilibrium_unstable(const SystemParams& p, bool tvc_enabled);

enum class EquilibriumKind { StableNode, StableFocus, Saddle, Unstable };

struct EquilibriumClassification {
    EquilibriumKind kind;
    std::array<std::complex<double>, 2> eigenvalues;
    bool defective_warning = false;
};

using PlaneRhs = std::function<ReducedState(const ReducedState&)>;

/// Jacobian eigenvalues of a planar vector field at an equilibrium,
/// via central differences. A saddle requires exactly one positive real
/// eigenvalue. Near-defective Jacobians are flagged, not rejected.
EquilibriumClassification classify_equilibrium(const ReducedState& point,
                                               const PlaneRhs& rhs);

/// Convenience overloads for the built-in reduced models.
EquilibriumClassification classify_equilibrium(const ReducedState& point,
                                               BandwidthOrdering o,
                                               const SystemParams& p);

}  // namespace gflstab
