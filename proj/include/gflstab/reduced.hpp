#pragma once

#include <string>
#include <vector>

#include "gflstab/model.hpp"
#include "gflstab/params.hpp"

namespace gflstab {

/// Which loops are fast (algebraically eliminated) and which two states
/// remain as the slow ODE.
enum class BandwidthOrdering {
    PllFastDvcSlow,     // slow coords (i_d, dv2)
    DvcFastPllSlow,     // slow coords (delta, x_int_pll)
    PllTvcFastDvcSlow,  // slow coords (i_d, dv2), TVC folded into the fast block
    TvcDvcFastPllSlow,  // slow coords (delta, x_int_pll)
};

const char* ordering_name(BandwidthOrdering o);
bool is_dvc_slow(BandwidthOrdering o);
bool ordering_uses_tvc(BandwidthOrdering o);

/// Two slow coordinates: (i_d, dv2) for the DVC-slow orderings,
/// (delta, x_int_pll) for the PLL-slow ones.
struct ReducedState {
    double c0 = 0;
    double c1 = 0;
};

struct OrderingClass {
    BandwidthOrdering ordering;
    double separation_ratio;
    bool advisory;  // ratio below the validity threshold
};

inline constexpr double kSeparationThreshold = 7.0;

/// Picks the ordering implied by a bandwidth spec and reports the smallest
/// adjacent-loop ratio. Ratios below kSeparationThreshold are advisory only.
OrderingClass classify_ordering(const BandwidthSpec& bw);

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// -- fast-subsystem algebraic maps ------------------------------------------

/// PLL locked angle for a given current: delta = asin(X_g i_d / U_g),
/// principal branch. Throws DomainError when |X_g i_d| > U_g.
double alg_pll_fast(double i_d, const SystemParams& p);

/// DVC power-balance current for a given angle:
/// i_d = (P_in + i_q U_g sin(delta)) / (U_g cos(delta)).
/// Throws DomainError when cos(delta) is at or below tolerance.
double alg_dvc_fast(double delta, double i_q, const SystemParams& p);

/// TVC droop settles at i_q = -k_v/(k_v X_g + 1) * (V_t_ref - U_g cos(delta)).
double alg_tvc(double delta, const SystemParams& p);

// -- scalar shape functions (resistance neglected) ---------------------------

/// Delivered power along the PLL-locked branch, as a function of current.
double p_of_id(double i_d, double i_q, const SystemParams& p);

/// Synchronizing power as a function of angle: (U_g^2/2) sin(2d) - i_q X_g U_g sin(d).
double h_of_delta(double delta, double i_q, const SystemParams& p);

/// TVC-blended power curve, elevated by the droop feeding reactive current.
double p_prime_of_id(double i_d, const SystemParams& p);

/// TVC-blended synchronizing curve.
double h_prime_of_delta(double delta, const SystemParams& p);

/// Denominator of the slow PLL dynamics; must stay positive for the
/// DVC-fast reduction to be well posed.
double lambda_of_delta(double delta, double i_q, const SystemParams& p);

// -- slow ODEs ----------------------------------------------------------------

/// Two-state slow dynamics for the chosen ordering. DVC-slow orderings evolve
/// (i_d, dv2) against p or p'; PLL-slow orderings evolve (delta, x_int_pll)
/// against h or h' divided by lambda. Throws SingularityError when lambda
/// collapses; fast-subsystem validity violations are reported through
/// `validity_ok` and left to the caller.
ReducedState rhs_reduced(BandwidthOrdering o, const ReducedState& s,
                         const SystemParams& p, bool* validity_ok = nullptr);

struct ValidityResult {
    bool ok = true;
    int violated_clause = 0;  // 1-based index of the first failing inequality
    std::string describe() const;
};

/// The three current bounds the fast-PLL reduction needs:
///  1. i_d < U_g/X_g                               (locked angle exists)
///  2. i_d < sqrt(U_g^2 - (X_g i_d)^2) / (zeta_pll L_g/w_s)
///  3. i_d < 1/(omega_pll L_g/w_s)                 (algebraic loop regular)
ValidityResult pll_fast_validity(double i_d, const SystemParams& p);

// -- boundary-layer initial-value corrections ---------------------------------

/// Additive initial offsets for the two slow coordinates plus the still-to-
/// decay part of the layer. The uniform composite approximation is
/// reduced_from(slow0 + offset)(t) - remaining(t), where remaining(t) is the
/// tail integral of the layer integrand from t onward: remaining(0) == offset
/// and remaining decays to zero past the layer. The closed-form layers are a
/// single exponential; the quadrature layers carry a sampled profile because
/// the underdamped fast block rings rather than relaxing monotonically.
struct BoundaryLayerCorrection {
    double offset0 = 0;
    double offset1 = 0;
    double decay_rate = 0;
    std::vector<double> tau;   // sample times (s); empty -> exponential form
    std::vector<double> rem0;  // remaining(tau[k]) for coordinate 0
    std::vector<double> rem1;
    double remaining0(double t) const;
    double remaining1(double t) const;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// DVC-slow orderings use the closed-form exponential layer of the locked
/// PLL; PLL-slow orderings integrate the fast block with frozen slow states
/// and quadrature the correction integrals (trapezoid over dense output,
/// horizon 10 fast time constants). Throws ConvergenceError if the
/// quadrature tail has not decayed within the horizon.
BoundaryLayerCorrection boundary_layer_correction(BandwidthOrdering o,
                                                  const FullState& full_initial,
                                                  const SystemParams& p);

/// Projection of a full state onto the slow coordinates of an ordering.
ReducedState project_slow(BandwidthOrdering o, const FullState& s);

/// Reconstruction of a full state from slow coordinates via the fast maps.
FullState lift_slow(BandwidthOrdering o, const ReducedState& s, const SystemParams& p);

}  // namespace gflstab
