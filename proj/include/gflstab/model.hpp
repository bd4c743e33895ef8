#pragma once

#include <array>
#include <stdexcept>

#include "gflstab/params.hpp"

namespace gflstab {

/// Thrown when the PLL algebraic-loop denominator 1 - k_p_pll*(L_g/w_s)*i_d
/// collapses, i.e. the condition i_d < 1/(omega_pll * L_g/omega_s) is violated.
struct SingularityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The five dynamic states of the outer-loop model.
/// dv2 is v_dc^2 - V_dc_ref^2 (pu^2), so dv2 >= -V_dc_ref^2 always.
struct FullState {
    double delta = 0;      // PLL-grid angle difference, rad
    double x_int_pll = 0;  // PLL integrator, rad/s
    double i_d = 0;        // d-axis current, pu
    double dv2 = 0;        // DC-link squared-voltage deviation, pu^2
    double i_q = 0;        // q-axis current, pu

    std::array<double, 5> to_array() const { return {delta, x_int_pll, i_d, dv2, i_q}; }
    static FullState from_array(const std::array<double, 5>& a) {
        return {a[0], a[1], a[2], a[3], a[4]};
    }
};

/// Algebraic signals evaluated alongside the derivatives.
struct RhsAux {
    double v_td = 0;
    double v_tq = 0;
    double p = 0;          // delivered active power, pu
    double delta_dot = 0;
};

/// Full-order right-hand side. The PLL algebraic loop is resolved in closed
/// form; v_td keeps the i_q*delta_dot*L_g/omega_s coupling by substituting the
/// already-computed delta_dot (single pass, no implicit solve). With
/// tvc_enabled = false the i_q derivative is identically zero.
FullState rhs_full(const FullState& s, const SystemParams& p, bool tvc_enabled,
                   RhsAux* aux = nullptr);

struct SaturationFlags {
    bool i_d_limited = false;
    bool i_q_limited = false;
    bool chopper = false;
    bool any() const { return i_d_limited || i_q_limited || chopper; }
};

struct ClampResult {
    FullState state;
    SaturationFlags flags;
};

/// Rectangular current limiter plus DC chopper band, applied as state clamps.
ClampResult apply_limits(const FullState& s, const SystemParams& p);

}  // namespace gflstab
