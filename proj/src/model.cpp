#include "gflstab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gflstab {

namespace {
constexpr double kDenomTol = 1e-9;
}

FullState rhs_full(const FullState& s, const SystemParams& p, bool tvc_enabled,
                   RhsAux* aux) {
    const double lw = p.l_g_over_ws;
    const double denom = 1.0 - p.k_p_pll * lw * s.i_d;
    if (std::abs(denom) < kDenomTol)
        throw SingularityError(
            "rhs_full: PLL algebraic loop singular, i_d < 1/(omega_pll*L_g/omega_s) violated "
            "(i_d = " + std::to_string(s.i_d) + ")");

    const double sin_d = std::sin(s.delta);
    const double cos_d = std::cos(s.delta);

    // v_tq = A + i_d*delta_dot*L_g/w_s with A = X_g i_d + R_g i_q - U_g sin(delta),
    // eliminated against delta_dot = k_p_pll v_tq + x_int.
    const double a = p.x_g * s.i_d + p.r_g * s.i_q - p.u_g * sin_d;
    const double delta_dot = (p.k_p_pll * a + s.x_int_pll) / denom;
    const double v_tq = (a + s.x_int_pll * s.i_d * lw) / denom;

    const double power = s.i_d * p.u_g * cos_d - s.i_q * p.u_g * sin_d +
                         (s.i_d * s.i_d + s.i_q * s.i_q) * p.r_g;
    const double dv2_dot = 2.0 / p.c_tilde() * (p.p_in - power);

    FullState dot;
    dot.delta = delta_dot;
    dot.x_int_pll = p.k_i_pll * v_tq;
    dot.i_d = p.k_i_dvc * s.dv2 + p.k_p_dvc * dv2_dot;
    dot.dv2 = dv2_dot;

    const double v_td = p.u_g * cos_d - p.x_g * s.i_q + s.i_q * delta_dot * lw;
    dot.i_q = tvc_enabled ? p.omega_tvc * (-s.i_q + p.k_v * (v_td - p.v_t_ref)) : 0.0;

    if (aux) {
        aux->v_td = v_td;
        aux->v_tq = v_tq;
        aux->p = power;
        aux->delta_dot = delta_dot;
    }
    return dot;
}

ClampResult apply_limits(const FullState& s, const SystemParams& p) {
    ClampResult r{s, {}};
    const double il = p.limits.i_limit;
    if (std::abs(s.i_d) > il) {
        r.state.i_d = std::clamp(s.i_d, -il, il);
        r.flags.i_d_limited = true;
    }
    if (std::abs(s.i_q) > il) {
        r.state.i_q = std::clamp(s.i_q, -il, il);
        r.flags.i_q_limited = true;
    }
    const double ref2 = p.v_dc_ref * p.v_dc_ref;
    const double lo = p.limits.v_dc_min * p.limits.v_dc_min - ref2;
    const double hi = p.limits.v_dc_max * p.limits.v_dc_max - ref2;
    if (s.dv2 < lo || s.dv2 > hi) {
        r.state.dv2 = std::clamp(s.dv2, lo, hi);
        r.flags.chopper = true;
    }
    return r;
}

}  // namespace gflstab
