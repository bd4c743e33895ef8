#include "gflstab/params.hpp"

#include <cmath>
#include <string>

namespace gflstab {

Gains gains_from_bandwidths(const BandwidthSpec& bw, double c_dc, double omega_s,
                            double zeta_pll, double zeta_dvc) {
    if (bw.omega_pll <= 0 || bw.omega_dvc <= 0)
        throw std::invalid_argument("gains_from_bandwidths: bandwidths must be positive");
    if (bw.omega_tvc && *bw.omega_tvc <= 0)
        throw std::invalid_argument("gains_from_bandwidths: omega_tvc must be positive");
    const double half_cap = 0.5 * c_dc / omega_s;
    Gains g;
    g.k_p_pll = bw.omega_pll;
    g.k_i_pll = zeta_pll * g.k_p_pll;
    g.k_p_dvc = half_cap * bw.omega_dvc;
    g.k_i_dvc = zeta_dvc * half_cap * bw.omega_dvc * bw.omega_dvc;
    return g;
}

void SystemParams::set_bandwidths(const BandwidthSpec& bw) {
    const Gains g = gains_from_bandwidths(bw, c_dc, omega_s, zeta_pll, zeta_dvc);
    k_p_pll = g.k_p_pll;
    k_i_pll = g.k_i_pll;
    k_p_dvc = g.k_p_dvc;
    k_i_dvc = g.k_i_dvc;
    omega_pll = bw.omega_pll;
    omega_dvc = bw.omega_dvc;
    omega_tvc = bw.omega_tvc.value_or(0.0);
    l_g_over_ws = x_g / omega_s;
}

SystemParams SystemParams::make_default(const BandwidthSpec& bw) {
    SystemParams p;
    p.set_bandwidths(bw);
    p.validate();
    return p;
}

void SystemParams::validate() const {
    if (u_g <= 0 || x_g <= 0 || c_dc <= 0 || omega_s <= 0)
        throw std::invalid_argument("SystemParams: U_g, X_g, C_dc, omega_s must be positive");
    if (k_p_pll != 0 && std::abs(k_i_pll / k_p_pll - zeta_pll) > 1e-12)
        throw std::invalid_argument("SystemParams: k_i_pll/k_p_pll must equal zeta_pll");
    if (!(limits.i_limit > 0))
        throw std::invalid_argument("SystemParams: i_limit must be positive");
    if (!(0 < limits.v_dc_min && limits.v_dc_min < v_dc_ref && v_dc_ref < limits.v_dc_max))
        throw std::invalid_argument(
            "SystemParams: chopper band must satisfy 0 < v_dc_min < V_dc_ref < v_dc_max");
    if (std::abs(l_g_over_ws - x_g / omega_s) > 1e-15)
        throw std::invalid_argument("SystemParams: l_g_over_ws out of sync with X_g/omega_s");
}

}  // namespace gflstab
