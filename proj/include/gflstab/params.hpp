#pragma once

#include <optional>
#include <stdexcept>

namespace gflstab {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Rectangular per-axis current limit and DC chopper clamp band, all pu.
struct Limits {
    double i_limit = 2.5;
    double v_dc_min = 2.0;
    double v_dc_max = 3.0;
};

/// Outer-loop bandwidths in rad/s. TVC is disabled when omega_tvc is absent.
struct BandwidthSpec {
    double omega_pll = 2 * kPi * 15.0;
    double omega_dvc = 2 * kPi * 2.0;
    std::optional<double> omega_tvc;

    bool tvc_enabled() const { return omega_tvc.has_value(); }

    static BandwidthSpec from_hz(double f_pll, double f_dvc,
                                 std::optional<double> f_tvc = std::nullopt) {
        BandwidthSpec bw;
        bw.omega_pll = 2 * kPi * f_pll;
        bw.omega_dvc = 2 * kPi * f_dvc;
        if (f_tvc) bw.omega_tvc = 2 * kPi * *f_tvc;
        return bw;
    }
};

struct Gains {
    double k_p_pll = 0;
    double k_i_pll = 0;
    double k_p_dvc = 0;
    double k_i_dvc = 0;
};

/// PI gains from loop bandwidths: the PLL is overdamped with
/// k_i/k_p = zeta_pll, the DVC is a damped second-order design on the
/// DC-link energy storage C_dc/omega_s.
Gains gains_from_bandwidths(const BandwidthSpec& bw, double c_dc, double omega_s,
                            double zeta_pll, double zeta_dvc);

/// Everything the right-hand sides need, per-unit on the common base.
/// Gains are stored resolved; set_bandwidths() rederives them.
struct SystemParams {
    double u_g = 1.0;
    double x_g = 0.47;
    double r_g = 0.002;
    double omega_s = 2 * kPi * 50.0;
    double l_g_over_ws = 0.47 / (2 * kPi * 50.0);
    double p_in = 1.0;
    double c_dc = 12.5;
    double v_dc_ref = 2.5;

    double k_p_pll = 0;
    double k_i_pll = 0;
    double zeta_pll = 0.25;
    double k_p_dvc = 0;
    double k_i_dvc = 0;
    double zeta_dvc = 0.25;

    double omega_pll = 0;  // kept for validity checks and reductions
    double omega_dvc = 0;
    double omega_tvc = 0;  // 0 when TVC disabled
    double k_v = 2.0;
    double v_t_ref = 0.81;
    double i_q_fixed = 0.0;

    Limits limits;

    double c_tilde() const { return c_dc / omega_s; }

    /// Rederives l_g_over_ws and all four PI gains for the given bandwidths.
    void set_bandwidths(const BandwidthSpec& bw);

    /// Defaults for the study system (SCR 2.1 weak grid, 2-level converter).
    static SystemParams make_default(const BandwidthSpec& bw);

    void validate() const;
};

}  // namespace gflstab
