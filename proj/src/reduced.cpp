#include "gflstab/reduced.hpp"

#include <algorithm>
#include <cmath>

namespace gflstab {

namespace {
constexpr double kCosTol = 1e-6;
constexpr double kLambdaTol = 1e-9;
}

const char* ordering_name(BandwidthOrdering o) {
    switch (o) {
        case BandwidthOrdering::PllFastDvcSlow: return "pll-fast-dvc-slow";
        case BandwidthOrdering::DvcFastPllSlow: return "dvc-fast-pll-slow";
        case BandwidthOrdering::PllTvcFastDvcSlow: return "pll-tvc-fast-dvc-slow";
        case BandwidthOrdering::TvcDvcFastPllSlow: return "tvc-dvc-fast-pll-slow";
    }
    return "?";
}

bool is_dvc_slow(BandwidthOrdering o) {
    return o == BandwidthOrdering::PllFastDvcSlow ||
           o == BandwidthOrdering::PllTvcFastDvcSlow;
}

bool ordering_uses_tvc(BandwidthOrdering o) {
    return o == BandwidthOrdering::PllTvcFastDvcSlow ||
           o == BandwidthOrdering::TvcDvcFastPllSlow;
}

OrderingClass classify_ordering(const BandwidthSpec& bw) {
    OrderingClass c{};
    if (!bw.tvc_enabled()) {
        if (bw.omega_pll >= bw.omega_dvc) {
            c.ordering = BandwidthOrdering::PllFastDvcSlow;
            c.separation_ratio = bw.omega_pll / bw.omega_dvc;
        } else {
            c.ordering = BandwidthOrdering::DvcFastPllSlow;
            c.separation_ratio = bw.omega_dvc / bw.omega_pll;
        }
    } else {
        const double w_tvc = *bw.omega_tvc;
        if (bw.omega_pll >= bw.omega_dvc) {
            c.ordering = BandwidthOrdering::PllTvcFastDvcSlow;
            c.separation_ratio = std::min(bw.omega_pll, w_tvc) / bw.omega_dvc;
        } else {
            c.ordering = BandwidthOrdering::TvcDvcFastPllSlow;
            c.separation_ratio = std::min(bw.omega_dvc, w_tvc) / bw.omega_pll;
        }
    }
    c.advisory = c.separation_ratio < kSeparationThreshold;
    return c;
}

double alg_pll_fast(double i_d, const SystemParams& p) {
    const double s = p.x_g * i_d / p.u_g;
    if (std::abs(s) > 1.0)
        throw DomainError("alg_pll_fast: no locked angle, |X_g i_d| > U_g (i_d = " +
                          std::to_string(i_d) + ")");
    return std::asin(s);
}

double alg_dvc_fast(double delta, double i_q, const SystemParams& p) {
    const double c = std::cos(delta);
    if (c <= kCosTol)
        throw DomainError("alg_dvc_fast: cos(delta) <= tolerance at delta = " +
                          std::to_string(delta));
    return (p.p_in + i_q * p.u_g * std::sin(delta)) / (p.u_g * c);
}

double alg_tvc(double delta, const SystemParams& p) {
    return -p.k_v / (p.k_v * p.x_g + 1.0) * (p.v_t_ref - p.u_g * std::cos(delta));
}

double p_of_id(double i_d, double i_q, const SystemParams& p) {
    const double xi = p.x_g * i_d;
    const double disc = p.u_g * p.u_g - xi * xi;
    if (disc < 0)
        throw DomainError("p_of_id: |X_g i_d| > U_g (i_d = " + std::to_string(i_d) + ")");
    return i_d * std::sqrt(disc) - i_d * i_q * p.x_g;
}

double h_of_delta(double delta, double i_q, const SystemParams& p) {
    return 0.5 * p.u_g * p.u_g * std::sin(2.0 * delta) -
           i_q * p.x_g * p.u_g * std::sin(delta);
}

double p_prime_of_id(double i_d, const SystemParams& p) {
    const double xi = p.x_g * i_d;
    const double disc = p.u_g * p.u_g - xi * xi;
    if (disc < 0)
        throw DomainError("p_prime_of_id: |X_g i_d| > U_g (i_d = " + std::to_string(i_d) + ")");
    const double blend = p.k_v * p.x_g + 1.0;
    return i_d * std::sqrt(disc) / blend + p.k_v * p.x_g * p.v_t_ref * i_d / blend;
}

double h_prime_of_delta(double delta, const SystemParams& p) {
    const double kvx = p.k_v * p.x_g;
    return kvx / (1.0 + kvx) * p.v_t_ref * p.u_g * std::sin(delta) +
           h_of_delta(delta, 0.0, p) / (1.0 + kvx);
}

double lambda_of_delta(double delta, double i_q, const SystemParams& p) {
    return p.u_g * std::cos(delta) -
           p.k_p_pll * p.l_g_over_ws * (p.p_in + i_q * p.u_g * std::sin(delta));
}

namespace {

ReducedState dvc_slow_rhs(const ReducedState& s, const SystemParams& p, bool tvc) {
    const double power = tvc ? p_prime_of_id(s.c0, p) : p_of_id(s.c0, p.i_q_fixed, p);
    const double raw = 2.0 / p.c_tilde() * (p.p_in - power);
    return {p.k_i_dvc * s.c1 + p.k_p_dvc * raw, raw};
}

ReducedState pll_slow_rhs(const ReducedState& s, const SystemParams& p, bool tvc) {
    const double delta = s.c0;
    const double x_int = s.c1;
    const double i_q = tvc ? alg_tvc(delta, p) : p.i_q_fixed;

    // The eliminated DVC cannot source more than the current limit. Past the
    // rail the fast block parks at +-i_limit and the PLL sees a constant
    // current; the two branches agree exactly at |i_alg| = i_limit.
    const double cos_d = std::cos(delta);
    const double num = p.p_in + i_q * p.u_g * std::sin(delta);
    const bool railed = std::abs(num) >= p.limits.i_limit * p.u_g * std::abs(cos_d) ||
                        cos_d <= 0.0;
    if (railed) {
        const double i_rail =
            std::copysign(p.limits.i_limit, cos_d > 0 ? num : p.p_in);
        const double denom = 1.0 - p.k_p_pll * p.l_g_over_ws * i_rail;
        if (std::abs(denom) <= kLambdaTol)
            throw SingularityError(
                "rhs_reduced: PLL algebraic-loop denominator at tolerance, i_d rail = " +
                std::to_string(i_rail));
        const double a = p.x_g * i_rail - p.u_g * std::sin(delta);
        const double delta_dot = (p.k_p_pll * a + x_int) / denom;
        const double v_tq = (a + x_int * i_rail * p.l_g_over_ws) / denom;
        return {delta_dot, p.k_i_pll * v_tq};
    }

    const double lam = lambda_of_delta(delta, i_q, p);
    if (lam <= kLambdaTol)
        throw SingularityError("rhs_reduced: lambda(delta) <= tolerance at delta = " +
                               std::to_string(delta));
    const double drive = p.x_g * p.p_in -
                         (tvc ? h_prime_of_delta(delta, p) : h_of_delta(delta, i_q, p));
    const double u_cos = p.u_g * cos_d;
    const double delta_dot = (p.k_p_pll * drive + x_int * u_cos) / lam;
    const double v_tq = (drive + x_int * p.l_g_over_ws *
                                     (p.p_in + i_q * p.u_g * std::sin(delta))) / lam;
    return {delta_dot, p.k_i_pll * v_tq};
}

}  // namespace

ReducedState rhs_reduced(BandwidthOrdering o, const ReducedState& s,
                         const SystemParams& p, bool* validity_ok) {
    if (validity_ok) {
        if (is_dvc_slow(o)) {
            *validity_ok = pll_fast_validity(s.c0, p).ok;
        } else {
            *validity_ok = std::cos(s.c0) > kCosTol;
        }
    }
    switch (o) {
        case BandwidthOrdering::PllFastDvcSlow: return dvc_slow_rhs(s, p, false);
        case BandwidthOrdering::PllTvcFastDvcSlow: return dvc_slow_rhs(s, p, true);
        case BandwidthOrdering::DvcFastPllSlow: return pll_slow_rhs(s, p, false);
        case BandwidthOrdering::TvcDvcFastPllSlow: return pll_slow_rhs(s, p, true);
    }
    throw std::logic_error("rhs_reduced: bad ordering");
}

ValidityResult pll_fast_validity(double i_d, const SystemParams& p) {
    ValidityResult r;
    if (!(i_d < p.u_g / p.x_g)) {
        r.ok = false;
        r.violated_clause = 1;
        return r;
    }
    const double xi = p.x_g * i_d;
    const double rhs2 = std::sqrt(p.u_g * p.u_g - xi * xi) / (p.zeta_pll * p.l_g_over_ws);
    if (!(i_d < rhs2)) {
        r.ok = false;
        r.violated_clause = 2;
        return r;
    }
    if (!(i_d < 1.0 / (p.omega_pll * p.l_g_over_ws))) {
        r.ok = false;
        r.violated_clause = 3;
        return r;
    }
    return r;
}

std::string ValidityResult::describe() const {
    switch (violated_clause) {
        case 0: return "ok";
        case 1: return "i_d >= U_g/X_g";
        case 2: return "i_d >= sqrt(U_g^2-(X_g i_d)^2)/(zeta_pll L_g/w_s)";
        case 3: return "i_d >= 1/(omega_pll L_g/w_s)";
    }
    return "?";
}

ReducedState project_slow(BandwidthOrdering o, const FullState& s) {
    return is_dvc_slow(o) ? ReducedState{s.i_d, s.dv2}
                          : ReducedState{s.delta, s.x_int_pll};
}

FullState lift_slow(BandwidthOrdering o, const ReducedState& s, const SystemParams& p) {
    FullState f;
    if (is_dvc_slow(o)) {
        f.i_d = s.c0;
        f.dv2 = s.c1;
        f.delta = alg_pll_fast(s.c0, p);
        f.x_int_pll = 0.0;
        f.i_q = ordering_uses_tvc(o) ? alg_tvc(f.delta, p) : p.i_q_fixed;
    } else {
        f.delta = s.c0;
        f.x_int_pll = s.c1;
        f.i_q = ordering_uses_tvc(o) ? alg_tvc(s.c0, p) : p.i_q_fixed;
        // Matches the railed branch of the slow PLL dynamics: the implied
        // current saturates at the limiter instead of following the algebraic
        // map past it.
        try {
            const double i_alg = alg_dvc_fast(s.c0, f.i_q, p);
            f.i_d = std::clamp(i_alg, -p.limits.i_limit, p.limits.i_limit);
        } catch (const DomainError&) {
            f.i_d = std::copysign(p.limits.i_limit, p.p_in);
        }
        f.dv2 = 0.0;
    }
    return f;
}

namespace {

// Fast block integrated with the slow coordinates frozen, used for the
// quadrature corrections of the PLL-slow orderings.
struct FastSim {
    double i_d, dv2, i_q;
};

BoundaryLayerCorrection closed_form_pll_layer(BandwidthOrdering o,
                                              const FullState& s0,
                                              const SystemParams& p) {
    const double i_d0 = s0.i_d;
    const double delta_bar = alg_pll_fast(i_d0, p);
    const double denom = 1.0 - p.k_p_pll * p.l_g_over_ws * i_d0;
    const double rate = p.k_p_pll * p.u_g * std::cos(delta_bar) / denom;
    const double i_q0 = ordering_uses_tvc(o) ? s0.i_q : p.i_q_fixed;
    // dp/ddelta at the locked point; the layer perturbs power by this slope.
    const double dp_ddelta = -i_d0 * p.u_g * std::sin(delta_bar) -
                             i_q0 * p.u_g * std::cos(delta_bar);
    const double area = (s0.delta - delta_bar) / rate;  // integral of the delta transient
    BoundaryLayerCorrection c;
    c.decay_rate = rate;
    c.offset1 = 2.0 / p.c_tilde() * dp_ddelta * area * -1.0;  // dv2 deficit vs reduced
    c.offset0 = p.k_p_dvc * 2.0 / p.c_tilde() * dp_ddelta * area * -1.0;
    return c;
}

BoundaryLayerCorrection quadrature_pll_slow_layer(BandwidthOrdering o,
                                                  const FullState& s0,
                                                  const SystemParams& p) {
    const bool tvc = ordering_uses_tvc(o);
    const double delta0 = s0.delta;
    const double x0 = s0.x_int_pll;
    const double sin_d = std::sin(delta0);
    const double cos_d = std::cos(delta0);
    if (cos_d <= kCosTol)
        throw DomainError("boundary_layer_correction: cos(delta) <= tolerance");

    const double iq_bar = tvc ? alg_tvc(delta0, p) : p.i_q_fixed;
    const double id_bar = alg_dvc_fast(delta0, iq_bar, p);

    auto slow_rates = [&](double i_d) {
        const double denom = 1.0 - p.k_p_pll * p.l_g_over_ws * i_d;
        const double a = p.x_g * i_d - p.u_g * sin_d;  // resistance dropped in reductions
        const double delta_dot = (p.k_p_pll * a + x0) / denom;
        const double v_tq = (a + x0 * i_d * p.l_g_over_ws) / denom;
        return std::array<double, 2>{delta_dot, p.k_i_pll * v_tq};
    };
    const auto qss = slow_rates(id_bar);

    auto fast_rhs = [&](const FastSim& f) {
        const double power = f.i_d * p.u_g * cos_d - f.i_q * p.u_g * sin_d;
        const double raw = 2.0 / p.c_tilde() * (p.p_in - power);
        FastSim d;
        d.i_d = p.k_i_dvc * f.dv2 + p.k_p_dvc * raw;
        d.dv2 = raw;
        d.i_q = tvc ? p.omega_tvc * (-f.i_q + p.k_v * (p.u_g * cos_d - p.x_g * f.i_q -
                                                       p.v_t_ref))
                    : 0.0;
        return d;
    };

    // Slowest fast pole sets the layer width.
    double fast_rate = 0.25 * p.omega_dvc * p.u_g * cos_d;
    if (tvc) fast_rate = std::min(fast_rate, p.omega_tvc * (1.0 + p.k_v * p.x_g));
    const double t_max = 10.0 / fast_rate;
    const int n = 20000;
    const double h = t_max / n;

    FastSim f{s0.i_d, s0.dv2, tvc ? s0.i_q : p.i_q_fixed};
    double acc0 = 0, acc1 = 0;
    double tail0 = 0, tail1 = 0;
    auto integrand = [&](const FastSim& g) {
        const auto r = slow_rates(g.i_d);
        return std::array<double, 2>{r[0] - qss[0], r[1] - qss[1]};
    };
    // Running integrals sampled along the march; the ringing fast block makes
    // the tail integral non-monotone, so a scalar rate cannot stand in for it.
    const int stride = n / 1000;
    std::vector<double> samp_t{0.0}, samp0{0.0}, samp1{0.0};
    auto prev = integrand(f);
    for (int k = 0; k < n; ++k) {
        // RK4 on the frozen-slow fast block
        auto add = [](const FastSim& a, const FastSim& b, double w) {
            return FastSim{a.i_d + w * b.i_d, a.dv2 + w * b.dv2, a.i_q + w * b.i_q};
        };
        const FastSim k1 = fast_rhs(f);
        const FastSim k2 = fast_rhs(add(f, k1, 0.5 * h));
        const FastSim k3 = fast_rhs(add(f, k2, 0.5 * h));
        const FastSim k4 = fast_rhs(add(f, k3, h));
        f.i_d += h / 6.0 * (k1.i_d + 2 * k2.i_d + 2 * k3.i_d + k4.i_d);
        f.dv2 += h / 6.0 * (k1.dv2 + 2 * k2.dv2 + 2 * k3.dv2 + k4.dv2);
        f.i_q += h / 6.0 * (k1.i_q + 2 * k2.i_q + 2 * k3.i_q + k4.i_q);
        const auto cur = integrand(f);
        acc0 += 0.5 * h * (prev[0] + cur[0]);
        acc1 += 0.5 * h * (prev[1] + cur[1]);
        if ((k + 1) % stride == 0) {
            samp_t.push_back((k + 1) * h);
            samp0.push_back(acc0);
            samp1.push_back(acc1);
        }
        if (k >= n - n / 10) {
            tail0 += 0.5 * h * std::abs(prev[0] + cur[0]);
            tail1 += 0.5 * h * std::abs(prev[1] + cur[1]);
        }
        prev = cur;
    }
    const double scale0 = std::max(std::abs(acc0), 1e-12);
    const double scale1 = std::max(std::abs(acc1), 1e-12);
    if (tail0 > 1e-3 * scale0 + 1e-12 || tail1 > 1e-3 * scale1 + 1e-12)
        throw ConvergenceError(
            "boundary_layer_correction: quadrature tail not decayed within horizon");

    BoundaryLayerCorrection c;
    c.offset0 = acc0;
    c.offset1 = acc1;
    c.decay_rate = fast_rate;
    c.tau = std::move(samp_t);
    c.rem0.reserve(samp0.size());
    c.rem1.reserve(samp1.size());
    for (double m : samp0) c.rem0.push_back(acc0 - m);
    for (double m : samp1) c.rem1.push_back(acc1 - m);
    return c;
}

double remaining_profile(const std::vector<double>& tau, const std::vector<double>& rem,
                         double offset, double decay, double t) {
    if (tau.empty()) return offset * std::exp(-decay * std::max(t, 0.0));
    if (t <= tau.front()) return rem.front();
    if (t >= tau.back()) return 0;
    // Samples lie on a uniform grid.
    const double step = tau[1] - tau[0];
    const auto i = std::min(static_cast<std::size_t>(t / step), rem.size() - 2);
    const double w = (t - tau[i]) / step;
    return rem[i] + w * (rem[i + 1] - rem[i]);
}

}  // namespace

double BoundaryLayerCorrection::remaining0(double t) const {
    return remaining_profile(tau, rem0, offset0, decay_rate, t);
}

double BoundaryLayerCorrection::remaining1(double t) const {
    return remaining_profile(tau, rem1, offset1, decay_rate, t);
}

BoundaryLayerCorrection boundary_layer_correction(BandwidthOrdering o,
                                                  const FullState& full_initial,
                                                  const SystemParams& p) {
    if (is_dvc_slow(o)) return closed_form_pll_layer(o, full_initial, p);
    return quadrature_pll_slow_layer(o, full_initial, p);
}

}  // namespace gflstab
