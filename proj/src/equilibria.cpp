#include "gflstab/equilibria.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gflstab {

namespace {

constexpr double kCoordTol = 1e-12;
constexpr double kMergeTol = 1e-9;

// Golden-section argmax of a unimodal curve on [lo, hi].
template <typename F>
double argmax(F&& f, double lo, double hi) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-13 * std::max(1.0, std::abs(b))) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Bisection with secant refinement for f(x) = target on a monotone stretch.
template <typename F>
double solve_on(F&& f, double lo, double hi, double target) {
    double flo = f(lo) - target;
    double fhi = f(hi) - target;
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if (flo * fhi > 0)
        throw ConvergenceError("equilibria: root bracket lost (f(lo)-target = " +
                               std::to_string(flo) + ", f(hi)-target = " +
                               std::to_string(fhi) + ")");
    for (int it = 0; it < 200 && hi - lo > kCoordTol; ++it) {
        double mid;
        // secant candidate, fall back to bisection when it leaves the bracket
        const double sec = lo - flo * (hi - lo) / (fhi - flo);
        if (sec > lo + 0.01 * (hi - lo) && sec < hi - 0.01 * (hi - lo))
            mid = sec;
        else
            mid = 0.5 * (lo + hi);
        const double fm = f(mid) - target;
        if (fm == 0) return mid;
        if (flo * fm < 0) {
            hi = mid; fhi = fm;
        } else {
            lo = mid; flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

template <typename F>
EquilibriumPair pair_from_curve(F&& f, double lo_edge, double hi_edge, double target) {
    EquilibriumPair pair;
    const double x_max = argmax(f, lo_edge, hi_edge);
    const double f_max = f(x_max);
    pair.margin = f_max - target;
    if (pair.margin < -kMergeTol) {
        pair.exists = false;
        return pair;
    }
    if (std::abs(pair.margin) <= kMergeTol) {
        pair.exists = true;
        pair.saddle_node = true;
        pair.margin = 0;
        pair.sep = {x_max, 0.0};
        pair.uep = {x_max, 0.0};
        return pair;
    }
    pair.exists = true;
    pair.sep = {solve_on(f, lo_edge, x_max, target), 0.0};
    pair.uep = {solve_on(f, x_max, hi_edge, target), 0.0};
    if (pair.uep.c0 - pair.sep.c0 < kMergeTol) pair.saddle_node = true;
    return pair;
}

}  // namespace

EquilibriumPair find_dvc_equilibria(const SystemParams& p, bool use_tvc) {
    const double edge = p.u_g / p.x_g;
    auto curve = [&](double i_d) {
        return use_tvc ? p_prime_of_id(i_d, p) : p_of_id(i_d, p.i_q_fixed, p);
    };
    return pair_from_curve(curve, 0.0, edge, p.p_in);
}

EquilibriumPair find_pll_equilibria(const SystemParams& p, bool use_tvc) {
    auto curve = [&](double d) {
        return use_tvc ? h_prime_of_delta(d, p) : h_of_delta(d, p.i_q_fixed, p);
    };
    return pair_from_curve(curve, 0.0, 0.5 * kPi, p.x_g * p.p_in);
}

double existence_threshold(const SystemParams& p) {
    return std::sqrt(2.0 * p.p_in * p.x_g);
}

namespace {

FullState newton_full(const SystemParams& p, bool tvc, FullState x) {
    const int n = tvc ? 5 : 4;  // i_q is frozen without TVC
    auto residual = [&](const FullState& s) {
        const FullState d = rhs_full(s, p, tvc);
        return d.to_array();
    };
    auto norm = [&](const std::array<double, 5>& r) {
        double m = 0;
        for (int i = 0; i < n; ++i) m = std::max(m, std::abs(r[i]));
        return m;
    };

    auto get = [](FullState& s, int i) -> double& {
        switch (i) {
            case 0: return s.delta;
            case 1: return s.x_int_pll;
            case 2: return s.i_d;
            case 3: return s.dv2;
            default: return s.i_q;
        }
    };

    for (int iter = 0; iter < 60; ++iter) {
        const auto r0 = residual(x);
        const double n0 = norm(r0);
        if (n0 < 1e-11) return x;

        // central-difference Jacobian
        double jac[5][5];
        for (int j = 0; j < n; ++j) {
            FullState xp = x, xm = x;
            const double h = 1e-7 * std::max(1.0, std::abs(get(x, j)));
            get(xp, j) += h;
            get(xm, j) -= h;
            const auto rp = residual(xp);
            const auto rm = residual(xm);
            for (int i = 0; i < n; ++i) jac[i][j] = (rp[i] - rm[i]) / (2 * h);
        }

        // Gaussian elimination with partial pivoting on J dx = -r
        double a[5][6];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a[i][j] = jac[i][j];
            a[i][n] = -r0[i];
        }
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int i = col + 1; i < n; ++i)
                if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
            if (std::abs(a[piv][col]) < 1e-14)
                throw NoEquilibriumError("full_equilibrium: singular Jacobian");
            if (piv != col)
                for (int j = col; j <= n; ++j) std::swap(a[piv][j], a[col][j]);
            for (int i = col + 1; i < n; ++i) {
                const double f = a[i][col] / a[col][col];
                for (int j = col; j <= n; ++j) a[i][j] -= f * a[col][j];
            }
        }
        double dx[5] = {0, 0, 0, 0, 0};
        for (int i = n - 1; i >= 0; --i) {
            double s = a[i][n];
            for (int j = i + 1; j < n; ++j) s -= a[i][j] * dx[j];
            dx[i] = s / a[i][i];
        }

        // damped update
        double lambda = 1.0;
        for (int bt = 0; bt < 30; ++bt) {
            FullState trial = x;
            for (int j = 0; j < n; ++j) get(trial, j) += lambda * dx[j];
            bool ok = true;
            double n1 = 0;
            try {
                n1 = norm(residual(trial));
            } catch (const std::exception&) {
                ok = false;
            }
            if (ok && n1 < n0) {
                x = trial;
                break;
            }
            lambda *= 0.5;
            if (bt == 29)
                throw NoEquilibriumError(
                    "full_equilibrium: Newton stalled, residual = " + std::to_string(n0));
        }
    }
    throw NoEquilibriumError("full_equilibrium: no convergence in 60 iterations");
}

FullState seed_and_solve(const SystemParams& p, bool tvc, bool stable) {
    const EquilibriumPair pair = find_dvc_equilibria(p, tvc);
    if (!pair.exists)
        throw NoEquilibriumError(
            "full_equilibrium: no equilibrium, U_g = " + std::to_string(p.u_g) +
            " is below the existence threshold " +
            std::to_string(existence_threshold(p)) + " (curve margin " +
            std::to_string(pair.margin) + ")");
    const ReducedState seed_red = stable ? pair.sep : pair.uep;
    FullState seed = lift_slow(
        tvc ? BandwidthOrdering::PllTvcFastDvcSlow : BandwidthOrdering::PllFastDvcSlow,
        seed_red, p);
    return newton_full(p, tvc, seed);
}

}  // namespace

FullState full_equilibrium(const SystemParams& p, bool tvc_enabled) {
    return seed_and_solve(p, tvc_enabled, true);
}

FullState full_equilibrium_unstable(const SystemParams& p, bool tvc_enabled) {
    return seed_and_solve(p, tvc_enabled, false);
}

EquilibriumClassification classify_equilibrium(const ReducedState& point,
                                               const PlaneRhs& rhs) {
    double jac[2][2];
    const double h0 = 1e-6 * std::max(1.0, std::abs(point.c0));
    const double h1 = 1e-6 * std::max(1.0, std::abs(point.c1));
    {
        const ReducedState fp = rhs({point.c0 + h0, point.c1});
        const ReducedState fm = rhs({point.c0 - h0, point.c1});
        jac[0][0] = (fp.c0 - fm.c0) / (2 * h0);
        jac[1][0] = (fp.c1 - fm.c1) / (2 * h0);
    }
    {
        const ReducedState fp = rhs({point.c0, point.c1 + h1});
        const ReducedState fm = rhs({point.c0, point.c1 - h1});
        jac[0][1] = (fp.c0 - fm.c0) / (2 * h1);
        jac[1][1] = (fp.c1 - fm.c1) / (2 * h1);
    }
    const double tr = jac[0][0] + jac[1][1];
    const double det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    const double disc = tr * tr - 4 * det;

    EquilibriumClassification c{};
    const double scale = std::max({std::abs(jac[0][0]), std::abs(jac[0][1]),
                                   std::abs(jac[1][0]), std::abs(jac[1][1]), 1e-30});
    c.defective_warning = std::abs(disc) < 1e-9 * scale * scale;

    if (disc >= 0) {
        const double rt = std::sqrt(disc);
        c.eigenvalues = {std::complex<double>(0.5 * (tr + rt), 0),
                         std::complex<double>(0.5 * (tr - rt), 0)};
    } else {
        const double im = 0.5 * std::sqrt(-disc);
        c.eigenvalues = {std::complex<double>(0.5 * tr, im),
                         std::complex<double>(0.5 * tr, -im)};
    }

    if (det < 0) {
        c.kind = EquilibriumKind::Saddle;
    } else if (tr < 0) {
        c.kind = disc >= 0 ? EquilibriumKind::StableNode : EquilibriumKind::StableFocus;
    } else {
        c.kind = EquilibriumKind::Unstable;
    }
    return c;
}

EquilibriumClassification classify_equilibrium(const ReducedState& point,
                                               BandwidthOrdering o,
                                               const SystemParams& p) {
    return classify_equilibrium(
        point, [o, &p](const ReducedState& s) { return rhs_reduced(o, s, p); });
}

}  // namespace gflstab
