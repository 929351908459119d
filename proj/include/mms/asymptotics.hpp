#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "mms/common.hpp"
#include "mms/functionals.hpp"
#include "mms/space.hpp"

namespace mms {

// mu-weighted average of f over the strict ball B(i, delta); the canonical
// mollifier on a metric measure space. delta below the minimum spacing makes
// it the identity, delta beyond the diameter makes it the global mean.
inline ScalarField ball_average(const MetricMeasureSpace& space, const ScalarField& f, double delta) {
    check_field(space, f);
    if (!(delta > 0.0)) throw ValidationError("ball_average: delta must be positive");
    const std::size_t n = space.size();
    ScalarField out(n, 0.0);
    parallel::for_each_row(n, [&](std::size_t i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (space.rho(i, j) < delta) {
                num += f[j] * space.weight(j);
                den += space.weight(j);
            }
        out[i] = num / den;  // den >= mu_i > 0
    });
    return out;
}

// ---------------------------------------------------------------------------
// K-functional
// ---------------------------------------------------------------------------

struct KFunctionalCurve {
    std::vector<double> t;
    std::vector<double> k;           // computed upper bound on K(t)
    std::vector<double> delta_star;  // minimizing mollification scale per t
    double x0_norm = 0.0;            // ||Lip f||_{L^p}
    double x1_norm = 0.0;            // [f]_{W^{s1,p1}}
    bool monotone_ok = false;
    bool concave_ok = false;
    bool endpoints_ok = false;       // K(t) <= min(x0, t x1) pointwise
    bool identity_mollifier_used = false;
};

// K(t) ~ min over a mollification family of ||Lip(f - f_d)||_{L^p} +
// t [f_d]_{W^{s1,p1}}. A minimum of affine functions of t, hence monotone
// and concave by construction; both endpoint decompositions (f_d = f and
// f_d = mean) are always in the candidate set.
inline KFunctionalCurve k_functional(const MetricMeasureSpace& space, const ScalarField& f,
                                     double s1, double p1, double p,
                                     const std::vector<double>& t_grid,
                                     std::vector<double> delta_grid = {}) {
    check_field(space, f);
    if (t_grid.empty()) throw ValidationError("k_functional: empty t grid");
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        if (!(t_grid[k] > 0.0)) throw ValidationError("k_functional: t grid must be positive");
        if (k > 0 && t_grid[k] <= t_grid[k - 1])
            throw ValidationError("k_functional: t grid must be ascending");
    }
    if (delta_grid.empty()) {
        const double lo = 0.5 * space.min_positive_distance();
        const double hi = 2.0 * space.diameter();
        const int m = 33;
        for (int i = 0; i < m; ++i)
            delta_grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (m - 1)));
    }
    for (double d : delta_grid)
        if (!(d > 0.0)) throw ValidationError("k_functional: delta grid must be positive");

    KFunctionalCurve curve;
    curve.t = t_grid;
    curve.x0_norm = std::pow(lipschitz_lp_energy(space, lipschitz_field(space, f), p), 1.0 / p);
    curve.x1_norm = fractional_seminorm(space, f, s1, p1);

    std::vector<double> a(delta_grid.size()), b(delta_grid.size());
    for (std::size_t d = 0; d < delta_grid.size(); ++d) {
        if (delta_grid[d] < space.min_positive_distance()) curve.identity_mollifier_used = true;
        const ScalarField fd = ball_average(space, f, delta_grid[d]);
        ScalarField f0(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) f0[i] = f[i] - fd[i];
        a[d] = std::pow(lipschitz_lp_energy(space, lipschitz_field(space, f0), p), 1.0 / p);
        b[d] = fractional_seminorm(space, fd, s1, p1);
    }

    for (double t : t_grid) {
        double best = std::numeric_limits<double>::infinity();
        double best_d = delta_grid[0];
        for (std::size_t d = 0; d < delta_grid.size(); ++d) {
            const double v = a[d] + t * b[d];
            if (v < best) {
                best = v;
                best_d = delta_grid[d];
            }
        }
        curve.k.push_back(best);
        curve.delta_star.push_back(best_d);
    }

    curve.monotone_ok = true;
    curve.endpoints_ok = true;
    curve.concave_ok = true;
    for (std::size_t i = 0; i < curve.k.size(); ++i) {
        if (i > 0 && curve.k[i] < curve.k[i - 1] * (1.0 - 1e-12)) curve.monotone_ok = false;
        const double cap = std::min(curve.x0_norm, curve.t[i] * curve.x1_norm);
        if (curve.k[i] > cap * (1.0 + 1e-12) + 1e-300) curve.endpoints_ok = false;
        if (i > 0 && i + 1 < curve.k.size()) {
            // chord test: K at t_i must lie on or above the chord of its neighbors
            const double w = (curve.t[i] - curve.t[i - 1]) / (curve.t[i + 1] - curve.t[i - 1]);
            const double chord = (1.0 - w) * curve.k[i - 1] + w * curve.k[i + 1];
            if (curve.k[i] < chord * (1.0 - 1e-10) - 1e-300) curve.concave_ok = false;
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Interpolation inequality
// ---------------------------------------------------------------------------

struct InterpolationReport {
    double s = 0.0, p = 0.0;
    double lhs = 0.0;        // [f]_{W^{s,p}}
    double lip_norm = 0.0;   // ||Lip f||_{L^p}
    double x1_energy = 0.0;  // [f]_{W^{s1,p1}}^{p1}
    double rhs_core = 0.0;   // lip_norm^theta * x1_energy^{(1-theta)/p1}
    double c_emp = 0.0;
};

// s = (1-theta) s1 + theta, 1/p = (1-theta)/p1 + theta.
inline InterpolationReport interpolation_inequality_report(const MetricMeasureSpace& space,
                                                           const ScalarField& f, double s1,
                                                           double p1, double theta) {
    if (!(theta > 0.0 && theta < 1.0))
        throw ValidationError("interpolation: theta must be in (0,1)");
    if (!(s1 > 0.0 && s1 < 1.0)) throw ValidationError("interpolation: s1 must be in (0,1)");
    if (!(p1 > 1.0)) throw ValidationError("interpolation: p1 must exceed 1");
    InterpolationReport rep;
    rep.s = (1.0 - theta) * s1 + theta;
    rep.p = 1.0 / ((1.0 - theta) / p1 + theta);
    rep.lhs = fractional_seminorm(space, f, rep.s, rep.p);
    rep.lip_norm =
        std::pow(lipschitz_lp_energy(space, lipschitz_field(space, f), rep.p), 1.0 / rep.p);
    rep.x1_energy = std::pow(fractional_seminorm(space, f, s1, p1), p1);
    rep.rhs_core = std::pow(rep.lip_norm, theta) * std::pow(rep.x1_energy, (1.0 - theta) / p1);
    rep.c_emp = rep.rhs_core > 0.0 ? rep.lhs / rep.rhs_core : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Bourgain-Brezis-Mironescu limit
// ---------------------------------------------------------------------------

// integral of |e . theta|^p over the unit sphere S^{n-1}
inline double angular_constant(int n, double p) {
    if (n == 1) return 2.0;  // S^0 is two points, |+-1|^p = 1 each
    if (n == 2) {
        // Simpson rule on int_0^{2pi} |cos|^p; exact pi at p = 2
        const int m = 20000;
        const double h = 2.0 * std::numbers::pi / m;
        double acc = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
            acc += w * std::pow(std::fabs(std::cos(k * h)), p);
        }
        return acc * h / 3.0;
    }
    if (n == 3) return 4.0 * std::numbers::pi / (p + 1.0);
    throw ValidationError("angular_constant: n must be 1..3");
}

// Least-squares fit through the origin of V(i,r) against r^n, over the least
// eccentric half of the points and mid-range radii. Measures the Ahlfors
// normalization instead of assuming it.
inline double ahlfors_constant(const MetricMeasureSpace& space, int n) {
    const std::size_t np = space.size();
    std::vector<double> ecc(np, 0.0);
    for (std::size_t i = 0; i < np; ++i)
        for (std::size_t j = 0; j < np; ++j) ecc[i] = std::max(ecc[i], space.rho(i, j));
    std::vector<double> sorted = ecc;
    std::sort(sorted.begin(), sorted.end());
    const double cutoff = sorted[np / 2];
    const double lo = 2.0 * space.min_positive_distance();
    const double hi = space.diameter() / 4.0;
    if (!(hi > lo)) throw ValidationError("ahlfors_constant: too few scales");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < np; ++i) {
        if (ecc[i] > cutoff) continue;
        for (int k = 0; k < 16; ++k) {
            const double r = lo * std::pow(hi / lo, k / 15.0);
            const double rn = std::pow(r, n);
            num += space.ball_volume(i, r) * rn;
            den += rn * rn;
        }
    }
    return num / den;
}

struct BbmSweep {
    std::vector<double> s_grid;
    std::vector<std::size_t> sizes;            // per family member
    std::vector<std::vector<double>> values;   // values[s_index][family_index] = (1-s)[f]^p
    std::vector<double> diagonal;              // values[k][k]
    double chat = 0.0;
    double angular = 0.0;
    double grad_integral = 0.0;  // int |grad f|^p dmu
    double target = 0.0;         // angular / (chat p) * grad_integral
    bool monotone_toward = false;
    bool final_within_10 = false;
};

// (1-s) [f]_{W^{s,p}}^p per (s, refinement), with the analytic target built
// from the measured Ahlfors constant of the finest grid. The family and the
// s grid must pair up one-to-one (finer grids for s nearer 1).
inline BbmSweep bbm_limit(const std::vector<MetricMeasureSpace>& family,
                          const std::vector<ScalarField>& fields, double p,
                          const std::vector<double>& s_grid,
                          double grad_lp_integral = std::numeric_limits<double>::quiet_NaN()) {
    if (family.empty() || family.size() != fields.size() || family.size() != s_grid.size())
        throw ValidationError("bbm_limit: family and s grid must align");
    for (double s : s_grid)
        if (!(s > 0.0 && s < 1.0)) throw ValidationError("bbm_limit: s must be in (0,1)");

    BbmSweep sweep;
    sweep.s_grid = s_grid;
    for (const auto& sp : family) sweep.sizes.push_back(sp.size());

    for (std::size_t si = 0; si < s_grid.size(); ++si) {
        std::vector<double> row;
        for (std::size_t fi = 0; fi < family.size(); ++fi) {
            const double semi = fractional_seminorm(family[fi], fields[fi], s_grid[si], p);
            row.push_back((1.0 - s_grid[si]) * std::pow(semi, p));
        }
        sweep.values.push_back(std::move(row));
    }
    for (std::size_t k = 0; k < family.size(); ++k) sweep.diagonal.push_back(sweep.values[k][k]);

    const MetricMeasureSpace& finest = family.back();
    const int n = finest.has_coords() ? finest.coord_dim() : 1;
    sweep.chat = ahlfors_constant(finest, n);
    sweep.angular = angular_constant(n, p);
    if (std::isnan(grad_lp_integral)) {
        if (!finest.grid_info())
            throw ValidationError("bbm_limit: gradient integral needs a grid family or an explicit value");
        const VectorField grad =
            anisotropic_gradient(finest, fields.back(), AnisotropyMatrix::identity(n));
        sweep.grad_integral = gradient_lp_energy(finest, grad, p);
    } else {
        sweep.grad_integral = grad_lp_integral;
    }
    sweep.target = sweep.angular / (sweep.chat * p) * sweep.grad_integral;

    sweep.monotone_toward = true;
    for (std::size_t k = 0; k + 1 < sweep.diagonal.size(); ++k)
        if (std::fabs(sweep.diagonal[k + 1] - sweep.target) >
            std::fabs(sweep.diagonal[k] - sweep.target) * (1.0 + 1e-12))
            sweep.monotone_toward = false;
    sweep.final_within_10 =
        std::fabs(sweep.diagonal.back() - sweep.target) <= 0.1 * sweep.target;
    return sweep;
}

// ---------------------------------------------------------------------------
// Sharpness via rescaled bumps
// ---------------------------------------------------------------------------

struct SharpnessTrace {
    std::vector<double> deltas;
    std::vector<std::size_t> sizes;
    std::vector<double> e_values;  // weak functional of the rescaled bump
    std::vector<double> s_values;  // sum Lip^p mu
    std::vector<double> ratios;
    double c_hat = 0.0;  // last ratio
    bool converged = false;
};

// f_delta(x) = f((x - x0)/delta) on unit-mass 1-D grids refined with delta so
// the bump keeps at least min_points_across samples over its support.
inline SharpnessTrace sharpness_trace(const std::function<double(double)>& bump, double x0,
                                      const std::vector<double>& deltas, double p,
                                      int min_points_across = 32) {
    if (deltas.empty()) throw ValidationError("sharpness_trace: empty delta sequence");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (!(deltas[k] > 0.0)) throw ValidationError("sharpness_trace: deltas must be positive");
        if (k > 0 && deltas[k] >= deltas[k - 1])
            throw ValidationError("sharpness_trace: deltas must be strictly decreasing");
    }
    SharpnessTrace trace;
    for (double d : deltas) {
        if (x0 - d < 0.0 || x0 + d > 1.0)
            throw ValidationError("sharpness_trace: rescaled bump leaves the unit interval");
        const std::size_t n =
            std::max<std::size_t>(65, static_cast<std::size_t>(
                                          std::ceil(min_points_across / (2.0 * d))) + 1);
        if (n > 200000) throw ValidationError("sharpness_trace: bump under-resolved at this delta");
        const double spacing = 1.0 / static_cast<double>(n - 1);
        const MetricMeasureSpace grid = MetricMeasureSpace::grid(
            1, static_cast<int>(n), spacing, {1.0 / static_cast<double>(n)});
        ScalarField f(n);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = bump((static_cast<double>(i) * spacing - x0) / d);
        trace.deltas.push_back(d);
        trace.sizes.push_back(n);
        trace.e_values.push_back(bvy_weak_functional(grid, f, p));
        trace.s_values.push_back(lipschitz_lp_energy(grid, lipschitz_field(grid, f), p));
        trace.ratios.push_back(trace.e_values.back() / trace.s_values.back());
    }
    trace.c_hat = trace.ratios.back();
    if (trace.ratios.size() >= 2) {
        const double a = trace.ratios[trace.ratios.size() - 2];
        const double b = trace.ratios.back();
        trace.converged = std::fabs(a - b) < 0.05 * std::fabs(b);
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Stability under perturbations
// ---------------------------------------------------------------------------

struct StabilityTable {
    std::vector<double> eps;
    std::vector<double> e_values;  // E(f + eps g)
    std::vector<double> diffs;     // |E(f + eps g) - E(f)|
    double e_base = 0.0;
    double perturbation_scale = 0.0;  // ||g||_inf + max Lip g
    bool eventually_decreasing = false;
    bool final_ok = false;
};

inline StabilityTable stability_test(const MetricMeasureSpace& space, const ScalarField& f,
                                     const ScalarField& g, const std::vector<double>& eps_seq,
                                     double p) {
    check_field(space, f, "f");
    check_field(space, g, "g");
    if (eps_seq.empty()) throw ValidationError("stability_test: empty epsilon sequence");
    for (std::size_t k = 1; k < eps_seq.size(); ++k)
        if (eps_seq[k] >= eps_seq[k - 1])
            throw ValidationError("stability_test: epsilons must be strictly decreasing");

    StabilityTable tab;
    tab.e_base = bvy_weak_functional(space, f, p);
    double ginf = 0.0;
    for (double v : g) ginf = std::max(ginf, std::fabs(v));
    const LipschitzField lg = lipschitz_field(space, g);
    double lmax = 0.0;
    for (double v : lg.values) lmax = std::max(lmax, v);
    tab.perturbation_scale = ginf + lmax;

    for (double e : eps_seq) {
        ScalarField fe(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) fe[i] = f[i] + e * g[i];
        tab.eps.push_back(e);
        tab.e_values.push_back(bvy_weak_functional(space, fe, p));
        tab.diffs.push_back(std::fabs(tab.e_values.back() - tab.e_base));
    }
    const std::size_t m = tab.diffs.size();
    if (m >= 3)
        tab.eventually_decreasing =
            tab.diffs[m - 3] >= tab.diffs[m - 2] && tab.diffs[m - 2] >= tab.diffs[m - 1];
    else if (m == 2)
        tab.eventually_decreasing = tab.diffs[0] >= tab.diffs[1];
    else
        tab.eventually_decreasing = true;
    tab.final_ok = tab.diffs.back() <=
                   10.0 * std::max(1.0, tab.e_base) * eps_seq.back() * tab.perturbation_scale;
    return tab;
}

}  // namespace mms
