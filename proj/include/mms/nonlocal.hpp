#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "mms/common.hpp"
#include "mms/functionals.hpp"
#include "mms/parallel.hpp"
#include "mms/space.hpp"

namespace mms {

struct NonlocalParams {
    double s = 0.5;
    double p = 2.0;

    void validate() const {
        if (!(s > 0.0 && s < 1.0)) throw ValidationError("nonlocal params: s must be in (0,1)");
        if (!(p >= 1.0)) throw ValidationError("nonlocal params: p must be >= 1");
    }
};

// (L f)_i = sum_{j != i} |f_i - f_j|^{p-2}(f_i - f_j)
//                        / (rho^{sp} V(i,rho)^{(p-1)/p}) mu_j
// The diagonal is omitted: the discrete principal value.
inline ScalarField apply_nonlocal_p_laplacian(const MetricMeasureSpace& space, const ScalarField& f,
                                              const NonlocalParams& prm) {
    prm.validate();
    if (space.size() < 2) throw ValidationError("nonlocal apply: need at least 2 points");
    check_field(space, f);
    const std::size_t n = space.size();
    const double sp = prm.s * prm.p;
    const double vexp = (prm.p - 1.0) / prm.p;
    ScalarField out(n, 0.0);
    parallel::for_each_row(n, [&](std::size_t i) {
        const RowProfile rp = space.row_profile(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double t = f[i] - f[j];
            if (t == 0.0) continue;  // |t|^{p-2} t -> 0 as t -> 0 for p >= 1
            const double kernel = std::pow(std::fabs(t), prm.p - 2.0) * t;
            acc += kernel / (std::pow(rp.dist[j], sp) * std::pow(rp.vol[j], vexp)) * space.weight(j);
        }
        out[i] = acc;
    });
    return out;
}

struct SolverOptions {
    int max_iters = 50000;
    double energy_rtol = 1e-10;   // stop when the accepted decrease is below this (relative)
    double grad_tol = 1e-8;       // stop on weighted-l2 stationarity residual
    double armijo = 1e-4;
    bool validate_gradient = true;
    double smoothing = 1e-8;      // kernel smoothing scale factor for p in (1,2)
};

struct SolveReport {
    ScalarField u;
    double energy = 0.0;
    double grad_norm = 0.0;           // weighted l2 of the stationarity residual grad J / mu
    double operator_residual = 0.0;   // || L_{s,p} u - rhs || weighted l2 on the interior
    int iterations = 0;
    bool converged = false;
    std::vector<double> energy_trace;  // J per accepted iterate, nonincreasing
    std::vector<double> step_trace;    // accepted step sizes
};

// Minimizes J(u) = (1/p) sum_{i!=j} |u_i-u_j|^p / (rho^{sp} V(i,rho)^{(p-1)/p}) mu_i mu_j
//                  - sum_i rhs_i u_i mu_i
// over fields matching the boundary values. Gradient descent with Armijo
// backtracking; the initial trial step is a Barzilai-Borwein estimate. The
// kernel keeps the first-argument V normalization of the energy and the
// gradient is derived from it directly (both orientations of each pair).
inline SolveReport solve_dirichlet(const MetricMeasureSpace& space, const ScalarField& rhs,
                                   const std::map<std::size_t, double>& boundary,
                                   const NonlocalParams& prm, const SolverOptions& opt = {}) {
    prm.validate();
    check_field(space, rhs, "rhs");
    if (boundary.empty()) throw ValidationError("solve_dirichlet: boundary set is empty");
    const std::size_t n = space.size();
    std::vector<bool> is_bdry(n, false);
    double bdry_sum = 0.0, bdry_max = 0.0;
    for (const auto& [id, val] : boundary) {
        if (id >= n) throw ValidationError("solve_dirichlet: boundary id out of range");
        if (!std::isfinite(val)) throw ValidationError("solve_dirichlet: non-finite boundary value");
        is_bdry[id] = true;
        bdry_sum += val;
        bdry_max = std::max(bdry_max, std::fabs(val));
    }
    std::vector<std::size_t> interior;
    for (std::size_t i = 0; i < n; ++i)
        if (!is_bdry[i]) interior.push_back(i);
    if (interior.empty()) throw ValidationError("solve_dirichlet: empty interior");

    // symmetrized pair weights omega_ij = W(i,j) + W(j,i),
    // W(i,j) = 1 / (rho^{sp} V(i,rho)^{(p-1)/p})
    const double sp = prm.s * prm.p;
    const double vexp = (prm.p - 1.0) / prm.p;
    std::vector<double> omega(n * n, 0.0);
    parallel::for_each_row(n, [&](std::size_t i) {
        const RowProfile rp = space.row_profile(i);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) omega[i * n + j] = 1.0 / (std::pow(rp.dist[j], sp) * std::pow(rp.vol[j], vexp));
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = omega[i * n + j] + omega[j * n + i];
            omega[i * n + j] = w;
            omega[j * n + i] = w;
        }

    const double eps = prm.p < 2.0 ? opt.smoothing * std::max(1.0, bdry_max) : 0.0;
    const double eps2 = eps * eps;
    auto psi = [&](double t) {  // pair energy density, psi' = phi
        if (eps2 == 0.0) return std::pow(std::fabs(t), prm.p) / prm.p;
        return (std::pow(t * t + eps2, 0.5 * prm.p) - std::pow(eps2, 0.5 * prm.p)) / prm.p;
    };
    auto phi = [&](double t) {
        if (t == 0.0 && eps2 == 0.0) return 0.0;
        if (eps2 == 0.0) return std::pow(std::fabs(t), prm.p - 2.0) * t;
        return std::pow(t * t + eps2, 0.5 * (prm.p - 2.0)) * t;
    };

    auto energy = [&](const ScalarField& u) {
        const double pair_part = parallel::sum_over_rows(n, [&](std::size_t i) {
            double row = 0.0;
            for (std::size_t j = i + 1; j < n; ++j)
                row += psi(u[i] - u[j]) * omega[i * n + j] * space.weight(i) * space.weight(j);
            return row;
        });
        double lin = 0.0;
        for (std::size_t i = 0; i < n; ++i) lin += rhs[i] * u[i] * space.weight(i);
        return pair_part - lin;
    };
    auto gradient = [&](const ScalarField& u, std::vector<double>& g) {
        parallel::for_each_row(n, [&](std::size_t k) {
            if (is_bdry[k]) {
                g[k] = 0.0;
                return;
            }
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != k) acc += phi(u[k] - u[j]) * omega[k * n + j] * space.weight(j);
            g[k] = space.weight(k) * (acc - rhs[k]);
        });
    };

    SolveReport rep;
    rep.u.assign(n, bdry_sum / static_cast<double>(boundary.size()));
    for (const auto& [id, val] : boundary) rep.u[id] = val;

    std::vector<double> g(n, 0.0), g_prev(n, 0.0);
    ScalarField u_prev;
    gradient(rep.u, g);

    if (opt.validate_gradient) {
        // central finite differences of J, step 1e-6
        const double step = 1e-6;
        const std::size_t n_check = interior.size() <= 16 ? interior.size() : 16;
        const std::size_t stride = std::max<std::size_t>(1, interior.size() / n_check);
        double num = 0.0, den = 0.0;
        ScalarField w = rep.u;
        for (std::size_t c = 0; c < n_check; ++c) {
            const std::size_t k = interior[c * stride];
            const double saved = w[k];
            w[k] = saved + step;
            const double jp = energy(w);
            w[k] = saved - step;
            const double jm = energy(w);
            w[k] = saved;
            const double fd = (jp - jm) / (2.0 * step);
            num += (fd - g[k]) * (fd - g[k]);
            den += g[k] * g[k];
        }
        if (!(std::sqrt(num) <= 1e-4 * std::sqrt(den) + 1e-9))
            throw NumericalError("solve_dirichlet: analytic gradient disagrees with finite differences");
    }

    double J = energy(rep.u);
    rep.energy_trace.push_back(J);
    double step = 0.0;
    for (int it = 0; it < opt.max_iters; ++it) {
        double gn2 = 0.0;
        for (std::size_t k : interior) gn2 += g[k] * g[k];
        double stat = 0.0;
        for (std::size_t k : interior) {
            const double r = g[k] / space.weight(k);
            stat += r * r * space.weight(k);
        }
        rep.grad_norm = std::sqrt(stat);
        if (rep.grad_norm <= opt.grad_tol) {
            rep.converged = true;
            break;
        }
        if (gn2 == 0.0) {
            rep.converged = true;
            break;
        }

        // Barzilai-Borwein trial step, then Armijo halving
        double alpha;
        if (it == 0) {
            double umax = 1.0;
            for (double v : rep.u) umax = std::max(umax, std::fabs(v));
            double gmax = 0.0;
            for (std::size_t k : interior) gmax = std::max(gmax, std::fabs(g[k]));
            alpha = 0.1 * umax / (gmax + 1e-300);
        } else {
            double sy = 0.0, ss = 0.0;
            for (std::size_t k : interior) {
                const double sk = rep.u[k] - u_prev[k];
                const double yk = g[k] - g_prev[k];
                sy += sk * yk;
                ss += sk * sk;
            }
            alpha = sy > 0.0 ? ss / sy : step * 2.0;
        }
        if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = step > 0.0 ? step : 1.0;

        ScalarField trial = rep.u;
        double J_new = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 70; ++bt) {
            for (std::size_t k : interior) trial[k] = rep.u[k] - alpha * g[k];
            J_new = energy(trial);
            if (J_new <= J - opt.armijo * alpha * gn2) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;  // line search stalled at machine precision

        u_prev = rep.u;
        g_prev = g;
        rep.u = trial;
        step = alpha;
        rep.step_trace.push_back(alpha);
        const double decrease = J - J_new;
        J = J_new;
        rep.energy_trace.push_back(J);
        rep.iterations = it + 1;
        gradient(rep.u, g);
        if (decrease <= opt.energy_rtol * (std::fabs(J) + 1e-30)) {
            double stat2 = 0.0;
            for (std::size_t k : interior) {
                const double r = g[k] / space.weight(k);
                stat2 += r * r * space.weight(k);
            }
            rep.grad_norm = std::sqrt(stat2);
            rep.converged = true;
            break;
        }
    }
    rep.energy = J;

    {
        double stat = 0.0;
        for (std::size_t k : interior) {
            const double r = g[k] / space.weight(k);
            stat += r * r * space.weight(k);
        }
        rep.grad_norm = std::sqrt(stat);
        const ScalarField lu = apply_nonlocal_p_laplacian(space, rep.u, prm);
        double acc = 0.0;
        for (std::size_t k : interior) {
            const double r = lu[k] - rhs[k];
            acc += r * r * space.weight(k);
        }
        rep.operator_residual = std::sqrt(acc);
    }
    return rep;
}

struct PoincareReport {
    double lhs = 0.0;      // sum_{i in B} |f_i - f_B|^p mu_i
    double rhs_raw = 0.0;  // double sum of the kernel over B x B
    double c0 = 0.0;       // max_{i in B} V(i, 2r) / mu(B)
    double bound = 0.0;    // c0 (2r)^{sp} rhs_raw
    std::size_t ball_size = 0;
    bool holds = false;
};

// Discrete nonlocal Poincare inequality with its constructive constant.
// LHS <= C0 (2r)^{sp} RHS holds exactly in this model (Jensen plus the
// kernel bound V(i, rho(i,j)) <= V(i, 2r) for i,j in B), so a violation
// beyond rounding slack throws.
inline PoincareReport poincare_check(const MetricMeasureSpace& space, const ScalarField& f,
                                     std::size_t center, double radius, const NonlocalParams& prm) {
    prm.validate();
    check_field(space, f);
    if (center >= space.size()) throw ValidationError("poincare_check: center out of range");
    const std::vector<std::size_t> ball = space.ball_points(center, radius);
    if (ball.size() < 2) throw ValidationError("poincare_check: ball must contain at least 2 points");

    PoincareReport rep;
    rep.ball_size = ball.size();
    double mass = 0.0, favg = 0.0;
    for (std::size_t i : ball) {
        mass += space.weight(i);
        favg += f[i] * space.weight(i);
    }
    favg /= mass;
    for (std::size_t i : ball)
        rep.lhs += std::pow(std::fabs(f[i] - favg), prm.p) * space.weight(i);

    const double sp = prm.s * prm.p;
    for (std::size_t i : ball) {
        const RowProfile rp = space.row_profile(i);
        rep.c0 = std::max(rep.c0, space.ball_volume(i, 2.0 * radius) / mass);
        for (std::size_t j : ball) {
            if (j == i) continue;
            rep.rhs_raw += std::pow(std::fabs(f[i] - f[j]), prm.p) /
                           (std::pow(rp.dist[j], sp) * rp.vol[j]) * space.weight(i) * space.weight(j);
        }
    }
    rep.bound = rep.c0 * std::pow(2.0 * radius, sp) * rep.rhs_raw;
    // rounding floor: the weighted average leaves O(n eps |f|) residue in the
    // LHS even when every difference vanishes exactly
    double fscale = 0.0;
    for (std::size_t i : ball) fscale = std::max(fscale, std::fabs(f[i]));
    const double noise =
        mass * std::pow((4.0 + static_cast<double>(ball.size())) *
                            std::numeric_limits<double>::epsilon() * std::max(fscale, 1.0),
                        prm.p);
    rep.holds = rep.lhs <= rep.bound * (1.0 + 1e-12) + noise;
    if (!rep.holds)
        throw NumericalError("poincare_check: constructive-constant inequality violated");
    return rep;
}

struct EquivalenceRow {
    std::size_t n = 0;
    double nonlocal_energy = 0.0;  // fractional_seminorm^p
    double local_energy = 0.0;     // sum L_i^p mu_i
    double ratio = 0.0;
    bool indeterminate = false;    // both sides vanish (constant field)
};

struct EquivalenceReport {
    std::vector<EquivalenceRow> rows;
    double ratio_spread = 0.0;  // max/min over determinate rows
    bool stable = false;        // spread below a factor of 2
};

// Ratio of the nonlocal energy to the local Lipschitz energy across a
// refinement family.
inline EquivalenceReport energy_equivalence_report(const std::vector<MetricMeasureSpace>& family,
                                                   const std::vector<ScalarField>& fields, double s,
                                                   double p) {
    if (family.empty() || family.size() != fields.size())
        throw ValidationError("energy_equivalence_report: degenerate family");
    EquivalenceReport rep;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
        EquivalenceRow row;
        row.n = family[k].size();
        const double semi = fractional_seminorm(family[k], fields[k], s, p);
        row.nonlocal_energy = std::pow(semi, p);
        row.local_energy = lipschitz_lp_energy(family[k], lipschitz_field(family[k], fields[k]), p);
        if (row.nonlocal_energy < 1e-300 && row.local_energy < 1e-300) {
            row.indeterminate = true;
        } else {
            row.ratio = row.nonlocal_energy / row.local_energy;
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        rep.rows.push_back(row);
    }
    if (hi > 0.0 && std::isfinite(lo)) {
        rep.ratio_spread = hi / lo;
        rep.stable = rep.ratio_spread < 2.0;
    }
    return rep;
}

struct OscillationRow {
    double r = 0.0;
    double osc_r = 0.0;
    double osc_2r = 0.0;
    double ratio = 0.0;  // osc_r / osc_2r; 0 when osc_2r vanishes
};

struct HolderProbe {
    double alpha = 0.0;
    double seminorm = 0.0;  // max |u_i - u_j| / rho^alpha over the subdomain
    double c_emp = 0.0;     // seminorm / (||u||_p + ||rhs||_q)
    std::vector<OscillationRow> oscillation;
};

// Empirical Holder data on a subdomain, plus dyadic oscillation decay around
// the subdomain's most central point.
inline HolderProbe holder_probe(const MetricMeasureSpace& space, const ScalarField& u,
                                const std::vector<std::size_t>& subdomain, double alpha,
                                const ScalarField* rhs = nullptr, double p = 2.0, double q = 2.0) {
    check_field(space, u);
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError("holder_probe: alpha must be in (0,1]");
    if (subdomain.size() < 2) throw ValidationError("holder_probe: subdomain needs at least 2 points");
    for (std::size_t i : subdomain)
        if (i >= space.size()) throw ValidationError("holder_probe: subdomain id out of range");

    HolderProbe probe;
    probe.alpha = alpha;
    for (std::size_t a = 0; a < subdomain.size(); ++a)
        for (std::size_t b = a + 1; b < subdomain.size(); ++b) {
            const std::size_t i = subdomain[a], j = subdomain[b];
            probe.seminorm = std::max(
                probe.seminorm, std::fabs(u[i] - u[j]) / std::pow(space.rho(i, j), alpha));
        }

    // Chebyshev center of the subdomain: least eccentric member
    std::size_t center = subdomain[0];
    double best_ecc = std::numeric_limits<double>::infinity();
    for (std::size_t i : subdomain) {
        double ecc = 0.0;
        for (std::size_t j : subdomain) ecc = std::max(ecc, space.rho(i, j));
        if (ecc < best_ecc) {
            best_ecc = ecc;
            center = i;
        }
    }
    auto osc = [&](double r) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t j = 0; j < space.size(); ++j)
            if (space.rho(center, j) < r) {
                lo = std::min(lo, u[j]);
                hi = std::max(hi, u[j]);
            }
        return hi > lo ? hi - lo : 0.0;
    };
    for (double r = std::max(best_ecc, space.min_positive_distance());
         r > space.min_positive_distance() * 0.5; r *= 0.5) {
        OscillationRow row;
        row.r = r;
        row.osc_r = osc(r);
        row.osc_2r = osc(2.0 * r);
        row.ratio = row.osc_2r > 0.0 ? row.osc_r / row.osc_2r : 0.0;
        probe.oscillation.push_back(row);
        if (space.ball_points(center, 0.5 * r).size() < 2) break;
    }

    double denom = weighted_lp_norm(space, u, p);
    if (rhs) denom += weighted_lp_norm(space, *rhs, q);
    probe.c_emp = denom > 0.0 ? probe.seminorm / denom : 0.0;
    return probe;
}

}  // namespace mms
