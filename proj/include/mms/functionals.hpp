#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mms/common.hpp"
#include "mms/parallel.hpp"
#include "mms/space.hpp"

namespace mms {

using ScalarField = std::vector<double>;

inline void check_field(const MetricMeasureSpace& space, const ScalarField& f,
                        const char* where = "field") {
    if (f.size() != space.size())
        throw ValidationError(std::string(where) + ": length does not match space size");
    for (double v : f)
        if (!std::isfinite(v)) throw ValidationError(std::string(where) + ": non-finite value");
}

// (sum |v_i|^p mu_i)^{1/p}
inline double weighted_lp_norm(const MetricMeasureSpace& space, const std::vector<double>& v,
                               double p) {
    if (p < 1.0) throw ValidationError("weighted_lp_norm: p must be >= 1");
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += std::pow(std::fabs(v[i]), p) * space.weight(i);
    return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Pointwise Lipschitz constant over a radius-h neighborhood
// ---------------------------------------------------------------------------

struct LipschitzField {
    std::vector<double> values;
    double h = 0.0;
    bool h_below_min_distance = false;  // warning: every neighborhood was empty
};

inline double default_lipschitz_scale(const MetricMeasureSpace& space) {
    return 1.5 * space.min_positive_distance();
}

// L_i = max over j != i with rho(i,j) <= h of |f_i - f_j| / rho(i,j).
inline LipschitzField lipschitz_field(const MetricMeasureSpace& space, const ScalarField& f,
                                      double h) {
    check_field(space, f);
    LipschitzField out;
    out.h = h;
    out.h_below_min_distance = h < space.min_positive_distance();
    const std::size_t n = space.size();
    out.values.assign(n, 0.0);
    parallel::for_each_row(n, [&](std::size_t i) {
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = space.rho(i, j);
            if (d <= h) best = std::max(best, std::fabs(f[i] - f[j]) / d);
        }
        out.values[i] = best;
    });
    return out;
}

inline LipschitzField lipschitz_field(const MetricMeasureSpace& space, const ScalarField& f) {
    return lipschitz_field(space, f, default_lipschitz_scale(space));
}

inline double lipschitz_lp_energy(const MetricMeasureSpace& space, const LipschitzField& lip,
                                  double p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < lip.values.size(); ++i)
        acc += std::pow(lip.values[i], p) * space.weight(i);
    return acc;  // sum L_i^p mu_i (no 1/p root)
}

// ---------------------------------------------------------------------------
// Exact weak-type suprema via order statistics
// ---------------------------------------------------------------------------

// Sorted distinct positive ratios with tail weights W_k = weight{R >= r_k}.
// The map lambda -> lambda^q * weight{R > lambda} is maximized as lambda
// increases to one of the distinct ratios, so the exact supremum is
// max_k r_k^q W_k.
struct LevelSetProfile {
    std::vector<double> ratio;  // ascending
    std::vector<double> tail;   // strictly decreasing
};

inline LevelSetProfile build_level_set_profile(std::vector<std::pair<double, double>> entries) {
    // entries: (ratio, weight); zero ratios are skipped by the callers
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    LevelSetProfile p;
    std::size_t k = 0;
    while (k < entries.size()) {
        std::size_t k2 = k;
        double w = 0.0;
        while (k2 < entries.size() && entries[k2].first == entries[k].first) {
            w += entries[k2].second;
            ++k2;
        }
        p.ratio.push_back(entries[k].first);
        p.tail.push_back(w);  // group weight for now
        k = k2;
    }
    for (std::size_t m = p.tail.size(); m-- > 1;) p.tail[m - 1] += p.tail[m];
    return p;
}

inline double weak_sup(const LevelSetProfile& p, double exponent) {
    double best = 0.0;
    for (std::size_t k = 0; k < p.ratio.size(); ++k)
        best = std::max(best, std::pow(p.ratio[k], exponent) * p.tail[k]);
    return best;
}

namespace detail {

// Collect (ratio, weight) pairs row by row. Rows run in parallel; the merge
// is in row order, so the profile is identical at any thread count.
template <typename RowFn>
LevelSetProfile collect_pair_profile(std::size_t n, RowFn&& row_fn) {
    std::vector<std::vector<std::pair<double, double>>> rows(n);
    parallel::for_each_row(n, [&](std::size_t i) { row_fn(i, rows[i]); });
    std::vector<std::pair<double, double>> all;
    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    all.reserve(total);
    for (auto& r : rows) all.insert(all.end(), r.begin(), r.end());
    return build_level_set_profile(std::move(all));
}

}  // namespace detail

// Ordered pairs (i,j), i != j, ratio R_ij = |f_i - f_j| / (rho * V(i,rho)^{1/p}),
// weight mu_i mu_j; returns sup over lambda of lambda^p * weight{R > lambda}.
inline LevelSetProfile bvy_level_set_profile(const MetricMeasureSpace& space, const ScalarField& f,
                                             double p) {
    if (p < 1.0) throw ValidationError("bvy_weak_functional: p must be >= 1");
    if (space.size() < 2) throw ValidationError("bvy_weak_functional: need at least 2 points");
    check_field(space, f);
    const std::size_t n = space.size();
    const double inv_p = 1.0 / p;
    return detail::collect_pair_profile(n, [&](std::size_t i, auto& out) {
        const RowProfile rp = space.row_profile(i);
        out.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || f[i] == f[j]) continue;
            const double r = std::fabs(f[i] - f[j]) / (rp.dist[j] * std::pow(rp.vol[j], inv_p));
            out.emplace_back(r, space.weight(i) * space.weight(j));
        }
    });
}

inline double bvy_weak_functional(const MetricMeasureSpace& space, const ScalarField& f, double p) {
    return weak_sup(bvy_level_set_profile(space, f, p), p);
}

// ---------------------------------------------------------------------------
// Fractional Sobolev seminorm
// ---------------------------------------------------------------------------

// ( sum_{i != j} |f_i - f_j|^p / (rho^{sp} V(i,rho)) mu_i mu_j )^{1/p}
inline double fractional_seminorm(const MetricMeasureSpace& space, const ScalarField& f, double s,
                                  double p) {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("fractional_seminorm: s must be in (0,1)");
    if (p < 1.0) throw ValidationError("fractional_seminorm: p must be >= 1");
    if (space.size() < 2) throw ValidationError("fractional_seminorm: need at least 2 points");
    check_field(space, f);
    const std::size_t n = space.size();
    const double sp = s * p;
    const double total = parallel::sum_over_rows(n, [&](std::size_t i) {
        const RowProfile rp = space.row_profile(i);
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            row += std::pow(std::fabs(f[i] - f[j]), p) / (std::pow(rp.dist[j], sp) * rp.vol[j]) *
                   space.weight(i) * space.weight(j);
        }
        return row;
    });
    return std::pow(total, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Young functions and Luxemburg-type norms
// ---------------------------------------------------------------------------

class YoungFunction {
public:
    static YoungFunction power(double p) {
        if (p < 1.0) throw ValidationError("YoungFunction::power: p must be >= 1");
        return YoungFunction("power(" + std::to_string(p) + ")",
                             [p](double t) { return std::pow(t, p); });
    }

    // t^p * log(e + t); keeps the Delta2 property while leaving the pure
    // power scale
    static YoungFunction power_log(double p) {
        if (p < 1.0) throw ValidationError("YoungFunction::power_log: p must be >= 1");
        return YoungFunction("power_log(" + std::to_string(p) + ")", [p](double t) {
            return std::pow(t, p) * std::log(std::exp(1.0) + t);
        });
    }

    YoungFunction(std::string name, std::function<double(double)> phi)
        : name_(std::move(name)), phi_(std::move(phi)) {
        validate();
    }

    double operator()(double t) const { return phi_(t); }
    const std::string& name() const { return name_; }
    double delta2_estimate() const { return delta2_; }

private:
    void validate() {
        if (phi_(0.0) != 0.0) throw ValidationError("young function: Phi(0) must be 0");
        // sample grid check: nondecreasing, midpoint-convex, unbounded
        double prev = 0.0, prev_t = 0.0;
        delta2_ = 1.0;
        for (int k = -24; k <= 24; ++k) {
            const double t = std::pow(10.0, 0.25 * k);
            const double v = phi_(t);
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError("young function: invalid value on sample grid");
            if (v + 1e-15 < prev) throw ValidationError("young function: not nondecreasing");
            if (prev_t > 0.0) {
                const double mid = phi_(0.5 * (prev_t + t));
                if (mid > 0.5 * (prev + v) * (1.0 + 1e-12) + 1e-300)
                    throw ValidationError("young function: midpoint convexity fails");
            }
            if (v > 0.0) delta2_ = std::max(delta2_, phi_(2.0 * t) / v);
            prev = v;
            prev_t = t;
        }
        if (!(phi_(1e6) > 1.0)) throw ValidationError("young function: must grow to infinity");
    }

    std::string name_;
    std::function<double(double)> phi_;
    double delta2_ = 1.0;
};

namespace detail {

// inf{lambda > 0 : modular(lambda) <= 1} by bisection; modular must be
// nonincreasing in lambda. Returns the upper end of the final bracket, so
// the modular at the returned value is <= 1. The 1e-12 bracket keeps the
// norms 1-homogeneous to well below 1e-10.
template <typename Modular>
double luxemburg_bisect(Modular&& modular, double scale_hint) {
    double hi = scale_hint > 0.0 ? scale_hint : 1.0;
    int guard = 0;
    while (modular(hi) > 1.0) {
        hi *= 2.0;
        if (++guard > 400) throw NumericalError("luxemburg: modular never drops below 1");
    }
    double lo = hi;
    guard = 0;
    while (modular(lo) <= 1.0) {
        lo *= 0.5;
        if (++guard > 400) return 0.0;  // modular <= 1 for arbitrarily small lambda
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (modular(mid) <= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace detail

// Luxemburg norm inf{lambda : sum Phi(|g_i|/lambda) mu_i <= 1}.
inline double luxemburg_norm(const MetricMeasureSpace& space, const ScalarField& g,
                             const YoungFunction& phi) {
    check_field(space, g);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::fabs(v));
    if (gmax == 0.0) return 0.0;
    auto modular = [&](double lam) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += phi(std::fabs(g[i]) / lam) * space.weight(i);
        return acc;
    };
    return detail::luxemburg_bisect(modular, gmax * std::max(1.0, space.total_mass()));
}

// Orlicz finite-difference seminorm: Luxemburg bisection over the pair
// modular sum_{i != j} Phi(|f_i - f_j| / (lambda rho^s)) mu_i mu_j.
inline double orlicz_fd_seminorm(const MetricMeasureSpace& space, const ScalarField& f, double s,
                                 const YoungFunction& phi) {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("orlicz_fd_seminorm: s must be in (0,1)");
    if (space.size() < 2) throw ValidationError("orlicz_fd_seminorm: need at least 2 points");
    check_field(space, f);
    const std::size_t n = space.size();
    double qmax = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (f[i] != f[j]) {
                qmax = std::max(qmax, std::fabs(f[i] - f[j]) / std::pow(space.rho(i, j), s));
                any = true;
            }
    if (!any) return 0.0;
    auto modular = [&](double lam) {
        return parallel::sum_over_rows(n, [&](std::size_t i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || f[i] == f[j]) continue;
                row += phi(std::fabs(f[i] - f[j]) / (lam * std::pow(space.rho(i, j), s))) *
                       space.weight(i) * space.weight(j);
            }
            return row;
        });
    };
    return detail::luxemburg_bisect(modular, qmax * std::max(1.0, space.total_mass()));
}

// Empirical comparison of the weak quasinorm against Orlicz quantities of
// the local Lipschitz constant. Both ratios are reported, not certified:
// the constants depend on growth interplay the functional alone cannot pin.
struct OrliczComparisonReport {
    double weak_quasinorm = 0.0;    // (sup lambda^p tail)^{1/p}
    double lip_orlicz_norm = 0.0;   // || Lip f ||_{L^Phi}
    double weak_to_lip_ratio = 0.0;
    double lip_modular = 0.0;       // sum Phi(L_i) mu_i
    double pair_modular = 0.0;      // sum Phi(|df| / (rho V^{1/p})) mu_i mu_j
    double modular_ratio = 0.0;
};

inline OrliczComparisonReport orlicz_comparison_report(const MetricMeasureSpace& space,
                                                       const ScalarField& f, double p,
                                                       const YoungFunction& phi) {
    if (p < 1.0) throw ValidationError("orlicz_comparison_report: p must be >= 1");
    OrliczComparisonReport rep;
    rep.weak_quasinorm = std::pow(bvy_weak_functional(space, f, p), 1.0 / p);
    const LipschitzField lip = lipschitz_field(space, f);
    rep.lip_orlicz_norm = luxemburg_norm(space, lip.values, phi);
    if (rep.lip_orlicz_norm > 0.0) rep.weak_to_lip_ratio = rep.weak_quasinorm / rep.lip_orlicz_norm;
    for (std::size_t i = 0; i < space.size(); ++i)
        rep.lip_modular += phi(lip.values[i]) * space.weight(i);
    const std::size_t n = space.size();
    const double inv_p = 1.0 / p;
    rep.pair_modular = parallel::sum_over_rows(n, [&](std::size_t i) {
        const RowProfile rp = space.row_profile(i);
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || f[i] == f[j]) continue;
            row += phi(std::fabs(f[i] - f[j]) / (rp.dist[j] * std::pow(rp.vol[j], inv_p))) *
                   space.weight(i) * space.weight(j);
        }
        return row;
    });
    if (rep.pair_modular > 0.0) rep.modular_ratio = rep.lip_modular / rep.pair_modular;
    return rep;
}

// ---------------------------------------------------------------------------
// Variable exponents
// ---------------------------------------------------------------------------

struct ExponentField {
    std::vector<double> p;
    double p_minus = 0.0;
    double p_plus = 0.0;
    double log_holder = 0.0;  // max |p_i - p_j| log(e + 1/rho(i,j))
};

inline ExponentField make_exponent_field(const MetricMeasureSpace& space, std::vector<double> values) {
    if (values.size() != space.size())
        throw ValidationError("exponent field: length does not match space size");
    ExponentField e;
    e.p = std::move(values);
    e.p_minus = e.p[0];
    e.p_plus = e.p[0];
    for (double v : e.p) {
        if (!std::isfinite(v) || v < 1.0) throw ValidationError("exponent field: p(x) must be >= 1");
        e.p_minus = std::min(e.p_minus, v);
        e.p_plus = std::max(e.p_plus, v);
    }
    const std::size_t n = space.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            e.log_holder = std::max(
                e.log_holder, std::fabs(e.p[i] - e.p[j]) * std::log(std::exp(1.0) + 1.0 / space.rho(i, j)));
    return e;
}

// Pair modular with exponent p_ij = (p_i + p_j)/2.
inline double varexp_fd_seminorm(const MetricMeasureSpace& space, const ScalarField& f, double s,
                                 const ExponentField& pf) {
    if (!(s > 0.0 && s < 1.0)) throw ValidationError("varexp_fd_seminorm: s must be in (0,1)");
    if (space.size() < 2) throw ValidationError("varexp_fd_seminorm: need at least 2 points");
    check_field(space, f);
    if (pf.p.size() != space.size()) throw ValidationError("varexp_fd_seminorm: exponent field mismatch");
    const std::size_t n = space.size();
    double qmax = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (f[i] != f[j]) {
                qmax = std::max(qmax, std::fabs(f[i] - f[j]) / std::pow(space.rho(i, j), s));
                any = true;
            }
    if (!any) return 0.0;
    auto modular = [&](double lam) {
        return parallel::sum_over_rows(n, [&](std::size_t i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i || f[i] == f[j]) continue;
                const double pij = 0.5 * (pf.p[i] + pf.p[j]);
                row += std::pow(std::fabs(f[i] - f[j]) / (lam * std::pow(space.rho(i, j), s)), pij) *
                       space.weight(i) * space.weight(j);
            }
            return row;
        });
    };
    return detail::luxemburg_bisect(modular, qmax * std::max(1.0, space.total_mass()));
}

// Weak-type functional with per-pair exponent inside the ratio:
// R_ij = |f_i - f_j| / (rho * V(i,rho)^{1/p_ij}); sup of lambda^{pstar} * tail.
inline double varexp_weak_functional(const MetricMeasureSpace& space, const ScalarField& f,
                                     const ExponentField& pf, double pstar) {
    if (space.size() < 2) throw ValidationError("varexp_weak_functional: need at least 2 points");
    check_field(space, f);
    if (pf.p.size() != space.size())
        throw ValidationError("varexp_weak_functional: exponent field mismatch");
    if (!(pstar >= pf.p_minus && pstar <= pf.p_plus))
        throw ValidationError("varexp_weak_functional: pstar outside [p-, p+]");
    const std::size_t n = space.size();
    const LevelSetProfile prof = detail::collect_pair_profile(n, [&](std::size_t i, auto& out) {
        const RowProfile rp = space.row_profile(i);
        out.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || f[i] == f[j]) continue;
            const double pij = 0.5 * (pf.p[i] + pf.p[j]);
            const double r = std::fabs(f[i] - f[j]) / (rp.dist[j] * std::pow(rp.vol[j], 1.0 / pij));
            out.emplace_back(r, space.weight(i) * space.weight(j));
        }
    });
    return weak_sup(prof, pstar);
}

// ---------------------------------------------------------------------------
// Anisotropic functionals (coordinates required)
// ---------------------------------------------------------------------------

// R_ij = |f_i - f_j| / rho_A(i,j)^{1 + n/p}; sup of lambda^p * tail. The
// effective dimension defaults to the coordinate dimension and is exposed
// for experiments that want to override it.
inline double anisotropic_weak_functional(const MetricMeasureSpace& space, const ScalarField& f,
                                          const AnisotropyMatrix& a, double p, int effective_dim = 0) {
    if (!space.has_coords())
        throw ValidationError("anisotropic_weak_functional: space has no coordinates");
    if (a.dim() != space.coord_dim())
        throw ValidationError("anisotropic_weak_functional: matrix dim mismatch");
    if (p < 1.0) throw ValidationError("anisotropic_weak_functional: p must be >= 1");
    if (space.size() < 2) throw ValidationError("anisotropic_weak_functional: need at least 2 points");
    check_field(space, f);
    const int n_eff = effective_dim > 0 ? effective_dim : space.coord_dim();
    const double expo = 1.0 + static_cast<double>(n_eff) / p;
    const std::size_t n = space.size();
    const LevelSetProfile prof = detail::collect_pair_profile(n, [&](std::size_t i, auto& out) {
        out.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || f[i] == f[j]) continue;
            const double d = a.distance(space.coords(i), space.coords(j));
            out.emplace_back(std::fabs(f[i] - f[j]) / std::pow(d, expo),
                             space.weight(i) * space.weight(j));
        }
    });
    return weak_sup(prof, p);
}

struct VectorField {
    std::vector<double> values;  // flat, dim per point
    int dim = 0;
};

// A^T grad f on a regular grid: central differences in the interior,
// one-sided at the boundary.
inline VectorField anisotropic_gradient(const MetricMeasureSpace& space, const ScalarField& f,
                                        const AnisotropyMatrix& a) {
    if (!space.grid_info()) throw ValidationError("anisotropic_gradient: space is not a regular grid");
    check_field(space, f);
    const GridInfo g = *space.grid_info();
    if (a.dim() != g.dim) throw ValidationError("anisotropic_gradient: matrix dim mismatch");
    const std::size_t n = space.size();
    VectorField out;
    out.dim = g.dim;
    out.values.assign(n * static_cast<std::size_t>(g.dim), 0.0);
    std::size_t stride[3] = {1, 0, 0};
    for (int c = 1; c < g.dim; ++c)
        stride[c] = stride[c - 1] * static_cast<std::size_t>(g.points_per_side);
    parallel::for_each_row(n, [&](std::size_t i) {
        double grad[3] = {0, 0, 0};
        std::size_t rem = i;
        for (int c = 0; c < g.dim; ++c) {
            const int k = static_cast<int>(rem % g.points_per_side);
            rem /= static_cast<std::size_t>(g.points_per_side);
            if (k > 0 && k + 1 < g.points_per_side)
                grad[c] = (f[i + stride[c]] - f[i - stride[c]]) / (2.0 * g.spacing);
            else if (k == 0)
                grad[c] = (f[i + stride[c]] - f[i]) / g.spacing;
            else
                grad[c] = (f[i] - f[i - stride[c]]) / g.spacing;
        }
        for (int r = 0; r < g.dim; ++r) {
            double acc = 0.0;
            for (int c = 0; c < g.dim; ++c) acc += a.entry(c, r) * grad[c];  // A^T
            out.values[i * static_cast<std::size_t>(g.dim) + r] = acc;
        }
    });
    return out;
}

// sum_i |v_i|_2^p mu_i for a vector field
inline double gradient_lp_energy(const MetricMeasureSpace& space, const VectorField& v, double p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        double q = 0.0;
        for (int c = 0; c < v.dim; ++c) {
            const double x = v.values[i * static_cast<std::size_t>(v.dim) + c];
            q += x * x;
        }
        acc += std::pow(std::sqrt(q), p) * space.weight(i);
    }
    return acc;
}

}  // namespace mms
