#pragma once

// Test-only reference implementations. These stay independent of the library
// code paths they check: plain index-order loops, a dense lambda sweep
// instead of the order-statistics argmax, and an Eigen solve instead of the
// descent loop.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "mms/functionals.hpp"
#include "mms/rng.hpp"
#include "mms/space.hpp"

namespace oracle {

// strict-ball volume by a plain index-order count
inline double ball_volume_ref(const mms::MetricMeasureSpace& s, std::size_t i, double r) {
    double v = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j)
        if (s.rho(i, j) < r) v += s.weight(j);
    return v;
}

// Dense lambda sweep for sup_{lambda>0} lambda^q * weight{R > lambda}:
// evaluates lambda^q * weight{R >= lambda} on n_lambda log-spaced points
// between the smallest and largest positive ratio, together with the observed
// ratios themselves, and takes the max.
inline double weak_sweep(std::vector<std::pair<double, double>> ratio_weight, double q,
                         int n_lambda = 10000) {
    std::vector<std::pair<double, double>> pos;
    for (const auto& rw : ratio_weight)
        if (rw.first > 0.0) pos.push_back(rw);
    if (pos.empty()) return 0.0;
    std::sort(pos.begin(), pos.end());
    std::vector<double> r(pos.size()), suffix(pos.size() + 1, 0.0);
    for (std::size_t k = 0; k < pos.size(); ++k) r[k] = pos[k].first;
    for (std::size_t k = pos.size(); k-- > 0;) suffix[k] = suffix[k + 1] + pos[k].second;
    auto value_at = [&](double lam) {
        const std::size_t idx =
            static_cast<std::size_t>(std::lower_bound(r.begin(), r.end(), lam) - r.begin());
        return std::pow(lam, q) * suffix[idx];  // tail weight of {R >= lam}
    };
    const double lo = r.front(), hi = r.back();
    double best = 0.0;
    for (int k = 0; k < n_lambda; ++k) {
        const double lam =
            lo * std::pow(hi / lo, n_lambda > 1 ? static_cast<double>(k) / (n_lambda - 1) : 0.0);
        best = std::max(best, value_at(lam));
    }
    for (double rk : r) best = std::max(best, value_at(rk));
    return best;
}

// BVY ratios by plain double loops
inline std::vector<std::pair<double, double>> bvy_ratios_ref(const mms::MetricMeasureSpace& s,
                                                             const mms::ScalarField& f, double p) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (i == j || f[i] == f[j]) continue;
            const double d = s.rho(i, j);
            const double v = ball_volume_ref(s, i, d);
            out.emplace_back(std::fabs(f[i] - f[j]) / (d * std::pow(v, 1.0 / p)),
                             s.weight(i) * s.weight(j));
        }
    return out;
}

inline double bvy_sweep_ref(const mms::MetricMeasureSpace& s, const mms::ScalarField& f, double p) {
    return weak_sweep(bvy_ratios_ref(s, f, p), p);
}

inline double varexp_sweep_ref(const mms::MetricMeasureSpace& s, const mms::ScalarField& f,
                               const std::vector<double>& pvals, double pstar) {
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (i == j || f[i] == f[j]) continue;
            const double d = s.rho(i, j);
            const double v = ball_volume_ref(s, i, d);
            const double pij = 0.5 * (pvals[i] + pvals[j]);
            out.emplace_back(std::fabs(f[i] - f[j]) / (d * std::pow(v, 1.0 / pij)),
                             s.weight(i) * s.weight(j));
        }
    return weak_sweep(out, pstar);
}

inline double anisotropic_sweep_ref(const mms::MetricMeasureSpace& s, const mms::ScalarField& f,
                                    const std::vector<double>& a_row_major, int n, double p) {
    std::vector<std::pair<double, double>> out;
    const double expo = 1.0 + static_cast<double>(n) / p;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (i == j || f[i] == f[j]) continue;
            double d = 0.0;
            for (int r = 0; r < n; ++r) {
                double acc = 0.0;
                for (int c = 0; c < n; ++c)
                    acc += a_row_major[static_cast<std::size_t>(r) * n + c] *
                           (s.coords(i)[c] - s.coords(j)[c]);
                d = std::max(d, std::fabs(acc));
            }
            out.emplace_back(std::fabs(f[i] - f[j]) / std::pow(d, expo),
                             s.weight(i) * s.weight(j));
        }
    return weak_sweep(out, p);
}

// literal double loop with a per-row accumulator
inline double fractional_seminorm_ref(const mms::MetricMeasureSpace& s, const mms::ScalarField& f,
                                      double sexp, double p) {
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (j == i) continue;
            const double d = s.rho(i, j);
            row += std::pow(std::fabs(f[i] - f[j]), p) /
                   (std::pow(d, sexp * p) * ball_volume_ref(s, i, d)) * s.weight(i) * s.weight(j);
        }
        total += row;
    }
    return std::pow(total, 1.0 / p);
}

// nested-loop modular bisection for the variable-exponent seminorm
inline double varexp_seminorm_ref(const mms::MetricMeasureSpace& s, const mms::ScalarField& f,
                                  double sexp, const std::vector<double>& pvals) {
    auto modular = [&](double lam) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j) {
                if (i == j || f[i] == f[j]) continue;
                const double pij = 0.5 * (pvals[i] + pvals[j]);
                acc += std::pow(std::fabs(f[i] - f[j]) /
                                    (lam * std::pow(s.rho(i, j), sexp)),
                                pij) *
                       s.weight(i) * s.weight(j);
            }
        return acc;
    };
    double hi = 1.0;
    bool any = false;
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            if (i != j && f[i] != f[j]) any = true;
    if (!any) return 0.0;
    while (modular(hi) > 1.0) hi *= 2.0;
    double lo = hi;
    int guard = 0;
    while (modular(lo) <= 1.0 && ++guard < 300) lo *= 0.5;
    for (int it = 0; it < 300 && (hi - lo) > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (modular(mid) <= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

// p = 2 Dirichlet oracle: assemble the symmetrized quadratic system on the
// interior and solve it densely.
inline mms::ScalarField dirichlet_p2_ref(const mms::MetricMeasureSpace& s,
                                         const mms::ScalarField& rhs,
                                         const std::map<std::size_t, double>& boundary,
                                         double sexp) {
    const std::size_t n = s.size();
    std::vector<double> w1(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = s.rho(i, j);
            w1[i * n + j] = 1.0 / (std::pow(d, 2.0 * sexp) * std::sqrt(ball_volume_ref(s, i, d)));
        }
    std::vector<std::size_t> interior;
    std::vector<int> slot(n, -1);
    mms::ScalarField u(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = boundary.find(i);
        if (it == boundary.end()) {
            slot[i] = static_cast<int>(interior.size());
            interior.push_back(i);
        } else {
            u[i] = it->second;
        }
    }
    const std::size_t m = interior.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (std::size_t ki = 0; ki < m; ++ki) {
        const std::size_t k = interior[ki];
        b(ki) = rhs[k] * s.weight(k);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            const double omega = (w1[k * n + j] + w1[j * n + k]) * s.weight(k) * s.weight(j);
            a(ki, ki) += omega;
            if (slot[j] >= 0)
                a(ki, slot[j]) -= omega;
            else
                b(ki) += omega * u[j];
        }
    }
    const Eigen::VectorXd x = a.ldlt().solve(b);
    for (std::size_t ki = 0; ki < m; ++ki) u[interior[ki]] = x(ki);
    return u;
}

// seeded random test spaces: point clouds under the closed-form metrics
inline mms::MetricMeasureSpace random_space(mms::Rng& rng, std::size_t n_max,
                                            bool uniform_weights = false) {
    const std::size_t n = 2 + rng.below(n_max - 1);
    const int kind = static_cast<int>(rng.below(3));
    const int dim = kind == 0 ? 1 : 2;
    std::vector<double> coords(n * static_cast<std::size_t>(dim));
    for (double& c : coords) c = rng.unit();
    std::vector<double> w(n);
    for (double& v : w) v = uniform_weights ? 1.0 / static_cast<double>(n) : rng.uniform(0.2, 1.5);
    return mms::MetricMeasureSpace::from_points(
        std::move(coords), dim, std::move(w),
        kind == 2 ? mms::MetricKind::SupNorm : mms::MetricKind::Euclidean);
}

inline mms::ScalarField random_field(mms::Rng& rng, std::size_t n, double lo = -1.0,
                                     double hi = 1.0) {
    mms::ScalarField f(n);
    for (double& v : f) v = rng.uniform(lo, hi);
    return f;
}

}  // namespace oracle
