#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mms/common.hpp"
#include "mms/rng.hpp"

namespace mms {

// ||A(x-y)||_inf for an invertible matrix A. Invertibility is certified at
// construction: sigma_min must exceed 1e-12 * sigma_max.
class AnisotropyMatrix {
public:
    AnisotropyMatrix() = default;

    AnisotropyMatrix(int dim, std::vector<double> row_major) : n_(dim), a_(std::move(row_major)) {
        if (n_ <= 0 || a_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_))
            throw ValidationError("anisotropy matrix: size mismatch");
        for (double v : a_)
            if (!std::isfinite(v)) throw ValidationError("anisotropy matrix: non-finite entry");
        Eigen::MatrixXd m(n_, n_);
        for (int r = 0; r < n_; ++r)
            for (int c = 0; c < n_; ++c) m(r, c) = a_[static_cast<std::size_t>(r) * n_ + c];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        sigma_max_ = svd.singularValues()(0);
        sigma_min_ = svd.singularValues()(n_ - 1);
        if (!(sigma_min_ > 1e-12 * sigma_max_))
            throw ValidationError("anisotropy matrix: singular within tolerance");
    }

    static AnisotropyMatrix identity(int dim) {
        std::vector<double> a(static_cast<std::size_t>(dim) * dim, 0.0);
        for (int i = 0; i < dim; ++i) a[static_cast<std::size_t>(i) * dim + i] = 1.0;
        return AnisotropyMatrix(dim, std::move(a));
    }

    int dim() const { return n_; }
    double condition() const { return sigma_max_ / sigma_min_; }
    double entry(int r, int c) const { return a_[static_cast<std::size_t>(r) * n_ + c]; }
    const std::vector<double>& row_major() const { return a_; }

    double distance(std::span<const double> x, std::span<const double> y) const {
        if (x.size() != static_cast<std::size_t>(n_) || y.size() != static_cast<std::size_t>(n_))
            throw ValidationError("anisotropic distance: dimension mismatch");
        double best = 0.0;
        for (int r = 0; r < n_; ++r) {
            double acc = 0.0;
            for (int c = 0; c < n_; ++c) acc += entry(r, c) * (x[c] - y[c]);
            const double mag = std::fabs(acc);
            if (mag > best) best = mag;
        }
        return best;
    }

private:
    int n_ = 0;
    std::vector<double> a_;
    double sigma_max_ = 0.0, sigma_min_ = 0.0;
};

inline double anisotropic_distance(const AnisotropyMatrix& a, std::span<const double> x,
                                   std::span<const double> y) {
    return a.distance(x, y);
}

enum class MetricKind { DenseMatrix, Euclidean, SupNorm, Anisotropic };

// Regular-grid bookkeeping kept by the grid generator; finite-difference
// gradients need it.
struct GridInfo {
    int dim = 0;
    int points_per_side = 0;
    double spacing = 0.0;
};

// Distances to every other point from one center, with the strict-ball
// volume V(i, rho(i,j)) attached per target. Built with one sort per row.
struct RowProfile {
    std::vector<double> dist;  // dist[j] = rho(i, j)
    std::vector<double> vol;   // vol[j] = V(i, dist[j]); vol[i] = 0 (unused)
};

// Finite weighted point set with a metric given either as a dense matrix or
// as a closed-form rule over coordinates. Immutable once constructed; every
// query below is read-only.
class MetricMeasureSpace {
public:
    std::size_t size() const { return mu_.size(); }
    int coord_dim() const { return coord_dim_; }
    bool has_coords() const { return coord_dim_ > 0; }
    const std::vector<double>& weights() const { return mu_; }
    double weight(std::size_t i) const { return mu_[i]; }
    double total_mass() const { return total_mass_; }
    double min_positive_distance() const { return min_dist_; }
    double diameter() const { return diameter_; }
    MetricKind metric_kind() const { return kind_; }
    const std::optional<GridInfo>& grid_info() const { return grid_; }
    const std::optional<AnisotropyMatrix>& anisotropy() const { return aniso_; }

    std::span<const double> coords(std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(coord_dim_),
                static_cast<std::size_t>(coord_dim_)};
    }

    double rho(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        switch (kind_) {
            case MetricKind::DenseMatrix:
                return rho_[i * size() + j];
            case MetricKind::Euclidean: {
                if (!lattice_.empty()) {
                    // integer lattice offsets give bitwise-equal distances for
                    // equal offsets, which keeps strict-ball counts exact on grids
                    long long acc = 0;
                    for (int c = 0; c < lattice_dim_; ++c) {
                        const long long d = lat(i, c) - lat(j, c);
                        acc += d * d;
                    }
                    return std::sqrt(static_cast<double>(acc)) * lattice_scale_;
                }
                double acc = 0.0;
                for (int c = 0; c < coord_dim_; ++c) {
                    const double d = coords_[i * coord_dim_ + c] - coords_[j * coord_dim_ + c];
                    acc += d * d;
                }
                return std::sqrt(acc);
            }
            case MetricKind::SupNorm: {
                if (!lattice_.empty()) {
                    long long best = 0;
                    for (int c = 0; c < lattice_dim_; ++c)
                        best = std::max(best, std::llabs(lat(i, c) - lat(j, c)));
                    return static_cast<double>(best) * lattice_scale_;
                }
                double best = 0.0;
                for (int c = 0; c < coord_dim_; ++c)
                    best = std::max(best,
                                    std::fabs(coords_[i * coord_dim_ + c] - coords_[j * coord_dim_ + c]));
                return best;
            }
            case MetricKind::Anisotropic:
                return aniso_->distance(coords(i), coords(j));
        }
        return 0.0;
    }

    // V(i, r) = total mass of the strict ball B(i, r) = {j : rho(i,j) < r}.
    double ball_volume(std::size_t i, double r) const {
        double v = 0.0;
        for (std::size_t j = 0; j < size(); ++j)
            if (rho(i, j) < r) v += mu_[j];
        return v;
    }

    // Point ids inside the strict ball.
    std::vector<std::size_t> ball_points(std::size_t i, double r) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < size(); ++j)
            if (rho(i, j) < r) out.push_back(j);
        return out;
    }

    RowProfile row_profile(std::size_t i) const {
        const std::size_t n = size();
        RowProfile rp;
        rp.dist.resize(n);
        rp.vol.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) rp.dist[j] = rho(i, j);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return rp.dist[a] < rp.dist[b]; });
        double below = 0.0;
        std::size_t k = 0;
        while (k < n) {
            std::size_t k2 = k;
            double group_mass = 0.0;
            while (k2 < n && rp.dist[order[k2]] == rp.dist[order[k]]) {
                group_mass += mu_[order[k2]];
                ++k2;
            }
            for (std::size_t m = k; m < k2; ++m) rp.vol[order[m]] = below;
            below += group_mass;
            k = k2;
        }
        return rp;
    }

    // Sorted distinct pairwise distances (positive only).
    std::vector<double> distinct_distances() const {
        std::vector<double> d;
        d.reserve(size() * (size() - 1) / 2);
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j) d.push_back(rho(i, j));
        std::sort(d.begin(), d.end());
        d.erase(std::unique(d.begin(), d.end()), d.end());
        return d;
    }

    std::vector<double> export_dense_metric() const {
        const std::size_t n = size();
        std::vector<double> m(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m[i * n + j] = rho(i, j);
        return m;
    }

    // --- generators -------------------------------------------------------

    // Uniform lattice on [0, spacing*(m-1)]^dim.
    static MetricMeasureSpace grid(int dim, int points_per_side, double spacing,
                                   const std::vector<double>& weights, MetricKind kind = MetricKind::Euclidean,
                                   std::optional<AnisotropyMatrix> aniso = std::nullopt) {
        if (dim < 1 || dim > 3) throw ValidationError("grid: dim must be 1..3");
        if (points_per_side < 2) throw ValidationError("grid: need at least 2 points per side");
        if (!(spacing > 0.0)) throw ValidationError("grid: spacing must be positive");
        std::size_t n = 1;
        for (int c = 0; c < dim; ++c) n *= static_cast<std::size_t>(points_per_side);
        MetricMeasureSpace s;
        s.coord_dim_ = dim;
        s.lattice_dim_ = dim;
        s.lattice_scale_ = spacing;
        s.kind_ = kind;
        s.aniso_ = std::move(aniso);
        s.coords_.resize(n * dim);
        s.lattice_.resize(n * dim);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t rem = i;
            for (int c = 0; c < dim; ++c) {
                const long long k = static_cast<long long>(rem % points_per_side);
                rem /= points_per_side;
                s.lattice_[i * dim + c] = k;
                s.coords_[i * dim + c] = static_cast<double>(k) * spacing;
            }
        }
        s.grid_ = GridInfo{dim, points_per_side, spacing};
        s.assign_weights(weights, n);
        s.finalize();
        return s;
    }

    // 1-D chain embedded in the plane at height y_offset; distances are the
    // ambient (2-D) ones, weights are 1-D cell masses.
    static MetricMeasureSpace segment_in_plane(int count, double spacing, double y_offset,
                                               const std::vector<double>& weights) {
        if (count < 2) throw ValidationError("segment: need at least 2 points");
        if (!(spacing > 0.0)) throw ValidationError("segment: spacing must be positive");
        MetricMeasureSpace s;
        const std::size_t n = static_cast<std::size_t>(count);
        s.coord_dim_ = 2;
        s.lattice_dim_ = 1;
        s.lattice_scale_ = spacing;
        s.kind_ = MetricKind::Euclidean;
        s.coords_.resize(n * 2);
        s.lattice_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            s.lattice_[i] = static_cast<long long>(i);
            s.coords_[i * 2] = static_cast<double>(i) * spacing;
            s.coords_[i * 2 + 1] = y_offset;
        }
        s.assign_weights(weights, n);
        s.finalize();
        return s;
    }

    // Random cloud in [0,1]^dim with Gaussian-decaying weights centered at
    // the cube center; total mass normalized to 1.
    static MetricMeasureSpace bump_cloud(int dim, int count, double sigma, std::uint64_t seed,
                                         MetricKind kind = MetricKind::Euclidean) {
        if (dim < 1 || dim > 3) throw ValidationError("bump-cloud: dim must be 1..3");
        if (count < 2) throw ValidationError("bump-cloud: need at least 2 points");
        if (!(sigma > 0.0)) throw ValidationError("bump-cloud: sigma must be positive");
        MetricMeasureSpace s;
        const std::size_t n = static_cast<std::size_t>(count);
        s.coord_dim_ = dim;
        s.kind_ = kind;
        s.coords_.resize(n * dim);
        Rng rng(seed);
        for (double& c : s.coords_) c = rng.unit();
        std::vector<double> w(n);
        double tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double q = 0.0;
            for (int c = 0; c < dim; ++c) {
                const double d = s.coords_[i * dim + c] - 0.5;
                q += d * d;
            }
            w[i] = std::exp(-q / (2.0 * sigma * sigma));
            tot += w[i];
        }
        for (double& v : w) v /= tot;
        s.assign_weights(w, n);
        s.finalize();
        return s;
    }

    static MetricMeasureSpace from_dense(std::vector<double> rho_row_major, std::vector<double> weights,
                                         std::vector<double> coords = {}, int coord_dim = 0) {
        MetricMeasureSpace s;
        const std::size_t n = weights.size();
        if (n < 1) throw ValidationError("space: empty weight vector");
        if (rho_row_major.size() != n * n) throw ValidationError("space: metric matrix size mismatch");
        s.kind_ = MetricKind::DenseMatrix;
        s.rho_ = std::move(rho_row_major);
        if (coord_dim > 0) {
            if (coords.size() != n * static_cast<std::size_t>(coord_dim))
                throw ValidationError("space: coordinate array size mismatch");
            s.coords_ = std::move(coords);
            s.coord_dim_ = coord_dim;
        }
        s.validate_dense(n);
        s.assign_weights(weights, n);
        s.finalize();
        return s;
    }

    static MetricMeasureSpace from_points(std::vector<double> coords, int coord_dim,
                                          std::vector<double> weights, MetricKind kind,
                                          std::optional<AnisotropyMatrix> aniso = std::nullopt) {
        MetricMeasureSpace s;
        const std::size_t n = weights.size();
        if (coord_dim < 1) throw ValidationError("space: coord_dim must be positive");
        if (coords.size() != n * static_cast<std::size_t>(coord_dim))
            throw ValidationError("space: coordinate array size mismatch");
        if (kind == MetricKind::DenseMatrix) throw ValidationError("space: from_points needs a closed-form metric");
        if (kind == MetricKind::Anisotropic) {
            if (!aniso) throw ValidationError("space: anisotropic metric needs a matrix");
            if (aniso->dim() != coord_dim) throw ValidationError("space: anisotropy matrix dim mismatch");
        }
        s.kind_ = kind;
        s.coords_ = std::move(coords);
        s.coord_dim_ = coord_dim;
        s.aniso_ = std::move(aniso);
        s.assign_weights(weights, n);
        s.finalize();
        return s;
    }

private:
    MetricMeasureSpace() = default;

    long long lat(std::size_t i, int c) const { return lattice_[i * lattice_dim_ + c]; }

    void assign_weights(const std::vector<double>& w, std::size_t n) {
        if (w.size() == 1 && n > 1) {
            mu_.assign(n, w[0]);
        } else if (w.size() == n) {
            mu_ = w;
        } else {
            throw ValidationError("space: weight vector length mismatch");
        }
        total_mass_ = 0.0;
        for (double v : mu_) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("space: nonpositive weight");
            total_mass_ += v;
        }
        if (!std::isfinite(total_mass_)) throw ValidationError("space: total mass not finite");
    }

    void validate_dense(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (rho_[i * n + i] != 0.0) throw ValidationError("space: metric diagonal must be zero");
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = rho_[i * n + j], b = rho_[j * n + i];
                if (!std::isfinite(a) || !std::isfinite(b))
                    throw ValidationError("space: non-finite metric entry");
                const double scale = std::max(std::fabs(a), std::fabs(b));
                if (std::fabs(a - b) > 1e-12 * scale)
                    throw ValidationError("space: non-symmetric metric matrix");
                if (!(a > 0.0)) throw ValidationError("space: off-diagonal distance must be positive");
                rho_[j * n + i] = a;  // mirror so rho(i,j) == rho(j,i) bitwise
            }
        }
    }

    void finalize() {
        const std::size_t n = size();
        min_dist_ = std::numeric_limits<double>::infinity();
        diameter_ = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = rho(i, j);
                if (!(d > 0.0))
                    throw ValidationError("space: coincident points (zero distance at i!=j)");
                min_dist_ = std::min(min_dist_, d);
                diameter_ = std::max(diameter_, d);
            }
        check_triangle();
    }

    void check_triangle() const {
        const std::size_t n = size();
        const double slack = 1e-12 * std::max(1.0, diameter_);
        auto check = [&](std::size_t a, std::size_t b, std::size_t c) {
            const double ab = rho(a, b), bc = rho(b, c), ac = rho(a, c);
            if (ac > ab + bc + slack || ab > ac + bc + slack || bc > ab + ac + slack)
                throw ValidationError("space: triangle inequality violated");
        };
        if (n <= 200) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    for (std::size_t k = j + 1; k < n; ++k) check(i, j, k);
        } else {
            Rng rng(0x6d6d735f74726961ULL);  // fixed seed: sampling is part of validation
            const std::size_t trials = 200'000;
            for (std::size_t t = 0; t < trials; ++t) {
                const std::size_t i = rng.below(n), j = rng.below(n), k = rng.below(n);
                if (i == j || j == k || i == k) continue;
                check(i, j, k);
            }
        }
    }

    int coord_dim_ = 0;
    int lattice_dim_ = 0;
    double lattice_scale_ = 0.0;
    MetricKind kind_ = MetricKind::DenseMatrix;
    std::vector<double> coords_;      // flat, coord_dim_ per point
    std::vector<long long> lattice_;  // flat, lattice_dim_ per point (grids only)
    std::vector<double> rho_;         // dense matrix (DenseMatrix kind only)
    std::optional<AnisotropyMatrix> aniso_;
    std::optional<GridInfo> grid_;
    std::vector<double> mu_;
    double total_mass_ = 0.0;
    double min_dist_ = 0.0;
    double diameter_ = 0.0;
};

struct GrowthDiagnostics {
    double doubling_estimate = 1.0;  // max V(i,2r)/V(i,r)
    double cp_fit = 0.0;             // multiplicative constant of the power fit
    double d_fit = 0.0;              // fitted growth exponent
    double fit_residual = 0.0;       // RMS log-residual
    bool fit_ok = false;             // false when there are too few scales
    bool bound_holds = false;        // max V(i,r)/r^d <= cp_fit on the sample
    std::string note;
};

// Doubling estimate over every (point, distinct radius) pair plus a log-log
// least-squares fit of V(i,r) against r. Radii are the distinct pairwise
// distances with midpoints inserted, since V only changes at those values.
// The fit uses radii up to half the diameter: beyond that, balls saturate on
// the whole space and the slope no longer measures growth.
inline GrowthDiagnostics growth_diagnostics(const MetricMeasureSpace& space) {
    const std::size_t n = space.size();
    if (n < 2) throw ValidationError("growth_diagnostics: need at least 2 points");

    const std::vector<double> base = space.distinct_distances();
    std::vector<double> radii;
    radii.reserve(base.size() * 2);
    for (std::size_t k = 0; k < base.size(); ++k) {
        radii.push_back(base[k]);
        if (k + 1 < base.size()) radii.push_back(0.5 * (base[k] + base[k + 1]));
    }
    const double fit_cutoff = 0.5 * space.diameter();

    GrowthDiagnostics g;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t m = 0;
    std::vector<std::pair<double, double>> samples;  // (log r, log V) per (i, r)
    samples.reserve(n * radii.size());

    for (std::size_t i = 0; i < n; ++i) {
        // one sorted row, then each V(i,r) is a binary search
        std::vector<std::pair<double, double>> row(n);  // (dist, weight)
        for (std::size_t j = 0; j < n; ++j) row[j] = {space.rho(i, j), space.weight(j)};
        std::sort(row.begin(), row.end());
        std::vector<double> cum(n + 1, 0.0);
        for (std::size_t j = 0; j < n; ++j) cum[j + 1] = cum[j] + row[j].second;
        auto vol = [&](double r) {
            const auto it = std::lower_bound(row.begin(), row.end(), r,
                                             [](const std::pair<double, double>& p, double v) {
                                                 return p.first < v;
                                             });
            return cum[static_cast<std::size_t>(it - row.begin())];
        };
        for (double r : radii) {
            const double v1 = vol(r), v2 = vol(2.0 * r);
            g.doubling_estimate = std::max(g.doubling_estimate, v2 / v1);
            if (r > fit_cutoff) continue;
            const double lx = std::log(r), ly = std::log(v1);
            samples.emplace_back(lx, ly);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++m;
        }
    }

    const double denom = m * sxx - sx * sx;
    if (base.size() < 2 || m < 2 || std::fabs(denom) < 1e-30) {
        g.fit_ok = false;
        g.note = "degenerate fit: fewer than two distinct scales";
        return g;
    }
    g.d_fit = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - g.d_fit * sx) / m;
    g.cp_fit = std::exp(intercept);
    double rss = 0.0, worst = 0.0;
    for (const auto& [lx, ly] : samples) {
        const double e = ly - (intercept + g.d_fit * lx);
        rss += e * e;
        worst = std::max(worst, std::exp(ly - g.d_fit * lx));  // V / r^d
    }
    g.fit_residual = std::sqrt(rss / static_cast<double>(m));
    g.bound_holds = worst <= g.cp_fit * (1.0 + 1e-9);
    g.fit_ok = true;
    return g;
}

}  // namespace mms
