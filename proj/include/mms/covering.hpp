#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "mms/common.hpp"
#include "mms/space.hpp"

namespace mms {

struct Ball {
    std::size_t center = 0;
    double radius = 0.0;
};

// Balls live either in the space's own metric or in an anisotropic quasi-norm
// over its coordinates.
struct BallCollection {
    std::vector<Ball> balls;
    double radius_bound = 0.0;  // declared R; defaults to the max radius
    std::optional<AnisotropyMatrix> anisotropy;
};

struct CoveringResult {
    std::vector<std::size_t> selected;        // indices into the input collection, in pick order
    std::vector<std::size_t> removed_by;      // per input ball: selected ball that removed it (self if selected)
    std::vector<std::size_t> certificate;     // per input ball: selected ball whose 3-dilation contains it
    bool contains_at_3 = false;
    bool contains_at_5 = false;
    double khat = 0.0;                        // smallest grid dilation in {2.0,...,6.0} that certifies containment
    double dilation_used = 3.0;
};

namespace detail {

class PointMask {
public:
    explicit PointMask(std::size_t n) : words_((n + 63) / 64, 0) {}
    void set(std::size_t i) { words_[i >> 6] |= (std::uint64_t{1} << (i & 63)); }
    bool intersects(const PointMask& o) const {
        for (std::size_t w = 0; w < words_.size(); ++w)
            if (words_[w] & o.words_[w]) return true;
        return false;
    }
    bool subset_of(const PointMask& o) const {
        for (std::size_t w = 0; w < words_.size(); ++w)
            if (words_[w] & ~o.words_[w]) return false;
        return true;
    }

private:
    std::vector<std::uint64_t> words_;
};

}  // namespace detail

// Greedy maximal selection: repeatedly pick the largest-radius remaining ball
// (ties by lowest center id), drop everything whose point set meets it.
// Containment of every input ball inside a 3-dilated selected ball follows
// from the triangle inequality, so contains_at_3 is expected to always hold;
// khat records what the geometry actually needed.
inline CoveringResult greedy_select(const MetricMeasureSpace& space, const BallCollection& coll) {
    const std::size_t nb = coll.balls.size();
    if (nb == 0) throw ValidationError("greedy_select: empty ball collection");
    const double bound = coll.radius_bound > 0.0
                             ? coll.radius_bound
                             : std::max_element(coll.balls.begin(), coll.balls.end(),
                                                [](const Ball& a, const Ball& b) {
                                                    return a.radius < b.radius;
                                                })
                                   ->radius;
    if (coll.anisotropy) {
        if (!space.has_coords()) throw ValidationError("greedy_select: anisotropic balls need coordinates");
        if (coll.anisotropy->dim() != space.coord_dim())
            throw ValidationError("greedy_select: anisotropy matrix dim mismatch");
    }
    for (const Ball& b : coll.balls) {
        if (b.center >= space.size()) throw ValidationError("greedy_select: ball center out of range");
        if (!(b.radius > 0.0)) throw ValidationError("greedy_select: ball radius must be positive");
        if (b.radius > bound * (1.0 + 1e-12))
            throw ValidationError("greedy_select: ball radius exceeds declared bound");
    }

    const std::size_t n = space.size();
    auto dist = [&](std::size_t i, std::size_t j) {
        return coll.anisotropy ? coll.anisotropy->distance(space.coords(i), space.coords(j))
                               : space.rho(i, j);
    };
    auto mask_of = [&](std::size_t center, double r) {
        detail::PointMask m(n);
        for (std::size_t j = 0; j < n; ++j)
            if (dist(center, j) < r) m.set(j);
        return m;
    };

    std::vector<detail::PointMask> pts;
    pts.reserve(nb);
    for (const Ball& b : coll.balls) pts.push_back(mask_of(b.center, b.radius));

    CoveringResult res;
    res.removed_by.assign(nb, std::numeric_limits<std::size_t>::max());
    std::vector<bool> alive(nb, true);
    std::size_t remaining = nb;
    while (remaining > 0) {
        std::size_t pick = nb;
        for (std::size_t b = 0; b < nb; ++b) {
            if (!alive[b]) continue;
            if (pick == nb || coll.balls[b].radius > coll.balls[pick].radius ||
                (coll.balls[b].radius == coll.balls[pick].radius &&
                 coll.balls[b].center < coll.balls[pick].center))
                pick = b;
        }
        res.selected.push_back(pick);
        for (std::size_t b = 0; b < nb; ++b) {
            if (!alive[b]) continue;
            if (pts[b].intersects(pts[pick])) {
                alive[b] = false;
                res.removed_by[b] = pick;
                --remaining;
            }
        }
    }

    // dilation needed per input ball against its best selected ball:
    // need(b) = min over selected s of max_{y in pts(b)} dist(y, c_s) / r_s
    std::vector<double> need(nb, std::numeric_limits<double>::infinity());
    res.certificate.assign(nb, std::numeric_limits<std::size_t>::max());
    for (std::size_t b = 0; b < nb; ++b) {
        std::vector<std::size_t> members;
        for (std::size_t j = 0; j < n; ++j)
            if (dist(coll.balls[b].center, j) < coll.balls[b].radius) members.push_back(j);
        for (std::size_t s : res.selected) {
            double worst = 0.0;
            for (std::size_t y : members)
                worst = std::max(worst, dist(y, coll.balls[s].center));
            const double k_needed = worst / coll.balls[s].radius;
            if (k_needed < need[b]) need[b] = k_needed;
            if (res.certificate[b] == std::numeric_limits<std::size_t>::max() &&
                k_needed < 3.0)
                res.certificate[b] = s;
        }
    }
    auto contained_at = [&](double k) {
        for (std::size_t b = 0; b < nb; ++b)
            if (!(need[b] < k)) return false;
        return true;
    };
    res.contains_at_3 = contained_at(3.0);
    res.contains_at_5 = contained_at(5.0);
    res.khat = 0.0;
    for (int g = 0; g <= 40; ++g) {
        const double k = 2.0 + 0.1 * g;
        if (contained_at(k)) {
            res.khat = k;
            break;
        }
    }
    return res;
}

}  // namespace mms
