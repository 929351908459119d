#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mms/common.hpp"
#include "mms/covering.hpp"
#include "mms/functionals.hpp"
#include "mms/rng.hpp"
#include "mms/space.hpp"

namespace mms {
namespace io {

using nlohmann::json;

inline double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number())
        throw ValidationError(std::string("config: missing numeric key '") + key + "'");
    return j[key].get<double>();
}

inline double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ValidationError(std::string("config: '") + key + "' must be a number");
    return j[key].get<double>();
}

inline std::string require_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string())
        throw ValidationError(std::string("config: missing string key '") + key + "'");
    return j[key].get<std::string>();
}

inline std::vector<double> number_array(const json& j) {
    if (!j.is_array()) throw ValidationError("config: expected a numeric array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ValidationError("config: array entry is not a number");
        out.push_back(v.get<double>());
    }
    return out;
}

inline AnisotropyMatrix parse_anisotropy(const json& j) {
    if (!j.is_array() || j.empty()) throw ValidationError("config: anisotropy must be a matrix");
    const int n = static_cast<int>(j.size());
    std::vector<double> a;
    for (const auto& row : j) {
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw ValidationError("config: anisotropy matrix must be square");
        for (const auto& v : row) a.push_back(v.get<double>());
    }
    return AnisotropyMatrix(n, std::move(a));
}

// --- space ------------------------------------------------------------------

inline std::vector<double> grid_weights(const json& wj, std::size_t n, double spacing, int dim) {
    const std::string rule = wj.is_null() ? "unit-mass" : require_string(wj, "rule");
    if (rule == "uniform") return {require_number(wj, "value")};
    if (rule == "unit-mass") return {1.0 / static_cast<double>(n)};
    if (rule == "cell-volume") return {std::pow(spacing, dim)};
    throw ValidationError("config: unknown weight rule '" + rule + "'");
}

inline MetricMeasureSpace build_space(const json& cfg, std::optional<std::uint64_t> seed = {}) {
    if (!cfg.is_object()) throw ValidationError("config: space must be an object");
    const std::string gen = require_string(cfg, "generator");

    MetricKind kind = MetricKind::Euclidean;
    std::optional<AnisotropyMatrix> aniso;
    if (cfg.contains("metric")) {
        const json& m = cfg["metric"];
        if (m.is_string()) {
            const std::string name = m.get<std::string>();
            if (name == "euclidean")
                kind = MetricKind::Euclidean;
            else if (name == "sup")
                kind = MetricKind::SupNorm;
            else
                throw ValidationError("config: unknown metric '" + name + "'");
        } else if (m.is_object() && m.contains("anisotropic")) {
            kind = MetricKind::Anisotropic;
            aniso = parse_anisotropy(m["anisotropic"]);
        } else {
            throw ValidationError("config: malformed metric spec");
        }
    }

    if (gen == "grid") {
        const int dim = static_cast<int>(number_or(cfg, "dim", 1));
        const int m = static_cast<int>(require_number(cfg, "points_per_side"));
        const double spacing = number_or(cfg, "spacing", m > 1 ? 1.0 / (m - 1) : 1.0);
        std::size_t n = 1;
        for (int c = 0; c < dim; ++c) n *= static_cast<std::size_t>(m);
        const auto w = grid_weights(cfg.contains("weights") ? cfg["weights"] : json(), n, spacing, dim);
        return MetricMeasureSpace::grid(dim, m, spacing, w, kind, std::move(aniso));
    }
    if (gen == "segment-in-plane") {
        const int count = static_cast<int>(require_number(cfg, "count"));
        const double spacing = number_or(cfg, "spacing", count > 1 ? 1.0 / (count - 1) : 1.0);
        const double y0 = number_or(cfg, "y_offset", 0.0);
        const auto w = grid_weights(cfg.contains("weights") ? cfg["weights"] : json(),
                                    static_cast<std::size_t>(count), spacing, 1);
        return MetricMeasureSpace::segment_in_plane(count, spacing, y0, w);
    }
    if (gen == "bump-cloud") {
        if (!seed) throw ValidationError("config: bump-cloud generator requires a seed");
        const int dim = static_cast<int>(number_or(cfg, "dim", 2));
        const int count = static_cast<int>(require_number(cfg, "count"));
        const double sigma = number_or(cfg, "sigma", 0.25);
        return MetricMeasureSpace::bump_cloud(dim, count, sigma, *seed, kind);
    }
    if (gen == "custom") {
        if (!cfg.contains("weights")) throw ValidationError("config: custom space needs weights");
        std::vector<double> w = number_array(cfg["weights"]);
        std::vector<double> coords;
        int coord_dim = 0;
        if (cfg.contains("coordinates")) {
            const json& cj = cfg["coordinates"];
            if (!cj.is_array() || cj.size() != w.size())
                throw ValidationError("config: coordinates must match weights length");
            for (const auto& pt : cj) {
                const auto v = number_array(pt);
                if (coord_dim == 0) coord_dim = static_cast<int>(v.size());
                if (static_cast<int>(v.size()) != coord_dim)
                    throw ValidationError("config: ragged coordinate array");
                coords.insert(coords.end(), v.begin(), v.end());
            }
        }
        if (cfg.contains("metric_matrix")) {
            std::vector<double> rho = number_array(cfg["metric_matrix"]);
            return MetricMeasureSpace::from_dense(std::move(rho), std::move(w), std::move(coords),
                                                  coord_dim);
        }
        if (coord_dim == 0)
            throw ValidationError("config: custom space needs a metric matrix or coordinates");
        return MetricMeasureSpace::from_points(std::move(coords), coord_dim, std::move(w), kind,
                                               std::move(aniso));
    }
    throw ValidationError("config: unknown generator '" + gen + "'");
}

inline json space_to_json(const MetricMeasureSpace& s) {
    json j;
    j["generator"] = "custom";
    j["weights"] = s.weights();
    j["metric_matrix"] = s.export_dense_metric();
    if (s.has_coords()) {
        json pts = json::array();
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto c = s.coords(i);
            pts.push_back(std::vector<double>(c.begin(), c.end()));
        }
        j["coordinates"] = std::move(pts);
    }
    return j;
}

// --- scalar fields ----------------------------------------------------------

inline double bump_poly(double z, double power) {
    const double q = 1.0 - z * z;
    return q > 0.0 ? std::pow(q, power) : 0.0;
}

inline ScalarField build_field(const json& cfg, const MetricMeasureSpace& space, Rng* rng = nullptr) {
    if (!cfg.is_object()) throw ValidationError("config: field must be an object");
    const std::string rule = require_string(cfg, "rule");
    const std::size_t n = space.size();
    ScalarField f(n, 0.0);

    auto coord = [&](std::size_t i, int axis) {
        if (!space.has_coords() || axis >= space.coord_dim())
            throw ValidationError("config: field rule needs coordinates the space lacks");
        return space.coords(i)[static_cast<std::size_t>(axis)];
    };

    if (rule == "inline") {
        f = number_array(cfg.contains("values") ? cfg["values"] : json());
        if (f.size() != n) throw ValidationError("config: inline field length mismatch");
    } else if (rule == "linear") {
        const int axis = static_cast<int>(number_or(cfg, "axis", 0));
        const double scale = number_or(cfg, "scale", 1.0);
        const double offset = number_or(cfg, "offset", 0.0);
        for (std::size_t i = 0; i < n; ++i) f[i] = scale * coord(i, axis) + offset;
    } else if (rule == "sin") {
        const int axis = static_cast<int>(number_or(cfg, "axis", 0));
        const double freq = number_or(cfg, "frequency", 1.0);
        for (std::size_t i = 0; i < n; ++i)
            f[i] = std::sin(2.0 * std::numbers::pi * freq * coord(i, axis));
    } else if (rule == "sin4") {
        const int axis = static_cast<int>(number_or(cfg, "axis", 0));
        for (std::size_t i = 0; i < n; ++i) {
            const double s = std::sin(std::numbers::pi * coord(i, axis));
            f[i] = s * s * s * s;
        }
    } else if (rule == "poly-bump") {
        const double width = require_number(cfg, "width");
        const double power = number_or(cfg, "power", 3.0);
        std::vector<double> center;
        if (cfg.contains("center") && cfg["center"].is_array())
            center = number_array(cfg["center"]);
        else
            center.assign(static_cast<std::size_t>(space.coord_dim()), number_or(cfg, "center", 0.5));
        for (std::size_t i = 0; i < n; ++i) {
            double q = 0.0;
            for (int c = 0; c < space.coord_dim(); ++c) {
                const double d = coord(i, c) - center[static_cast<std::size_t>(c)];
                q += d * d;
            }
            f[i] = bump_poly(std::sqrt(q) / width, power);
        }
    } else if (rule == "triangle") {
        const double center = number_or(cfg, "center", 0.5);
        const double width = require_number(cfg, "width");
        const int axis = static_cast<int>(number_or(cfg, "axis", 0));
        for (std::size_t i = 0; i < n; ++i) {
            const double z = std::fabs(coord(i, axis) - center) / width;
            f[i] = z < 1.0 ? 1.0 - z : 0.0;
        }
    } else if (rule == "random-uniform") {
        if (!rng) throw ValidationError("config: random field rule requires a seed");
        const double lo = number_or(cfg, "low", -1.0);
        const double hi = number_or(cfg, "high", 1.0);
        for (std::size_t i = 0; i < n; ++i) f[i] = rng->uniform(lo, hi);
    } else {
        throw ValidationError("config: unknown field rule '" + rule + "'");
    }
    check_field(space, f, "config field");
    return f;
}

inline ExponentField build_exponent_field(const json& cfg, const MetricMeasureSpace& space) {
    if (!cfg.is_object()) throw ValidationError("config: exponent must be an object");
    const std::string rule = require_string(cfg, "rule");
    std::vector<double> p(space.size(), 2.0);
    if (rule == "constant") {
        const double v = require_number(cfg, "value");
        std::fill(p.begin(), p.end(), v);
    } else if (rule == "affine") {
        const int axis = static_cast<int>(number_or(cfg, "axis", 0));
        const double base = require_number(cfg, "base");
        const double slope = number_or(cfg, "slope", 1.0);
        for (std::size_t i = 0; i < space.size(); ++i)
            p[i] = base + slope * space.coords(i)[static_cast<std::size_t>(axis)];
    } else if (rule == "inline") {
        p = number_array(cfg.contains("values") ? cfg["values"] : json());
    } else {
        throw ValidationError("config: unknown exponent rule '" + rule + "'");
    }
    return make_exponent_field(space, std::move(p));
}

inline YoungFunction build_young(const json& cfg) {
    if (!cfg.is_object()) throw ValidationError("config: young function must be an object");
    const std::string name = require_string(cfg, "name");
    if (name == "power") return YoungFunction::power(require_number(cfg, "p"));
    if (name == "power-log") return YoungFunction::power_log(require_number(cfg, "p"));
    throw ValidationError("config: unknown young function '" + name + "'");
}

// --- ball collections -------------------------------------------------------

inline BallCollection build_ball_collection(const json& cfg, const MetricMeasureSpace& space,
                                            Rng* rng = nullptr) {
    if (!cfg.is_object()) throw ValidationError("config: balls must be an object");
    BallCollection coll;
    if (cfg.contains("anisotropy")) coll.anisotropy = parse_anisotropy(cfg["anisotropy"]);
    coll.radius_bound = number_or(cfg, "radius_bound", 0.0);
    if (cfg.contains("balls")) {
        for (const auto& bj : cfg["balls"]) {
            Ball b;
            b.center = static_cast<std::size_t>(require_number(bj, "center"));
            b.radius = require_number(bj, "radius");
            coll.balls.push_back(b);
        }
    } else if (cfg.contains("random")) {
        if (!rng) throw ValidationError("config: random ball collection requires a seed");
        const json& r = cfg["random"];
        const std::size_t count = static_cast<std::size_t>(require_number(r, "count"));
        const double lo = require_number(r, "radius_low");
        const double hi = require_number(r, "radius_high");
        for (std::size_t k = 0; k < count; ++k) {
            Ball b;
            b.center = static_cast<std::size_t>(rng->below(space.size()));
            b.radius = rng->uniform(lo, hi);
            coll.balls.push_back(b);
        }
    } else {
        throw ValidationError("config: ball collection needs 'balls' or 'random'");
    }
    return coll;
}

inline json covering_to_json(const CoveringResult& r) {
    json j;
    j["selected"] = r.selected;
    j["removed_by"] = r.removed_by;
    j["certificate_at_3"] = r.certificate;
    j["contains_at_3"] = r.contains_at_3;
    j["contains_at_5"] = r.contains_at_5;
    j["khat"] = r.khat;
    return j;
}

}  // namespace io
}  // namespace mms
