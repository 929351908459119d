// mms-lab: experiment runner for metric-measure-space functionals.
//
// Exit codes: 0 success, 2 config/schema validation failure, 3 numerical
// failure (including non-convergence), 64 usage error, 74 I/O failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mms/mms.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitUsage = 64;
constexpr int kExitIo = 74;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void fail_line(const char* category, const std::string& msg) {
    std::string one_line = msg;
    for (char& c : one_line)
        if (c == '\n' || c == '\r') c = ' ';
    std::cerr << "mms-lab: error: " << category << ": " << one_line << "\n";
}

json load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config file '" + path + "'");
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw mms::ValidationError(std::string("malformed JSON: ") + e.what());
    }
}

std::vector<double> parse_grid_spec(const json& j, const char* what) {
    if (j.is_array()) return mms::io::number_array(j);
    if (j.is_object() && j.contains("low") && j.contains("high") && j.contains("count")) {
        const double lo = j["low"].get<double>();
        const double hi = j["high"].get<double>();
        const int m = j["count"].get<int>();
        if (!(lo > 0.0) || !(hi > lo) || m < 2)
            throw mms::ValidationError(std::string("config: bad log grid for ") + what);
        std::vector<double> out;
        for (int k = 0; k < m; ++k)
            out.push_back(lo * std::pow(hi / lo, static_cast<double>(k) / (m - 1)));
        return out;
    }
    throw mms::ValidationError(std::string("config: ") + what +
                               " must be an array or {low, high, count}");
}

const json& require_key(const json& cfg, const char* key) {
    if (!cfg.contains(key))
        throw mms::ValidationError(std::string("config: missing key '") + key + "'");
    return cfg[key];
}

// boundary spec: {"ids": [...], "values": [...]} or
// {"rule": "grid-boundary", "value": v} (lattice faces of a grid space)
std::map<std::size_t, double> parse_boundary(const json& j, const mms::MetricMeasureSpace& space) {
    std::map<std::size_t, double> out;
    if (j.contains("ids")) {
        const auto ids = mms::io::number_array(j["ids"]);
        const auto vals = mms::io::number_array(require_key(j, "values"));
        if (ids.size() != vals.size())
            throw mms::ValidationError("config: boundary ids/values length mismatch");
        for (std::size_t k = 0; k < ids.size(); ++k)
            out[static_cast<std::size_t>(ids[k])] = vals[k];
        return out;
    }
    const std::string rule = mms::io::require_string(j, "rule");
    if (rule == "grid-boundary") {
        if (!space.grid_info())
            throw mms::ValidationError("config: grid-boundary needs a grid space");
        const double v = mms::io::number_or(j, "value", 0.0);
        const mms::GridInfo g = *space.grid_info();
        for (std::size_t i = 0; i < space.size(); ++i) {
            std::size_t rem = i;
            for (int c = 0; c < g.dim; ++c) {
                const int k = static_cast<int>(rem % g.points_per_side);
                rem /= static_cast<std::size_t>(g.points_per_side);
                if (k == 0 || k + 1 == g.points_per_side) {
                    out[i] = v;
                    break;
                }
            }
        }
        return out;
    }
    throw mms::ValidationError("config: unknown boundary rule '" + rule + "'");
}

std::function<double(double)> parse_bump(const json& cfg) {
    const std::string name = mms::io::require_string(cfg, "bump");
    if (name == "triangle")
        return [](double z) { return std::fabs(z) < 1.0 ? 1.0 - std::fabs(z) : 0.0; };
    if (name == "poly") {
        const double power = mms::io::number_or(cfg, "power", 3.0);
        return [power](double z) { return mms::io::bump_poly(z, power); };
    }
    if (name == "cosine")
        return [](double z) {
            return std::fabs(z) < 1.0 ? 0.5 * (1.0 + std::cos(std::numbers::pi * z)) : 0.0;
        };
    throw mms::ValidationError("config: unknown bump '" + name + "'");
}

// 1-D unit-mass grid family over [0,1]
std::vector<mms::MetricMeasureSpace> grid_family(const std::vector<double>& sizes) {
    std::vector<mms::MetricMeasureSpace> fam;
    for (double szd : sizes) {
        const int n = static_cast<int>(szd);
        if (n < 2) throw mms::ValidationError("config: family sizes must be >= 2");
        fam.push_back(mms::MetricMeasureSpace::grid(1, n, 1.0 / (n - 1),
                                                    {1.0 / static_cast<double>(n)}));
    }
    return fam;
}

// --- subcommand handlers ----------------------------------------------------

void run_space_gen(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng*,
                   mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    rep.set_scalar("n_points", static_cast<double>(space.size()));
    rep.set_scalar("total_mass", space.total_mass());
    rep.set_scalar("min_distance", space.min_positive_distance());
    rep.set_scalar("diameter", space.diameter());
    const auto g = mms::growth_diagnostics(space);
    rep.set_scalar("doubling_estimate", g.doubling_estimate);
    rep.set_flag("fit_ok", g.fit_ok);
    if (g.fit_ok) {
        rep.set_scalar("growth_exponent", g.d_fit);
        rep.set_scalar("growth_constant", g.cp_fit);
        rep.set_scalar("fit_residual", g.fit_residual);
        rep.set_flag("bound_holds", g.bound_holds);
    }
    rep.set_attachment("space", mms::io::space_to_json(space));
}

void run_bvy(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
             mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const double p = mms::io::require_number(cfg, "p");
    rep.set_scalar("value", mms::bvy_weak_functional(space, f, p));
    rep.set_scalar("p", p);
}

void run_seminorm(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                  mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const double s = mms::io::require_number(cfg, "s");
    const double p = mms::io::require_number(cfg, "p");
    rep.set_scalar("value", mms::fractional_seminorm(space, f, s, p));
}

void run_orlicz(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const double s = mms::io::require_number(cfg, "s");
    const auto phi = mms::io::build_young(require_key(cfg, "young"));
    rep.set_scalar("fd_seminorm", mms::orlicz_fd_seminorm(space, f, s, phi));
    rep.set_scalar("luxemburg_norm", mms::luxemburg_norm(space, f, phi));
    rep.set_scalar("delta2_estimate", phi.delta2_estimate());
    // empirical weak-vs-Lipschitz ratios; constants reported, never certified
    const double p = mms::io::number_or(cfg, "p", 2.0);
    const auto cmp = mms::orlicz_comparison_report(space, f, p, phi);
    rep.set_scalar("weak_quasinorm", cmp.weak_quasinorm);
    rep.set_scalar("lip_orlicz_norm", cmp.lip_orlicz_norm);
    rep.set_scalar("weak_to_lip_ratio", cmp.weak_to_lip_ratio);
    rep.set_scalar("lip_modular", cmp.lip_modular);
    rep.set_scalar("pair_modular", cmp.pair_modular);
    rep.set_scalar("modular_ratio", cmp.modular_ratio);
}

void run_varexp(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const double s = mms::io::require_number(cfg, "s");
    const auto pf = mms::io::build_exponent_field(require_key(cfg, "exponent"), space);
    const double pstar = mms::io::number_or(cfg, "pstar", pf.p_minus);
    rep.set_scalar("fd_seminorm", mms::varexp_fd_seminorm(space, f, s, pf));
    rep.set_scalar("weak_value", mms::varexp_weak_functional(space, f, pf, pstar));
    rep.set_scalar("pstar", pstar);
    rep.set_scalar("p_minus", pf.p_minus);
    rep.set_scalar("p_plus", pf.p_plus);
    rep.set_scalar("log_holder", pf.log_holder);
}

void run_anisotropic(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                     mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const auto a = mms::io::parse_anisotropy(require_key(cfg, "anisotropy"));
    const double p = mms::io::require_number(cfg, "p");
    const int n_eff = static_cast<int>(mms::io::number_or(cfg, "effective_dim", 0));
    const double value = mms::anisotropic_weak_functional(space, f, a, p, n_eff);
    rep.set_scalar("weak_value", value);
    rep.set_scalar("condition", a.condition());
    if (space.grid_info()) {
        const auto grad = mms::anisotropic_gradient(space, f, a);
        const double energy = mms::gradient_lp_energy(space, grad, p);
        rep.set_scalar("gradient_energy", energy);
        if (energy > 0.0) rep.set_scalar("weak_to_gradient_ratio", value / energy);
    }
}

void run_covering(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                  mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto coll = mms::io::build_ball_collection(require_key(cfg, "balls"), space, rng);
    const auto res = mms::greedy_select(space, coll);
    rep.set_scalar("n_balls", static_cast<double>(coll.balls.size()));
    rep.set_scalar("n_selected", static_cast<double>(res.selected.size()));
    rep.set_scalar("khat", res.khat);
    rep.set_flag("contains_at_3", res.contains_at_3);
    rep.set_flag("contains_at_5", res.contains_at_5);
    mms::Table t;
    t.columns = {"ball", "center", "radius", "removed_by", "certificate_at_3"};
    for (std::size_t b = 0; b < coll.balls.size(); ++b)
        t.add_row({static_cast<double>(b), static_cast<double>(coll.balls[b].center),
                   coll.balls[b].radius, static_cast<double>(res.removed_by[b]),
                   static_cast<double>(res.certificate[b])});
    rep.set_table("balls", std::move(t));
    rep.set_attachment("covering", mms::io::covering_to_json(res));
}

void run_nonlocal_apply(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                        mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const mms::NonlocalParams prm{mms::io::require_number(cfg, "s"),
                                  mms::io::require_number(cfg, "p")};
    const auto lf = mms::apply_nonlocal_p_laplacian(space, f, prm);
    double acc = 0.0;
    for (std::size_t i = 0; i < lf.size(); ++i) acc += lf[i] * lf[i] * space.weight(i);
    rep.set_scalar("weighted_l2", std::sqrt(acc));
    rep.set_field("Lf", lf);
}

void run_nonlocal_solve(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                        mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto rhs = mms::io::build_field(require_key(cfg, "rhs"), space, rng);
    const auto boundary = parse_boundary(require_key(cfg, "boundary"), space);
    const mms::NonlocalParams prm{mms::io::require_number(cfg, "s"),
                                  mms::io::require_number(cfg, "p")};
    mms::SolverOptions opt;
    if (cfg.contains("solver")) {
        const json& sj = cfg["solver"];
        opt.max_iters = static_cast<int>(mms::io::number_or(sj, "max_iters", opt.max_iters));
        opt.energy_rtol = mms::io::number_or(sj, "energy_rtol", opt.energy_rtol);
        opt.grad_tol = mms::io::number_or(sj, "grad_tol", opt.grad_tol);
    }
    const auto sol = mms::solve_dirichlet(space, rhs, boundary, prm, opt);
    rep.set_scalar("energy", sol.energy);
    rep.set_scalar("grad_norm", sol.grad_norm);
    rep.set_scalar("operator_residual", sol.operator_residual);
    rep.set_scalar("iterations", static_cast<double>(sol.iterations));
    rep.set_flag("converged", sol.converged);
    rep.set_field("u", sol.u);
    mms::Table t;
    t.columns = {"iteration", "energy"};
    for (std::size_t k = 0; k < sol.energy_trace.size(); ++k)
        t.add_row({static_cast<double>(k), sol.energy_trace[k]});
    rep.set_table("energy_trace", std::move(t));
}

void run_poincare(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                  mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const mms::NonlocalParams prm{mms::io::require_number(cfg, "s"),
                                  mms::io::require_number(cfg, "p")};
    const auto center = static_cast<std::size_t>(mms::io::require_number(cfg, "center"));
    const double radius = mms::io::require_number(cfg, "radius");
    const auto pr = mms::poincare_check(space, f, center, radius, prm);
    rep.set_scalar("lhs", pr.lhs);
    rep.set_scalar("rhs_raw", pr.rhs_raw);
    rep.set_scalar("c0", pr.c0);
    rep.set_scalar("bound", pr.bound);
    rep.set_scalar("ball_size", static_cast<double>(pr.ball_size));
    rep.set_flag("holds", pr.holds);
}

void run_equivalence(const json& cfg, std::optional<std::uint64_t>, mms::Rng* rng,
                     mms::ExperimentReport& rep) {
    const auto sizes = mms::io::number_array(require_key(cfg, "sizes"));
    const double s = mms::io::require_number(cfg, "s");
    const double p = mms::io::require_number(cfg, "p");
    const auto family = grid_family(sizes);
    std::vector<mms::ScalarField> fields;
    for (const auto& sp : family)
        fields.push_back(mms::io::build_field(require_key(cfg, "field"), sp, rng));
    const auto res = mms::energy_equivalence_report(family, fields, s, p);
    mms::Table t;
    t.columns = {"n", "nonlocal_energy", "local_energy", "ratio", "indeterminate"};
    for (const auto& row : res.rows)
        t.add_row({static_cast<double>(row.n), row.nonlocal_energy, row.local_energy, row.ratio,
                   row.indeterminate ? 1.0 : 0.0});
    rep.set_table("ratios", std::move(t));
    rep.set_scalar("ratio_spread", res.ratio_spread);
    rep.set_flag("stable", res.stable);
}

void run_kfunc(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
               mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const double s1 = mms::io::require_number(cfg, "s1");
    const double p1 = mms::io::require_number(cfg, "p1");
    const double p = mms::io::require_number(cfg, "p");
    const auto t_grid = parse_grid_spec(require_key(cfg, "t_grid"), "t_grid");
    std::vector<double> d_grid;
    if (cfg.contains("delta_grid")) d_grid = parse_grid_spec(cfg["delta_grid"], "delta_grid");
    const auto curve = mms::k_functional(space, f, s1, p1, p, t_grid, d_grid);
    mms::Table t;
    t.columns = {"t", "k", "delta_star"};
    for (std::size_t i = 0; i < curve.t.size(); ++i)
        t.add_row({curve.t[i], curve.k[i], curve.delta_star[i]});
    rep.set_table("curve", std::move(t));
    rep.set_scalar("x0_norm", curve.x0_norm);
    rep.set_scalar("x1_norm", curve.x1_norm);
    rep.set_flag("monotone_ok", curve.monotone_ok);
    rep.set_flag("concave_ok", curve.concave_ok);
    rep.set_flag("endpoints_ok", curve.endpoints_ok);
    rep.set_flag("identity_mollifier_used", curve.identity_mollifier_used);
}

void run_interp(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const auto r = mms::interpolation_inequality_report(
        space, f, mms::io::require_number(cfg, "s1"), mms::io::require_number(cfg, "p1"),
        mms::io::require_number(cfg, "theta"));
    rep.set_scalar("s", r.s);
    rep.set_scalar("p", r.p);
    rep.set_scalar("lhs", r.lhs);
    rep.set_scalar("lip_norm", r.lip_norm);
    rep.set_scalar("rhs_core", r.rhs_core);
    rep.set_scalar("c_emp", r.c_emp);
}

void run_bbm(const json& cfg, std::optional<std::uint64_t>, mms::Rng* rng,
             mms::ExperimentReport& rep) {
    const auto sizes = mms::io::number_array(require_key(cfg, "sizes"));
    const auto s_grid = mms::io::number_array(require_key(cfg, "s_grid"));
    const double p = mms::io::require_number(cfg, "p");
    const auto family = grid_family(sizes);
    std::vector<mms::ScalarField> fields;
    for (const auto& sp : family)
        fields.push_back(mms::io::build_field(require_key(cfg, "field"), sp, rng));
    const double gi = mms::io::number_or(cfg, "grad_integral",
                                         std::numeric_limits<double>::quiet_NaN());
    const auto sweep = mms::bbm_limit(family, fields, p, s_grid, gi);
    mms::Table t;
    t.columns = {"s", "n", "value", "on_diagonal"};
    for (std::size_t si = 0; si < sweep.s_grid.size(); ++si)
        for (std::size_t fi = 0; fi < sweep.sizes.size(); ++fi)
            t.add_row({sweep.s_grid[si], static_cast<double>(sweep.sizes[fi]),
                       sweep.values[si][fi], si == fi ? 1.0 : 0.0});
    rep.set_table("sweep", std::move(t));
    rep.set_scalar("chat", sweep.chat);
    rep.set_scalar("angular_constant", sweep.angular);
    rep.set_scalar("grad_integral", sweep.grad_integral);
    rep.set_scalar("target", sweep.target);
    rep.set_scalar("final_value", sweep.diagonal.back());
    rep.set_flag("monotone_toward", sweep.monotone_toward);
    rep.set_flag("final_within_10", sweep.final_within_10);
}

void run_sharpness(const json& cfg, std::optional<std::uint64_t>, mms::Rng*,
                   mms::ExperimentReport& rep) {
    const auto bump = parse_bump(cfg);
    const double x0 = mms::io::number_or(cfg, "x0", 0.5);
    const double p = mms::io::require_number(cfg, "p");
    const auto deltas = mms::io::number_array(require_key(cfg, "deltas"));
    const int res = static_cast<int>(mms::io::number_or(cfg, "min_points_across", 32));
    const auto trace = mms::sharpness_trace(bump, x0, deltas, p, res);
    mms::Table t;
    t.columns = {"delta", "n", "e_value", "s_value", "ratio"};
    for (std::size_t k = 0; k < trace.deltas.size(); ++k)
        t.add_row({trace.deltas[k], static_cast<double>(trace.sizes[k]), trace.e_values[k],
                   trace.s_values[k], trace.ratios[k]});
    rep.set_table("trace", std::move(t));
    rep.set_scalar("c_hat", trace.c_hat);
    rep.set_flag("converged", trace.converged);
}

void run_stability(const json& cfg, std::optional<std::uint64_t> seed, mms::Rng* rng,
                   mms::ExperimentReport& rep) {
    const auto space = mms::io::build_space(require_key(cfg, "space"), seed);
    const auto f = mms::io::build_field(require_key(cfg, "field"), space, rng);
    const auto g = mms::io::build_field(require_key(cfg, "perturbation"), space, rng);
    const double p = mms::io::require_number(cfg, "p");
    const auto eps = mms::io::number_array(require_key(cfg, "eps"));
    const auto tab = mms::stability_test(space, f, g, eps, p);
    mms::Table t;
    t.columns = {"eps", "e_value", "diff"};
    for (std::size_t k = 0; k < tab.eps.size(); ++k)
        t.add_row({tab.eps[k], tab.e_values[k], tab.diffs[k]});
    rep.set_table("trace", std::move(t));
    rep.set_scalar("e_base", tab.e_base);
    rep.set_scalar("perturbation_scale", tab.perturbation_scale);
    rep.set_flag("eventually_decreasing", tab.eventually_decreasing);
    rep.set_flag("final_ok", tab.final_ok);
}

using Handler = void (*)(const json&, std::optional<std::uint64_t>, mms::Rng*,
                         mms::ExperimentReport&);

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> h = {
        {"space-gen", run_space_gen},   {"bvy", run_bvy},
        {"seminorm", run_seminorm},     {"orlicz", run_orlicz},
        {"varexp", run_varexp},         {"anisotropic", run_anisotropic},
        {"covering", run_covering},     {"nonlocal-apply", run_nonlocal_apply},
        {"nonlocal-solve", run_nonlocal_solve}, {"poincare", run_poincare},
        {"equivalence", run_equivalence}, {"kfunc", run_kfunc},
        {"interp", run_interp},         {"bbm", run_bbm},
        {"sharpness", run_sharpness},   {"stability", run_stability},
    };
    return h;
}

void write_outputs(const std::string& out_dir, const mms::ExperimentReport& rep) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir + "'");
    {
        std::ofstream js(fs::path(out_dir) / "summary.json", std::ios::binary);
        if (!js) throw IoError("cannot write summary.json");
        js << rep.to_json().dump(2) << "\n";
        if (!js) throw IoError("failed writing summary.json");
    }
    for (const auto& [name, table] : rep.tables()) {
        std::ofstream cs(fs::path(out_dir) / (name + ".csv"), std::ios::binary);
        if (!cs) throw IoError("cannot write " + name + ".csv");
        cs << mms::ExperimentReport::csv_of(table);
        if (!cs) throw IoError("failed writing " + name + ".csv");
    }
    {
        std::ofstream cs(fs::path(out_dir) / "scalars.csv", std::ios::binary);
        if (!cs) throw IoError("cannot write scalars.csv");
        cs << "name,value\r\n";
        char buf[40];
        for (const auto& [name, value] : rep.scalars()) {
            std::snprintf(buf, sizeof buf, "%.17g", value);
            cs << mms::ExperimentReport::csv_escape(name) << ',' << buf << "\r\n";
        }
        if (!cs) throw IoError("failed writing scalars.csv");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mms-lab: finite metric measure spaces, seminorms, coverings, and sweeps"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed_flag = 0;
    int threads = static_cast<int>(std::thread::hardware_concurrency());

    for (const auto& [name, fn] : handlers()) {
        CLI::App* sc = app.add_subcommand(name);
        sc->add_option("--config", config_path, "JSON experiment config")->required();
        sc->add_option("--out", out_dir, "output directory for summary.json and CSV tables");
        sc->add_option("--seed", seed_flag, "RNG seed (overrides the config)");
        sc->add_option("--threads", threads, "worker threads for pairwise kernels");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail_line("usage", e.what());
        return kExitUsage;
    }
    CLI::App* parsed = app.get_subcommands().front();
    const std::string sub = parsed->get_name();
    const bool seed_given = parsed->count("--seed") > 0;
    const bool threads_given = parsed->count("--threads") > 0;

    try {
        const json cfg = load_config(config_path);
        if (!cfg.is_object()) throw mms::ValidationError("config root must be a JSON object");

        std::optional<std::uint64_t> seed;
        if (cfg.contains("seed")) {
            if (!cfg["seed"].is_number_unsigned() && !cfg["seed"].is_number_integer())
                throw mms::ValidationError("config: seed must be an integer");
            seed = cfg["seed"].get<std::uint64_t>();
        }
        if (seed_given) seed = seed_flag;
        if (cfg.contains("threads") && !threads_given) threads = cfg["threads"].get<int>();
        mms::parallel::set_threads(threads);

        std::optional<mms::Rng> rng;
        if (seed) rng.emplace(*seed);

        mms::ExperimentReport rep(sub);
        const auto t0 = std::chrono::steady_clock::now();
        handlers().at(sub)(cfg, seed, rng ? &*rng : nullptr, rep);
        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        rep.check_finite();
        rep.set_provenance(mms::sha256_hex(cfg.dump()), seed.has_value(), seed.value_or(0),
                           threads, wall_ms);

        if (out_dir.empty())
            std::cout << rep.to_json().dump(2) << "\n";
        else
            write_outputs(out_dir, rep);

        // non-convergence: the partial report is written, but the run fails
        const auto& flags = rep.flags();
        if (auto it = flags.find("converged"); it != flags.end() && !it->second) {
            fail_line("numerical", sub + ": no convergence within the iteration cap");
            return kExitNumerical;
        }
        return kExitOk;
    } catch (const mms::ValidationError& e) {
        fail_line("validation", e.what());
        return kExitValidation;
    } catch (const mms::NumericalError& e) {
        fail_line("numerical", e.what());
        return kExitNumerical;
    } catch (const IoError& e) {
        fail_line("io", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        fail_line("validation", e.what());
        return kExitValidation;
    }
}
