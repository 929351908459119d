#include <catch2/catch_amalgamated.hpp>

#include <numbers>

#include "mms/nonlocal.hpp"
#include "mms/rng.hpp"
#include "mms/space.hpp"
#include "oracles.hpp"

using namespace mms;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
MetricMeasureSpace unit_grid(int n) {
    return MetricMeasureSpace::grid(1, n, 1.0 / (n - 1), {1.0 / n});
}
}  // namespace

TEST_CASE("nonlocal p-laplacian application") {
    SECTION("constant fields are annihilated") {
        const auto s = unit_grid(12);
        const auto lf = apply_nonlocal_p_laplacian(s, ScalarField(12, 2.5), {0.5, 3.0});
        for (double v : lf) REQUIRE(v == 0.0);
    }
    SECTION("two-point hand value") {
        const auto s = MetricMeasureSpace::grid(1, 2, 1.0, {1.0});
        const auto lf = apply_nonlocal_p_laplacian(s, {0.0, 1.0}, {0.5, 2.0});
        REQUIRE(lf[0] == -1.0);
        REQUIRE(lf[1] == 1.0);
    }
    SECTION("p = 2 operator is linear") {
        Rng rng(61);
        const auto s = oracle::random_space(rng, 20);
        const auto f = oracle::random_field(rng, s.size());
        const auto g = oracle::random_field(rng, s.size());
        const double a = 1.3, b = -0.7;
        ScalarField combo(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) combo[i] = a * f[i] + b * g[i];
        const NonlocalParams prm{0.4, 2.0};
        const auto lc = apply_nonlocal_p_laplacian(s, combo, prm);
        const auto lf = apply_nonlocal_p_laplacian(s, f, prm);
        const auto lg = apply_nonlocal_p_laplacian(s, g, prm);
        double scale = 0.0;
        for (double v : lc) scale = std::max(scale, std::fabs(v));
        for (std::size_t i = 0; i < s.size(); ++i)
            REQUIRE_THAT(lc[i], WithinAbs(a * lf[i] + b * lg[i], 1e-12 * std::max(1.0, scale)));
    }
    SECTION("p = 1 uses the sign kernel without blowing up") {
        const auto s = unit_grid(8);
        ScalarField f(8);
        for (std::size_t i = 0; i < 8; ++i) f[i] = static_cast<double>(i % 2);
        const auto lf = apply_nonlocal_p_laplacian(s, f, {0.5, 1.0});
        for (double v : lf) REQUIRE(std::isfinite(v));
    }
    SECTION("parameter validation") {
        const auto s = unit_grid(4);
        REQUIRE_THROWS_AS(apply_nonlocal_p_laplacian(s, ScalarField(4, 0.0), {1.5, 2.0}),
                          ValidationError);
        REQUIRE_THROWS_AS(apply_nonlocal_p_laplacian(s, ScalarField(4, 0.0), {0.5, 0.5}),
                          ValidationError);
    }
}

TEST_CASE("dirichlet solve") {
    SECTION("zero rhs with constant boundary returns the constant") {
        const auto s = unit_grid(10);
        std::map<std::size_t, double> bdry{{0, 1.5}, {9, 1.5}};
        const auto rep = solve_dirichlet(s, ScalarField(10, 0.0), bdry, {0.5, 2.0});
        REQUIRE(rep.converged);
        for (double v : rep.u) REQUIRE_THAT(v, WithinAbs(1.5, 1e-12));
        REQUIRE_THAT(rep.grad_norm, WithinAbs(0.0, 1e-12));
        REQUIRE_THAT(rep.operator_residual, WithinAbs(0.0, 1e-12));
    }
    SECTION("p = 2 matches the dense linear-algebra oracle") {
        for (int n : {8, 16}) {
            const auto s = unit_grid(n);
            Rng rng(100 + n);
            const auto rhs = oracle::random_field(rng, s.size());
            std::map<std::size_t, double> bdry{{0, 0.0}, {static_cast<std::size_t>(n - 1), 0.25}};
            SolverOptions opt;
            opt.grad_tol = 1e-12;
            opt.energy_rtol = 0.0;
            opt.max_iters = 200000;
            const auto rep = solve_dirichlet(s, rhs, bdry, {0.5, 2.0}, opt);
            const auto ref = oracle::dirichlet_p2_ref(s, rhs, bdry, 0.5);
            REQUIRE(rep.converged);
            for (std::size_t i = 0; i < s.size(); ++i)
                REQUIRE_THAT(rep.u[i], WithinAbs(ref[i], 1e-8));
        }
    }
    SECTION("p = 3 on a small path reaches first-order optimality") {
        const auto s = unit_grid(8);
        Rng rng(301);
        const auto rhs = oracle::random_field(rng, s.size());
        std::map<std::size_t, double> bdry{{0, 0.0}, {7, 0.0}};
        SolverOptions opt;
        opt.grad_tol = 1e-6;
        opt.energy_rtol = 0.0;
        opt.max_iters = 100000;
        const auto rep = solve_dirichlet(s, rhs, bdry, {0.5, 3.0}, opt);
        REQUIRE(rep.converged);
        REQUIRE(rep.grad_norm < 1e-6);
        for (std::size_t k = 1; k < rep.energy_trace.size(); ++k)
            REQUIRE(rep.energy_trace[k] <= rep.energy_trace[k - 1] + 1e-15);
    }
    SECTION("smoothed kernel handles p in (1,2)") {
        const auto s = unit_grid(8);
        Rng rng(302);
        const auto rhs = oracle::random_field(rng, s.size());
        std::map<std::size_t, double> bdry{{0, 0.0}, {7, 0.0}};
        const auto rep = solve_dirichlet(s, rhs, bdry, {0.5, 1.5});
        REQUIRE(rep.converged);
        for (double v : rep.u) REQUIRE(std::isfinite(v));
    }
    SECTION("gradient validation runs on every solve entry") {
        const auto s = unit_grid(12);
        Rng rng(303);
        const auto rhs = oracle::random_field(rng, s.size());
        std::map<std::size_t, double> bdry{{0, 0.3}, {11, -0.2}};
        REQUIRE_NOTHROW(solve_dirichlet(s, rhs, bdry, {0.4, 2.5}));
    }
    SECTION("iteration cap produces a flagged partial report") {
        const auto s = unit_grid(16);
        Rng rng(304);
        const auto rhs = oracle::random_field(rng, s.size());
        std::map<std::size_t, double> bdry{{0, 0.0}, {15, 0.0}};
        SolverOptions opt;
        opt.max_iters = 1;
        opt.grad_tol = 0.0;
        opt.energy_rtol = 0.0;
        const auto rep = solve_dirichlet(s, rhs, bdry, {0.5, 2.0}, opt);
        REQUIRE_FALSE(rep.converged);
        REQUIRE(rep.iterations <= 1);
    }
    SECTION("boundary validation") {
        const auto s = unit_grid(4);
        REQUIRE_THROWS_AS(solve_dirichlet(s, ScalarField(4, 0.0), {}, {0.5, 2.0}),
                          ValidationError);
        std::map<std::size_t, double> all{{0, 0.0}, {1, 0.0}, {2, 0.0}, {3, 0.0}};
        REQUIRE_THROWS_AS(solve_dirichlet(s, ScalarField(4, 0.0), all, {0.5, 2.0}),
                          ValidationError);
    }
}

TEST_CASE("nonlocal poincare inequality") {
    SECTION("two-point hand computation") {
        const auto s = MetricMeasureSpace::grid(1, 2, 1.0, {1.0});
        const auto rep = poincare_check(s, {0.0, 1.0}, 0, 1.5, {0.5, 2.0});
        REQUIRE_THAT(rep.lhs, WithinRel(0.5, 1e-14));
        REQUIRE_THAT(rep.rhs_raw, WithinRel(2.0, 1e-14));
        REQUIRE_THAT(rep.c0, WithinRel(1.0, 1e-14));
        REQUIRE(rep.holds);
    }
    SECTION("constant field is trivial") {
        const auto s = unit_grid(10);
        const auto rep = poincare_check(s, ScalarField(10, 3.0), 4, 0.3, {0.5, 2.0});
        REQUIRE(rep.lhs <= 1e-28);  // rounding residue of the weighted average
        REQUIRE(rep.rhs_raw == 0.0);
        REQUIRE(rep.holds);
    }
    SECTION("randomized hard check never fires") {
        Rng rng(271);
        for (int t = 0; t < 200; ++t) {
            const auto s = oracle::random_space(rng, 40);
            const auto f = oracle::random_field(rng, s.size());
            const std::size_t c = rng.below(s.size());
            std::size_t other = rng.below(s.size());
            if (other == c) other = (other + 1) % s.size();
            const double radius = s.rho(c, other) * (1.0 + rng.unit());
            const NonlocalParams prm{0.1 + 0.8 * rng.unit(), 1.0 + 2.0 * rng.unit()};
            REQUIRE_NOTHROW(poincare_check(s, f, c, radius, prm));
        }
    }
    SECTION("singleton ball is rejected") {
        const auto s = unit_grid(10);
        REQUIRE_THROWS_AS(poincare_check(s, ScalarField(10, 0.0), 0, 1e-6, {0.5, 2.0}),
                          ValidationError);
    }
}

TEST_CASE("energy equivalence across refinements") {
    SECTION("smooth fields stay within a factor of two") {
        std::vector<MetricMeasureSpace> family;
        std::vector<ScalarField> fields;
        for (int n : {16, 32, 64, 128}) {
            family.push_back(unit_grid(n));
            ScalarField f(family.back().size());
            for (std::size_t i = 0; i < f.size(); ++i)
                f[i] = std::sin(2.0 * std::numbers::pi * family.back().coords(i)[0]);
            fields.push_back(std::move(f));
        }
        const auto rep = energy_equivalence_report(family, fields, 0.5, 2.0);
        REQUIRE(rep.rows.size() == 4);
        REQUIRE(rep.stable);
        REQUIRE(rep.ratio_spread < 2.0);
    }
    SECTION("constant field flags indeterminate rather than NaN") {
        std::vector<MetricMeasureSpace> family;
        family.push_back(unit_grid(8));
        const std::vector<ScalarField> fields{ScalarField(8, 1.0)};
        const auto rep = energy_equivalence_report(family, fields, 0.5, 2.0);
        REQUIRE(rep.rows[0].indeterminate);
        REQUIRE(std::isfinite(rep.rows[0].ratio));
    }
    SECTION("empty family is degenerate") {
        REQUIRE_THROWS_AS(energy_equivalence_report({}, {}, 0.5, 2.0), ValidationError);
    }
}

TEST_CASE("holder probe") {
    SECTION("constant field probes zero") {
        const auto s = unit_grid(16);
        std::vector<std::size_t> omega;
        for (std::size_t i = 4; i < 12; ++i) omega.push_back(i);
        const auto probe = holder_probe(s, ScalarField(16, 2.0), omega, 0.5);
        REQUIRE(probe.seminorm == 0.0);
    }
    SECTION("linear field at alpha = 1 probes exactly 1") {
        const auto s = unit_grid(16);
        ScalarField f(16);
        for (std::size_t i = 0; i < 16; ++i) f[i] = s.coords(i)[0];
        std::vector<std::size_t> omega;
        for (std::size_t i = 2; i < 14; ++i) omega.push_back(i);
        const auto probe = holder_probe(s, f, omega, 1.0);
        REQUIRE_THAT(probe.seminorm, WithinRel(1.0, 1e-12));
    }
    SECTION("seminorm grows with alpha on a unit-diameter domain") {
        // distances below one make rho^-alpha increase with alpha
        const auto s = unit_grid(32);
        Rng rng(44);
        const auto u = oracle::random_field(rng, 32);
        std::vector<std::size_t> omega;
        for (std::size_t i = 4; i < 28; ++i) omega.push_back(i);
        double prev = 0.0;
        for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double v = holder_probe(s, u, omega, alpha).seminorm;
            REQUIRE(v >= prev * (1.0 - 1e-12));
            prev = v;
        }
    }
    SECTION("oscillation table is monotone in the radius") {
        const auto s = unit_grid(64);
        ScalarField u(64);
        for (std::size_t i = 0; i < 64; ++i) {
            const double x = s.coords(i)[0];
            u[i] = x * x;
        }
        std::vector<std::size_t> omega;
        for (std::size_t i = 8; i < 56; ++i) omega.push_back(i);
        const auto probe = holder_probe(s, u, omega, 0.5);
        REQUIRE_FALSE(probe.oscillation.empty());
        for (const auto& row : probe.oscillation) {
            REQUIRE(row.osc_r <= row.osc_2r + 1e-15);
            REQUIRE(row.ratio <= 1.0 + 1e-12);
        }
    }
    SECTION("solved fields give a finite, refinement-stable constant") {
        std::vector<double> c_emps;
        for (int n : {16, 32}) {
            const auto s = unit_grid(n);
            ScalarField rhs(s.size());
            for (std::size_t i = 0; i < rhs.size(); ++i)
                rhs[i] = std::sin(std::numbers::pi * s.coords(i)[0]);
            std::map<std::size_t, double> bdry{{0, 0.0}, {static_cast<std::size_t>(n - 1), 0.0}};
            const auto rep = solve_dirichlet(s, rhs, bdry, {0.5, 2.0});
            REQUIRE(rep.converged);
            std::vector<std::size_t> omega;
            for (std::size_t i = s.size() / 4; i < 3 * s.size() / 4; ++i) omega.push_back(i);
            const auto probe = holder_probe(s, rep.u, omega, 0.5, &rhs);
            REQUIRE(std::isfinite(probe.c_emp));
            REQUIRE(probe.c_emp > 0.0);
            c_emps.push_back(probe.c_emp);
        }
        REQUIRE(c_emps[1] / c_emps[0] > 0.5);
        REQUIRE(c_emps[1] / c_emps[0] < 1.5);
    }
    SECTION("subdomain too small") {
        const auto s = unit_grid(8);
        REQUIRE_THROWS_AS(holder_probe(s, ScalarField(8, 0.0), {3}, 0.5), ValidationError);
    }
}
