// Builds a 1-D grid, evaluates the weak-type functional and the fractional
// seminorm of a sine field, and prints how the two scale under refinement.

#include <cstdio>

#include "mms/asymptotics.hpp"
#include "mms/functionals.hpp"
#include "mms/space.hpp"

int main() {
    using namespace mms;
    std::printf("%6s %14s %14s %14s\n", "N", "weak(p=2)", "frac(s=.5,p=2)", "sum Lip^2 mu");
    for (int n : {16, 32, 64, 128}) {
        const auto grid = MetricMeasureSpace::grid(1, n, 1.0 / (n - 1), {1.0 / n});
        ScalarField f(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto x = grid.coords(i)[0];
            f[i] = x * (1.0 - x);
        }
        const double weak = bvy_weak_functional(grid, f, 2.0);
        const double frac = fractional_seminorm(grid, f, 0.5, 2.0);
        const double lip = lipschitz_lp_energy(grid, lipschitz_field(grid, f), 2.0);
        std::printf("%6d %14.8f %14.8f %14.8f\n", n, weak, frac, lip);
    }
    return 0;
}
