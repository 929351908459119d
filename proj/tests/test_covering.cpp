#include <catch2/catch_amalgamated.hpp>

#include "mms/covering.hpp"
#include "mms/rng.hpp"
#include "mms/space.hpp"
#include "oracles.hpp"

using namespace mms;

namespace {

double ball_dist(const MetricMeasureSpace& s, const BallCollection& coll, std::size_t i,
                 std::size_t j) {
    return coll.anisotropy ? coll.anisotropy->distance(s.coords(i), s.coords(j)) : s.rho(i, j);
}

// exhaustive verification, written directly against the definitions
void verify_covering(const MetricMeasureSpace& s, const BallCollection& coll,
                     const CoveringResult& res, double k) {
    // disjointness: no point of the space lies in two selected balls
    for (std::size_t pt = 0; pt < s.size(); ++pt) {
        int hits = 0;
        for (std::size_t b : res.selected)
            if (ball_dist(s, coll, coll.balls[b].center, pt) < coll.balls[b].radius) ++hits;
        REQUIRE(hits <= 1);
    }
    // containment: every input ball's point set inside some k-dilated selection
    for (std::size_t b = 0; b < coll.balls.size(); ++b) {
        bool contained_somewhere = false;
        for (std::size_t sel : res.selected) {
            bool inside = true;
            for (std::size_t pt = 0; pt < s.size(); ++pt) {
                if (ball_dist(s, coll, coll.balls[b].center, pt) < coll.balls[b].radius &&
                    !(ball_dist(s, coll, coll.balls[sel].center, pt) <
                      k * coll.balls[sel].radius)) {
                    inside = false;
                    break;
                }
            }
            if (inside) {
                contained_somewhere = true;
                break;
            }
        }
        REQUIRE(contained_somewhere);
    }
    // maximality: whatever removed a ball is at least as large
    for (std::size_t b = 0; b < coll.balls.size(); ++b) {
        const std::size_t by = res.removed_by[b];
        REQUIRE(by < coll.balls.size());
        REQUIRE(coll.balls[by].radius >= coll.balls[b].radius);
    }
}

}  // namespace

TEST_CASE("single ball selects itself") {
    const auto s = MetricMeasureSpace::grid(1, 5, 1.0, {1.0});
    BallCollection coll;
    coll.balls.push_back({2, 1.5});
    const auto res = greedy_select(s, coll);
    REQUIRE(res.selected == std::vector<std::size_t>{0});
    REQUIRE(res.contains_at_3);
    REQUIRE(res.contains_at_5);
    REQUIRE(res.khat == 2.0);  // lowest grid value that certifies self-containment
    REQUIRE(res.certificate[0] == 0);
}

TEST_CASE("equal balls on a 1-D grid select a separated subset") {
    const auto s = MetricMeasureSpace::grid(1, 20, 1.0, {1.0});
    BallCollection coll;
    for (std::size_t i = 0; i < 20; ++i) coll.balls.push_back({i, 1.5});
    const auto res = greedy_select(s, coll);
    // point sets are {i-1, i, i+1}; the greedy tie-break walks the centers in
    // id order, so the selection is every third ball
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < 20; i += 3) expect.push_back(i);
    REQUIRE(res.selected == expect);
    REQUIRE(res.contains_at_3);
    verify_covering(s, coll, res, 3.0);

    SECTION("deterministic: identical inputs, identical selection") {
        const auto res2 = greedy_select(s, coll);
        REQUIRE(res2.selected == res.selected);
        REQUIRE(res2.khat == res.khat);
    }
}

TEST_CASE("anisotropic crowded cloud") {
    Rng rng(404);
    std::vector<double> coords(160);
    for (double& c : coords) c = rng.unit();
    const auto s = MetricMeasureSpace::from_points(coords, 2, std::vector<double>(80, 1.0 / 80),
                                                   MetricKind::Euclidean);
    BallCollection coll;
    coll.anisotropy = AnisotropyMatrix(2, {4.0, 0.0, 0.0, 1.0});
    for (int b = 0; b < 40; ++b)
        coll.balls.push_back({rng.below(80), rng.uniform(0.05, 0.4)});
    const auto res = greedy_select(s, coll);
    REQUIRE(res.contains_at_3);
    REQUIRE(res.contains_at_5);
    REQUIRE(res.khat <= 3.0);
    verify_covering(s, coll, res, 3.0);
}

TEST_CASE("covering input validation") {
    const auto s = MetricMeasureSpace::grid(1, 4, 1.0, {1.0});
    BallCollection empty;
    REQUIRE_THROWS_AS(greedy_select(s, empty), ValidationError);

    BallCollection bad;
    bad.balls.push_back({0, -1.0});
    REQUIRE_THROWS_AS(greedy_select(s, bad), ValidationError);

    BallCollection over;
    over.radius_bound = 1.0;
    over.balls.push_back({0, 2.0});
    REQUIRE_THROWS_AS(greedy_select(s, over), ValidationError);

    BallCollection range;
    range.balls.push_back({99, 1.0});
    REQUIRE_THROWS_AS(greedy_select(s, range), ValidationError);
}

TEST_CASE("random collections always satisfy the covering certificate") {
    Rng rng(2718);
    for (int t = 0; t < 25; ++t) {
        const auto s = oracle::random_space(rng, 60);
        BallCollection coll;
        if (t % 2 == 1 && s.coord_dim() == 2)
            coll.anisotropy =
                AnisotropyMatrix(2, {rng.uniform(0.5, 3.0), 0.0, 0.0, rng.uniform(0.5, 3.0)});
        const std::size_t nb = 1 + rng.below(30);
        for (std::size_t b = 0; b < nb; ++b)
            coll.balls.push_back({rng.below(s.size()), rng.uniform(0.05, 0.6)});
        const auto res = greedy_select(s, coll);
        REQUIRE(res.contains_at_3);
        REQUIRE(res.khat <= 3.0 + 1e-12);
        verify_covering(s, coll, res, 3.0);
        verify_covering(s, coll, res, 5.0);
    }
}
