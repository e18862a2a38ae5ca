#include <doctest.h>

#include <nagumo/stretch.hpp>

#include <cmath>

using namespace nagumo;

TEST_CASE("transfer threshold matches the frozen transit value") {
    const PairParams pair(0.4, 0.6);
    const RectConstants c = choose_p(pair);
    CHECK(t1_star(pair, c) == doctest::Approx(12.288425746351434).epsilon(1e-10));

    const PairParams wide(0.3, 0.7);
    const RectConstants cw = choose_p(wide);
    CHECK(t1_star(wide, cw) == doctest::Approx(10.189546409899489).epsilon(1e-10));
}

TEST_CASE("twist threshold is affine in the round-trip count") {
    const PairParams pair(0.4, 0.6);
    RectConstants c = choose_p(pair);
    c = compute_q(pair, c, t1_star(pair, c));
    const Thresholds th = compute_thresholds(pair, c);

    CHECK(th.period_plus > 0.0);
    CHECK(th.period_minus > 0.0);
    const double p = std::max(th.period_plus, th.period_minus);
    for (int n = 1; n <= 5; ++n)
        CHECK(th.t2_star(n + 1) - th.t2_star(n) == doctest::Approx(p).epsilon(1e-13));
    CHECK(th.t2_star(1) == doctest::Approx(2.0 * p).epsilon(1e-13));
}

TEST_CASE("smallness bound: scaling, monotonicity, mode ordering") {
    const PairParams pair(0.4, 0.6);
    RectConstants c = choose_p(pair);
    c = compute_q(pair, c, t1_star(pair, c));
    Thresholds th = compute_thresholds(pair, c);

    // synthetic check of the defining quotient with a dominant twist time
    Thresholds synth = th;
    synth.t1_star = 10.0;
    synth.period_plus = 6.25;
    synth.period_minus = 5.0;
    CHECK(eps_star(synth, 3, 1.0, ThresholdMode::Chaos) ==
          doctest::Approx(0.04).epsilon(1e-14));  // 1 / ((3+1) * 6.25)

    // linear in delta, nonincreasing in the turn cap
    const double e1 = eps_star(th, 2, 1.0, ThresholdMode::Chaos);
    CHECK(eps_star(th, 2, 2.0, ThresholdMode::Chaos) == doctest::Approx(2.0 * e1).epsilon(1e-14));
    double prev = eps_star(th, 1, 1.0, ThresholdMode::Chaos);
    for (int m = 2; m <= 8; ++m) {
        const double cur = eps_star(th, m, 1.0, ThresholdMode::Chaos);
        CHECK(cur <= prev + 1e-16);
        prev = cur;
    }

    // connection mode requires the transit bounds
    CHECK_THROWS_AS(eps_star(th, 1, 1.0, ThresholdMode::Connection), DomainError);
    add_connection_thresholds(th, pair, c, 0.17607340376395510, 0.82392659623604490);
    CHECK(eps_star(th, 1, 1.0, ThresholdMode::Connection) <=
          eps_star(th, 1, 1.0, ThresholdMode::Chaos) + 1e-16);
}

TEST_CASE("connection thresholds carry the frozen transit bounds") {
    const PairParams pair(0.4, 0.6);
    RectConstants c = choose_p(pair);
    c = compute_q(pair, c, t1_star(pair, c));
    Thresholds th = compute_thresholds(pair, c);
    add_connection_thresholds(th, pair, c, 0.17607340376395510, 0.82392659623604490);

    CHECK(th.x_star == doctest::Approx(0.27200695137165661).epsilon(1e-10));
    CHECK(th.x_star2 == doctest::Approx(0.72799304862834339).epsilon(1e-10));
    // the graph windows cut in left (right) of the intersection abscissas
    CHECK(th.x1 == doctest::Approx(0.17607340376395510).epsilon(1e-12));
    CHECK(th.x2 == doctest::Approx(0.82392659623604490).epsilon(1e-12));
    // by mirror symmetry the two bounds coincide for this pair
    CHECK(th.tau == doctest::Approx(5.5861695646479142).epsilon(1e-9));
    CHECK(th.tau_prime == doctest::Approx(5.5861695646479142).epsilon(1e-9));
}

TEST_CASE("winding classes bin the final lift angle") {
    CHECK(winding_class_of(0.5) == 0);
    CHECK(winding_class_of(4.0) == 1);          // (pi, 2 pi)
    CHECK(winding_class_of(2.5 * PI_D) == 0);   // (2 pi, 3 pi) is between bins
    CHECK(winding_class_of(3.5 * PI_D) == 2);   // (3 pi, 4 pi)
    CHECK(winding_class_of(-1.0) == 0);
    CHECK_THROWS_AS(winding_class_of(2.0 * PI_D + 1e-12), InconclusiveError);
    CHECK_THROWS_AS(winding_class_of(PI_D), InconclusiveError);
}

TEST_CASE("standard relations assemble the six-stage block") {
    const PairParams pair(0.4, 0.6);
    const RelationSet rs = standard_relations(pair, 2, 1.1);
    REQUIRE(rs.stages.size() == 6);
    REQUIRE(rs.rects.size() == 4);
    CHECK(rs.t1 == doctest::Approx(1.1 * rs.thresholds.t1_star).epsilon(1e-12));
    CHECK(rs.t2 == doctest::Approx(1.1 * rs.thresholds.t2_star(2)).epsilon(1e-12));

    // stages 1 and 4 are the twists, with mirrored lift on the lower one
    CHECK(rs.stages[1].crossing_number == 2);
    CHECK(rs.stages[1].twist_center.has_value());
    CHECK(*rs.stages[1].twist_center == 0.6);
    CHECK_FALSE(rs.stages[1].mirrored_lift);
    CHECK(rs.stages[4].crossing_number == 2);
    CHECK(*rs.stages[4].twist_center == 0.4);
    CHECK(rs.stages[4].mirrored_lift);
    for (int i : {0, 2, 3, 5}) CHECK(rs.stages[static_cast<std::size_t>(i)].crossing_number == 1);

    // every stage map runs for the duration matching its kind
    for (int i : {0, 2, 3, 5})
        CHECK(rs.stages[static_cast<std::size_t>(i)].map.total_time() ==
              doctest::Approx(rs.t1).epsilon(1e-12));
    CHECK(rs.stages[1].map.total_time() == doctest::Approx(rs.t2).epsilon(1e-12));
    CHECK(rs.stages[4].map.total_time() == doctest::Approx(rs.t2).epsilon(1e-12));
}

TEST_CASE("the transfer relation verifies with a reduced path budget") {
    const PairParams pair(0.4, 0.6);
    const RelationSet rs = standard_relations(pair, 1, 1.1);
    const StretchReport rep = verify_stretch(rs.stages[0], 2);
    CHECK(rep.passed);
    REQUIRE(rep.paths.size() == 2);
    for (const PathWitness& pw : rep.paths) {
        CHECK(pw.ok);
        REQUIRE(pw.crossings.size() >= 1);
        CHECK(pw.crossings[0].s_enter < pw.crossings[0].s_exit);
    }
}
