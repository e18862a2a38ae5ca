#include <doctest.h>

#include <nagumo/flow.hpp>
#include <nagumo/phase.hpp>

#include <cmath>

using namespace nagumo;

TEST_CASE("time-T maps invert each other") {
    const SystemParams a{0.45};
    const PhasePoint p{0.6, 0.08};
    const PhasePoint q = poincare(a, 12.0, p);
    CHECK(dist(poincare_inverse(a, 12.0, q), p) < 1e-9);
    CHECK(dist(poincare(a, 0.0, p), p) == 0.0);
    CHECK_THROWS_AS(poincare(a, -1.0, p), DomainError);
}

TEST_CASE("leg maps compose frozen flows in order") {
    LegMap ab;
    ab.legs = {{0.4, 3.0}, {0.6, 5.0}};
    CHECK(ab.total_time() == doctest::Approx(8.0).epsilon(1e-15));

    const PhasePoint p{0.3, 0.1};
    const PhasePoint manual = poincare(SystemParams{0.6}, 5.0, poincare(SystemParams{0.4}, 3.0, p));
    CHECK(dist(ab(p), manual) < 1e-12);

    LegMap c;
    c.legs = {{0.5, 2.0}};
    const LegMap abc = ab.then(c);
    REQUIRE(abc.legs.size() == 3);
    CHECK(abc.legs.back().a == 0.5);
    CHECK(dist(abc(p), poincare(SystemParams{0.5}, 2.0, ab(p))) < 1e-12);

    // trajectory form spans the summed duration and matches the map endpoint
    const Trajectory tr = ab.trajectory(p, 4.0);
    CHECK(tr.t_begin() == 4.0);
    CHECK(tr.t_end() == doctest::Approx(12.0).epsilon(1e-15));
    CHECK(dist(tr.back(), ab(p)) < 1e-12);
}

TEST_CASE("block map covers the six gaps of one block") {
    const StepProfile prof = StepProfile::uniform(0.4, 0.6, 1.0, 0.08, 0, 6);
    const LegMap phi = block_map(prof, 0);
    REQUIRE(phi.legs.size() == 6);
    CHECK(phi.total_time() == doctest::Approx(prof.t(6) - prof.t(0)).epsilon(1e-14));
    CHECK(phi.legs[0].a == 0.4);
    CHECK(phi.legs[1].a == 0.6);

    const PhasePoint p{0.38, 0.01};
    const PhasePoint via_profile = flow_profile_point(prof, p, prof.t(0), prof.t(6));
    CHECK(dist(phi(p), via_profile) < 1e-9);

    CHECK_THROWS_AS(block_map(prof, 1), DomainError);
}

TEST_CASE("angle lift winds once per closed-orbit period") {
    const SystemParams a{0.6};
    const double period = closed_orbit_period(a, 0.9);
    const Trajectory tr = integrate_const(a, {0.9, 0.0}, 0.0, period, {});
    const AngleLift lift = angle_lift(0.6, tr);
    CHECK(lift.begin_value() >= -PI_D - 1e-12);
    CHECK(lift.begin_value() <= 1e-12);
    CHECK(lift.end_value() - lift.begin_value() == doctest::Approx(2.0 * PI_D).epsilon(1e-6));
    // interpolation agrees with the stored samples at half time
    const double mid = lift.at(0.5 * period);
    CHECK(mid > lift.begin_value());
    CHECK(mid < lift.end_value());
}

TEST_CASE("turn counting on closed orbits") {
    const SystemParams a{0.6};
    const double period = closed_orbit_period(a, 0.9);
    const Trajectory tr = integrate_const(a, {0.9, 0.0}, 0.0, 2.2 * period, {});

    // zeros of x' at half-period multiples: two per full turn
    const TurnCount one = count_turns(tr, 0.1 * period, 1.1 * period, 0.6);
    CHECK(one.turns == 1);
    CHECK(one.zero_count == 2);
    REQUIRE(one.winding.has_value());
    CHECK(*one.winding == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(one.winding_consistent);

    const TurnCount two = count_turns(tr, 0.05 * period, 2.05 * period, 0.6);
    CHECK(two.turns == 2);
    CHECK(two.zero_count == 4);

    // an odd zero count inside the window cannot be a whole number of turns
    CHECK_THROWS_AS(count_turns(tr, 0.1 * period, 0.8 * period), AmbiguousTurnCountError);

    // no zeros in a short window: zero turns
    CHECK(count_turns(tr, 0.05 * period, 0.4 * period).turns == 0);
}

TEST_CASE("mirrored turn counting matches the reflected convention") {
    // orbit of S(0.4) around (0.4, 0); mirrored coordinates place the center
    // at (0.6, 0), which is what the lower-half twist rectangle uses
    const SystemParams a{0.4};
    const double period = closed_orbit_period(a, 0.1);
    const Trajectory tr = integrate_const(a, {0.1, 0.0}, 0.0, 1.2 * period, {});
    const TurnCount tc = count_turns(tr, 0.05 * period, 1.05 * period, 0.4, true);
    CHECK(tc.turns == 1);
    REQUIRE(tc.winding.has_value());
    CHECK(tc.winding_consistent);
}
