#include <doctest.h>

#include <nagumo/phase.hpp>

#include <cmath>

using namespace nagumo;

// Frozen reference values were computed independently at 50-digit precision
// from the closed forms (quartic antiderivative, bisection on F, tanh-sinh
// transit quadrature) and are pinned here to double resolution.

TEST_CASE("cubic term and its clamp") {
    const SystemParams a{0.4};
    CHECK(cubic(a, 0.5) == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(cubic(a, 0.0) == 0.0);
    CHECK(cubic(a, 1.0) == 0.0);
    CHECK(cubic(a, -0.3) == 0.0);
    CHECK(cubic(a, 1.7) == 0.0);
    // sign pattern inside the strip: negative on (0,a), positive on (a,1)
    CHECK(cubic(a, 0.2) < 0.0);
    CHECK(cubic(a, 0.9) > 0.0);

    CHECK_THROWS_AS(SystemParams{0.0}, DomainError);
    CHECK_THROWS_AS(SystemParams{1.0}, DomainError);
    CHECK_THROWS_AS(SystemParams{-2.0}, DomainError);
}

TEST_CASE("potential values and constant continuation") {
    const SystemParams a4{0.4}, a6{0.6};
    CHECK(potential(a4, 0.0) == 0.0);
    CHECK(potential(a4, 1.0) == doctest::Approx(1.0 / 60.0).epsilon(1e-15));
    CHECK(potential(a4, 5.0 / 6.0) ==
          doctest::Approx(0.010609567901234568).epsilon(1e-14));
    CHECK(potential(a6, 1.0 / 6.0) ==
          doctest::Approx(-0.0060570987654320988).epsilon(1e-14));
    CHECK(potential(a4, 0.4) == doctest::Approx(-0.0085333333333333333).epsilon(1e-14));
    CHECK(potential(a6, 0.9) == doctest::Approx(-0.018225).epsilon(1e-14));
    CHECK(potential(SystemParams{0.3}, 0.85) ==
          doctest::Approx(0.027244270833333333).epsilon(1e-14));
    CHECK(potential(SystemParams{0.7}, 0.15) ==
          doctest::Approx(-0.0060890625).epsilon(1e-14));

    // constant continuation outside [0,1] matches the clamped field
    CHECK(potential(a4, -0.5) == 0.0);
    CHECK(potential(a4, 1.5) == potential(a4, 1.0));

    // long-double twin agrees at double arguments
    CHECK(static_cast<double>(potential_l(0.4, 0.37L)) ==
          doctest::Approx(potential(a4, 0.37)).epsilon(1e-16));
}

TEST_CASE("critical levels and their ordering") {
    const SystemParams a4{0.4}, a6{0.6}, a5{0.5};
    const CriticalLevels c4 = critical_levels(a4);
    CHECK(c4.saddle0 == 0.0);
    CHECK(c4.saddle1 == doctest::Approx(0.016666666666666667).epsilon(1e-15));
    CHECK(c4.center == doctest::Approx(-0.0085333333333333333).epsilon(1e-14));
    CHECK(c4.center < c4.saddle0);
    CHECK(c4.saddle0 < c4.saddle1);

    const CriticalLevels c6 = critical_levels(a6);
    CHECK(c6.saddle1 == doctest::Approx(-0.016666666666666667).epsilon(1e-15));
    CHECK(c6.saddle1 > c6.center);

    const CriticalLevels c5 = critical_levels(a5);
    CHECK(c5.saddle1 == 0.0);
    CHECK(c5.center == doctest::Approx(-0.015625).epsilon(1e-15));
}

TEST_CASE("level classification sweeps the tag ladder") {
    const SystemParams a4{0.4};
    const CriticalLevels cl = critical_levels(a4);

    CHECK(classify_level(a4, cl.center - 1e-3).tag == LevelTag::Empty);
    CHECK(classify_level(a4, cl.center).tag == LevelTag::CenterPoint);
    CHECK(classify_level(a4, 0.5 * cl.center).tag == LevelTag::ClosedCycle);
    CHECK(classify_level(a4, 0.0).tag == LevelTag::HomoclinicUnion);
    CHECK(classify_level(a4, 0.5 * cl.saddle1).tag == LevelTag::InnerArc);
    CHECK(classify_level(a4, cl.saddle1).tag == LevelTag::SaddleManifoldUnion);
    CHECK(classify_level(a4, cl.saddle1 + 1e-3).tag == LevelTag::TwoOuterCurves);
    CHECK(classify_level(a4, 0.0).acase == ACase::BelowHalf);

    // a > 1/2: the loop hangs on (1,0), whose level is now the lower saddle
    const SystemParams a6{0.6};
    const CriticalLevels c6 = critical_levels(a6);
    CHECK(classify_level(a6, c6.saddle1).tag == LevelTag::HomoclinicUnion);
    CHECK(classify_level(a6, 0.0).tag == LevelTag::SaddleManifoldUnion);
    CHECK(classify_level(a6, 0.5 * c6.saddle1).tag == LevelTag::InnerArc);
    CHECK(classify_level(a6, 0.1).acase == ACase::AboveHalf);

    const SystemParams a5{0.5};
    CHECK(classify_level(a5, 0.0).tag == LevelTag::HeteroclinicUnion);
    CHECK(classify_level(a5, -0.01).tag == LevelTag::ClosedCycle);
    CHECK(classify_level(a5, 0.02).tag == LevelTag::TwoOuterCurves);
}

TEST_CASE("homoclinic apex: closed forms, symmetry, linkage") {
    CHECK(homoclinic_apex(SystemParams{0.4}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(homoclinic_apex(SystemParams{0.6}) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(homoclinic_apex(SystemParams{0.3}) ==
          doctest::Approx(0.47793654034364664).epsilon(1e-14));
    CHECK(homoclinic_apex(SystemParams{0.7}) ==
          doctest::Approx(0.52206345965635336).epsilon(1e-14));
    CHECK_THROWS_AS(homoclinic_apex(SystemParams{0.5}), NoHomoclinicError);

    // loops of the (0.4, 0.6) pair intersect; those of (0.3, 0.7) do not
    CHECK(linked(SystemParams{0.4}, SystemParams{0.6}));
    CHECK_FALSE(linked(SystemParams{0.3}, SystemParams{0.7}));
}

TEST_CASE("orbit graph reproduces the heteroclinic branch at a = 1/2") {
    const SystemParams a{0.5};
    const PlanarPath path = orbit_graph(a, 0.0, 0.0, 1.0, +1, 513);
    REQUIRE(path.size() == 513);
    CHECK(path.front().x == 0.0);
    CHECK(path.back().x == 1.0);
    // midpoint of the upper connecting orbit: y = 1/(4 sqrt 2)
    const PhasePoint mid = path.eval(0.5L);
    CHECK(mid.x == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mid.y == doctest::Approx(0.17677669529663688).epsilon(1e-13));
    // the mirrored branch
    const PlanarPath low = orbit_graph(a, 0.0, 0.0, 1.0, -1, 65);
    CHECK(low.eval(0.5L).y == doctest::Approx(-0.17677669529663688).epsilon(1e-13));

    // a level strictly below the potential inside the window must be refused
    CHECK_THROWS_AS(orbit_graph(a, -0.1, 0.2, 0.8, +1), DomainError);
}

TEST_CASE("transit quadrature against the frozen transfer threshold pieces") {
    // both pieces of the (0.4, 0.6) transfer bound; they agree by the
    // x -> 1-x mirror symmetry of the pair
    const double left =
        2.0 * time_of_flight(SystemParams{0.4}, 0.010609567901234568, 0.0, 5.0 / 6.0);
    const double right =
        2.0 * time_of_flight(SystemParams{0.6}, -0.0060570987654320988, 1.0 / 6.0, 1.0);
    CHECK(left == doctest::Approx(12.288425746351434).epsilon(1e-10));
    CHECK(right == doctest::Approx(12.288425746351434).epsilon(1e-10));

    // interior zero of the radicand means an infinite transit
    CHECK_THROWS_AS(time_of_flight(SystemParams{0.4}, 0.0, 0.2, 0.9), DomainError);
}

TEST_CASE("closed orbit period and turning point") {
    const SystemParams a{0.6};
    CHECK(turning_point(a, 0.9) == doctest::Approx(0.36052775522907491).epsilon(1e-11));
    CHECK(closed_orbit_period(a, 0.9) ==
          doctest::Approx(15.578433660301545).epsilon(1e-10));
    // small amplitudes approach the linearization period 2 pi / sqrt(a(1-a));
    // the anharmonic correction is O(amplitude^2), a few 1e-6 at 1e-3
    CHECK(closed_orbit_period(a, 0.6 + 1e-3) ==
          doctest::Approx(12.825498301618641).epsilon(1e-5));
    CHECK(closed_orbit_period(SystemParams{0.5}, 0.5 + 1e-3) ==
          doctest::Approx(4.0 * PI_D).epsilon(1e-5));
}

TEST_CASE("linearization data at the saddles") {
    const EquilibriumData eq = equilibrium_data(SystemParams{0.4});
    CHECK(eq.at0.lambda == doctest::Approx(std::sqrt(0.4)).epsilon(1e-15));
    CHECK(eq.at1.lambda == doctest::Approx(std::sqrt(0.6)).epsilon(1e-15));
    CHECK(eq.center_freq == doctest::Approx(std::sqrt(0.24)).epsilon(1e-15));
    // eigenvector slopes: y/x = +lambda on the unstable, -lambda on the stable
    CHECK(eq.at0.unstable_dir.y / eq.at0.unstable_dir.x ==
          doctest::Approx(eq.at0.lambda).epsilon(1e-14));
    CHECK(eq.at0.stable_dir.y / eq.at0.stable_dir.x ==
          doctest::Approx(-eq.at0.lambda).epsilon(1e-14));
}
