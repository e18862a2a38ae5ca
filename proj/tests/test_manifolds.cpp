#include <doctest.h>

#include <nagumo/manifolds.hpp>

#include <cmath>

using namespace nagumo;

namespace {

// level-set ordinate of the frozen system at energy c: y = sqrt(2(c - F_a))
double level_y(double a, double c, double x) {
    const double rad = 2.0 * (c - potential(SystemParams{a}, x));
    return std::sqrt(std::max(rad, 0.0));
}

}  // namespace

TEST_CASE("graph windows: frozen endpoints and mirror symmetry") {
    const GraphWindows g46 = graph_window(0.4, 0.6);
    CHECK(g46.a_minus_0 == doctest::Approx(0.17607340376395510).epsilon(1e-13));
    CHECK(g46.a_plus_1 == doctest::Approx(0.82392659623604490).epsilon(1e-13));
    CHECK(g46.a_minus_0 + g46.a_plus_1 == doctest::Approx(1.0).epsilon(1e-14));

    const GraphWindows g37 = graph_window(0.3, 0.7);
    CHECK(g37.a_minus_0 == doctest::Approx(0.13706018608948037).epsilon(1e-13));
    CHECK(g37.a_plus_1 == doctest::Approx(0.86293981391051963).epsilon(1e-13));

    // windows stay clear of the weights themselves
    CHECK(g46.a_minus_0 < 0.4);
    CHECK(g46.a_plus_1 > 0.6);

    CHECK_THROWS_AS(graph_window(0.6, 0.4), DomainError);
    CHECK_THROWS_AS(graph_window(0.0, 0.6), DomainError);
}

TEST_CASE("frozen-weight continua reproduce the saddle level sets") {
    // constant weight: the unstable curve of (0,0) is the E = 0 level set
    const ManifoldGraph un = unstable_continuum(SystemParams{0.4}, 0.0, 0, 32.0);
    CHECK(un.x_lo == 0.0);
    CHECK(un.x_hi == doctest::Approx(0.17607340376395510).epsilon(1e-12));
    CHECK(un.max_localization_defect < 1e-6);
    REQUIRE(un.curve.size() >= 8);
    double sup = 0.0;
    for (const PhasePoint& p : un.curve.pts) {
        CHECK(p.y >= 0.0);  // upper branch leaves to the right
        sup = std::max(sup, std::fabs(p.y - level_y(0.4, 0.0, p.x)));
    }
    CHECK(sup < 1e-6);
    // the sigma = 0 node is the equilibrium itself
    CHECK(dist(un.curve.front(), {0.0, 0.0}) == 0.0);
    CHECK(dist(un.at_sigma(0.0L), {0.0, 0.0}) == 0.0);

    // stable curve into (1,0): level set of the saddle-1 energy, upper branch
    const ManifoldGraph st = stable_continuum(SystemParams{0.6}, 0.0, 1, 32.0);
    const double c1 = critical_levels(SystemParams{0.6}).saddle1;
    CHECK(st.x_lo == doctest::Approx(0.82392659623604490).epsilon(1e-12));
    CHECK(st.x_hi == 1.0);
    double sup_s = 0.0;
    for (const PhasePoint& p : st.curve.pts) {
        CHECK(p.y >= 0.0);  // enters (1,0) from the left through y > 0
        sup_s = std::max(sup_s, std::fabs(p.y - level_y(0.6, c1, p.x)));
    }
    CHECK(sup_s < 1e-6);

    // branch sign table for the remaining two kinds
    const ManifoldGraph un1 = unstable_continuum(SystemParams{0.6}, 0.0, 1, 32.0);
    for (const PhasePoint& p : un1.curve.pts) CHECK(p.y <= 0.0);
    const ManifoldGraph st0 = stable_continuum(SystemParams{0.4}, 0.0, 0, 32.0);
    for (const PhasePoint& p : st0.curve.pts) CHECK(p.y <= 0.0);

    // windows shorter than the localization length are refused
    CHECK_THROWS_AS(unstable_continuum(SystemParams{0.4}, 0.0, 0, 5.0), DomainError);
}

TEST_CASE("graph evaluation is stable under window doubling") {
    const StepProfile prof = StepProfile::uniform(0.4, 0.6, 1.0, 0.04, -1, 7);
    const double t0 = prof.t(-1);
    const ManifoldGraph g1 = unstable_continuum(prof, t0, 0, 32.0);
    const ManifoldGraph g2 = unstable_continuum(prof, t0, 0, 64.0);
    CHECK(g1.max_localization_defect < 1e-6);
    for (double x : {0.02, 0.06, 0.11, 0.16}) {
        const double y1 = g1.y_at(x);
        const double y2 = g2.y_at(x);
        CHECK(std::fabs(y1 - y2) < 1e-8);
    }
    CHECK_THROWS_AS(g1.y_at(g1.x_hi + 0.05), DomainError);
}

TEST_CASE("polyline intersection: crossing, near miss, disjoint") {
    PlanarPath a, b;
    a.s = {0.0L, 1.0L};
    a.pts = {{0.0, 0.0}, {1.0, 1.0}};
    b.s = {0.0L, 1.0L};
    b.pts = {{0.0, 1.0}, {1.0, 0.0}};
    const PathIntersections hit = intersect_paths(a, b);
    REQUIRE(hit.points.size() == 1);
    CHECK(hit.near_misses.empty());
    CHECK(dist(hit.points[0], {0.5, 0.5}) < 1e-12);

    // a parallel copy a hair above never crosses but comes within 1e-9
    PlanarPath c = a;
    for (PhasePoint& p : c.pts) p.y += 1e-10;
    const PathIntersections graze = intersect_paths(a, c);
    CHECK(graze.points.empty());
    CHECK_FALSE(graze.near_misses.empty());

    PlanarPath far = a;
    for (PhasePoint& p : far.pts) p.y += 2.0;
    const PathIntersections none = intersect_paths(a, far);
    CHECK(none.points.empty());
    CHECK(none.near_misses.empty());

    // shared interior vertex: one intersection, not four duplicates
    PlanarPath v1, v2;
    v1.s = {0.0L, 0.5L, 1.0L};
    v1.pts = {{-1.0, -1.0}, {0.0, 0.0}, {1.0, -1.0}};
    v2.s = {0.0L, 0.5L, 1.0L};
    v2.pts = {{-1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}};
    const PathIntersections shared = intersect_paths(v1, v2);
    CHECK(shared.points.size() == 1);
}

TEST_CASE("tail fitting recovers the saddle exponent on a seeded orbit") {
    // constant weight 0.4 over a single wide gap
    const StepProfile prof = StepProfile::uniform(0.4, 0.6, 100.0, 1.0, 0, 1);
    const EquilibriumData eq = equilibrium_data(SystemParams{0.4});
    const double lambda = eq.at0.lambda;
    const double nrm = std::hypot(1.0, lambda);
    const PhasePoint seed{1e-8 / nrm, 1e-8 * lambda / nrm};

    const Trajectory orbit = integrate_profile(prof, seed, 0.0, 20.0);
    const TailFit fit = fit_tail(orbit, prof, {0.0, 0.0}, 0.0, 20.0, true);
    CHECK(fit.end_distance == doctest::Approx(1e-8).epsilon(1e-3));
    CHECK(fit.zero_count == 0);
    CHECK(fit.monotone);
    CHECK(fit.expected_exponent == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(std::fabs(fit.decay_exponent - lambda) / lambda < 0.1);
    CHECK(fit.fit_t_lo >= 0.0);
    CHECK(fit.fit_t_hi <= 20.0);
}
