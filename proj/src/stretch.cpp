#include <nagumo/stretch.hpp>

#include <nagumo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

namespace nagumo {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

const char* to_cstr(Across a) { return a == Across::Minus ? "minus" : "plus"; }

// Bisection for a strictly monotone continuous function on [lo, hi].
double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw GeometryError("bisect_root: no sign change on [" + fmt(lo) + ", " + fmt(hi) + "]");
    while (hi - lo > 1e-14 * std::max(1.0, std::fabs(lo) + std::fabs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

/* ------------------------------------------------------------------ */
/*  thresholds                                                          */
/* ------------------------------------------------------------------ */

double Thresholds::t2_star(int n) const {
    if (n < 1) throw DomainError("t2_star: twist count must be >= 1");
    return (n + 1) * std::max(period_plus, period_minus);
}

double t1_star(const PairParams& pair, const RectConstants& c) {
    // Transit of the boundary orbits: through (p_minus, 0) under S(a_minus)
    // from the axis to x = 0 side, and through (p_plus, 0) under S(a_plus)
    // towards x = 1. Each half takes time_of_flight; the full crossing of the
    // band doubles it.
    const double left = 2.0 * time_of_flight(pair.minus, potential(pair.minus, c.p_minus), 0.0,
                                             c.p_minus);
    const double right = 2.0 * time_of_flight(pair.plus, potential(pair.plus, c.p_plus), c.p_plus,
                                              1.0);
    return std::max(left, right);
}

double t2_star(SystemParams sys, double q, int n) {
    if (n < 1) throw DomainError("t2_star: twist count must be >= 1");
    return (n + 1) * closed_orbit_period(sys, q);
}

Thresholds compute_thresholds(const PairParams& pair, const RectConstants& c) {
    if (!std::isfinite(c.q_plus) || !std::isfinite(c.q_minus))
        throw DomainError("compute_thresholds: q constants missing (run compute_q first)");
    Thresholds t;
    t.t1_star = t1_star(pair, c);
    t.period_plus = closed_orbit_period(pair.plus, c.q_plus);
    t.period_minus = closed_orbit_period(pair.minus, c.q_minus);
    return t;
}

namespace {

struct TauPiece {
    double tau;
    double x_star;
    double x_cut;  // min{x_star, graph window}
};

// Transit bound along the a_plus inner levels from the cut abscissa to x = 1.
// The printed level is the energy of the orbit through (p_plus, 0); when the
// cut lies left of that orbit's turning point the level is raised to the
// potential gap at the cut, the lowest E_{a_plus} value attained on the
// unstable arc over [0, x_cut].
TauPiece tau_piece(const PairParams& pair, const RectConstants& c, double window_minus0) {
    const double lo_p = potential(pair.plus, c.p_plus);
    const double x_star =
        bisect_root([&](double x) { return pair.gap_G(x) - lo_p; }, 1e-12, 1.0 - 1e-12);
    const double x_cut = std::min(x_star, window_minus0);
    double level = lo_p;
    if (potential(pair.plus, x_cut) >= level) level = pair.gap_G(x_cut);
    return {time_of_flight(pair.plus, level, x_cut, 1.0), x_star, x_cut};
}

}  // namespace

void add_connection_thresholds(Thresholds& t, const PairParams& pair, const RectConstants& c,
                               double window_minus0, double window_plus1) {
    const TauPiece fwd = tau_piece(pair, c, window_minus0);

    // tau_prime is tau of the reflected pair (1 - a_plus, 1 - a_minus); the
    // reflection x -> 1 - x exchanges the two saddles and maps the p
    // constants onto each other, so choose_p reproduces them.
    const PairParams mirrored(1.0 - pair.plus.a, 1.0 - pair.minus.a);
    const RectConstants mc = choose_p(mirrored);
    const TauPiece bwd = tau_piece(mirrored, mc, 1.0 - window_plus1);

    t.tau = fwd.tau;
    t.tau_prime = bwd.tau;
    t.x_star = fwd.x_star;
    t.x_star2 = 1.0 - bwd.x_star;
    t.x1 = fwd.x_cut;
    t.x2 = 1.0 - bwd.x_cut;
}

double eps_star(const Thresholds& t, int m, double delta, ThresholdMode mode) {
    if (m < 1) throw DomainError("eps_star: twist bound must be >= 1");
    if (!(delta > 0.0)) throw DomainError("eps_star: delta must be positive");
    double need = std::max(t.t1_star, t.t2_star(m));
    if (mode == ThresholdMode::Connection) {
        if (!std::isfinite(t.tau) || !std::isfinite(t.tau_prime))
            throw DomainError("eps_star: connection mode needs tau values");
        need = std::max(need, std::max(t.tau, t.tau_prime));
    }
    return delta / need;
}

/* ------------------------------------------------------------------ */
/*  stretching verification                                             */
/* ------------------------------------------------------------------ */

namespace {

std::string describe(const StretchProblem& prob) {
    std::string map_part;
    if (prob.map.legs.size() == 1) {
        map_part = "Psi(a=" + fmt(prob.map.legs[0].a) + ", T=" + fmt(prob.map.legs[0].T) + ")";
    } else {
        map_part = "composition(" + std::to_string(prob.map.legs.size()) +
                   " legs, T=" + fmt(prob.map.total_time()) + ")";
    }
    return map_part + " : (" + to_string(prob.source.label) + ", " +
           to_cstr(prob.source_across) + ") -> (" + to_string(prob.target.label) + ", " +
           to_cstr(prob.target_across) + "), N=" + std::to_string(prob.crossing_number);
}

}  // namespace

// H_j bin of the final lift angle: theta in [(2j-1) pi, 2j pi] gives class j.
// Angles within 1e-8 rad of a bin edge are refused rather than guessed.
int winding_class_of(double theta) {
    const double w = theta / PI_D;
    const double tie = 1e-8 / PI_D;

    // Every multiple of pi at or above pi is a bin edge, so resolve ties
    // before any classification: an angle this close to an edge cannot be
    // assigned a side in the presence of lift error.
    const double k_near = std::round(w);
    if (k_near >= 1.0 && std::fabs(w - k_near) < tie)
        throw InconclusiveError("winding classification: final angle " + fmt(theta) +
                                " sits on a bin edge");

    const double j_real = std::ceil(0.5 * w);
    if (j_real < 0.5 || j_real > 1e9) return 0;
    const long j = std::lround(j_real);
    return (w > 2.0 * j - 1.0) ? static_cast<int>(j) : 0;
}

namespace {

void classify_crossing(CrossingWitness& w, const StretchProblem& prob, const CurveFn& curve,
                       const OdeOptions& opts) {
    const long double sm = 0.5L * (w.s_enter + w.s_exit);
    const Trajectory traj = prob.map.trajectory(curve(sm), 0.0, opts);
    const AngleLift lift = angle_lift(*prob.twist_center, traj, prob.mirrored_lift);
    w.theta_final = lift.end_value();
    w.winding_class = winding_class_of(w.theta_final);
}

PathWitness examine_path(const StretchProblem& prob, const PlanarPath& path, double fraction,
                         const OdeOptions& opts) {
    PathWitness pw;
    pw.fraction = fraction;
    const CurveFn curve = as_curve(path);
    const PointMap fwd = [&](PhasePoint p) { return prob.map(p, opts); };
    const PlanarPath img = map_path(curve, path.s.front(), path.s.back(), fwd);
    const CurveFn exact = [&](long double s) { return fwd(curve(s)); };
    const auto crossings = crossing_subpaths(img, prob.target, prob.target_across, exact);

    for (const Crossing& c : crossings) {
        CrossingWitness w;
        w.s_enter = c.s_enter;
        w.s_exit = c.s_exit;
        w.enter_side = to_string(c.enter_side);
        w.exit_side = to_string(c.exit_side);
        if (prob.crossing_number > 1) classify_crossing(w, prob, curve, opts);
        pw.crossings.push_back(w);
    }

    if (prob.crossing_number == 1) {
        pw.ok = !pw.crossings.empty();
        if (!pw.ok) pw.note = "no crossing of the designated sides";
    } else {
        std::string missing;
        pw.ok = true;
        for (int j = 1; j <= prob.crossing_number; ++j) {
            const bool found = std::any_of(pw.crossings.begin(), pw.crossings.end(),
                                           [&](const CrossingWitness& w) {
                                               return w.winding_class == j;
                                           });
            if (!found) {
                pw.ok = false;
                missing += (missing.empty() ? "" : ",") + std::to_string(j);
            }
        }
        if (!pw.ok) pw.note = "missing winding classes {" + missing + "}";
    }
    return pw;
}

}  // namespace

StretchReport verify_stretch(const StretchProblem& prob, int path_budget,
                             const OdeOptions& opts) {
    if (prob.crossing_number < 1)
        throw DomainError("verify_stretch: crossing number must be >= 1");
    if (prob.crossing_number > 1 && !prob.twist_center)
        throw DomainError("verify_stretch: twist relations need a lift center");

    StretchReport rep;
    rep.relation = prob.name.empty() ? describe(prob) : prob.name;
    rep.crossing_number = prob.crossing_number;

    const auto fractions = spanning_fractions(path_budget);
    const auto family = spanning_family(prob.source, prob.source_across, path_budget);
    for (std::size_t i = 0; i < family.size(); ++i)
        rep.paths.push_back(examine_path(prob, family[i], fractions[i], opts));

    rep.passed = !rep.paths.empty() &&
                 std::all_of(rep.paths.begin(), rep.paths.end(),
                             [](const PathWitness& p) { return p.ok; });
    return rep;
}

StretchReport verify_composition(const StretchProblem& ab, const StretchProblem& bc,
                                 int path_budget, const OdeOptions& opts) {
    if (ab.target.label != bc.source.label || ab.target_across != bc.source_across)
        throw DomainError("verify_composition: relations do not chain through a common "
                          "oriented rectangle");

    StretchProblem comp{std::string{}, ab.map.then(bc.map), ab.source, ab.source_across,
                        bc.target, bc.target_across,
                        ab.crossing_number * bc.crossing_number, std::nullopt, false};

    StretchReport rep;
    rep.relation = (ab.name.empty() ? describe(ab) : ab.name) + " o " +
                   (bc.name.empty() ? describe(bc) : bc.name);
    rep.crossing_number = comp.crossing_number;

    const auto fractions = spanning_fractions(path_budget);
    const auto family = spanning_family(comp.source, comp.source_across, path_budget);
    for (std::size_t i = 0; i < family.size(); ++i) {
        PathWitness pw;
        pw.fraction = fractions[i];
        const CurveFn curve = as_curve(family[i]);
        const PointMap fwd = [&](PhasePoint p) { return comp.map(p, opts); };
        const PlanarPath img = map_path(curve, family[i].s.front(), family[i].s.back(), fwd);
        const CurveFn exact = [&](long double s) { return fwd(curve(s)); };
        const auto crossings = crossing_subpaths(img, comp.target, comp.target_across, exact);

        // Keep only witnesses that factor through the intermediate rectangle.
        int kept = 0;
        for (const Crossing& c : crossings) {
            const PhasePoint mid = ab.map(curve(0.5L * (c.s_enter + c.s_exit)), opts);
            if (bc.source.contains(mid) == Containment::Outside) continue;
            CrossingWitness w;
            w.s_enter = c.s_enter;
            w.s_exit = c.s_exit;
            w.enter_side = to_string(c.enter_side);
            w.exit_side = to_string(c.exit_side);
            pw.crossings.push_back(w);
            ++kept;
        }
        pw.ok = kept >= comp.crossing_number;
        if (!pw.ok)
            pw.note = "found " + std::to_string(kept) + " factoring crossings, need " +
                      std::to_string(comp.crossing_number);
        rep.paths.push_back(std::move(pw));
    }

    rep.passed = !rep.paths.empty() &&
                 std::all_of(rep.paths.begin(), rep.paths.end(),
                             [](const PathWitness& p) { return p.ok; });
    return rep;
}

/* ------------------------------------------------------------------ */
/*  the six block relations at demo durations                           */
/* ------------------------------------------------------------------ */

RelationSet standard_relations(const PairParams& pair, int n_twist, double margin,
                               const OdeOptions& opts) {
    if (n_twist < 1) throw DomainError("standard_relations: twist count must be >= 1");
    if (!(margin > 1.0)) throw DomainError("standard_relations: margin must exceed 1");

    RectConstants c = choose_p(pair);
    const double t1 = margin * t1_star(pair, c);
    c = compute_q(pair, c, t1, opts);
    const Thresholds thr = compute_thresholds(pair, c);
    const double t2 = margin * thr.t2_star(n_twist);

    const auto rects = build_rects(pair, c);
    RelationSet rs{pair,
                   c,
                   thr,
                   t1,
                   t2,
                   std::vector<OrientedRect>(rects.begin(), rects.end()),
                   {}};
    const OrientedRect& r1 = rs.rects[0];
    const OrientedRect& r2 = rs.rects[1];
    const OrientedRect& r3 = rs.rects[2];
    const OrientedRect& r4 = rs.rects[3];

    const LegMap minus_t1{{Leg{pair.minus.a, t1}}};
    const LegMap plus_t1{{Leg{pair.plus.a, t1}}};
    const LegMap plus_t2{{Leg{pair.plus.a, t2}}};
    const LegMap minus_t2{{Leg{pair.minus.a, t2}}};

    rs.stages = {
        StretchProblem{"stage 1: Psi(a-, T1): (R1,-)->(R2,-)", minus_t1, r1, Across::Minus, r2,
                       Across::Minus, 1, std::nullopt, false},
        StretchProblem{"stage 2: Psi(a+, T2) twist: (R2,-)->(R2,+)", plus_t2, r2, Across::Minus,
                       r2, Across::Plus, n_twist, pair.plus.a, false},
        StretchProblem{"stage 3: Psi(a-, T1): (R2,+)->(R3,-)", minus_t1, r2, Across::Plus, r3,
                       Across::Minus, 1, std::nullopt, false},
        StretchProblem{"stage 4: Psi(a+, T1): (R3,-)->(R4,-)", plus_t1, r3, Across::Minus, r4,
                       Across::Minus, 1, std::nullopt, false},
        StretchProblem{"stage 5: Psi(a-, T2) twist: (R4,-)->(R4,+)", minus_t2, r4, Across::Minus,
                       r4, Across::Plus, n_twist, pair.minus.a, true},
        StretchProblem{"stage 6: Psi(a+, T1): (R4,+)->(R1,-)", plus_t1, r4, Across::Plus, r1,
                       Across::Minus, 1, std::nullopt, false},
    };
    return rs;
}

}  // namespace nagumo
