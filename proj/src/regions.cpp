#include <nagumo/regions.hpp>

#include <nagumo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace nagumo {

const char* to_string(RectLabel label) {
    switch (label) {
        case RectLabel::R1: return "R1";
        case RectLabel::R2: return "R2";
        case RectLabel::R3: return "R3";
        case RectLabel::R4: return "R4";
    }
    return "?";
}

const char* to_string(SideId side) {
    switch (side) {
        case SideId::EnergyMinusLo: return "E_minus_lo";
        case SideId::EnergyMinusHi: return "E_minus_hi";
        case SideId::EnergyPlusLo: return "E_plus_lo";
        case SideId::EnergyPlusHi: return "E_plus_hi";
        case SideId::Axis: return "axis";
    }
    return "?";
}

const char* to_string(Containment c) {
    switch (c) {
        case Containment::Outside: return "outside";
        case Containment::Boundary: return "boundary";
        case Containment::Inside: return "inside";
    }
    return "?";
}

PairParams::PairParams(double a_minus, double a_plus) : minus(a_minus), plus(a_plus) {
    if (!(a_minus < 0.5 && a_plus > 0.5))
        throw DomainError("weight pair needs a_minus < 1/2 < a_plus, got " +
                          std::to_string(a_minus) + ", " + std::to_string(a_plus));
}

double PairParams::gap_G(double x) const {
    // Difference of the two potentials collapses to this polynomial factor.
    const double xc = std::clamp(x, 0.0, 1.0);
    return -(plus.a - minus.a) * xc * xc * (0.5 - xc / 3.0);
}

/* ------------------------------------------------------------------ */
/*  constants                                                           */
/* ------------------------------------------------------------------ */

RectConstants choose_p(const PairParams& pair) {
    const double z_minus = homoclinic_apex(pair.minus);
    const double z_plus = homoclinic_apex(pair.plus);
    const double lo_floor = std::max(z_minus, pair.plus.a);
    const double hi_ceil = std::min(pair.minus.a, z_plus);

    RectConstants c;
    c.p_minus = 0.5 * (lo_floor + 1.0);
    c.p_plus = 0.5 * hi_ceil;
    if (!(c.p_minus > lo_floor && c.p_minus < 1.0 && c.p_plus > 0.0 && c.p_plus < hi_ceil))
        throw ConstructionError("admissible interval for p is empty; this violates the "
                                "construction's standing assumptions");
    return c;
}

/* ------------------------------------------------------------------ */
/*  scalar solves                                                       */
/* ------------------------------------------------------------------ */

namespace {

// Root of a strictly monotone function with a sign change on [lo, hi];
// bisection to 1e-13 interval width.
template <typename F>
double solve_monotone(F&& f, double lo, double hi, const char* what) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw GeometryError(std::string("no sign change while solving for ") + what);
    while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
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

// Along a level curve E_traced = c of one frozen system, the energy of the
// other system is c + G(x) when tracing a_minus and c - G(x) when tracing
// a_plus. G is strictly decreasing on (0,1), so both are monotone in x.
double cross_energy(const PairParams& pair, bool traced_is_minus, double c, double x) {
    return traced_is_minus ? c + pair.gap_G(x) : c - pair.gap_G(x);
}

double solve_cross_energy(const PairParams& pair, bool traced_is_minus, double c,
                          double target, double x_lo, double x_hi, const char* what) {
    return solve_monotone(
        [&](double x) { return cross_energy(pair, traced_is_minus, c, x) - target; }, x_lo,
        x_hi, what);
}

// x with F_sys(x) = c on a bracket where F is strictly monotone.
double solve_potential(SystemParams sys, double c, double x_lo, double x_hi,
                       const char* what) {
    return solve_monotone([&](double x) { return potential(sys, x) - c; }, x_lo, x_hi, what);
}

void check_band(const EnergyBand& b, const char* name) {
    if (!(b.lo < b.hi))
        throw ConstructionError(std::string("energy band ") + name + " is empty: lo=" +
                                std::to_string(b.lo) + " hi=" + std::to_string(b.hi));
}

}  // namespace

/* ------------------------------------------------------------------ */
/*  rectangle construction                                              */
/* ------------------------------------------------------------------ */

OrientedRect build_rect(const PairParams& pair, const RectConstants& c, RectLabel label) {
    const double lo_m = potential(pair.minus, c.p_minus);
    const double hi_m = critical_levels(pair.minus).saddle1;
    const double lo_p = potential(pair.plus, c.p_plus);
    const double hi_p = 0.0;

    OrientedRect r{label,
                   pair,
                   EnergyBand{pair.minus, lo_m, hi_m},
                   EnergyBand{pair.plus, lo_p, hi_p},
                   +1,
                   false,
                   {SideId::EnergyMinusLo, SideId::EnergyMinusHi},
                   {SideId::EnergyPlusLo, SideId::EnergyPlusHi}};
    switch (label) {
        case RectLabel::R1:
            break;
        case RectLabel::R3:
            r.halfplane = -1;
            // The designated pair swaps between the two components.
            r.minus_sides = {SideId::EnergyPlusLo, SideId::EnergyPlusHi};
            r.plus_sides = {SideId::EnergyMinusLo, SideId::EnergyMinusHi};
            break;
        case RectLabel::R2:
            if (!std::isfinite(c.q_plus))
                throw ConstructionError("R2 needs q_plus; run compute_q first");
            if (!(c.q_plus > c.p_minus && c.q_plus < 1.0))
                throw ConstructionError("q_plus=" + std::to_string(c.q_plus) +
                                        " violates p_minus < q_plus < 1");
            r.band_plus = EnergyBand{pair.plus, potential(pair.plus, c.q_plus),
                                     critical_levels(pair.plus).saddle1};
            r.axis_is_side = true;
            r.minus_sides = {SideId::EnergyPlusLo, SideId::EnergyPlusHi};
            r.plus_sides = {SideId::EnergyMinusLo, SideId::Axis};
            break;
        case RectLabel::R4:
            if (!std::isfinite(c.q_minus))
                throw ConstructionError("R4 needs q_minus; run compute_q first");
            if (!(c.q_minus > 0.0 && c.q_minus < c.p_plus))
                throw ConstructionError("q_minus=" + std::to_string(c.q_minus) +
                                        " violates 0 < q_minus < p_plus");
            r.band_minus = EnergyBand{pair.minus, potential(pair.minus, c.q_minus), 0.0};
            r.halfplane = -1;
            r.axis_is_side = true;
            r.minus_sides = {SideId::EnergyMinusLo, SideId::EnergyMinusHi};
            r.plus_sides = {SideId::EnergyPlusLo, SideId::Axis};
            break;
    }
    check_band(r.band_minus, "E_minus");
    check_band(r.band_plus, "E_plus");
    return r;
}

std::array<OrientedRect, 4> build_rects(const PairParams& pair, const RectConstants& c) {
    return {build_rect(pair, c, RectLabel::R1), build_rect(pair, c, RectLabel::R2),
            build_rect(pair, c, RectLabel::R3), build_rect(pair, c, RectLabel::R4)};
}

std::array<double, 5> OrientedRect::violations(PhasePoint p) const {
    const double em = energy(band_minus.system, p);
    const double ep = energy(band_plus.system, p);
    return {band_minus.lo - em, em - band_minus.hi, band_plus.lo - ep, ep - band_plus.hi,
            -static_cast<double>(halfplane) * p.y};
}

Containment OrientedRect::contains(PhasePoint p, double tol) const {
    const auto v = violations(p);
    bool on_boundary = false;
    for (double vi : v) {
        if (vi > tol) return Containment::Outside;
        if (vi >= -tol) on_boundary = true;
    }
    return on_boundary ? Containment::Boundary : Containment::Inside;
}

SideId OrientedRect::classify_side(PhasePoint p) const {
    const auto v = violations(p);
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<SideId>(best);
}

/* ------------------------------------------------------------------ */
/*  boundary arcs                                                       */
/* ------------------------------------------------------------------ */

PlanarPath OrientedRect::side_arc(SideId side, std::size_t n_samples) const {
    if (side == SideId::Axis) {
        if (!axis_is_side) throw GeometryError("this rectangle has no axis side");
        // R2's axis trace runs from the inner-limit root to the saddle at 1;
        // R4's from the saddle at 0 to its inner-limit root.
        double x0, x1;
        if (label == RectLabel::R2) {
            x0 = solve_potential(band_plus.system, band_plus.lo, band_plus.system.a, 1.0,
                                 "R2 axis left end");
            x1 = 1.0;
        } else {
            x0 = 0.0;
            x1 = solve_potential(band_minus.system, band_minus.lo, 1e-9,
                                 band_minus.system.a, "R4 axis right end");
        }
        PlanarPath path;
        path.s.reserve(n_samples);
        path.pts.reserve(n_samples);
        for (std::size_t i = 0; i < n_samples; ++i) {
            const long double w = static_cast<long double>(i) / (n_samples - 1);
            path.s.push_back(w);
            path.pts.push_back({x0 + static_cast<double>(w) * (x1 - x0), 0.0});
        }
        return path;
    }

    const bool on_minus_system =
        (side == SideId::EnergyMinusLo || side == SideId::EnergyMinusHi);
    const EnergyBand& own = on_minus_system ? band_minus : band_plus;
    const EnergyBand& other = on_minus_system ? band_plus : band_minus;
    const double level =
        (side == SideId::EnergyMinusLo || side == SideId::EnergyPlusLo) ? own.lo : own.hi;
    const SystemParams sys = own.system;

    // The side arcs of R2 run on the E_plus limits, those of R4 on the
    // E_minus limits; exactly these touch the axis, at a corner that is the
    // saddle itself for the outer (hi) limit.
    const bool touches_axis =
        axis_is_side && ((label == RectLabel::R2) ? !on_minus_system : on_minus_system);

    double xa, xb;
    if (touches_axis) {
        if (level == own.hi)
            xa = (label == RectLabel::R2) ? 1.0 : 0.0;  // saddle corner
        else
            xa = (label == RectLabel::R2)
                     ? solve_potential(sys, level, sys.a, 1.0, "axis corner")
                     : solve_potential(sys, level, 1e-9, sys.a, "axis corner");
        xb = solve_cross_energy(pair, on_minus_system, level, other.lo, 1e-12, 1.0 - 1e-12,
                                "far corner");
    } else {
        xa = solve_cross_energy(pair, on_minus_system, level, other.lo, 1e-12, 1.0 - 1e-12,
                                "side corner");
        xb = solve_cross_energy(pair, on_minus_system, level, other.hi, 1e-12, 1.0 - 1e-12,
                                "side corner");
    }

    return orbit_graph(sys, level, std::min(xa, xb), std::max(xa, xb), halfplane, n_samples);
}

PhasePoint OrientedRect::witness() const {
    const PlanarPath p = spanning_path(*this, Across::Minus, 0.5, 65);
    return p.eval(0.5L);
}

/* ------------------------------------------------------------------ */
/*  q constants                                                         */
/* ------------------------------------------------------------------ */

RectConstants compute_q(const PairParams& pair, const RectConstants& with_p, double T1,
                        const OdeOptions& opts) {
    RectConstants c = with_p;
    const OrientedRect r1 = build_rect(pair, c, RectLabel::R1);
    const OrientedRect r3 = build_rect(pair, c, RectLabel::R3);

    const auto member_plus = [&](double x) {
        const PhasePoint back = poincare_inverse(pair.minus, T1, {x, 0.0}, opts);
        return r1.contains(back) == Containment::Inside;
    };
    const auto member_minus = [&](double x) {
        const PhasePoint back = poincare_inverse(pair.plus, T1, {x, 0.0}, opts);
        return r3.contains(back) == Containment::Inside;
    };

    // The membership set is an interval that retreats toward the saddle end
    // of the segment like exp(-lambda T1) and has comparable width, so a
    // fixed-pitch scan steps clean over it for any admissible T1. Append a
    // geometric tail whose ratio stays below the window's spread.
    const double step = 1e-3;
    const auto scan_grid = [&](double from, bool ascending) {
        std::vector<double> grid;
        if (ascending) {
            for (double x = from; x < 1.0; x += step) grid.push_back(x);
            for (double u = step; u > 1e-15; u *= 0.75) grid.push_back(1.0 - u);
            grid.push_back(1.0);
            std::sort(grid.begin(), grid.end());
        } else {
            for (double x = from; x > 0.0; x -= step) grid.push_back(x);
            for (double u = step; u > 1e-15; u *= 0.75) grid.push_back(u);
            grid.push_back(0.0);
            std::sort(grid.begin(), grid.end(), std::greater<double>());
        }
        return grid;
    };
    // Last member-to-nonmember transition along the grid order.
    const auto last_transition = [](const std::vector<double>& grid, auto&& member,
                                    double* x_in, double* x_out) {
        bool found = false, prev = false;
        double prev_x = grid.front();
        for (double x : grid) {
            const bool m = member(x);
            if (prev && !m) {
                *x_in = prev_x;
                *x_out = x;
                found = true;
            }
            prev = m;
            prev_x = x;
        }
        return found;
    };

    // q_plus: sup of the member set on [p_minus, 1], bisected and then shrunk
    // into the member side.
    {
        double x_in = 0.0, x_out = 0.0;
        if (!last_transition(scan_grid(c.p_minus, true), member_plus, &x_in, &x_out))
            throw QNotFoundError("no backward-membership transition on [p_minus, 1]; "
                                 "T1 is likely below threshold");
        while (x_out - x_in > 1e-9) {
            const double mid = 0.5 * (x_in + x_out);
            (member_plus(mid) ? x_in : x_out) = mid;
        }
        c.q_plus = 0.5 * (x_in + x_out) - 1e-6;
    }

    // q_minus: mirror scan, downward from p_plus.
    {
        double x_in = 0.0, x_out = 0.0;
        if (!last_transition(scan_grid(c.p_plus, false), member_minus, &x_in, &x_out))
            throw QNotFoundError("no backward-membership transition on [0, p_plus]; "
                                 "T1 is likely below threshold");
        while (x_in - x_out > 1e-9) {
            const double mid = 0.5 * (x_in + x_out);
            (member_minus(mid) ? x_in : x_out) = mid;
        }
        c.q_minus = 0.5 * (x_in + x_out) + 1e-6;
    }

    if (!(c.q_plus > c.p_minus && c.q_plus < 1.0))
        throw QNotFoundError("q_plus=" + std::to_string(c.q_plus) + " escaped (p_minus, 1)");
    if (!(c.q_minus > 0.0 && c.q_minus < c.p_plus))
        throw QNotFoundError("q_minus=" + std::to_string(c.q_minus) +
                             " escaped (0, p_plus)");
    return c;
}

/* ------------------------------------------------------------------ */
/*  spanning paths                                                      */
/* ------------------------------------------------------------------ */

PlanarPath spanning_path(const OrientedRect& rect, Across across, double fraction,
                         std::size_t n_samples) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw DomainError("spanning fraction must lie in (0,1)");

    const PairParams& pp = rect.pair;
    const SystemParams sm = pp.minus;
    const SystemParams sp = pp.plus;
    const int branch = rect.halfplane;
    const bool join_minus_pair = (across == Across::Minus);

    switch (rect.label) {
        case RectLabel::R1:
        case RectLabel::R3: {
            // A path joining the E_minus limits is traced on an E_plus level
            // and vice versa; which pair is "minus" differs between R1, R3.
            const bool join_em_sides = (rect.label == RectLabel::R1) == join_minus_pair;
            const bool trace_minus = !join_em_sides;
            const EnergyBand& traced = trace_minus ? rect.band_minus : rect.band_plus;
            const EnergyBand& other = join_em_sides ? rect.band_minus : rect.band_plus;
            const double c = traced.lo + fraction * (traced.hi - traced.lo);
            const double xa = solve_cross_energy(pp, trace_minus, c, other.lo, 1e-12,
                                                 1.0 - 1e-12, "spanning endpoint");
            const double xb = solve_cross_energy(pp, trace_minus, c, other.hi, 1e-12,
                                                 1.0 - 1e-12, "spanning endpoint");
            return orbit_graph(trace_minus ? sm : sp, c, std::min(xa, xb), std::max(xa, xb),
                               branch, n_samples);
        }
        case RectLabel::R2: {
            if (join_minus_pair) {
                // Radial path: an E_minus level whose arc meets the axis left
                // of the rectangle, cut between the two E_plus limits.
                const double inner_root = solve_potential(sp, rect.band_plus.lo, sp.a, 1.0,
                                                          "R2 inner axis root");
                const double c_lo = rect.band_minus.lo;
                const double c_hi = potential(sm, inner_root);
                const double c = c_lo + fraction * (c_hi - c_lo);
                const double x_outer = solve_cross_energy(pp, true, c, rect.band_plus.hi,
                                                          1e-12, 1.0 - 1e-12, "outer end");
                const double x_inner = solve_cross_energy(pp, true, c, rect.band_plus.lo,
                                                          1e-12, 1.0 - 1e-12, "inner end");
                return orbit_graph(sm, c, std::min(x_outer, x_inner),
                                   std::max(x_outer, x_inner), branch, n_samples);
            }
            // Angular path: an E_plus closed orbit from its axis crossing in
            // [q_plus, 1] swung back to the E_minus lower limit.
            const double c =
                rect.band_plus.lo + fraction * (rect.band_plus.hi - rect.band_plus.lo);
            const double x_axis = solve_potential(sp, c, sp.a, 1.0, "R2 axis endpoint");
            const double x_far = solve_cross_energy(pp, false, c, rect.band_minus.lo, 1e-12,
                                                    x_axis, "R2 band exit");
            return orbit_graph(sp, c, std::min(x_far, x_axis), std::max(x_far, x_axis),
                               branch, n_samples);
        }
        case RectLabel::R4: {
            if (join_minus_pair) {
                // Radial path on an E_plus level touching the axis right of
                // the axis side, cut between the two E_minus limits.
                const double inner_root = solve_potential(sm, rect.band_minus.lo, 1e-9,
                                                          sm.a, "R4 inner axis root");
                const double c_lo = rect.band_plus.lo;
                const double c_hi = potential(sp, inner_root);
                const double c = c_lo + fraction * (c_hi - c_lo);
                const double x_inner = solve_cross_energy(pp, false, c, rect.band_minus.lo,
                                                          1e-12, 1.0 - 1e-12, "inner end");
                const double x_outer = solve_cross_energy(pp, false, c, rect.band_minus.hi,
                                                          1e-12, 1.0 - 1e-12, "outer end");
                return orbit_graph(sp, c, std::min(x_inner, x_outer),
                                   std::max(x_inner, x_outer), branch, n_samples);
            }
            // Angular path: an E_minus closed orbit from its axis crossing in
            // [0, q_minus] out to the E_plus lower limit.
            const double c =
                rect.band_minus.lo + fraction * (rect.band_minus.hi - rect.band_minus.lo);
            const double x_axis = solve_potential(sm, c, 1e-9, sm.a, "R4 axis endpoint");
            const double x_far = solve_cross_energy(pp, true, c, rect.band_plus.lo, x_axis,
                                                    1.0 - 1e-12, "R4 band exit");
            return orbit_graph(sm, c, std::min(x_axis, x_far), std::max(x_axis, x_far),
                               branch, n_samples);
        }
    }
    throw GeometryError("unreachable spanning case");
}

std::vector<double> spanning_fractions(int budget) {
    static constexpr double fractions[] = {0.5, 0.3, 0.4, 0.6, 0.7};
    const int n = std::clamp(budget, 1, 5);
    return std::vector<double>(fractions, fractions + n);
}

std::vector<PlanarPath> spanning_family(const OrientedRect& rect, Across across, int budget) {
    std::vector<PlanarPath> out;
    for (double f : spanning_fractions(budget)) out.push_back(spanning_path(rect, across, f));
    return out;
}

/* ------------------------------------------------------------------ */
/*  image paths                                                         */
/* ------------------------------------------------------------------ */

CurveFn as_curve(const PlanarPath& path) {
    return [path](long double s) { return path.eval(s); };
}

PlanarPath map_path(const CurveFn& curve, long double s0, long double s1, const PointMap& map,
                    double h_img, std::size_t max_points) {
    if (!(s1 > s0)) throw DomainError("map_path needs s1 > s0");

    PlanarPath out;
    const std::size_t n0 = 65;
    out.s.reserve(4096);
    out.pts.reserve(4096);
    for (std::size_t i = 0; i < n0; ++i) {
        const long double s = s0 + (s1 - s0) * i / (n0 - 1);
        out.s.push_back(s);
        out.pts.push_back(map(curve(s)));
    }

    // Midpoint splitting until every image segment is short. A segment whose
    // parameter interval has collapsed to long-double resolution is left
    // alone (the image genuinely jumps across a strongly expanding region).
    bool split_any = true;
    while (split_any && out.s.size() < max_points) {
        split_any = false;
        PlanarPath next;
        next.s.reserve(out.s.size() * 2);
        next.pts.reserve(out.s.size() * 2);
        for (std::size_t i = 0; i + 1 < out.s.size(); ++i) {
            next.s.push_back(out.s[i]);
            next.pts.push_back(out.pts[i]);
            const long double mid = 0.5L * (out.s[i] + out.s[i + 1]);
            if (dist(out.pts[i], out.pts[i + 1]) > h_img && mid > out.s[i] &&
                mid < out.s[i + 1] && next.s.size() + (out.s.size() - i) < max_points) {
                next.s.push_back(mid);
                next.pts.push_back(map(curve(mid)));
                split_any = true;
            }
        }
        next.s.push_back(out.s.back());
        next.pts.push_back(out.pts.back());
        out = std::move(next);
    }

    if (out.s.size() >= max_points && out.max_gap() > 4.0 * h_img)
        throw InconclusiveError("image-path refinement exhausted " +
                                std::to_string(max_points) +
                                " points with unresolved gaps; crossing structure "
                                "cannot be trusted");
    return out;
}

/* ------------------------------------------------------------------ */
/*  crossing detection                                                  */
/* ------------------------------------------------------------------ */

namespace {

bool in_closure(const OrientedRect& rect, PhasePoint p) {
    return rect.contains(p) != Containment::Outside;
}

// Bisect a membership transition between s_in (inside the closure) and s_out
// (outside); returns the boundary parameter and the side named from the
// just-outside end of the final bracket.
std::pair<long double, SideId> bisect_boundary(const OrientedRect& rect, const CurveFn& f,
                                               long double s_in, long double s_out,
                                               long double tol) {
    for (int i = 0; i < 200 && std::fabs(s_out - s_in) > tol; ++i) {
        const long double mid = 0.5L * (s_in + s_out);
        if (mid == s_in || mid == s_out) break;
        if (in_closure(rect, f(mid)))
            s_in = mid;
        else
            s_out = mid;
    }
    return {s_in, rect.classify_side(f(s_out))};
}

// Side of the designated pair nearest to p, for run ends that coincide with
// path endpoints (spanning paths start exactly on a side).
std::optional<SideId> near_designated_side(const OrientedRect& rect, PhasePoint p,
                                           const std::array<SideId, 2>& pair_sides) {
    const auto v = rect.violations(p);
    std::optional<SideId> best;
    double best_abs = 1e-7;
    for (SideId s : pair_sides) {
        const double a = std::abs(v[static_cast<std::size_t>(s)]);
        if (a < best_abs) {
            best_abs = a;
            best = s;
        }
    }
    return best;
}

// A sample pair straddles the rectangle when each endpoint is pushed out by
// a different single constraint. A membership window narrower than the
// sampling step can hide between them; search for it by steering the
// midpoint toward whichever side it still violates.
std::optional<long double> find_hidden_inside(const OrientedRect& rect, const CurveFn& f,
                                              long double s_lo, long double s_hi,
                                              std::size_t c_lo, std::size_t c_hi) {
    for (int depth = 0; depth < 90; ++depth) {
        const long double mid = 0.5L * (s_lo + s_hi);
        if (mid == s_lo || mid == s_hi) return std::nullopt;
        const PhasePoint p = f(mid);
        if (in_closure(rect, p)) return mid;
        const auto v = rect.violations(p);
        const bool out_lo = v[c_lo] > 0.0;
        const bool out_hi = v[c_hi] > 0.0;
        if (out_lo && out_hi) return std::nullopt;  // band pinches off here
        if (out_lo)
            s_lo = mid;
        else if (out_hi)
            s_hi = mid;
        else
            return std::nullopt;  // pushed out by an unrelated constraint
    }
    return std::nullopt;
}

// Dominant violated constraint index, or nullopt when not a clean
// single-constraint exit.
std::optional<std::size_t> sole_violation(const std::array<double, 5>& v) {
    std::optional<std::size_t> idx;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > 0.0) {
            if (idx) return std::nullopt;
            idx = i;
        }
    }
    return idx;
}

}  // namespace

std::vector<Crossing> crossing_subpaths(const PlanarPath& path, const OrientedRect& rect,
                                        Across across, const CurveFn& exact,
                                        long double param_tol) {
    const CurveFn f = exact ? exact : as_curve(path);
    const auto& pair_sides = rect.sides(across);

    std::vector<Crossing> out;
    if (path.size() < 2) return out;

    // Working copy of the samples, augmented with any membership windows
    // hidden between adjacent outside samples that straddle the rectangle.
    std::vector<long double> ss(path.s.begin(), path.s.end());
    std::vector<PhasePoint> pts(path.pts.begin(), path.pts.end());
    {
        std::vector<long double> add_s;
        std::vector<PhasePoint> add_p;
        for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
            if (in_closure(rect, pts[i]) || in_closure(rect, pts[i + 1])) continue;
            const auto va = sole_violation(rect.violations(pts[i]));
            const auto vb = sole_violation(rect.violations(pts[i + 1]));
            if (!va || !vb || *va == *vb) continue;
            if (auto hit = find_hidden_inside(rect, f, ss[i], ss[i + 1], *va, *vb)) {
                add_s.push_back(*hit);
                add_p.push_back(f(*hit));
            }
        }
        for (std::size_t k = 0; k < add_s.size(); ++k) {
            const auto pos = std::upper_bound(ss.begin(), ss.end(), add_s[k]);
            const auto off = pos - ss.begin();
            ss.insert(pos, add_s[k]);
            pts.insert(pts.begin() + off, add_p[k]);
        }
    }

    const std::size_t n = ss.size();
    std::vector<char> inside(n);
    for (std::size_t i = 0; i < n; ++i) inside[i] = in_closure(rect, pts[i]) ? 1 : 0;

    std::size_t i = 0;
    while (i < n) {
        if (!inside[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && inside[j + 1]) ++j;

        long double s_enter = ss[i];
        long double s_exit = ss[j];
        std::optional<SideId> enter_side, exit_side;
        if (i > 0) {
            auto [sb, side] = bisect_boundary(rect, f, ss[i], ss[i - 1], param_tol);
            s_enter = sb;
            enter_side = side;
        } else {
            enter_side = near_designated_side(rect, pts[i], pair_sides);
        }
        if (j + 1 < n) {
            auto [sb, side] = bisect_boundary(rect, f, ss[j], ss[j + 1], param_tol);
            s_exit = sb;
            exit_side = side;
        } else {
            exit_side = near_designated_side(rect, pts[j], pair_sides);
        }

        if (enter_side && exit_side && *enter_side != *exit_side) {
            const bool designated =
                (*enter_side == pair_sides[0] && *exit_side == pair_sides[1]) ||
                (*enter_side == pair_sides[1] && *exit_side == pair_sides[0]);
            if (designated)
                out.push_back(Crossing{s_enter, s_exit, *enter_side, *exit_side, f(s_enter),
                                       f(s_exit)});
        }
        i = j + 1;
    }
    return out;
}

}  // namespace nagumo
