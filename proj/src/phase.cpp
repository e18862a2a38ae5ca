#include <nagumo/phase.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/tanh_sinh.hpp>

namespace nagumo {

/* ------------------------------------------------------------------ */
/*  polynomial data                                                     */
/* ------------------------------------------------------------------ */

double cubic(SystemParams params, double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    return x * (1.0 - x) * (x - params.a);
}

double potential(SystemParams params, double x) {
    const double a = params.a;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return (1.0 - 2.0 * a) / 12.0;
    // -x^4/4 + (1+a)x^3/3 - a x^2/2, Horner form
    return x * x * (-x * x / 4.0 + (1.0 + a) * x / 3.0 - a / 2.0);
}

long double potential_l(double a, long double x) {
    const long double al = a;
    if (x <= 0.0L) return 0.0L;
    if (x >= 1.0L) return (1.0L - 2.0L * al) / 12.0L;
    return x * x * (-x * x / 4.0L + (1.0L + al) * x / 3.0L - al / 2.0L);
}

double energy(SystemParams params, PhasePoint p) {
    return 0.5 * p.y * p.y + potential(params, p.x);
}

CriticalLevels critical_levels(SystemParams params) {
    // The center level is the potential evaluated at the center; no separate
    // formula is trusted here.
    return {potential(params, params.a), 0.0, potential(params, 1.0)};
}

/* ------------------------------------------------------------------ */
/*  level-set classification                                            */
/* ------------------------------------------------------------------ */

LevelClass classify_level(SystemParams params, EnergyLevel c) {
    const double a = params.a;
    const CriticalLevels cl = critical_levels(params);
    const ACase acase = a < 0.5   ? ACase::BelowHalf
                        : a > 0.5 ? ACase::AboveHalf
                                  : ACase::EqualHalf;

    if (c < cl.center) return {LevelTag::Empty, acase};
    if (c == cl.center) return {LevelTag::CenterPoint, acase};

    if (acase == ACase::EqualHalf) {
        // center < 0 = saddle0 = saddle1
        if (c < 0.0) return {LevelTag::ClosedCycle, acase};
        if (c == 0.0) return {LevelTag::HeteroclinicUnion, acase};
        return {LevelTag::TwoOuterCurves, acase};
    }

    // The loop level is the level of the saddle the homoclinic hangs on:
    // saddle (0,0) at level 0 for a < 1/2, saddle (1,0) at (1-2a)/12 for
    // a > 1/2. The remaining saddle level carries its manifolds.
    const double loop_level = (acase == ACase::BelowHalf) ? cl.saddle0 : cl.saddle1;
    const double manifold_level = (acase == ACase::BelowHalf) ? cl.saddle1 : cl.saddle0;

    if (c < loop_level) return {LevelTag::ClosedCycle, acase};
    if (c == loop_level) return {LevelTag::HomoclinicUnion, acase};
    if (c < manifold_level) return {LevelTag::InnerArc, acase};
    if (c == manifold_level) return {LevelTag::SaddleManifoldUnion, acase};
    return {LevelTag::TwoOuterCurves, acase};
}

/* ------------------------------------------------------------------ */
/*  homoclinic geometry                                                 */
/* ------------------------------------------------------------------ */

double homoclinic_apex(SystemParams params) {
    const double a = params.a;
    if (a == 0.5) throw NoHomoclinicError("homoclinic_apex: a = 1/2 is the heteroclinic case");
    if (a > 0.5) return 1.0 - homoclinic_apex(SystemParams(1.0 - a));
    // F_a(z) = z^2 (-z^2/4 + (1+a)z/3 - a/2): the nonzero root in (a,1) solves
    // 3z^2 - 4(1+a)z + 6a = 0, smaller branch.
    const double disc = 4.0 * (1.0 + a) * (1.0 + a) - 18.0 * a;
    return (2.0 * (1.0 + a) - std::sqrt(disc)) / 3.0;
}

bool linked(SystemParams a_minus, SystemParams a_plus) {
    if (!(a_minus.a < 0.5 && 0.5 < a_plus.a))
        throw DomainError("linked: requires a_minus < 1/2 < a_plus");
    return homoclinic_apex(a_plus) < homoclinic_apex(a_minus);
}

/* ------------------------------------------------------------------ */
/*  level-set sampling                                                  */
/* ------------------------------------------------------------------ */

PlanarPath orbit_graph(SystemParams params, EnergyLevel c, double x_lo,
                       double x_hi, int branch, std::size_t n_samples) {
    if (x_hi < x_lo) throw DomainError("orbit_graph: x_hi < x_lo");
    if (n_samples < 2) n_samples = 2;
    const double sgn = branch >= 0 ? 1.0 : -1.0;

    PlanarPath path;
    path.s.reserve(n_samples);
    path.pts.reserve(n_samples);
    const double width = x_hi - x_lo;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const long double t = static_cast<long double>(i) / (n_samples - 1);
        const double x = x_lo + width * static_cast<double>(t);
        double rad = 2.0 * (c - potential(params, x));
        if (rad < 0.0) {
            // Tolerate roundoff at turning points; reject real violations.
            if (rad < -1e-12 * std::max(1.0, std::fabs(c)))
                throw DomainError("orbit_graph: level below potential inside interval");
            rad = 0.0;
        }
        path.s.push_back(width == 0.0 ? static_cast<long double>(i) : t);
        path.pts.push_back({x, sgn * std::sqrt(rad)});
    }
    if (width == 0.0) {
        // Degenerate single-point "path"; normalize parameters anyway.
        path.s = {0.0L, 1.0L};
        path.pts = {path.pts.front(), path.pts.front()};
    }
    return path;
}

/* ------------------------------------------------------------------ */
/*  time of flight                                                      */
/* ------------------------------------------------------------------ */

namespace {

// F_a(e) - F_a(x) in factored form. The direct difference of two quartic
// values loses all significance once x is within sqrt(eps) of a turning
// point; pulling out the exact (e - x) factor keeps the radicand accurate to
// machine precision arbitrarily close to the anchor.
double potential_gap(double a, double e, double x) {
    const double ec = std::clamp(e, 0.0, 1.0);
    const double xc = std::clamp(x, 0.0, 1.0);
    const double bracket = -(ec + xc) * (ec * ec + xc * xc) / 4.0 +
                           (1.0 + a) * (ec * ec + ec * xc + xc * xc) / 3.0 -
                           a * (ec + xc) / 2.0;
    return (ec - xc) * bracket;
}

}  // namespace

double time_of_flight(SystemParams params, EnergyLevel c, double x_lo, double x_hi) {
    if (x_hi < x_lo) throw DomainError("time_of_flight: x_hi < x_lo");
    if (x_hi == x_lo) return 0.0;

    // Reject interior zeros of c - F_a: the transit time through an interior
    // turning point is infinite (the orbit never passes it).
    const int kProbe = 2048;
    for (int i = 1; i < kProbe; ++i) {
        const double x = x_lo + (x_hi - x_lo) * i / kProbe;
        if (c - potential(params, x) <= 0.0)
            throw DomainError("time_of_flight: level touches potential inside interval");
    }

    // Integrate each half anchored at its own endpoint, writing the radicand
    // as (level offset at the endpoint) + (potential gap from the endpoint).
    // A roundoff-sized offset means the caller handed us a turning point, and
    // snapping it to zero plants the sqrt singularity exactly at the
    // integration limit, which is the geometry tanh-sinh removes.
    const double scale = std::max(1e-3, std::fabs(c));
    const auto offset = [&](double e) {
        const double r = c - potential(params, e);
        return std::fabs(r) < 1e-13 * scale ? 0.0 : r;
    };
    const auto half = [&](double e, double xa, double xb) {
        const double re = offset(e);
        const bool anchor_left = (e == xa);
        // Two-argument integrand: xc is (limit - x) for the nearer
        // integration limit, resolved finer than double subtraction manages
        // next to the limits. Use it for the gap factor when that limit is
        // the anchor; elsewhere the plain difference has no cancellation.
        const auto integrand = [&](double x, double xc) {
            const bool near_anchor = anchor_left ? xc <= 0.0 : xc >= 0.0;
            const double d = near_anchor ? -xc : x - e;  // x - e, exactly
            double rad;
            if (e >= 0.0 && e <= 1.0 && x >= 0.0 && x <= 1.0) {
                const double bracket = -(e + x) * (e * e + x * x) / 4.0 +
                                       (1.0 + params.a) * (e * e + e * x + x * x) / 3.0 -
                                       params.a * (e + x) / 2.0;
                rad = re - d * bracket;
            } else {
                rad = re + potential_gap(params.a, e, x);
            }
            if (rad <= 0.0) return 0.0;  // roundoff right at the anchor
            return 1.0 / std::sqrt(2.0 * rad);
        };
        boost::math::quadrature::tanh_sinh<double> quad;
        double err = 0.0, l1 = 0.0;
        return quad.integrate(integrand, xa, xb, 1e-12, &err, &l1);
    };
    const double mid = 0.5 * (x_lo + x_hi);
    const double value = half(x_lo, x_lo, mid) + half(x_hi, mid, x_hi);
    if (!std::isfinite(value))
        throw DomainError("time_of_flight: quadrature diverged");
    return value;
}

double closed_orbit_period(SystemParams params, double q) {
    const double eta = turning_point(params, q);
    const double lo = std::min(eta, q), hi = std::max(eta, q);
    return 2.0 * time_of_flight(params, potential(params, q), lo, hi);
}

/* ------------------------------------------------------------------ */
/*  turning point                                                       */
/* ------------------------------------------------------------------ */

namespace {

// Bracketed bisection to near machine width, then two secant polish steps.
template <typename Fn>
double bisect_root(Fn&& f, double lo, double hi, double tol = 1e-13) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw DomainError("bisect_root: endpoints do not bracket a sign change");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    double x0 = lo, x1 = hi, f0 = flo, f1 = fhi;
    for (int i = 0; i < 2; ++i) {
        if (f1 == f0) break;
        const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        if (!(x2 >= lo && x2 <= hi)) break;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f(x2);
    }
    return x1;
}

}  // namespace

double turning_point(SystemParams params, double q) {
    const double a = params.a;
    if (q == a) return a;
    const CriticalLevels cl = critical_levels(params);
    const double fq = potential(params, q);
    const double band_hi = std::min(cl.saddle0, cl.saddle1);
    if (!(q > 0.0 && q < 1.0) || !(fq > cl.center && fq < band_hi))
        throw DomainError("turning_point: q outside the closed-orbit band");

    // F_a is strictly monotone on (0,a) and on (a,1), so the opposite-side
    // bracket always contains exactly one root of F_a - F_a(q).
    const auto g = [&](double x) { return potential(params, x) - fq; };
    return (q > a) ? bisect_root(g, 0.0, a) : bisect_root(g, a, 1.0);
}

/* ------------------------------------------------------------------ */
/*  linearization                                                       */
/* ------------------------------------------------------------------ */

EquilibriumData equilibrium_data(SystemParams params) {
    const double a = params.a;
    // y' = g(x) with g'(0) = a and g'(1) = 1-a; saddle exponents are the
    // square roots, eigenvectors (1, +/-lambda).
    const double l0 = std::sqrt(a);
    const double l1 = std::sqrt(1.0 - a);
    EquilibriumData out;
    out.at0 = {l0, {1.0, l0}, {1.0, -l0}};
    out.at1 = {l1, {1.0, l1}, {1.0, -l1}};
    out.center_freq = std::sqrt(a * (1.0 - a));
    return out;
}

/* ------------------------------------------------------------------ */
/*  PlanarPath helpers                                                  */
/* ------------------------------------------------------------------ */

PhasePoint PlanarPath::eval(long double t) const {
    if (pts.empty()) return {};
    if (t <= s.front()) return pts.front();
    if (t >= s.back()) return pts.back();
    const auto it = std::upper_bound(s.begin(), s.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
    const long double w = (t - s[i]) / (s[i + 1] - s[i]);
    const double wd = static_cast<double>(w);
    return {pts[i].x + wd * (pts[i + 1].x - pts[i].x),
            pts[i].y + wd * (pts[i + 1].y - pts[i].y)};
}

double PlanarPath::max_gap() const {
    double m = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) m = std::max(m, dist(pts[i - 1], pts[i]));
    return m;
}

}  // namespace nagumo
