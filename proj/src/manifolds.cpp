// Stable and unstable continua of the switching system, computed by long
// window eigendirection shooting, plus the connection solver that splices
// them onto the nested itinerary selection. The continua are certified as
// graphs over explicit x-windows next to the saddles; connections are found
// by intersecting the pushed unstable curve with the pulled-back stable
// curve on the section t(6K) and re-threading the realization through the
// crossing parameter.

#include <nagumo/manifolds.hpp>

#include <nagumo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace nagumo {

/* ------------------------------------------------------------------ */
/*  graph windows                                                       */
/* ------------------------------------------------------------------ */

GraphWindows graph_window(double a_minus, double a_plus) {
    if (!(a_minus > 0.0 && a_minus < 1.0 && a_plus > 0.0 && a_plus < 1.0 && a_minus <= a_plus))
        throw DomainError("graph_window: weights must satisfy 0 < a_minus <= a_plus < 1");
    // Roots of 3x^2 - 2(1+a)x + a, the x-derivative of the field cubic.
    // Both roots grow with a, so taking the smaller root at a_minus and the
    // larger at a_plus gives windows on which the derivative keeps one sign
    // for either weight.
    GraphWindows w;
    w.a_minus_0 = (1.0 + a_minus - std::sqrt(a_minus * a_minus - a_minus + 1.0)) / 3.0;
    w.a_plus_1 = (1.0 + a_plus + std::sqrt(a_plus * a_plus - a_plus + 1.0)) / 3.0;
    return w;
}

const char* to_string(ManifoldKind k) {
    switch (k) {
        case ManifoldKind::UnstableFrom0: return "unstable_from_0";
        case ManifoldKind::UnstableFrom1: return "unstable_from_1";
        case ManifoldKind::StableTo0: return "stable_to_0";
        case ManifoldKind::StableTo1: return "stable_to_1";
    }
    return "?";
}

/* ------------------------------------------------------------------ */
/*  shooting frames                                                     */
/* ------------------------------------------------------------------ */

namespace {

int saddle_of(ManifoldKind k) {
    return (k == ManifoldKind::UnstableFrom0 || k == ManifoldKind::StableTo0) ? 0 : 1;
}

// x grows away from (0,0) and shrinks away from (1,0) along every branch
// we build, so the saddle index doubles as the orientation flag.
bool x_grows(ManifoldKind k) { return saddle_of(k) == 0; }

struct BranchFrame {
    PhasePoint eq;
    PhasePoint dir;  // unit eigendirection pointing into the strip
    double lambda = 0.0;
    double y_sign = 0.0;  // required sign of y on the branch
};

BranchFrame branch_frame(ManifoldKind kind, double a_seed) {
    const EquilibriumData eq = equilibrium_data(SystemParams{a_seed});
    BranchFrame f;
    switch (kind) {
        case ManifoldKind::UnstableFrom0: {
            const double l = eq.at0.lambda, n = std::hypot(1.0, l);
            f = {{0.0, 0.0}, {1.0 / n, l / n}, l, +1.0};
            break;
        }
        case ManifoldKind::UnstableFrom1: {
            const double l = eq.at1.lambda, n = std::hypot(1.0, l);
            f = {{1.0, 0.0}, {-1.0 / n, -l / n}, l, -1.0};
            break;
        }
        case ManifoldKind::StableTo0: {
            const double l = eq.at0.lambda, n = std::hypot(1.0, l);
            f = {{0.0, 0.0}, {1.0 / n, -l / n}, l, -1.0};
            break;
        }
        case ManifoldKind::StableTo1: {
            const double l = eq.at1.lambda, n = std::hypot(1.0, l);
            f = {{1.0, 0.0}, {-1.0 / n, l / n}, l, +1.0};
            break;
        }
    }
    return f;
}

// How far a point strays from the band between the frozen-weight manifolds.
// Branches of (0,0) live between the level-0 sets of the two weights
// (E_plus <= 0 <= E_minus); branches of (1,0) between the saddle-1 levels
// (E_minus <= F_minus(1), E_plus >= F_plus(1)). Zero inside the band.
double localization_defect(double am, double ap, int saddle, PhasePoint p) {
    const SystemParams sm{am}, sp{ap};
    const double em = energy(sm, p);
    const double ep = energy(sp, p);
    if (saddle == 0) return std::max(ep, 0.0) + std::max(-em, 0.0);
    const double lm = critical_levels(sm).saddle1;
    const double lp = critical_levels(sp).saddle1;
    return std::max(em - lm, 0.0) + std::max(lp - ep, 0.0);
}

/* --- curve construction shared by the four entry points --- */

ManifoldGraph build_graph(ManifoldKind kind, double t0, double window_length, double am,
                          double ap, double a_seed, double t_seed,
                          std::function<PhasePoint(PhasePoint)> shoot) {
    const double lam_floor = std::sqrt(std::min(am, 1.0 - ap));
    if (window_length < 20.0 / lam_floor - 1e-9)
        throw DomainError("manifold window length " + std::to_string(window_length) +
                          " is below the required 20/sqrt(min(a-, 1-a+)) = " +
                          std::to_string(20.0 / lam_floor));

    const int saddle = saddle_of(kind);
    const BranchFrame fr = branch_frame(kind, a_seed);
    const GraphWindows gw = graph_window(am, ap);
    const double width = (saddle == 0) ? gw.a_minus_0 : 1.0 - gw.a_plus_1;

    ManifoldGraph g;
    g.which = kind;
    g.anchor_time = t0;
    g.window_length = window_length;
    g.t_seed = t_seed;
    g.equilibrium = fr.eq;
    g.seed_dir = fr.dir;
    g.seed_len = 1e-6;
    // Seeds sit straight above or below the saddle rather than along the
    // eigendirection: a vertical offset keeps full floating-point resolution
    // at both equilibria (x near 1 moves in absolute 2^-52 steps, y does
    // not), and the window flow crushes the transverse component by
    // e^{-lambda L}, so the shot lands on the branch to quadratic accuracy.
    g.at_sigma = [eq = fr.eq, dy = fr.y_sign, shoot = std::move(shoot)](long double sig) {
        if (sig == 0.0L) return eq;  // the saddle is a fixed point of every leg
        const double s = static_cast<double>(sig);
        return shoot(PhasePoint{eq.x, eq.y + s * dy});
    };

    // Geometric seed ladder. The innermost offset carries the full e^{-L}
    // undershoot (the exponents are below 1), so the section images start
    // inside the window no matter how hard the window stretches them.
    const int n_rungs = 480;
    const double sig_max = g.seed_len;
    auto progress = [saddle, eq = fr.eq](PhasePoint p) {
        return (saddle == 0) ? p.x - eq.x : eq.x - p.x;
    };

    std::vector<long double> sig_nodes{0.0L};
    std::vector<PhasePoint> pts{fr.eq};
    double last_xi = 0.0;
    long double sig_prev = 0.0L;
    bool covered = false;
    for (int i = 0; i <= n_rungs; ++i) {
        const long double sig = static_cast<long double>(sig_max) *
                                std::exp(static_cast<long double>(-window_length) *
                                         (n_rungs - i) / n_rungs);
        const PhasePoint p = g.at_sigma(sig);
        if (!p.finite())
            throw IntegrationError(std::string(to_string(kind)) +
                                   ": shooting diverged at seed offset " +
                                   std::to_string(static_cast<double>(sig)));
        const double xi = progress(p);
        if (xi >= width) {
            // Bisect the seed offset onto the window edge; keep the outer
            // iterate so the stored curve always covers the full window.
            long double lo = sig_prev, hi = sig;
            PhasePoint ph = p;
            for (int it = 0; it < 200; ++it) {
                const long double mid = 0.5L * (lo + hi);
                if (mid == lo || mid == hi) break;
                const PhasePoint pm = g.at_sigma(mid);
                if (progress(pm) < width) {
                    lo = mid;
                } else {
                    hi = mid;
                    ph = pm;
                }
                if (progress(ph) - width <= 1e-12) break;
            }
            sig_nodes.push_back(hi);
            pts.push_back(ph);
            covered = true;
            break;
        }
        if (xi <= last_xi) {
            // No progress: normal inside the linear cluster at the saddle,
            // a genuine fold anywhere else.
            if (dist(p, fr.eq) < 1e-8) continue;
            throw ConstructionError(std::string(to_string(kind)) +
                                    ": section curve folded at x = " + std::to_string(p.x) +
                                    " before covering the graph window");
        }
        sig_nodes.push_back(sig);
        pts.push_back(p);
        sig_prev = sig;
        last_xi = xi;
    }
    if (!covered)
        throw ConstructionError(std::string(to_string(kind)) +
                                ": seed ladder exhausted before the graph window edge; "
                                "increase window_length");

    double worst = 0.0;
    for (const PhasePoint& p : pts) {
        if (fr.y_sign * p.y < -1e-9)
            throw GeometryError(std::string(to_string(kind)) +
                                ": wrong y sign at x = " + std::to_string(p.x));
        worst = std::max(worst, localization_defect(am, ap, saddle, p));
    }
    g.max_localization_defect = worst;
    if (worst > 1e-6)
        throw LocalizationError(std::string(to_string(kind)) +
                                ": section curve leaves the frozen energy band by " +
                                std::to_string(worst) + "; increase window_length");

    g.curve.s = std::move(sig_nodes);
    g.curve.pts = std::move(pts);
    if (saddle == 0) {
        g.x_lo = fr.eq.x;
        g.x_hi = g.curve.pts.back().x;
    } else {
        g.x_lo = g.curve.pts.back().x;
        g.x_hi = fr.eq.x;
    }
    return g;
}

// Seed offset whose section image sits at the requested abscissa; monotone
// bisection against the exact evaluator, bracketed by the stored rungs.
long double sigma_at_x(const ManifoldGraph& g, double x_target, double x_tol, PhasePoint* out) {
    if (!g.at_sigma)
        throw DomainError("manifold graph carries no exact evaluator");
    const bool inc = x_grows(g.which);
    const double x_eq = g.curve.pts.front().x;
    const double x_edge = g.curve.pts.back().x;
    const double xmin = std::min(x_eq, x_edge), xmax = std::max(x_eq, x_edge);
    if (x_target < xmin - 1e-9 || x_target > xmax + 1e-9)
        throw DomainError("x = " + std::to_string(x_target) +
                          " is outside the certified graph window [" + std::to_string(xmin) +
                          ", " + std::to_string(xmax) + "]");
    const double xq = std::clamp(x_target, xmin, xmax);

    long double lo = g.curve.s.front(), hi = g.curve.s.back();
    for (std::size_t i = 0; i + 1 < g.curve.pts.size(); ++i) {
        const double x0 = g.curve.pts[i].x, x1 = g.curve.pts[i + 1].x;
        if ((inc && x0 <= xq && xq <= x1) || (!inc && x1 <= xq && xq <= x0)) {
            lo = g.curve.s[i];
            hi = g.curve.s[i + 1];
            break;
        }
    }

    PhasePoint best = g.at_sigma(hi);
    long double sig = hi;
    for (int it = 0; it < 200; ++it) {
        const long double mid = 0.5L * (lo + hi);
        if (mid == lo || mid == hi) break;
        const PhasePoint pm = g.at_sigma(mid);
        if (std::fabs(pm.x - xq) < std::fabs(best.x - xq)) {
            best = pm;
            sig = mid;
        }
        if (std::fabs(pm.x - xq) <= x_tol) break;
        if ((pm.x < xq) == inc)
            lo = mid;
        else
            hi = mid;
    }
    if (std::fabs(best.x - xq) > std::max(1e3 * x_tol, 1e-9))
        throw NumericalError("seed bisection failed to localize x = " + std::to_string(xq) +
                             " (reached " + std::to_string(best.x) + ")");
    if (out) *out = best;
    return sig;
}

}  // namespace

double ManifoldGraph::y_at(double x, double x_tol) const {
    PhasePoint p{};
    sigma_at_x(*this, x, x_tol, &p);
    return p.y;
}

/* ------------------------------------------------------------------ */
/*  entry points                                                        */
/* ------------------------------------------------------------------ */

ManifoldGraph unstable_continuum(const StepProfile& prof, double t0, int which,
                                 double window_length, const OdeOptions& opts) {
    if (which != 0 && which != 1)
        throw DomainError("unstable_continuum: which must be 0 or 1");
    const double t_seed = t0 - window_length;
    const ManifoldKind kind =
        (which == 0) ? ManifoldKind::UnstableFrom0 : ManifoldKind::UnstableFrom1;
    auto shoot = [prof, t_seed, t0, opts](PhasePoint p) {
        return flow_profile_point(prof, p, t_seed, t0, opts);
    };
    return build_graph(kind, t0, window_length, prof.a_minus, prof.a_plus,
                       prof.a_at_time(t_seed), t_seed, std::move(shoot));
}

ManifoldGraph stable_continuum(const StepProfile& prof, double t0, int which,
                               double window_length, const OdeOptions& opts) {
    if (which != 0 && which != 1)
        throw DomainError("stable_continuum: which must be 0 or 1");
    const double t_seed = t0 + window_length;
    const ManifoldKind kind = (which == 0) ? ManifoldKind::StableTo0 : ManifoldKind::StableTo1;
    auto shoot = [prof, t_seed, t0, opts](PhasePoint p) {
        return flow_profile_point(prof, p, t_seed, t0, opts);
    };
    return build_graph(kind, t0, window_length, prof.a_minus, prof.a_plus,
                       prof.a_at_time(t_seed), t_seed, std::move(shoot));
}

ManifoldGraph unstable_continuum(SystemParams a, double t0, int which, double window_length,
                                 const OdeOptions& opts) {
    if (which != 0 && which != 1)
        throw DomainError("unstable_continuum: which must be 0 or 1");
    const ManifoldKind kind =
        (which == 0) ? ManifoldKind::UnstableFrom0 : ManifoldKind::UnstableFrom1;
    auto shoot = [a, window_length, opts](PhasePoint p) {
        return flow_point(a, p, window_length, opts);
    };
    return build_graph(kind, t0, window_length, a.a, a.a, a.a, t0 - window_length,
                       std::move(shoot));
}

ManifoldGraph stable_continuum(SystemParams a, double t0, int which, double window_length,
                               const OdeOptions& opts) {
    if (which != 0 && which != 1)
        throw DomainError("stable_continuum: which must be 0 or 1");
    const ManifoldKind kind = (which == 0) ? ManifoldKind::StableTo0 : ManifoldKind::StableTo1;
    auto shoot = [a, window_length, opts](PhasePoint p) {
        return flow_point(a, p, -window_length, opts);
    };
    return build_graph(kind, t0, window_length, a.a, a.a, a.a, t0 + window_length,
                       std::move(shoot));
}

/* ------------------------------------------------------------------ */
/*  polyline intersection                                               */
/* ------------------------------------------------------------------ */

namespace {

struct SegHit {
    std::size_t i = 0, j = 0;  // segment indices into a and b
    long double u = 0.0L, v = 0.0L;  // local chord parameters in [0,1]
    PhasePoint p;
};

struct RawIntersections {
    std::vector<SegHit> hits;
    std::vector<PhasePoint> near;
};

bool chord_cross(PhasePoint a0, PhasePoint a1, PhasePoint b0, PhasePoint b1, long double& u,
                 long double& v, PhasePoint& p) {
    const long double rx = static_cast<long double>(a1.x) - a0.x;
    const long double ry = static_cast<long double>(a1.y) - a0.y;
    const long double sx = static_cast<long double>(b1.x) - b0.x;
    const long double sy = static_cast<long double>(b1.y) - b0.y;
    const long double den = rx * sy - ry * sx;
    if (den == 0.0L) return false;
    const long double qx = static_cast<long double>(b0.x) - a0.x;
    const long double qy = static_cast<long double>(b0.y) - a0.y;
    u = (qx * sy - qy * sx) / den;
    v = (qx * ry - qy * rx) / den;
    constexpr long double slack = 1e-12L;
    if (u < -slack || u > 1.0L + slack || v < -slack || v > 1.0L + slack) return false;
    p = {static_cast<double>(a0.x + u * rx), static_cast<double>(a0.y + u * ry)};
    return true;
}

double point_chord_dist(PhasePoint q, PhasePoint b0, PhasePoint b1) {
    const double vx = b1.x - b0.x, vy = b1.y - b0.y;
    const double l2 = vx * vx + vy * vy;
    double t = (l2 > 0.0) ? ((q.x - b0.x) * vx + (q.y - b0.y) * vy) / l2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return dist(q, {b0.x + t * vx, b0.y + t * vy});
}

double chord_chord_dist(PhasePoint a0, PhasePoint a1, PhasePoint b0, PhasePoint b1) {
    return std::min(std::min(point_chord_dist(a0, b0, b1), point_chord_dist(a1, b0, b1)),
                    std::min(point_chord_dist(b0, a0, a1), point_chord_dist(b1, a0, a1)));
}

RawIntersections raw_intersections(const PlanarPath& a, const PlanarPath& b) {
    RawIntersections out;
    if (a.size() < 2 || b.size() < 2) return out;

    constexpr double pad = 1e-9;
    double bx0 = std::numeric_limits<double>::infinity(), bx1 = -bx0;
    double by0 = bx0, by1 = bx1;
    for (const PhasePoint& p : b.pts) {
        bx0 = std::min(bx0, p.x);
        bx1 = std::max(bx1, p.x);
        by0 = std::min(by0, p.y);
        by1 = std::max(by1, p.y);
    }

    auto keep_hit = [&out](const SegHit& h) {
        for (const SegHit& k : out.hits)
            if (dist(k.p, h.p) <= 1e-9) return;  // same crossing seen by a chord pair
        out.hits.push_back(h);
    };

    for (std::size_t i = 0; i + 1 < a.pts.size(); ++i) {
        const PhasePoint a0 = a.pts[i], a1 = a.pts[i + 1];
        const double ax0 = std::min(a0.x, a1.x) - pad, ax1 = std::max(a0.x, a1.x) + pad;
        const double ay0 = std::min(a0.y, a1.y) - pad, ay1 = std::max(a0.y, a1.y) + pad;
        if (ax1 < bx0 || ax0 > bx1 || ay1 < by0 || ay0 > by1) continue;
        for (std::size_t j = 0; j + 1 < b.pts.size(); ++j) {
            const PhasePoint b0 = b.pts[j], b1 = b.pts[j + 1];
            if (std::max(b0.x, b1.x) < ax0 || std::min(b0.x, b1.x) > ax1 ||
                std::max(b0.y, b1.y) < ay0 || std::min(b0.y, b1.y) > ay1)
                continue;
            SegHit h;
            h.i = i;
            h.j = j;
            if (chord_cross(a0, a1, b0, b1, h.u, h.v, h.p)) {
                keep_hit(h);
            } else if (chord_chord_dist(a0, a1, b0, b1) < 1e-9) {
                out.near.push_back({0.5 * (a0.x + a1.x), 0.5 * (a0.y + a1.y)});
            }
        }
    }
    return out;
}

}  // namespace

PathIntersections intersect_paths(const PlanarPath& a, const PlanarPath& b) {
    const RawIntersections raw = raw_intersections(a, b);
    PathIntersections out;
    for (const SegHit& h : raw.hits) out.points.push_back(h.p);
    for (const PhasePoint& q : raw.near) {
        bool fresh = true;
        for (const PhasePoint& p : out.points)
            if (dist(p, q) <= 1e-9) fresh = false;  // shadow of a found crossing
        for (const PhasePoint& p : out.near_misses)
            if (dist(p, q) <= 1e-9) fresh = false;
        if (fresh) out.near_misses.push_back(q);
    }
    return out;
}

/* ------------------------------------------------------------------ */
/*  tail certificates                                                   */
/* ------------------------------------------------------------------ */

TailFit fit_tail(const Trajectory& orbit, const StepProfile& prof, PhasePoint eq, double wa,
                 double wb, bool growing) {
    TailFit f;
    f.end_distance = dist(orbit.eval(growing ? wa : wb), eq);
    f.zero_count = static_cast<int>(orbit.zeros_of_y(wa, wb).size());
    f.monotone = (f.zero_count == 0);

    std::vector<double> cuts{wa};
    for (double tk : prof.rescaled())
        if (tk > wa + 1e-12 && tk < wb - 1e-12) cuts.push_back(tk);
    cuts.push_back(wb);

    auto try_band = [&](double band_lo, double band_hi) {
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            const double ta = cuts[c], tb = cuts[c + 1];
            constexpr int n = 129;
            std::vector<double> ts, ld;
            for (int i = 0; i < n; ++i) {
                const double t = ta + (tb - ta) * i / (n - 1);
                const double d = dist(orbit.eval(t), eq);
                if (d >= band_lo && d <= band_hi) {
                    ts.push_back(t);
                    ld.push_back(std::log(d));
                }
            }
            if (ts.size() < 16) continue;
            double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                sx += ts[i];
                sy += ld[i];
                sxx += ts[i] * ts[i];
                sxy += ts[i] * ld[i];
            }
            const double nn = static_cast<double>(ts.size());
            const double den = nn * sxx - sx * sx;
            if (den <= 0.0) continue;
            f.decay_exponent = std::fabs((nn * sxy - sx * sy) / den);
            const double a_mid = prof.a_at_time(0.5 * (ts.front() + ts.back()));
            f.expected_exponent = (eq.x < 0.5) ? std::sqrt(a_mid) : std::sqrt(1.0 - a_mid);
            f.fit_t_lo = ts.front();
            f.fit_t_hi = ts.back();
            return true;
        }
        return false;
    };
    if (!try_band(1e-8, 5e-2)) try_band(1e-10, 2e-1);
    return f;
}

/* ------------------------------------------------------------------ */
/*  connection solver                                                   */
/* ------------------------------------------------------------------ */

ConnectionResult connect(const StepProfile& prof, const Itinerary& itin, ConnectionKind kind,
                         const OdeOptions& opts) {
    const int kk = itin.k_blocks();
    const long k_exit = 6L * kk;
    if (prof.k_lo() > -1 || prof.k_hi() < k_exit + 1)
        throw DomainError("connect: the profile must cover switches -1 .. " +
                          std::to_string(k_exit + 1));

    RealizeSetup setup = realize_setup(prof, itin, opts);
    const GraphWindows gw = graph_window(prof.a_minus, prof.a_plus);
    add_connection_thresholds(setup.thresholds, setup.pair, setup.constants, gw.a_minus_0,
                              gw.a_plus_1);

    const double gap_entry = prof.t(0) - prof.t(-1);
    if (gap_entry < setup.thresholds.tau * (1.0 - 1e-12))
        throw ThresholdViolationError("connect: entry gap " + std::to_string(gap_entry) +
                                      " is below tau = " + std::to_string(setup.thresholds.tau));
    const double gap_exit_t = prof.t(k_exit + 1) - prof.t(k_exit);
    if (gap_exit_t < setup.thresholds.tau_prime * (1.0 - 1e-12))
        throw ThresholdViolationError("connect: exit gap " + std::to_string(gap_exit_t) +
                                      " is below tau' = " +
                                      std::to_string(setup.thresholds.tau_prime));

    const double lam_floor = std::sqrt(std::min(prof.a_minus, 1.0 - prof.a_plus));
    const double window_l = 20.0 / lam_floor;
    const double t0 = prof.t(0);
    const double t_exit = prof.t(k_exit);
    const double t_post = prof.t(k_exit + 1);

    /* --- unstable curve at t(-1), pushed across the entry gap --- */

    const ManifoldGraph ung = unstable_continuum(prof, prof.t(-1), 0, window_l, opts);
    long double sig_cut = ung.curve.s.back();
    if (setup.thresholds.x1 < ung.x_hi - 1e-12)
        sig_cut = sigma_at_x(ung, setup.thresholds.x1, 1e-12, nullptr);

    CurveFn pushed = [prof, ts = ung.t_seed, t0, eq = ung.equilibrium, dir = ung.seed_dir,
                      opts](long double sig) {
        if (sig == 0.0L) return eq;
        const double s = static_cast<double>(sig);
        return flow_profile_point(prof, {eq.x + s * dir.x, eq.y + s * dir.y}, ts, t0, opts);
    };

    // Anchor the pushed curve on the retained ladder rungs; the exact
    // evaluator rides along so the stage-0 crossing search can descend far
    // below the rung spacing.
    std::vector<long double> sp;
    std::vector<PhasePoint> ss;
    for (long double sig : ung.curve.s) {
        if (sig > sig_cut) break;
        sp.push_back(sig);
        ss.push_back(pushed(sig));
    }
    if (sp.back() < sig_cut) {
        sp.push_back(sig_cut);
        ss.push_back(pushed(sig_cut));
    }
    const AnchoredCurve seed(std::move(sp), std::move(ss), pushed);

    RealizationResult rr = realize_from_curve(prof, itin, seed, setup, opts);

    /* --- stable curve at t(6K+1), pulled back across the exit gap --- */

    const int which_s = (kind == ConnectionKind::Heteroclinic) ? 1 : 0;
    const ManifoldGraph stg = stable_continuum(prof, t_post, which_s, window_l, opts);
    long double sig_cut_s = stg.curve.s.back();
    if (kind == ConnectionKind::Heteroclinic) {
        if (setup.thresholds.x2 > stg.x_lo + 1e-12)
            sig_cut_s = sigma_at_x(stg, setup.thresholds.x2, 1e-12, nullptr);
    } else {
        if (setup.thresholds.x1 < stg.x_hi - 1e-12)
            sig_cut_s = sigma_at_x(stg, setup.thresholds.x1, 1e-12, nullptr);
    }

    CurveFn pulled = [prof, ts = stg.t_seed, t_exit, eq = stg.equilibrium, dir = stg.seed_dir,
                      opts](long double sig) {
        if (sig == 0.0L) return eq;
        const double s = static_cast<double>(sig);
        return flow_profile_point(prof, {eq.x + s * dir.x, eq.y + s * dir.y}, ts, t_exit, opts);
    };
    const PlanarPath pulled_path = map_path(
        pulled, 0.0L, sig_cut_s, [](PhasePoint p) { return p; }, 1e-3);

    /* --- crossing on the section t(6K) --- */

    const RawIntersections raw = raw_intersections(rr.final_curve, pulled_path);
    if (raw.hits.empty())
        throw ConnectionNotFoundError(
            "connect: the pushed unstable curve misses the pulled stable curve at t(" +
            std::to_string(k_exit) + ")" +
            (raw.near.empty() ? "" : " (closest approach under 1e-9 recorded)"));

    auto global_u = [](const PlanarPath& path, std::size_t i, long double u) {
        return path.s[i] + u * (path.s[i + 1] - path.s[i]);
    };
    std::size_t pick = 0;
    for (std::size_t h = 1; h < raw.hits.size(); ++h)
        if (global_u(rr.final_curve, raw.hits[h].i, raw.hits[h].u) <
            global_u(rr.final_curve, raw.hits[pick].i, raw.hits[pick].u))
            pick = h;

    auto thread_point = [&rr](long double u) { return rr.thread_at(u).states.back(); };
    long double ua = rr.final_curve.s[raw.hits[pick].i];
    long double ub = rr.final_curve.s[raw.hits[pick].i + 1];
    long double va = pulled_path.s[raw.hits[pick].j];
    long double vb = pulled_path.s[raw.hits[pick].j + 1];
    long double u_star = global_u(rr.final_curve, raw.hits[pick].i, raw.hits[pick].u);
    long double v_star = global_u(pulled_path, raw.hits[pick].j, raw.hits[pick].v);

    // Alternate chord intersection with local resampling of both exact
    // curves; each round shrinks the brackets by the sample count.
    for (int round = 0; round < 6; ++round) {
        constexpr int m = 33;
        PlanarPath fine_a, fine_b;
        for (int i = 0; i < m; ++i) {
            const long double s = ua + (ub - ua) * i / (m - 1);
            fine_a.s.push_back(s);
            fine_a.pts.push_back(thread_point(s));
        }
        for (int i = 0; i < m; ++i) {
            const long double s = va + (vb - va) * i / (m - 1);
            fine_b.s.push_back(s);
            fine_b.pts.push_back(pulled(s));
        }
        const RawIntersections sub = raw_intersections(fine_a, fine_b);
        if (sub.hits.empty()) break;
        const SegHit& h = sub.hits.front();
        u_star = global_u(fine_a, h.i, h.u);
        v_star = global_u(fine_b, h.j, h.v);
        ua = fine_a.s[h.i];
        ub = fine_a.s[h.i + 1];
        va = fine_b.s[h.j];
        vb = fine_b.s[h.j + 1];
        if (dist(thread_point(u_star), pulled(v_star)) <= 1e-10) break;
    }
    const double residual = dist(thread_point(u_star), pulled(v_star));
    if (residual > 1e-6)
        throw NumericalError("connect: crossing refinement stalled at residual " +
                             std::to_string(residual));

    /* --- realization through the crossing parameter --- */

    const ThreadPoints tp = rr.thread_at(u_star);
    rr.initial_point = tp.states.front();
    if (kk >= 1) {
        rr.trajectory = thread_trajectory(prof, tp.states, opts, &rr.stage_pieces);
        for (std::size_t j = 0; j < itin.blocks.size(); ++j) {
            BlockTurns& bt = rr.turns[j];
            bt.achieved_plus = bt.achieved_minus = -1;
            const BlockWindows& w = rr.windows[j];
            try {
                bt.achieved_plus =
                    count_turns(rr.trajectory, w.t_plus_lo, w.t_plus_hi, prof.a_plus, false)
                        .turns;
            } catch (const AmbiguousTurnCountError&) {
            }
            try {
                bt.achieved_minus =
                    count_turns(rr.trajectory, w.t_minus_lo, w.t_minus_hi, prof.a_minus, true)
                        .turns;
            } catch (const AmbiguousTurnCountError&) {
            }
        }
    } else {
        rr.trajectory = Trajectory{};
        rr.stage_pieces.clear();
    }
    rr.entry_membership.clear();
    for (int k = 0; k <= kk; ++k)
        rr.entry_membership.push_back(
            setup.rects[0].contains(tp.states[static_cast<std::size_t>(6 * k)]));

    /* --- orbit assembly: backward tail, interior thread, forward tail --- */

    const PhasePoint seed_pt{
        ung.equilibrium.x + static_cast<double>(tp.seed_param) * ung.seed_dir.x,
        ung.equilibrium.y + static_cast<double>(tp.seed_param) * ung.seed_dir.y};
    Trajectory orbit = integrate_profile(prof, seed_pt, ung.t_seed, t0, opts);
    if (dist(orbit.back(), tp.states.front()) > 1e-6)
        throw ConstructionError("connect: backward tail misses the section state by " +
                                std::to_string(dist(orbit.back(), tp.states.front())));
    if (kk >= 1) orbit.append(rr.trajectory);

    PhasePoint cur = tp.states.back();
    double t_cur = t_exit;
    const PhasePoint eq_term =
        (kind == ConnectionKind::Heteroclinic) ? PhasePoint{1.0, 0.0} : PhasePoint{0.0, 0.0};
    const double t_hard = t_post + 60.0 / lam_floor;
    double d_best = std::numeric_limits<double>::infinity();
    Trajectory fwd;
    for (int chunk_n = 0; chunk_n < 200 && t_cur < t_hard - 1e-12; ++chunk_n) {
        double t_next = t_cur + 4.0 / lam_floor;
        for (long k = k_exit; k <= prof.k_hi(); ++k) {
            if (prof.t(k) > t_cur + 1e-12) {
                t_next = prof.t(k);
                break;
            }
        }
        t_next = std::min(t_next, t_hard);
        const Trajectory chunk = integrate_profile(prof, cur, t_cur, t_next, opts);
        const double d_end = dist(chunk.back(), eq_term);
        // Stop before the residual of the crossing takes over: once the
        // distance bottoms out, further chunks only drift away again.
        if (t_cur >= t_post - 1e-9 && d_end > d_best && d_best < 1e-3) break;
        fwd.append(chunk);
        cur = chunk.back();
        t_cur = t_next;
        if (t_next >= t_post - 1e-9) d_best = std::min(d_best, d_end);
        if (t_cur >= t_post + 1e-12 && d_end <= 3e-5) break;
    }
    orbit.append(fwd);

    /* --- certificates --- */

    ConnectionResult out;
    out.kind = kind;
    out.a_minus = prof.a_minus;
    out.a_plus = prof.a_plus;
    out.point_at_t0 = tp.states.front();
    out.sigma_seed = tp.seed_param;
    out.backward_tail = fit_tail(orbit, prof, ung.equilibrium, orbit.t_begin(), t0, true);
    out.forward_tail = fit_tail(orbit, prof, eq_term, t_post, orbit.t_end(), false);
    out.exit_gap_zeros = 0;
    for (double tz : orbit.zeros_of_y(t_exit, t_post))
        if (tz > t_exit + 1e-9 && tz < t_post - 1e-9) ++out.exit_gap_zeros;
    out.intersection_residual = residual;
    out.realization = std::move(rr);
    out.orbit = std::move(orbit);
    out.thresholds = setup.thresholds;
    return out;
}

}  // namespace nagumo
