#include <nagumo/flow.hpp>

#include <nagumo/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nagumo {

/* ------------------------------------------------------------------ */
/*  StepProfile                                                         */
/* ------------------------------------------------------------------ */

StepProfile::StepProfile(double am, double ap, std::vector<double> s, long k0,
                         double delta_, double eps)
    : a_minus(am), a_plus(ap), switch_s(std::move(s)), k_first(k0), delta(delta_),
      epsilon(eps) {
    if (!(am > 0.0 && am < 0.5 && ap > 0.5 && ap < 1.0))
        throw DomainError("step profile needs 0 < a_minus < 1/2 < a_plus < 1, got a_minus=" +
                          std::to_string(am) + " a_plus=" + std::to_string(ap));
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw DomainError("step profile needs delta > 0");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw DomainError("step profile needs epsilon > 0");
    if (switch_s.size() < 2) throw DomainError("step profile needs at least two switch times");
    for (std::size_t i = 0; i + 1 < switch_s.size(); ++i) {
        const double gap = switch_s[i + 1] - switch_s[i];
        if (!(gap >= delta * (1.0 - 1e-12)))
            throw DomainError("switch gap " + std::to_string(gap) + " at index " +
                              std::to_string(k_first + static_cast<long>(i)) +
                              " is below delta=" + std::to_string(delta));
    }
}

StepProfile StepProfile::uniform(double am, double ap, double delta_, double eps, long k_lo,
                                 long k_hi) {
    if (k_hi <= k_lo) throw DomainError("uniform profile needs k_hi > k_lo");
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(k_hi - k_lo + 1));
    for (long k = k_lo; k <= k_hi; ++k) s.push_back(static_cast<double>(k) * delta_);
    return StepProfile(am, ap, std::move(s), k_lo, delta_, eps);
}

double StepProfile::s(long k) const {
    if (k < k_lo() || k > k_hi())
        throw DomainError("switch index " + std::to_string(k) + " outside stored window [" +
                          std::to_string(k_lo()) + ", " + std::to_string(k_hi()) + "]");
    return switch_s[static_cast<std::size_t>(k - k_first)];
}

std::vector<double> StepProfile::rescaled() const {
    std::vector<double> t(switch_s.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = switch_s[i] / epsilon;
    return t;
}

double StepProfile::a_at_time(double t) const {
    const double s_val = t * epsilon;
    // First switch strictly above s_val; the gap index is one below it.
    auto it = std::upper_bound(switch_s.begin(), switch_s.end(), s_val);
    long gap;
    if (it == switch_s.begin())
        gap = k_first - 1;  // before the window: parity of the leading gap
    else
        gap = k_first + static_cast<long>(it - switch_s.begin()) - 1;
    gap = std::min(gap, k_hi());  // past the window: trailing gap continues
    // C++ remainder of a negative value is negative, so test for nonzero.
    return (gap % 2 == 0) ? a_minus : a_plus;
}

double StepProfile::min_gap_t() const {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < switch_s.size(); ++i)
        g = std::min(g, (switch_s[i + 1] - switch_s[i]) / epsilon);
    return g;
}

/* ------------------------------------------------------------------ */
/*  flows through switch times                                          */
/* ------------------------------------------------------------------ */

namespace {

// Switch times strictly inside (lo, hi), in increasing order.
std::vector<double> interior_switches(const StepProfile& prof, double lo, double hi) {
    std::vector<double> cuts;
    for (double tk : prof.rescaled())
        if (tk > lo + 1e-15 * std::max(1.0, std::abs(lo)) &&
            tk < hi - 1e-15 * std::max(1.0, std::abs(hi)))
            cuts.push_back(tk);
    return cuts;
}

}  // namespace

Trajectory integrate_profile(const StepProfile& prof, PhasePoint p0, double t0, double t1,
                             const OdeOptions& opts) {
    if (!(t1 > t0)) throw DomainError("integrate_profile needs t1 > t0");
    std::vector<double> cuts = interior_switches(prof, t0, t1);
    cuts.push_back(t1);

    Trajectory out;
    double ta = t0;
    PhasePoint p = p0;
    for (double tb : cuts) {
        const SystemParams a{prof.a_at_time(0.5 * (ta + tb))};
        Trajectory piece = integrate_const(a, p, ta, tb, opts);
        p = piece.back();
        if (out.ts.empty())
            out = std::move(piece);
        else
            out.append(piece);
        ta = tb;
    }
    return out;
}

PhasePoint flow_profile_point(const StepProfile& prof, PhasePoint p0, double t0, double t1,
                              const OdeOptions& opts) {
    if (t1 == t0) return p0;
    const bool fwd = t1 > t0;
    std::vector<double> cuts = interior_switches(prof, std::min(t0, t1), std::max(t0, t1));
    if (!fwd) std::reverse(cuts.begin(), cuts.end());
    cuts.push_back(t1);

    double ta = t0;
    PhasePoint p = p0;
    for (double tb : cuts) {
        const SystemParams a{prof.a_at_time(0.5 * (ta + tb))};
        p = flow_point(a, p, tb - ta, opts);
        ta = tb;
    }
    return p;
}

PhasePoint poincare(SystemParams a, double T, PhasePoint p, const OdeOptions& opts) {
    if (!(T >= 0.0)) throw DomainError("poincare needs T >= 0");
    if (T == 0.0) return p;
    return flow_point(a, p, T, opts);
}

PhasePoint poincare_inverse(SystemParams a, double T, PhasePoint p, const OdeOptions& opts) {
    if (!(T >= 0.0)) throw DomainError("poincare_inverse needs T >= 0");
    if (T == 0.0) return p;
    return flow_point(a, p, -T, opts);
}

/* ------------------------------------------------------------------ */
/*  LegMap                                                              */
/* ------------------------------------------------------------------ */

PhasePoint LegMap::operator()(PhasePoint p, const OdeOptions& opts) const {
    for (const Leg& leg : legs) p = poincare(SystemParams{leg.a}, leg.T, p, opts);
    return p;
}

Trajectory LegMap::trajectory(PhasePoint p, double t0, const OdeOptions& opts) const {
    Trajectory out;
    double ta = t0;
    for (const Leg& leg : legs) {
        Trajectory piece = integrate_const(SystemParams{leg.a}, p, ta, ta + leg.T, opts);
        p = piece.back();
        ta += leg.T;
        if (out.ts.empty())
            out = std::move(piece);
        else
            out.append(piece);
    }
    return out;
}

double LegMap::total_time() const {
    double s = 0.0;
    for (const Leg& leg : legs) s += leg.T;
    return s;
}

LegMap LegMap::then(const LegMap& next) const {
    LegMap out = *this;
    out.legs.insert(out.legs.end(), next.legs.begin(), next.legs.end());
    return out;
}

LegMap block_map(const StepProfile& prof, long k) {
    LegMap m;
    m.legs.reserve(6);
    for (long j = 6 * k; j < 6 * k + 6; ++j)
        m.legs.push_back(Leg{prof.a_on_gap(j), prof.t(j + 1) - prof.t(j)});
    return m;
}

/* ------------------------------------------------------------------ */
/*  angle lift                                                          */
/* ------------------------------------------------------------------ */

namespace {

// Raw clockwise angle of p around (c, 0): x = c + r cos th, y = -r sin th.
// The mirrored variant reads the point in coordinates (1-x, -y) about
// (1-c), which collapses to atan2(y, c-x).
double raw_angle(double c, PhasePoint p, bool mirrored) {
    const double dx = mirrored ? (c - p.x) : (p.x - c);
    const double dy = mirrored ? p.y : -p.y;
    const double r = std::hypot(dx, dy);
    if (r < 1e-12)
        throw AngleUndefinedError("trajectory passes within 1e-12 of the lift center " +
                                  std::to_string(c));
    return std::atan2(dy, dx);
}

// Signed increment from p to q as seen from the center, via
// atan2(cross, dot); valid only while the step turns less than pi.
double increment(double c, PhasePoint p, PhasePoint q, bool mirrored) {
    double px = p.x - c, py = -p.y;
    double qx = q.x - c, qy = -q.y;
    if (mirrored) {
        px = c - p.x;
        py = p.y;
        qx = c - q.x;
        qy = q.y;
    }
    return std::atan2(px * qy - py * qx, px * qx + py * qy);
}

}  // namespace

AngleLift angle_lift(double center_a, const Trajectory& traj, bool mirrored) {
    if (traj.ts.size() < 2) throw DomainError("angle_lift needs a nonempty trajectory");
    const double c = center_a;

    AngleLift lift;
    lift.center = c;
    lift.mirrored = mirrored;

    double th0 = raw_angle(c, traj.front(), mirrored);
    if (th0 > 0.0) th0 -= 2.0 * PI_D;  // normalize the start into [-pi, 0]
    lift.t.push_back(traj.t_begin());
    lift.theta.push_back(th0);

    double th = th0;
    PhasePoint prev = traj.front();
    double tprev = traj.t_begin();

    // Walk accepted steps; subdivide any step whose swept angle could reach
    // pi/2 so the atan2 increment stays unambiguous.
    for (std::size_t i = 0; i + 1 < traj.ts.size(); ++i) {
        const double s0 = traj.ts[i];
        const double s1 = traj.ts[i + 1];
        int parts = 1;
        for (int attempt = 0; attempt < 24; ++attempt) {
            // Probe the largest single-part increment at this resolution.
            bool ok = true;
            PhasePoint a = traj.states[i];
            for (int j = 1; j <= parts; ++j) {
                const double tj = s0 + (s1 - s0) * j / parts;
                const PhasePoint b = (j == parts) ? traj.states[i + 1] : traj.eval(tj);
                if (std::abs(increment(c, a, b, mirrored)) > 0.5 * PI_D) {
                    ok = false;
                    break;
                }
                a = b;
            }
            if (ok) break;
            parts *= 2;
            if (attempt == 23)
                throw AngleUndefinedError("angle lift failed to resolve a step near t=" +
                                          std::to_string(s0));
        }
        for (int j = 1; j <= parts; ++j) {
            const double tj = s0 + (s1 - s0) * j / parts;
            const PhasePoint b = (j == parts) ? traj.states[i + 1] : traj.eval(tj);
            th += increment(c, prev, b, mirrored);
            prev = b;
            tprev = tj;
            lift.t.push_back(tprev);
            lift.theta.push_back(th);
        }
    }
    return lift;
}

double AngleLift::at(double time) const {
    if (t.empty()) throw DomainError("empty angle lift");
    if (time <= t.front()) return theta.front();
    if (time >= t.back()) return theta.back();
    auto it = std::upper_bound(t.begin(), t.end(), time);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
    return theta[i - 1] + w * (theta[i] - theta[i - 1]);
}

/* ------------------------------------------------------------------ */
/*  turn counting                                                       */
/* ------------------------------------------------------------------ */

TurnCount count_turns(const Trajectory& traj, double ta, double tb,
                      std::optional<double> center_a, bool mirrored) {
    if (!(tb > ta)) throw DomainError("count_turns needs tb > ta");

    bool near_pair = false;
    // Half-open window: a zero sitting exactly at tb belongs to the next
    // window, not this one.
    const double tb_open = tb - 1e-12 * std::max(1.0, std::abs(tb));
    std::vector<double> zeros = traj.zeros_of_y(ta, tb_open, &near_pair);

    if (near_pair)
        throw AmbiguousTurnCountError(
            "two sign changes of x' closer than 1e-8 in [" + std::to_string(ta) + ", " +
            std::to_string(tb) + "); the turn count is not trustworthy here");
    if (zeros.size() % 2 != 0)
        throw AmbiguousTurnCountError("odd number of x' zeros (" +
                                      std::to_string(zeros.size()) + ") in [" +
                                      std::to_string(ta) + ", " + std::to_string(tb) + ")");

    TurnCount out;
    out.zero_count = static_cast<int>(zeros.size());
    out.turns = out.zero_count / 2;

    if (center_a) {
        AngleLift lift = angle_lift(*center_a, traj, mirrored);
        const double w = (lift.at(tb) - lift.at(ta)) / (2.0 * PI_D);
        out.winding = w;
        out.winding_consistent =
            (w > out.turns - 0.5) && (w < out.turns + 0.5);
        if (!out.winding_consistent)
            throw AmbiguousTurnCountError(
                "winding " + std::to_string(w) + " disagrees with zero count " +
                std::to_string(out.zero_count) + " in [" + std::to_string(ta) + ", " +
                std::to_string(tb) + ")");
    }
    return out;
}

}  // namespace nagumo
