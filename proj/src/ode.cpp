#include <nagumo/ode.hpp>

#include <algorithm>
#include <cmath>

namespace nagumo {

namespace {

/* Dormand-Prince 5(4) tableau. */
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                 b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
/* Dense-output weights. */
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

struct Deriv {
    double dx, dy;
};

// Right-hand side of S(a); sign = -1 integrates the time-reversed field.
inline Deriv rhs(double a, double sign, PhasePoint p) {
    double g = 0.0;
    if (p.x > 0.0 && p.x < 1.0) g = p.x * (p.x - 1.0) * (p.x - a);
    return {sign * p.y, sign * g};
}

struct StepResult {
    PhasePoint y1;
    Deriv k7;
    double err;
    DenseStep dense;
};

inline StepResult dp5_step(double a, double sign, PhasePoint y0, const Deriv& k1,
                           double h, double atol, double rtol) {
    const auto at = [&](double cx1, double cy1) {
        return PhasePoint{y0.x + h * cx1, y0.y + h * cy1};
    };
    const Deriv k2 = rhs(a, sign, at(a21 * k1.dx, a21 * k1.dy));
    const Deriv k3 = rhs(a, sign, at(a31 * k1.dx + a32 * k2.dx, a31 * k1.dy + a32 * k2.dy));
    const Deriv k4 = rhs(a, sign,
                         at(a41 * k1.dx + a42 * k2.dx + a43 * k3.dx,
                            a41 * k1.dy + a42 * k2.dy + a43 * k3.dy));
    const Deriv k5 = rhs(a, sign,
                         at(a51 * k1.dx + a52 * k2.dx + a53 * k3.dx + a54 * k4.dx,
                            a51 * k1.dy + a52 * k2.dy + a53 * k3.dy + a54 * k4.dy));
    const Deriv k6 = rhs(a, sign,
                         at(a61 * k1.dx + a62 * k2.dx + a63 * k3.dx + a64 * k4.dx + a65 * k5.dx,
                            a61 * k1.dy + a62 * k2.dy + a63 * k3.dy + a64 * k4.dy + a65 * k5.dy));

    const double sx = b1 * k1.dx + b3 * k3.dx + b4 * k4.dx + b5 * k5.dx + b6 * k6.dx;
    const double sy = b1 * k1.dy + b3 * k3.dy + b4 * k4.dy + b5 * k5.dy + b6 * k6.dy;
    const PhasePoint y1{y0.x + h * sx, y0.y + h * sy};
    const Deriv k7 = rhs(a, sign, y1);

    const double ex = h * (e1 * k1.dx + e3 * k3.dx + e4 * k4.dx + e5 * k5.dx + e6 * k6.dx +
                           e7 * k7.dx);
    const double ey = h * (e1 * k1.dy + e3 * k3.dy + e4 * k4.dy + e5 * k5.dy + e6 * k6.dy +
                           e7 * k7.dy);
    const double skx = atol + rtol * std::max(std::fabs(y0.x), std::fabs(y1.x));
    const double sky = atol + rtol * std::max(std::fabs(y0.y), std::fabs(y1.y));
    const double rx = ex / skx, ry = ey / sky;
    const double err = std::sqrt(0.5 * (rx * rx + ry * ry));

    StepResult out;
    out.y1 = y1;
    out.k7 = k7;
    out.err = err;

    const double ddx = y1.x - y0.x, ddy = y1.y - y0.y;
    const double bx = h * k1.dx - ddx, by = h * k1.dy - ddy;
    out.dense.cx = {y0.x, ddx, bx, ddx - h * k7.dx - bx,
                    h * (d1 * k1.dx + d3 * k3.dx + d4 * k4.dx + d5 * k5.dx + d6 * k6.dx +
                         d7 * k7.dx)};
    out.dense.cy = {y0.y, ddy, by, ddy - h * k7.dy - by,
                    h * (d1 * k1.dy + d3 * k3.dy + d4 * k4.dy + d5 * k5.dy + d6 * k6.dy +
                         d7 * k7.dy)};
    return out;
}

inline double dense_eval(const std::array<double, 5>& c, double th) {
    const double th1 = 1.0 - th;
    return c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
}

// Core loop shared by the storing and endpoint-only integrators.
template <bool Store>
PhasePoint run(double a, double sign, PhasePoint p0, double t0, double t1,
               const OdeOptions& opts, Trajectory* out) {
    const double span = t1 - t0;
    if (!(span > 0.0)) {
        if (span == 0.0) {
            if constexpr (Store) {
                out->ts = {t0};
                out->states = {p0};
            }
            return p0;
        }
        throw DomainError("integrate: t1 < t0");
    }
    if (!p0.finite()) throw IntegrationError("integrate: nonfinite initial state");

    if constexpr (Store) {
        out->ts.clear();
        out->states.clear();
        out->dense.clear();
        out->ts.push_back(t0);
        out->states.push_back(p0);
    }

    double t = t0;
    PhasePoint y = p0;
    Deriv k1 = rhs(a, sign, y);
    double h = std::min({opts.h_init, opts.h_max, span});
    double facold = 1e-4;
    constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double facmin = 0.2, facmax = 10.0, safe = 0.9;

    for (long steps = 0; steps < opts.max_steps; ++steps) {
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }
        const StepResult r = dp5_step(a, sign, y, k1, h, opts.atol, opts.rtol);
        if (!std::isfinite(r.err) || !r.y1.finite())
            throw IntegrationError("integrate: nonfinite state");

        if (r.err <= 1.0) {
            if constexpr (Store) {
                out->dense.push_back(r.dense);
                out->ts.push_back(last ? t1 : t + h);
                out->states.push_back(r.y1);
            }
            t = last ? t1 : t + h;
            y = r.y1;
            k1 = r.k7;  // FSAL
            if (last) return y;
            facold = std::max(r.err, 1e-4);
        }
        // The 0.9 safety margin is essential, not cosmetic: without it the
        // rejected-step update h /= err^expo1 converges to the step size
        // where err == 1 exactly and stalls there whenever the error is a
        // continuous function of h, e.g. while straddling the cubic clamp
        // kink at x = 0 or x = 1.
        const double fac11 = std::pow(std::max(r.err, 1e-30), expo1);
        double fac = fac11 / std::pow(facold, beta);
        fac = std::clamp(fac / safe, 1.0 / facmax, 1.0 / facmin);
        double hnew = h / fac;
        if (r.err > 1.0) hnew = h / std::min(1.0 / facmin, fac11 / safe);  // rejected
        h = std::min(hnew, opts.h_max);
        if (!(h > std::fabs(t) * 1e-16 + 1e-300))
            throw IntegrationError("integrate: step size underflow");
    }
    throw IntegrationError("integrate: step budget exhausted");
}

}  // namespace

Trajectory integrate_const(SystemParams a, PhasePoint p0, double t0, double t1,
                           const OdeOptions& opts) {
    Trajectory traj;
    run<true>(a.a, 1.0, p0, t0, t1, opts, &traj);
    return traj;
}

PhasePoint flow_point(SystemParams a, PhasePoint p0, double duration, const OdeOptions& opts) {
    if (duration == 0.0) return p0;
    const double sign = duration > 0.0 ? 1.0 : -1.0;
    return run<false>(a.a, sign, p0, 0.0, std::fabs(duration), opts, nullptr);
}

/* ------------------------------------------------------------------ */
/*  Trajectory queries                                                  */
/* ------------------------------------------------------------------ */

PhasePoint Trajectory::eval(double t) const {
    if (ts.empty()) throw DomainError("Trajectory::eval: empty trajectory");
    if (t <= ts.front()) return states.front();
    if (t >= ts.back()) return states.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin()) - 1;
    const double h = ts[i + 1] - ts[i];
    const double th = (t - ts[i]) / h;
    return {dense_eval(dense[i].cx, th), dense_eval(dense[i].cy, th)};
}

namespace {

// Generic scan for zeros of a scalar dense-output component over [ta, tb].
template <typename Eval>
std::vector<double> scan_zeros(const Trajectory& traj, Eval&& value, double ta, double tb,
                               bool* near_pair) {
    std::vector<double> zeros;
    if (near_pair) *near_pair = false;
    if (traj.ts.size() < 2) return zeros;
    ta = std::max(ta, traj.ts.front());
    tb = std::min(tb, traj.ts.back());
    if (!(ta < tb)) return zeros;

    constexpr int kSub = 8;  // interior samples per accepted step
    const auto push = [&](double t) {
        if (!zeros.empty()) {
            const double gap = t - zeros.back();
            if (gap < 1e-12) return;  // same root seen from both sides
            if (gap < 1e-8 && near_pair) *near_pair = true;
        }
        zeros.push_back(t);
    };

    auto lo = std::upper_bound(traj.ts.begin(), traj.ts.end(), ta);
    std::size_t i = static_cast<std::size_t>(lo - traj.ts.begin());
    i = (i == 0) ? 0 : i - 1;
    for (; i + 1 < traj.ts.size() && traj.ts[i] < tb; ++i) {
        const double s0 = std::max(ta, traj.ts[i]);
        const double s1 = std::min(tb, traj.ts[i + 1]);
        if (!(s0 < s1)) continue;
        double tprev = s0;
        double vprev = value(traj, tprev);
        for (int k = 1; k <= kSub; ++k) {
            const double tk = s0 + (s1 - s0) * k / kSub;
            const double vk = value(traj, tk);
            if (vprev == 0.0) {
                push(tprev);
            } else if ((vprev > 0.0) != (vk >= 0.0) && vk != 0.0) {
                // bisect to 1e-10 in t
                double a = tprev, b = tk, va = vprev;
                while (b - a > 1e-10) {
                    const double m = 0.5 * (a + b);
                    const double vm = value(traj, m);
                    if (vm == 0.0) {
                        a = b = m;
                        break;
                    }
                    if ((vm > 0.0) == (va > 0.0)) {
                        a = m;
                        va = vm;
                    } else {
                        b = m;
                    }
                }
                push(0.5 * (a + b));
            }
            tprev = tk;
            vprev = vk;
        }
        if (vprev == 0.0 && tprev < tb) push(tprev);
    }
    return zeros;
}

}  // namespace

std::vector<double> Trajectory::zeros_of_y(double ta, double tb, bool* near_pair) const {
    return scan_zeros(
        *this, [](const Trajectory& tr, double t) { return tr.eval(t).y; }, ta, tb, near_pair);
}

std::vector<double> Trajectory::crossings_x(double c, double ta, double tb) const {
    return scan_zeros(
        *this, [c](const Trajectory& tr, double t) { return tr.eval(t).x - c; }, ta, tb,
        nullptr);
}

void Trajectory::append(const Trajectory& more) {
    if (ts.empty()) {
        *this = more;
        return;
    }
    if (more.ts.empty()) return;
    if (std::fabs(more.ts.front() - ts.back()) > 1e-9)
        throw DomainError("Trajectory::append: time mismatch");
    for (std::size_t i = 1; i < more.ts.size(); ++i) {
        ts.push_back(more.ts[i]);
        states.push_back(more.states[i]);
    }
    for (const auto& d : more.dense) dense.push_back(d);
}

}  // namespace nagumo
