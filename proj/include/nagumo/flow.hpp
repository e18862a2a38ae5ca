#pragma once

// The nonautonomous layer: stepwise weight profiles a(s) in {a_minus, a_plus},
// trajectory integration across switch times, Poincare maps of the frozen
// systems, block maps, continuous angle lifts around a center, and turn
// counting.

#include <nagumo/ode.hpp>
#include <nagumo/phase.hpp>

#include <optional>
#include <vector>

namespace nagumo {

// Stepwise profile: a(s) = a_minus on [s_{2k}, s_{2k+1}), a_plus on
// [s_{2k+1}, s_{2k+2}). Rescaled switch times are t_k = s_k / epsilon.
// The stored switch window is finite; outside it the parity rule of the
// adjacent gap extends a(t).
struct StepProfile {
    double a_minus;
    double a_plus;
    std::vector<double> switch_s;  // s_k for k = k_first .. k_first + size - 1
    long k_first = 0;
    double delta;    // positive lower bound for the s-gaps
    double epsilon;  // time-scale parameter, > 0

    StepProfile(double am, double ap, std::vector<double> s, long k0, double delta_,
                double eps);

    // Uniform gaps: s_k = k * delta for k in [k_lo, k_hi].
    static StepProfile uniform(double am, double ap, double delta_, double eps, long k_lo,
                               long k_hi);

    long k_lo() const { return k_first; }
    long k_hi() const { return k_first + static_cast<long>(switch_s.size()) - 1; }

    double s(long k) const;
    double t(long k) const { return s(k) / epsilon; }
    std::vector<double> rescaled() const;  // all t_k in window order

    // Weight on the gap [t_k, t_{k+1}): a_minus for even k.
    double a_on_gap(long k) const { return (k % 2 == 0) ? a_minus : a_plus; }
    double a_at_time(double t) const;

    double min_gap_t() const;  // smallest rescaled gap inside the window
};

// Flow of the piecewise system over [t0, t1] (switch times are hard
// integration boundaries, no step straddles them).
Trajectory integrate_profile(const StepProfile& prof, PhasePoint p0, double t0, double t1,
                             const OdeOptions& opts = {});

// Endpoint-only version; t1 < t0 integrates backward through the switches.
PhasePoint flow_profile_point(const StepProfile& prof, PhasePoint p0, double t0, double t1,
                              const OdeOptions& opts = {});

// Time-T map of the frozen system S(a) and its inverse (negative-time flow).
PhasePoint poincare(SystemParams a, double T, PhasePoint p, const OdeOptions& opts = {});
PhasePoint poincare_inverse(SystemParams a, double T, PhasePoint p,
                            const OdeOptions& opts = {});

// A finite composition of frozen flows; the general "map" handed to the
// stretching verifier (a single Poincare map is one leg, a block map is six).
struct Leg {
    double a;
    double T;
};

struct LegMap {
    std::vector<Leg> legs;

    PhasePoint operator()(PhasePoint p, const OdeOptions& opts = {}) const;
    Trajectory trajectory(PhasePoint p, double t0 = 0.0, const OdeOptions& opts = {}) const;
    double total_time() const;
    LegMap then(const LegMap& next) const;  // this first, then next
};

// The six Poincare maps over [t_{6k}, t_{6k+6}] composing the block map
// phi_k. Requires the window to contain those switch indices.
LegMap block_map(const StepProfile& prof, long k);

/* ------------------------------------------------------------------ */
/*  angle lift and turn counting                                        */
/* ------------------------------------------------------------------ */

// Continuous angle along a trajectory around (center, 0), clockwise-positive
// (x = center + r cos th, y = -r sin th), th(t_begin) normalized into
// [-pi, 0]. With mirrored = true the lift is taken in the coordinates
// (1-x, -y) around (1-center), which is the matching convention for the
// lower-half-plane twist rectangle.
struct AngleLift {
    double center = 0.0;
    bool mirrored = false;
    std::vector<double> t;
    std::vector<double> theta;

    double at(double time) const;  // linear interpolation
    double begin_value() const { return theta.front(); }
    double end_value() const { return theta.back(); }
};

AngleLift angle_lift(double center_a, const Trajectory& traj, bool mirrored = false);

struct TurnCount {
    int turns = 0;       // zero count / 2
    int zero_count = 0;  // zeros of x' in [ta, tb)
    std::optional<double> winding;  // (th(tb)-th(ta)) / 2pi when a center was given
    bool winding_consistent = true;
};

// Counts zeros of x' on the half-open window [ta, tb). An odd count or a
// pair of zeros closer than 1e-8 raises AmbiguousTurnCountError. When
// center_a is given, the angle-lift winding is reported and checked to lie
// in (turns - 1/2, turns + 1/2).
TurnCount count_turns(const Trajectory& traj, double ta, double tb,
                      std::optional<double> center_a = std::nullopt,
                      bool mirrored = false);

}  // namespace nagumo
