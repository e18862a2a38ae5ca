#pragma once

// Facts about the frozen autonomous system S(a):
//
//     x' = y,   y' = x(x-1)(x-a),   0 < a < 1,
//
// which is conservative with energy E_a(x,y) = y^2/2 + F_a(x) where
// F_a' (x) = x(1-x)(x-a) on [0,1]. Everything in this header is closed-form
// or a one-dimensional root-find / singular quadrature; no trajectories are
// integrated here.

#include <nagumo/errors.hpp>
#include <nagumo/types.hpp>

namespace nagumo {

struct SystemParams {
    double a;
    explicit SystemParams(double a_) : a(a_) {
        if (!(a > 0.0 && a < 1.0))
            throw DomainError("SystemParams: a must lie in (0,1)");
    }
};

using EnergyLevel = double;

enum class LevelTag {
    CenterPoint,         // the single point (a,0)
    ClosedCycle,         // one periodic orbit around (a,0)
    HomoclinicUnion,     // saddle + its homoclinic loop
    HeteroclinicUnion,   // both saddles + the pair of connecting orbits (a = 1/2)
    InnerArc,            // arcs between the loop and the other saddle's manifolds
    SaddleManifoldUnion, // the other saddle + its stable/unstable manifolds
    TwoOuterCurves,      // two unbounded curves
    Empty,
};

enum class ACase { BelowHalf, EqualHalf, AboveHalf };

struct LevelClass {
    LevelTag tag;
    ACase acase;
};

struct CriticalLevels {
    EnergyLevel center;   // F_a(a)
    EnergyLevel saddle0;  // F_a(0) = 0
    EnergyLevel saddle1;  // F_a(1) = (1-2a)/12
};

struct SaddleData {
    double lambda;            // positive exponent; eigenvalues are +/- lambda
    PhasePoint unstable_dir;  // eigenvector for +lambda (not normalized)
    PhasePoint stable_dir;    // eigenvector for -lambda
};

struct EquilibriumData {
    SaddleData at0;     // linearization at (0,0), lambda = sqrt(a)
    SaddleData at1;     // linearization at (1,0) in shifted coordinates, sqrt(1-a)
    double center_freq; // imaginary pair +/- i*sqrt(a(1-a)) at (a,0)
};

// The cubic restoring term x(1-x)(x-a), clamped to 0 outside [0,1] so that
// the flow is globally defined. Note the sign: the system's y' equals the
// negative of this, y' = x(x-1)(x-a).
double cubic(SystemParams params, double x);

// Antiderivative of cubic with F_a(0) = 0, continued as a constant outside
// [0,1] (matching the clamp). F_a(1) = (1-2a)/12.
double potential(SystemParams params, double x);

// Long-double twin of potential, used where paths are sampled at parameter
// resolutions finer than double (nested itinerary selection).
long double potential_l(double a, long double x);

double energy(SystemParams params, PhasePoint p);

CriticalLevels critical_levels(SystemParams params);

LevelClass classify_level(SystemParams params, EnergyLevel c);

// z_a: abscissa where the homoclinic loop meets the positive x-axis.
// For a < 1/2 the loop is based at (0,0) and z_a is the root of F_a in (a,1);
// for a > 1/2 it is based at (1,0) and z_a = 1 - z_{1-a}. Throws
// NoHomoclinicError at a = 1/2.
double homoclinic_apex(SystemParams params);

// Linkage of the two homoclinic loops of S(a_minus), S(a_plus): true iff
// z_{a_plus} < z_{a_minus}, i.e. the loops intersect.
bool linked(SystemParams a_minus, SystemParams a_plus);

// Piece of the level set E_a = c over [x_lo, x_hi] on the branch
// y = sign * sqrt(2(c - F_a(x))). Throws DomainError if c < F_a somewhere
// inside the interval.
PlanarPath orbit_graph(SystemParams params, EnergyLevel c, double x_lo,
                       double x_hi, int branch, std::size_t n_samples = 513);

// (1/sqrt(2)) * integral over [x_lo,x_hi] of dx / sqrt(c - F_a(x)).
// This is the time a solution at energy c needs to move from x_lo to x_hi
// while x is monotone. Inverse-square-root endpoint singularities (simple
// zeros of c - F_a at the interval ends) are handled by the quadrature;
// an interior zero means infinite transit time and raises DomainError.
double time_of_flight(SystemParams params, EnergyLevel c, double x_lo, double x_hi);

// Full revolution time of the closed orbit of S(a) through (q, 0).
double closed_orbit_period(SystemParams params, double q);

// The abscissa eta on the opposite side of the center with
// F_a(eta) = F_a(q); q must lie strictly inside the closed-orbit band.
double turning_point(SystemParams params, double q);

EquilibriumData equilibrium_data(SystemParams params);

}  // namespace nagumo
