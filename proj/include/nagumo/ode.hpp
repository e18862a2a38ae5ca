#pragma once

// Adaptive Dormand-Prince 5(4) integration of the frozen system S(a) with
// per-step dense output kept in the trajectory object. The dense coefficients
// make post-hoc event work (zeros of x', axis and vertical-line crossings,
// angle lifts, turn counting over arbitrary subintervals) possible without
// re-integration, which is what the rest of the library leans on.

#include <nagumo/errors.hpp>
#include <nagumo/phase.hpp>
#include <nagumo/types.hpp>

#include <array>
#include <vector>

namespace nagumo {

struct OdeOptions {
    double rtol = 1e-12;
    double atol = 1e-13;
    double h_init = 1e-2;
    double h_max = 1e9;
    long max_steps = 20'000'000;
};

// One accepted step's quartic interpolation data (per component).
struct DenseStep {
    std::array<double, 5> cx;  // rcont coefficients for x
    std::array<double, 5> cy;  // rcont coefficients for y
};

struct Trajectory {
    std::vector<double> ts;          // accepted step boundaries, strictly increasing
    std::vector<PhasePoint> states;  // states at ts
    std::vector<DenseStep> dense;    // dense.size() + 1 == ts.size()

    double t_begin() const { return ts.front(); }
    double t_end() const { return ts.back(); }
    PhasePoint front() const { return states.front(); }
    PhasePoint back() const { return states.back(); }

    PhasePoint eval(double t) const;

    // All simple zeros of y(t) = x'(t) in [ta, tb], refined by bisection on
    // the dense output to 1e-10 in t. near_pair is set when two zeros closer
    // than 1e-8 were found (they are both returned, never merged).
    std::vector<double> zeros_of_y(double ta, double tb, bool* near_pair = nullptr) const;

    // Crossing times of x(t) = c in [ta, tb], same refinement.
    std::vector<double> crossings_x(double c, double ta, double tb) const;

    // Append another trajectory that starts where this one ends.
    void append(const Trajectory& more);
};

// Integrate S(a) from p0 over [t0, t1], t0 < t1, storing every accepted step.
Trajectory integrate_const(SystemParams a, PhasePoint p0, double t0, double t1,
                           const OdeOptions& opts = {});

// Endpoint-only flow over a signed duration (negative integrates the
// time-reversed field); cheaper than building a Trajectory.
PhasePoint flow_point(SystemParams a, PhasePoint p0, double duration,
                      const OdeOptions& opts = {});

}  // namespace nagumo
