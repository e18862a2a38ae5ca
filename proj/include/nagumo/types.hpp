#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nagumo {

inline constexpr double PI_D = 3.141592653589793238462643383279502884;

// A point (x, y) of the phase plane: x is the state, y = x' the velocity.
struct PhasePoint {
    double x = 0.0;
    double y = 0.0;

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline PhasePoint operator+(PhasePoint a, PhasePoint b) { return {a.x + b.x, a.y + b.y}; }
inline PhasePoint operator-(PhasePoint a, PhasePoint b) { return {a.x - b.x, a.y - b.y}; }
inline PhasePoint operator*(double s, PhasePoint p) { return {s * p.x, s * p.y}; }

inline double dist(PhasePoint a, PhasePoint b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

// A continuous planar path gamma : [0,1] -> R^2 stored as a polyline with
// strictly increasing parameter values. Long-double parameters are used on
// purpose: nested sub-path selection shrinks parameter intervals by several
// orders of magnitude per stage, and 64-bit parameters run out of resolution
// before the phase-plane points do.
struct PlanarPath {
    std::vector<long double> s;     // parameters, strictly increasing, s.front()=0, s.back()=1
    std::vector<PhasePoint> pts;    // same length as s

    std::size_t size() const { return pts.size(); }
    bool empty() const { return pts.empty(); }

    PhasePoint front() const { return pts.front(); }
    PhasePoint back() const { return pts.back(); }

    // Piecewise-linear evaluation (binary search on the parameter array).
    PhasePoint eval(long double t) const;

    // Maximum distance between adjacent points.
    double max_gap() const;
};

}  // namespace nagumo
