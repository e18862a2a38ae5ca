#pragma once

// Oriented rectangles in the phase plane, built from energy-band predicates
// of the two frozen systems, plus the path primitives (spanning paths,
// adaptive image refinement, crossing detection) that the stretching and
// itinerary machinery consumes.

#include <nagumo/flow.hpp>
#include <nagumo/phase.hpp>
#include <nagumo/types.hpp>

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace nagumo {

enum class Across { Minus, Plus };
enum class Containment { Outside, Boundary, Inside };
enum class RectLabel { R1, R2, R3, R4 };

// Boundary pieces of a rectangle, named by the active constraint.
enum class SideId { EnergyMinusLo, EnergyMinusHi, EnergyPlusLo, EnergyPlusHi, Axis };

const char* to_string(RectLabel label);
const char* to_string(SideId side);
const char* to_string(Containment c);

// A validated pair of weights a_minus < 1/2 < a_plus.
struct PairParams {
    SystemParams minus;
    SystemParams plus;

    PairParams(double a_minus, double a_plus);

    // F_{a_plus}(x) - F_{a_minus}(x); strictly decreasing on (0,1), zero at 0.
    double gap_G(double x) const;
};

// Closed band lo <= E_system <= hi.
struct EnergyBand {
    SystemParams system;
    double lo = 0.0;
    double hi = 0.0;
};

struct RectConstants {
    double p_minus = 0.0;
    double p_plus = 0.0;
    // q values are filled by compute_q; rectangles R2/R4 require them.
    double q_plus = std::numeric_limits<double>::quiet_NaN();
    double q_minus = std::numeric_limits<double>::quiet_NaN();
};

// Midpoints of the admissible intervals:
// p_minus = (max{z_{a-}, a+} + 1)/2,  p_plus = min{a-, z_{a+}}/2.
RectConstants choose_p(const PairParams& pair);

// An oriented rectangle: conjunction of two energy bands and a half-plane,
// with the boundary split into a designated "minus" pair of opposite sides
// and the complementary "plus" pair.
struct OrientedRect {
    RectLabel label = RectLabel::R1;
    PairParams pair;
    EnergyBand band_minus;  // band in E_{a_minus}
    EnergyBand band_plus;   // band in E_{a_plus}
    int halfplane = +1;     // +1 keeps y >= 0, -1 keeps y <= 0
    bool axis_is_side = false;
    std::array<SideId, 2> minus_sides{};
    std::array<SideId, 2> plus_sides{};

    Containment contains(PhasePoint p, double tol = 1e-12) const;

    // Signed violations of the five constraints (positive means outside
    // through that constraint), in the order EnergyMinusLo, EnergyMinusHi,
    // EnergyPlusLo, EnergyPlusHi, Axis.
    std::array<double, 5> violations(PhasePoint p) const;

    // The constraint most strongly violated at (or nearest to) p; used to
    // name the side a path leaves or enters through.
    SideId classify_side(PhasePoint p) const;

    const std::array<SideId, 2>& sides(Across a) const {
        return a == Across::Minus ? minus_sides : plus_sides;
    }

    // Boundary arc on the given side, as a polyline (axis sides are straight
    // segments); for portraits and reports.
    PlanarPath side_arc(SideId side, std::size_t n_samples = 257) const;

    // A point well inside the rectangle (midpoint of the canonical
    // minus-spanning path).
    PhasePoint witness() const;
};

// The q constants of the backward-image sup/inf recipe:
// q_plus  = sup{x in [p_minus, 1] : backward T1 image of (x,0) under the
//           a_minus flow lies in R1}, shrunk by 1e-6 into the member side;
// q_minus = inf over [0, p_plus] with the a_plus backward flow into R3.
RectConstants compute_q(const PairParams& pair, const RectConstants& with_p, double T1,
                        const OdeOptions& opts = {});

// All four rectangles (R2 and R4 need the q constants).
std::array<OrientedRect, 4> build_rects(const PairParams& pair, const RectConstants& c);
OrientedRect build_rect(const PairParams& pair, const RectConstants& c, RectLabel label);

// A path inside the rectangle joining the two sides of the requested pair,
// traced along a level curve of the transversal frozen system. fraction in
// (0,1) picks the level inside its admissible range; 0.5 is the canonical
// choice. Endpoints land on the named sides within 1e-9.
PlanarPath spanning_path(const OrientedRect& rect, Across across, double fraction = 0.5,
                         std::size_t n_samples = 513);

// The canonical path (0.5) followed by level-curve perturbations at
// fractions 0.3, 0.4, 0.6, 0.7, truncated to `budget`.
std::vector<PlanarPath> spanning_family(const OrientedRect& rect, Across across, int budget);
std::vector<double> spanning_fractions(int budget);

/* ------------------------------------------------------------------ */
/*  path mapping and crossing detection                                 */
/* ------------------------------------------------------------------ */

using CurveFn = std::function<PhasePoint(long double)>;
using PointMap = std::function<PhasePoint(PhasePoint)>;

CurveFn as_curve(const PlanarPath& path);  // linear interpolation view

// Image polyline of s -> map(curve(s)) over [s0, s1], refined until adjacent
// image points are closer than h_img. Throws InconclusiveError if the point
// cap is reached with unresolved gaps.
PlanarPath map_path(const CurveFn& curve, long double s0, long double s1, const PointMap& map,
                    double h_img = 1e-2, std::size_t max_points = (std::size_t{1} << 18));

// A maximal parameter interval whose image lies in the closed rectangle with
// endpoints on two different sides of the designated pair.
struct Crossing {
    long double s_enter = 0.0L;
    long double s_exit = 0.0L;
    SideId enter_side{};
    SideId exit_side{};
    PhasePoint p_enter;
    PhasePoint p_exit;
};

// Scans the polyline for membership runs, bisects the run ends to param_tol
// (against `exact` when given, else against the polyline interpolant), names
// the sides, and keeps the runs joining the two components of the designated
// pair. Parameters are reported in the input path's parametrization.
std::vector<Crossing> crossing_subpaths(const PlanarPath& path, const OrientedRect& rect,
                                        Across across,
                                        const CurveFn& exact = nullptr,
                                        long double param_tol = 1e-9L);

}  // namespace nagumo
