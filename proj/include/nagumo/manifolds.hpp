#pragma once

// Stable/unstable continua of the switching system at a time section,
// computed by eigendirection shooting over a long window, plus the
// heteroclinic/homoclinic connection solver built on the itinerary engine.

#include <nagumo/itinerary.hpp>

#include <functional>
#include <string>
#include <vector>

namespace nagumo {

/* ------------------------------------------------------------------ */
/*  graph windows                                                       */
/* ------------------------------------------------------------------ */

// x-intervals on which the continua are certified graphs: [0, a_minus_0]
// at the equilibrium (0,0) and [a_plus_1, 1] at (1,0). a_minus_0 is the
// smaller root of the x-derivative of the cubic at weight a_minus (the
// derivative is >= 0 on [0, a_minus_0] for both weights); a_plus_1 is its
// mirror under x -> 1-x, a -> 1-a.
struct GraphWindows {
    double a_minus_0 = 0.0;  // in (0, a_minus)
    double a_plus_1 = 0.0;   // in (a_plus, 1)
};

GraphWindows graph_window(double a_minus, double a_plus);

/* ------------------------------------------------------------------ */
/*  continua                                                            */
/* ------------------------------------------------------------------ */

enum class ManifoldKind { UnstableFrom0, UnstableFrom1, StableTo0, StableTo1 };
const char* to_string(ManifoldKind k);

// The section curve of one continuum branch, parametrized by the seed
// offset sigma along the frozen eigendirection at the far end of the
// shooting window. `curve` holds the portion restricted to the graph
// window, with the equilibrium as the sigma = 0 node and the last node
// bisected onto the window edge. `at_sigma` re-integrates from the seed,
// so tests can compare exact samples instead of polyline interpolants.
struct ManifoldGraph {
    ManifoldKind which{};
    double anchor_time = 0.0;
    PlanarPath curve;

    double x_lo = 0.0, x_hi = 0.0;  // certified graph window in x
    double window_length = 0.0;
    double t_seed = 0.0;  // anchor_time -/+ window_length (unstable/stable)
    PhasePoint equilibrium;
    PhasePoint seed_dir;  // unit eigendirection, branch-signed (metadata;
                          // seeds themselves offset vertically from the
                          // saddle to keep full float resolution)
    double seed_len = 1e-6;

    // Largest violation of the two-sided energy localization over the
    // retained samples (the curve must lie between the frozen-system
    // manifolds of the two weights).
    double max_localization_defect = 0.0;

    std::function<PhasePoint(long double sigma)> at_sigma;

    // Graph evaluation y(x) by sigma bisection on at_sigma; x must lie in
    // [x_lo, x_hi]. Robust against the sigma reparametrization, so curves
    // from different window lengths can be compared pointwise.
    double y_at(double x, double x_tol = 1e-12) const;
};

// Shoots a segment of length 1e-6 along the frozen unstable eigendirection
// at equilibrium `which` (0 or 1), placed at t0 - window_length with the
// weight active there, and flows it to the section t0. The profile extends
// with the adjacent gap's weight outside its switch window. Requires
// window_length >= 20 / sqrt(min(a_minus, 1 - a_plus)). Throws
// LocalizationError if the retained curve leaves the inter-manifold band
// by more than 1e-6 (window too short).
ManifoldGraph unstable_continuum(const StepProfile& prof, double t0, int which,
                                 double window_length, const OdeOptions& opts = {});

// Mirror construction: seed on the frozen stable eigendirection at
// t0 + window_length, flown backward to the section.
ManifoldGraph stable_continuum(const StepProfile& prof, double t0, int which,
                               double window_length, const OdeOptions& opts = {});

// Frozen-weight versions (the profile is constant, which StepProfile
// cannot represent); the section curve then matches a level set of the
// frozen energy.
ManifoldGraph unstable_continuum(SystemParams a, double t0, int which, double window_length,
                                 const OdeOptions& opts = {});
ManifoldGraph stable_continuum(SystemParams a, double t0, int which, double window_length,
                               const OdeOptions& opts = {});

/* ------------------------------------------------------------------ */
/*  polyline intersection                                               */
/* ------------------------------------------------------------------ */

struct PathIntersections {
    std::vector<PhasePoint> points;       // transversal segment crossings
    std::vector<PhasePoint> near_misses;  // closest approaches within 1e-9
};

// All transversal intersections of two polylines (chord against chord,
// solved in closed form), deduplicated at shared endpoints. Segment pairs
// that come within 1e-9 without a proper crossing are reported separately.
PathIntersections intersect_paths(const PlanarPath& a, const PlanarPath& b);

/* ------------------------------------------------------------------ */
/*  connections                                                         */
/* ------------------------------------------------------------------ */

enum class ConnectionKind { Heteroclinic, Homoclinic };

// Asymptotic certificate of one tail of a connecting orbit.
struct TailFit {
    double end_distance = 0.0;     // distance to the equilibrium at the window end
    double decay_exponent = 0.0;   // fitted within one constant-weight gap
    double expected_exponent = 0.0;
    int zero_count = 0;            // zeros of x' on the tail window
    bool monotone = false;         // zero_count == 0
    double fit_t_lo = 0.0, fit_t_hi = 0.0;
};

// Fits ln(distance to eq) against t on the first constant-weight stretch of
// [wa, wb] whose samples sit cleanly inside the linear band, and counts the
// zeros of x' over the whole window. `growing` marks a backward tail (the
// asymptotic end is at wa).
TailFit fit_tail(const Trajectory& orbit, const StepProfile& prof, PhasePoint eq, double wa,
                 double wb, bool growing);

struct ConnectionResult {
    ConnectionKind kind{};
    double a_minus = 0.0, a_plus = 0.0;

    PhasePoint point_at_t0;    // the orbit on the section t_0
    long double sigma_seed = 0.0L;  // seed offset of the unstable branch

    // Interior blocks (empty trajectory when the itinerary has 0 blocks).
    RealizationResult realization;

    // Backward tail + interior stages + forward tail as one trajectory,
    // from t_seed of the unstable branch to the certified forward end.
    Trajectory orbit;

    TailFit backward_tail, forward_tail;
    double intersection_residual = 0.0;

    // Zeros of x' strictly between t_{6K} and t_{6K+1} (homoclinic
    // certificates require exactly one).
    int exit_gap_zeros = 0;

    Thresholds thresholds;  // with connection-mode values filled
};

// Connecting orbit with a prescribed interior itinerary (K >= 0 blocks):
// the unstable continuum of (0,0) at t_{-1} is restricted to x in [0, x1],
// pushed one gap to t_0, threaded through the K blocks by nested crossing
// selection, and intersected at t_{6K} with the pullback of the stable
// continuum at t_{6K+1} (x in [x2, 1] to (1,0) for heteroclinic, [0, x1]
// to (0,0) for homoclinic). The profile must cover switches -1 .. 6K+1;
// per-gap thresholds extend the chaos-mode checks by tau on the entry gap
// and tau_prime on the exit gap. Throws ConnectionNotFoundError when the
// curves do not intersect.
ConnectionResult connect(const StepProfile& prof, const Itinerary& itin, ConnectionKind kind,
                         const OdeOptions& opts = {});

}  // namespace nagumo
