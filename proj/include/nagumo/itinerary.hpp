#pragma once

// Constructive realization of prescribed turn itineraries: nested crossing
// selection along the six per-block Poincare maps, periodic fixed points,
// and validation of realized solutions.

#include <nagumo/stretch.hpp>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace nagumo {

// Requested turn counts (n_plus, n_minus) per block, capped by m.
struct Itinerary {
    std::vector<std::pair<int, int>> blocks;
    int m_cap = 1;

    Itinerary(std::vector<std::pair<int, int>> blocks_, int m);
    int k_blocks() const { return static_cast<int>(blocks.size()); }
    int max_turn() const;
};

// Turn-count windows of block j in rescaled time: I_j spans the whole block,
// I_j_plus the second gap (the a_plus twist), I_j_minus the fifth (a_minus).
struct BlockWindows {
    double t_lo = 0.0, t_hi = 0.0;
    double t_plus_lo = 0.0, t_plus_hi = 0.0;
    double t_minus_lo = 0.0, t_minus_hi = 0.0;
};

std::vector<BlockWindows> block_windows(const StepProfile& prof, int k_blocks);

/* ------------------------------------------------------------------ */
/*  anchored curves                                                     */
/* ------------------------------------------------------------------ */

// A curve represented by exactly-computed states at increasing parameters,
// evaluated between nodes by a local cubic through the four nearest ones.
// When an exact evaluator is supplied (closed-form seed curves, manifold
// shooting) it is used instead and the nodes only act as a sampling record.
//
// This representation is what keeps deep nested selection solvent: after
// each stage the surviving sub-path is re-anchored on fresh machine states,
// so parameter precision is spent per stage instead of accumulating across
// the whole composition.
class AnchoredCurve {
public:
    AnchoredCurve() = default;
    AnchoredCurve(std::vector<long double> params, std::vector<PhasePoint> states,
                  CurveFn exact = nullptr);

    PhasePoint eval(long double s) const;
    void insert(long double s, PhasePoint p);

    std::size_t size() const { return params_.size(); }
    const std::vector<long double>& params() const { return params_; }
    const std::vector<PhasePoint>& states() const { return states_; }
    bool has_exact() const { return static_cast<bool>(exact_); }
    long double lo() const { return params_.front(); }
    long double hi() const { return params_.back(); }
    PlanarPath as_path() const;
    CurveFn as_fn() const;  // copyable view calling eval

private:
    std::vector<long double> params_;
    std::vector<PhasePoint> states_;
    CurveFn exact_;
};

/* ------------------------------------------------------------------ */
/*  realization                                                         */
/* ------------------------------------------------------------------ */

struct BlockTurns {
    int requested_plus = 0;
    int achieved_plus = -1;
    int requested_minus = 0;
    int achieved_minus = -1;
    bool ok() const {
        return achieved_plus == requested_plus && achieved_minus == requested_minus;
    }
};

// A realized thread through the nested selection: the state at every switch
// boundary t_0 .. t_{6K}, plus the parameter on the original seed curve the
// thread walks back to. Produced by RealizationResult::thread_at, which maps
// any parameter u of the final curve (normalized coordinates) to its thread.
// The connection solver uses this to run the realization through a specific
// intersection point instead of the canonical midpoint.
struct ThreadPoints {
    std::vector<PhasePoint> states;  // index g = state at t_g
    long double seed_param = 0.0L;   // in the seed curve's own parametrization
};

struct RealizationResult {
    double a_minus = 0.0, a_plus = 0.0;
    PhasePoint initial_point;
    double t_begin = 0.0, t_end = 0.0;

    // Stage pieces are honest integrations; the combined trajectory joins
    // them with re-anchoring seams of about 1e-9 (the realization throws
    // ConstructionError if any seam exceeds 1e-6).
    Trajectory trajectory;
    std::vector<Trajectory> stage_pieces;

    std::vector<BlockTurns> turns;
    std::vector<Containment> entry_membership;  // R1 membership at each t_{6k}
    std::vector<BlockWindows> windows;

    long double window_lo = 0.0L, window_hi = 1.0L;  // surviving window (final stage coords)
    PlanarPath final_curve;                          // surviving sub-path at t_end
    std::function<ThreadPoints(long double)> thread_at;  // see ThreadPoints
};

// Shared setup: rectangle constants from the profile's smallest rescaled gap,
// the four rectangles, and thresholds. Throws ThresholdViolationError unless
// every rescaled gap clears its per-stage need (transfer gaps at least T1*,
// twist gaps at least the (n+1)-round-trip time for the requested n).
struct RealizeSetup {
    PairParams pair;
    RectConstants constants;
    Thresholds thresholds;
    std::vector<OrientedRect> rects;
};

RealizeSetup realize_setup(const StepProfile& prof, const Itinerary& itin,
                           const OdeOptions& opts = {});

// Nested selection from the canonical spanning path of (R1, R1-) at t_0.
RealizationResult realize_finite(const StepProfile& prof, const Itinerary& itin,
                                 const OdeOptions& opts = {});

// Same machinery from a caller-supplied seed curve at t_0 (it must cross
// (R1, R1-)); used by the connection solver.
RealizationResult realize_from_curve(const StepProfile& prof, const Itinerary& itin,
                                     const AnchoredCurve& seed, const RealizeSetup& setup,
                                     const OdeOptions& opts = {});

// No selection: integrates p0 over the itinerary's blocks and packages the
// achieved counts (turn ambiguities are recorded as -1, not thrown). Used to
// validate external candidates and for periodic certificates.
RealizationResult realize_point(const StepProfile& prof, PhasePoint p0, const Itinerary& itin,
                                const OdeOptions& opts = {});

// Integrates each gap [t_g, t_{g+1}] from boundary_states[g] and joins the
// pieces into one trajectory starting at t_0. Every piece runs over a local
// [0, T] span, so its endpoint is bit-identical to the Poincare map of that
// gap; a seam between a piece end and the next boundary state above 1e-6
// throws ConstructionError. `pieces` (optional) receives the per-gap
// trajectories with absolute timestamps.
Trajectory thread_trajectory(const StepProfile& prof,
                             const std::vector<PhasePoint>& boundary_states,
                             const OdeOptions& opts = {},
                             std::vector<Trajectory>* pieces = nullptr);

/* ------------------------------------------------------------------ */
/*  validation and periodic solutions                                   */
/* ------------------------------------------------------------------ */

struct ValidationReport {
    bool passed = false;
    bool turns_ok = false;
    bool strip_ok = false;       // 0 < x < 1 along the whole trajectory
    bool membership_ok = false;  // R1 membership at every t_{6k}
    double x_min = 0.0, x_max = 0.0;
    std::vector<BlockTurns> turns;
    std::string note;
};

ValidationReport validate(const RealizationResult& result, const Itinerary& itin);

struct PeriodicResult {
    PhasePoint fixed_point;
    double residual = 0.0;
    int newton_iterations = 0;
    int seed_blocks = 0;  // blocks of nested selection used for the seed
    double period = 0.0;  // in rescaled time
    double shift_sup_distance = 0.0;
    RealizationResult realization;  // one period from the fixed point
};

// Fixed point of the ell-block composed map for a profile with 6-periodic
// gaps and an ell-periodic itinerary. Damped Newton with finite-difference
// Jacobians (step 1e-7) seeded from realize_finite; on stall the seed is
// rebuilt from 2, 3, 4 times ell blocks before giving up.
PeriodicResult periodic_solution(const StepProfile& prof, const Itinerary& itin,
                                 const OdeOptions& opts = {});

}  // namespace nagumo
