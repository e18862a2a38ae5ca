#pragma once

// Threshold durations for the rectangle construction, the smallness
// threshold eps*(M), and witness-based verification of the stretching
// relations between oriented rectangles (including twist relations with
// winding classes).

#include <nagumo/flow.hpp>
#include <nagumo/regions.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace nagumo {

enum class ThresholdMode { Chaos, Connection };

struct Thresholds {
    double t1_star = 0.0;
    double period_plus = 0.0;   // closed orbit of S(a_plus) through (q_plus, 0)
    double period_minus = 0.0;  // closed orbit of S(a_minus) through (q_minus, 0)

    // Connection-mode transit bounds; NaN until add_connection_thresholds.
    double tau = std::numeric_limits<double>::quiet_NaN();
    double tau_prime = std::numeric_limits<double>::quiet_NaN();
    double x_star = std::numeric_limits<double>::quiet_NaN();   // H(a-) meets the p_plus orbit
    double x_star2 = std::numeric_limits<double>::quiet_NaN();  // H(a+) meets the p_minus orbit
    double x1 = std::numeric_limits<double>::quiet_NaN();       // min{x_star, graph window}
    double x2 = std::numeric_limits<double>::quiet_NaN();       // max{x_star2, graph window}

    // (N+1) twist round trips; the slower of the two annuli governs.
    double t2_star(int n) const;
};

// sqrt(2) * max of the two boundary-orbit transit integrals.
double t1_star(const PairParams& pair, const RectConstants& c);

// (N+1) full periods of the closed orbit through (q, 0).
double t2_star(SystemParams sys, double q, int n);

Thresholds compute_thresholds(const PairParams& pair, const RectConstants& c);

// Fills tau, tau_prime and the intersection abscissas. The window arguments
// are the graph-window endpoints a_minus^0 and a_plus^1. When the printed
// level F_{a+}(p+) dips below the reachable energies on [x1, 1] (possible
// when the graph window cuts in left of the turning point), the level is
// tightened to the potential gap at x1, which is the sharp bound the
// transit-time argument needs.
void add_connection_thresholds(Thresholds& t, const PairParams& pair, const RectConstants& c,
                               double window_minus0, double window_plus1);

// delta / max{T1*, T2*(M)} in chaos mode; the connection mode adds tau and
// tau_prime to the max. Throws DomainError if those are missing.
double eps_star(const Thresholds& t, int m, double delta, ThresholdMode mode);

/* ------------------------------------------------------------------ */
/*  stretching verification                                             */
/* ------------------------------------------------------------------ */

struct StretchProblem {
    std::string name;
    LegMap map;
    OrientedRect source;
    Across source_across = Across::Minus;
    OrientedRect target;
    Across target_across = Across::Minus;
    int crossing_number = 1;
    // Twist relations (crossing_number > 1) classify crossings by the final
    // lift angle around this center; mirrored_lift selects the lower-half
    // convention used for the R4 twist.
    std::optional<double> twist_center;
    bool mirrored_lift = false;
};

struct CrossingWitness {
    long double s_enter = 0.0L;
    long double s_exit = 0.0L;
    std::string enter_side;
    std::string exit_side;
    int winding_class = 0;      // j of the H_j bin; 0 when unclassified
    double theta_final = 0.0;   // lift angle at the end of the twist
};

struct PathWitness {
    double fraction = 0.5;
    bool ok = false;
    std::vector<CrossingWitness> crossings;
    std::string note;
};

// H_j bin of a final lift angle: theta in ((2j-1) pi, 2j pi) gives class j,
// anything else 0. Angles within 1e-8 rad of a bin edge raise
// InconclusiveError instead of being rounded either way.
int winding_class_of(double theta);

struct StretchReport {
    std::string relation;
    int crossing_number = 1;
    bool passed = false;
    std::vector<PathWitness> paths;
};

// For path_budget spanning paths of the source: maps them, finds the image
// sub-paths crossing the target between its designated sides, classifies by
// winding bin when crossing_number > 1, and requires one crossing in each
// class 1..N per path.
StretchReport verify_stretch(const StretchProblem& prob, int path_budget = 5,
                             const OdeOptions& opts = {});

// Composition check: verifies the composed map with crossing number
// N_ab * N_bc (disjoint crossing count) and additionally requires every
// witness to pass through the intermediate rectangle ab.target.
StretchReport verify_composition(const StretchProblem& ab, const StretchProblem& bc,
                                 int path_budget = 5, const OdeOptions& opts = {});

// The six relations of one switching block at demo durations
// T = margin * threshold, with the q constants computed at the transfer
// duration. Twist relations carry crossing number n_twist.
struct RelationSet {
    PairParams pair;
    RectConstants constants;
    Thresholds thresholds;
    double t1 = 0.0;  // transfer duration actually used
    double t2 = 0.0;  // twist duration actually used
    std::vector<OrientedRect> rects;     // R1..R4 in label order
    std::vector<StretchProblem> stages;  // size 6, in block order
};

RelationSet standard_relations(const PairParams& pair, int n_twist, double margin = 1.1,
                               const OdeOptions& opts = {});

}  // namespace nagumo
