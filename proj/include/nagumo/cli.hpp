#pragma once

// Configuration ingestion and the five command entry points. Each command
// loads one JSON config, resolves the derived quantities (epsilon = "auto",
// canonical thresholds), runs the requested computation and persists JSON
// and CSV outputs under an output directory. Commands throw on failure; the
// binary maps DomainError to exit code 2 and NumericalError to 3.

#include <nagumo/manifolds.hpp>
#include <nagumo/report.hpp>

#include <string>
#include <utility>
#include <vector>

namespace nagumo {

struct RunConfig {
    double a_minus = 0.4;
    double a_plus = 0.6;

    // Switch ladder: uniform gaps by default; an explicit "switch_s" list
    // (with "k_first") overrides it. The uniform k-range is normally derived
    // from the itinerary, but "k_lo"/"k_hi" may widen it.
    bool uniform = true;
    double delta = 1.0;
    bool k_range_given = false;
    long k_lo = 0, k_hi = 6;
    std::vector<double> switch_s;
    long k_first = 0;

    // Epsilon: a number, or "auto" for auto_fraction * eps_star(m) in the
    // mode the command works in.
    double epsilon = 0.0;
    bool epsilon_auto = true;
    double auto_fraction = 0.9;

    int m = 3;                                   // turn count cap
    std::vector<std::pair<int, int>> itinerary;  // (n_plus, n_minus) per block
    int ell = 1;                                 // blocks per period (periodic runs)

    std::string kind = "heteroclinic";  // connect: "heteroclinic" | "homoclinic"

    // portrait controls
    std::vector<double> portrait_a{0.4};
    int portrait_levels = 7;
    double portrait_x_lo = -0.25, portrait_x_hi = 1.25;
    int portrait_samples = 801;

    // verify-stretch controls
    int n_twist = 1;
    double margin = 1.1;
    int path_budget = 5;
    bool include_composition = false;
    bool control_below_threshold = false;

    OdeOptions ode;
    long long seed = 1;
};

RunConfig load_config(const std::string& path);

// The canonical threshold chain: p from the admissible midpoints, T1*, q at
// duration T1*, periods through (q, 0); connection data from the graph
// windows when requested. This is the published definition of eps_star; the
// realization engine recomputes q at the actual gap duration internally.
Thresholds canonical_thresholds(double a_minus, double a_plus, bool with_connection);

double resolve_epsilon(const RunConfig& cfg, ThresholdMode mode);

// Profile over switches k_lo..k_hi (uniform), or from the explicit ladder.
StepProfile profile_from(const RunConfig& cfg, double epsilon, long k_lo, long k_hi);

int cmd_portrait(const RunConfig& cfg, const std::string& out_dir);
int cmd_thresholds(const RunConfig& cfg, const std::string& out_dir);
int cmd_verify_stretch(const RunConfig& cfg, const std::string& out_dir);
int cmd_chaos(const RunConfig& cfg, const std::string& out_dir);
int cmd_connect(const RunConfig& cfg, const std::string& out_dir);

// Dispatch by subcommand name; returns the process exit code (0, 2 or 3).
int run_command(const std::string& name, const std::string& config_path,
                const std::string& out_dir);

}  // namespace nagumo
