#include <nagumo/cli.hpp>

#include <nagumo/errors.hpp>
#include <nagumo/parallel.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace nagumo {

namespace {

const char* to_string(LevelTag t) {
    switch (t) {
        case LevelTag::CenterPoint: return "center_point";
        case LevelTag::ClosedCycle: return "closed_cycle";
        case LevelTag::HomoclinicUnion: return "homoclinic_union";
        case LevelTag::HeteroclinicUnion: return "heteroclinic_union";
        case LevelTag::InnerArc: return "inner_arc";
        case LevelTag::SaddleManifoldUnion: return "saddle_manifold_union";
        case LevelTag::TwoOuterCurves: return "two_outer_curves";
        case LevelTag::Empty: return "empty";
    }
    return "?";
}

const char* to_string(ACase c) {
    switch (c) {
        case ACase::BelowHalf: return "below_half";
        case ACase::EqualHalf: return "equal_half";
        case ACase::AboveHalf: return "above_half";
    }
    return "?";
}

std::string join(const std::string& dir, const std::string& name) { return dir + "/" + name; }

/* --- config echo --- */

Json point_json(PhasePoint p) {
    Json j = Json::object();
    j.set_num("x", p.x);
    j.set_num("y", p.y);
    return j;
}

Json config_json(const RunConfig& cfg, double resolved_epsilon) {
    Json j = Json::object();
    j.set_num("a_minus", cfg.a_minus);
    j.set_num("a_plus", cfg.a_plus);
    j.set_num("delta", cfg.delta);
    if (cfg.uniform) {
        j.set_str("switch_ladder", "uniform");
        if (cfg.k_range_given) {
            j.set_int("k_lo", cfg.k_lo);
            j.set_int("k_hi", cfg.k_hi);
        }
    } else {
        j.set_str("switch_ladder", "explicit");
        j.set_int("k_first", cfg.k_first);
        Json sw = Json::array();
        for (double s : cfg.switch_s) sw.push_num(s);
        j.set("switch_s", std::move(sw));
    }
    j.set_str("epsilon_spec", cfg.epsilon_auto ? "auto" : g17(cfg.epsilon));
    if (cfg.epsilon_auto) j.set_num("auto_fraction", cfg.auto_fraction);
    j.set_num("epsilon", resolved_epsilon);
    j.set_int("m", cfg.m);
    Json itin = Json::array();
    for (const auto& [np, nm] : cfg.itinerary) {
        Json b = Json::array();
        b.push(Json::integer(np));
        b.push(Json::integer(nm));
        itin.push(std::move(b));
    }
    j.set("itinerary", std::move(itin));
    j.set_int("ell", cfg.ell);
    j.set_str("kind", cfg.kind);
    Json po = Json::object();
    {
        Json as = Json::array();
        for (double a : cfg.portrait_a) as.push_num(a);
        po.set("a", std::move(as));
        po.set_int("levels", cfg.portrait_levels);
        po.set_num("x_lo", cfg.portrait_x_lo);
        po.set_num("x_hi", cfg.portrait_x_hi);
        po.set_int("samples", cfg.portrait_samples);
    }
    j.set("portrait", std::move(po));
    Json ve = Json::object();
    ve.set_int("n_twist", cfg.n_twist);
    ve.set_num("margin", cfg.margin);
    ve.set_int("path_budget", cfg.path_budget);
    ve.set_bool("composition", cfg.include_composition);
    ve.set_bool("control", cfg.control_below_threshold);
    j.set("verify", std::move(ve));
    Json ode = Json::object();
    ode.set_num("rtol", cfg.ode.rtol);
    ode.set_num("atol", cfg.ode.atol);
    ode.set_num("h_init", cfg.ode.h_init);
    ode.set_num("h_max", cfg.ode.h_max);
    ode.set_int("max_steps", cfg.ode.max_steps);
    j.set("ode", std::move(ode));
    j.set_int("seed", cfg.seed);
    return j;
}

Json thresholds_json(const Thresholds& th, int m_cap) {
    Json j = Json::object();
    j.set_num("t1_star", th.t1_star);
    j.set_num("period_plus", th.period_plus);
    j.set_num("period_minus", th.period_minus);
    Json t2 = Json::array();
    for (int n = 1; n <= m_cap; ++n) t2.push_num(th.t2_star(n));
    j.set("t2_star", std::move(t2));
    j.set_num("tau", th.tau);
    j.set_num("tau_prime", th.tau_prime);
    j.set_num("x_star", th.x_star);
    j.set_num("x_star2", th.x_star2);
    j.set_num("x1", th.x1);
    j.set_num("x2", th.x2);
    return j;
}

Json turns_json(const std::vector<BlockTurns>& turns) {
    Json arr = Json::array();
    for (const BlockTurns& bt : turns) {
        Json j = Json::object();
        j.set_int("requested_plus", bt.requested_plus);
        j.set_int("achieved_plus", bt.achieved_plus);
        j.set_int("requested_minus", bt.requested_minus);
        j.set_int("achieved_minus", bt.achieved_minus);
        j.set_bool("ok", bt.ok());
        arr.push(std::move(j));
    }
    return arr;
}

Json membership_json(const std::vector<Containment>& ms) {
    Json arr = Json::array();
    for (Containment c : ms) arr.push(Json::str(to_string(c)));
    return arr;
}

Json validation_json(const ValidationReport& v) {
    Json j = Json::object();
    j.set_bool("passed", v.passed);
    j.set_bool("turns_ok", v.turns_ok);
    j.set_bool("strip_ok", v.strip_ok);
    j.set_bool("membership_ok", v.membership_ok);
    j.set_num("x_min", v.x_min);
    j.set_num("x_max", v.x_max);
    j.set("turns", turns_json(v.turns));
    j.set_str("note", v.note);
    return j;
}

Json tail_json(const TailFit& t) {
    Json j = Json::object();
    j.set_num("end_distance", t.end_distance);
    j.set_num("decay_exponent", t.decay_exponent);
    j.set_num("expected_exponent", t.expected_exponent);
    j.set_int("zero_count", t.zero_count);
    j.set_bool("monotone", t.monotone);
    j.set_num("fit_t_lo", t.fit_t_lo);
    j.set_num("fit_t_hi", t.fit_t_hi);
    return j;
}

Json stretch_report_json(const StretchReport& r) {
    Json j = Json::object();
    j.set_str("relation", r.relation);
    j.set_int("crossing_number", r.crossing_number);
    j.set_bool("passed", r.passed);
    Json paths = Json::array();
    for (const PathWitness& pw : r.paths) {
        Json p = Json::object();
        p.set_num("fraction", pw.fraction);
        p.set_bool("ok", pw.ok);
        Json cs = Json::array();
        for (const CrossingWitness& cw : pw.crossings) {
            Json c = Json::object();
            c.set_num("s_enter", static_cast<double>(cw.s_enter));
            c.set_num("s_exit", static_cast<double>(cw.s_exit));
            c.set_str("enter_side", cw.enter_side);
            c.set_str("exit_side", cw.exit_side);
            c.set_int("winding_class", cw.winding_class);
            c.set_num("theta_final", cw.theta_final);
            cs.push(std::move(c));
        }
        p.set("crossings", std::move(cs));
        p.set_str("note", pw.note);
        paths.push(std::move(p));
    }
    j.set("paths", std::move(paths));
    return j;
}

Json profile_json(const StepProfile& prof) {
    Json j = Json::object();
    j.set_num("a_minus", prof.a_minus);
    j.set_num("a_plus", prof.a_plus);
    j.set_num("epsilon", prof.epsilon);
    j.set_num("delta", prof.delta);
    j.set_int("k_lo", prof.k_lo());
    j.set_int("k_hi", prof.k_hi());
    Json sw = Json::array();
    for (double s : prof.switch_s) sw.push_num(s);
    j.set("switch_s", std::move(sw));
    return j;
}

/* --- level-set polylines on an x-grid --- */

std::vector<PlanarPath> level_branches(SystemParams sys, double c, double x_lo, double x_hi,
                                       int n, int sign) {
    auto head = [&](double x) { return c - potential(sys, x); };
    std::vector<PlanarPath> out;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = x_lo + (x_hi - x_lo) * i / (n - 1);

    int i = 0;
    while (i < n) {
        while (i < n && head(xs[static_cast<std::size_t>(i)]) < 0.0) ++i;
        if (i >= n) break;
        const int run_lo = i;
        while (i < n && head(xs[static_cast<std::size_t>(i)]) >= 0.0) ++i;
        const int run_hi = i - 1;  // inclusive

        // refine the boundary abscissas where the head vanishes
        double xa = xs[static_cast<std::size_t>(run_lo)];
        if (run_lo > 0) {
            double lo = xs[static_cast<std::size_t>(run_lo - 1)], hi = xa;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (head(mid) < 0.0 ? lo : hi) = mid;
            }
            xa = hi;
        }
        double xb = xs[static_cast<std::size_t>(run_hi)];
        if (run_hi + 1 < n) {
            double lo = xb, hi = xs[static_cast<std::size_t>(run_hi + 1)];
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                (head(mid) >= 0.0 ? lo : hi) = mid;
            }
            xb = lo;
        }
        if (!(xb > xa)) continue;  // tangency: a single point, nothing to draw

        PlanarPath path;
        auto add = [&](double x) {
            const double h = std::max(head(x), 0.0);
            path.s.push_back(static_cast<long double>((x - xa) / (xb - xa)));
            path.pts.push_back({x, sign * std::sqrt(2.0 * h)});
        };
        add(xa);
        for (int k = run_lo; k <= run_hi; ++k) {
            const double x = xs[static_cast<std::size_t>(k)];
            if (x > xa && x < xb) add(x);
        }
        add(xb);
        if (path.pts.size() >= 2) out.push_back(std::move(path));
    }
    return out;
}

}  // namespace

/* ------------------------------------------------------------------ */
/*  config loading                                                      */
/* ------------------------------------------------------------------ */

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open config file " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw DomainError("config parse failure in " + path + ": " + e.what());
    }

    RunConfig c;
    try {
        if (j.contains("a_minus")) c.a_minus = j.at("a_minus").get<double>();
        if (j.contains("a_plus")) c.a_plus = j.at("a_plus").get<double>();
        if (j.contains("delta")) c.delta = j.at("delta").get<double>();
        if (j.contains("switch_s")) {
            c.uniform = false;
            c.switch_s = j.at("switch_s").get<std::vector<double>>();
            c.k_first = j.value("k_first", 0LL);
        }
        if (j.contains("k_lo") || j.contains("k_hi")) {
            c.k_range_given = true;
            c.k_lo = j.value("k_lo", 0LL);
            c.k_hi = j.value("k_hi", 6LL);
        }
        if (j.contains("epsilon")) {
            if (j.at("epsilon").is_string()) {
                if (j.at("epsilon").get<std::string>() != "auto")
                    throw DomainError("epsilon must be a number or \"auto\"");
                c.epsilon_auto = true;
            } else {
                c.epsilon_auto = false;
                c.epsilon = j.at("epsilon").get<double>();
            }
        }
        if (j.contains("auto_fraction")) c.auto_fraction = j.at("auto_fraction").get<double>();
        if (j.contains("m")) c.m = j.at("m").get<int>();
        if (j.contains("itinerary")) {
            for (const auto& b : j.at("itinerary")) {
                if (!b.is_array() || b.size() != 2)
                    throw DomainError("itinerary entries must be [n_plus, n_minus] pairs");
                c.itinerary.emplace_back(b.at(0).get<int>(), b.at(1).get<int>());
            }
        }
        if (j.contains("ell")) c.ell = j.at("ell").get<int>();
        if (j.contains("kind")) c.kind = j.at("kind").get<std::string>();
        if (j.contains("portrait")) {
            const auto& p = j.at("portrait");
            if (p.contains("a")) c.portrait_a = p.at("a").get<std::vector<double>>();
            c.portrait_levels = p.value("levels", c.portrait_levels);
            c.portrait_x_lo = p.value("x_lo", c.portrait_x_lo);
            c.portrait_x_hi = p.value("x_hi", c.portrait_x_hi);
            c.portrait_samples = p.value("samples", c.portrait_samples);
        }
        if (j.contains("verify")) {
            const auto& v = j.at("verify");
            c.n_twist = v.value("n_twist", c.n_twist);
            c.margin = v.value("margin", c.margin);
            c.path_budget = v.value("path_budget", c.path_budget);
            c.include_composition = v.value("composition", c.include_composition);
            c.control_below_threshold = v.value("control", c.control_below_threshold);
        }
        if (j.contains("ode")) {
            const auto& o = j.at("ode");
            c.ode.rtol = o.value("rtol", c.ode.rtol);
            c.ode.atol = o.value("atol", c.ode.atol);
            c.ode.h_init = o.value("h_init", c.ode.h_init);
            c.ode.h_max = o.value("h_max", c.ode.h_max);
            c.ode.max_steps = o.value("max_steps", c.ode.max_steps);
        }
        if (j.contains("seed")) c.seed = j.at("seed").get<long long>();
    } catch (const DomainError&) {
        throw;
    } catch (const std::exception& e) {
        throw DomainError("config field error in " + path + ": " + e.what());
    }

    if (!(c.delta > 0.0)) throw DomainError("delta must be positive");
    if (c.m < 1) throw DomainError("m must be at least 1");
    if (!(c.auto_fraction > 0.0 && c.auto_fraction <= 1.0))
        throw DomainError("auto_fraction must lie in (0, 1]");
    if (!c.epsilon_auto && !(c.epsilon > 0.0)) throw DomainError("epsilon must be positive");
    if (c.kind != "heteroclinic" && c.kind != "homoclinic")
        throw DomainError("kind must be \"heteroclinic\" or \"homoclinic\"");
    if (c.portrait_a.empty()) throw DomainError("portrait needs at least one weight");
    if (c.portrait_samples < 16) throw DomainError("portrait sample count is too small");
    if (c.portrait_levels < 1) throw DomainError("portrait needs at least one level");
    if (!(c.portrait_x_hi > c.portrait_x_lo)) throw DomainError("portrait x-range is empty");
    if (c.path_budget < 1) throw DomainError("path_budget must be at least 1");
    if (!(c.margin > 0.0)) throw DomainError("margin must be positive");
    if (c.n_twist < 1) throw DomainError("n_twist must be at least 1");
    if (c.ell < 1) throw DomainError("ell must be at least 1");
    return c;
}

/* ------------------------------------------------------------------ */
/*  derived quantities                                                  */
/* ------------------------------------------------------------------ */

Thresholds canonical_thresholds(double a_minus, double a_plus, bool with_connection) {
    const PairParams pair(a_minus, a_plus);
    RectConstants c = choose_p(pair);
    const double t1 = t1_star(pair, c);
    c = compute_q(pair, c, t1);
    Thresholds th = compute_thresholds(pair, c);
    if (with_connection) {
        const GraphWindows gw = graph_window(a_minus, a_plus);
        add_connection_thresholds(th, pair, c, gw.a_minus_0, gw.a_plus_1);
    }
    return th;
}

double resolve_epsilon(const RunConfig& cfg, ThresholdMode mode) {
    if (!cfg.epsilon_auto) return cfg.epsilon;
    const Thresholds th =
        canonical_thresholds(cfg.a_minus, cfg.a_plus, mode == ThresholdMode::Connection);
    return cfg.auto_fraction * eps_star(th, cfg.m, cfg.delta, mode);
}

StepProfile profile_from(const RunConfig& cfg, double epsilon, long k_lo, long k_hi) {
    if (!cfg.uniform)
        return StepProfile(cfg.a_minus, cfg.a_plus, cfg.switch_s, cfg.k_first, cfg.delta,
                           epsilon);
    long lo = k_lo, hi = k_hi;
    if (cfg.k_range_given) {
        lo = std::min(lo, cfg.k_lo);
        hi = std::max(hi, cfg.k_hi);
    }
    return StepProfile::uniform(cfg.a_minus, cfg.a_plus, cfg.delta, epsilon, lo, hi);
}

/* ------------------------------------------------------------------ */
/*  commands                                                            */
/* ------------------------------------------------------------------ */

int cmd_portrait(const RunConfig& cfg, const std::string& out_dir) {
    Json rep = Json::object();
    rep.set_int("schema_version", kSchemaVersion);
    rep.set_str("command", "portrait");
    rep.set("config", config_json(cfg, std::numeric_limits<double>::quiet_NaN()));

    Json weights = Json::array();
    for (std::size_t wi = 0; wi < cfg.portrait_a.size(); ++wi) {
        const SystemParams sys{cfg.portrait_a[wi]};
        const CriticalLevels cl = critical_levels(sys);

        // level grid: the three critical levels plus an even spread from the
        // center well up past the higher saddle
        const double lo = cl.center;
        const double hi = std::max(cl.saddle0, cl.saddle1);
        const double hi_ext = hi + 0.2 * (hi - lo);
        std::vector<double> levels{cl.center, cl.saddle0, cl.saddle1};
        for (int i = 0; i < cfg.portrait_levels; ++i)
            levels.push_back(lo + (hi_ext - lo) * (i + 1) /
                             (cfg.portrait_levels + 1.0));
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end(),
                                 [](double a, double b) { return std::fabs(a - b) < 1e-15; }),
                     levels.end());

        // render every level on the grid; pure map, one slot per level
        struct Rendered {
            std::vector<std::string> files;
            std::vector<std::string> bodies;
        };
        std::vector<Rendered> slots(levels.size());
        par_for(
            levels.size(),
            [&](std::size_t li) {
                char tagbuf[64];
                for (int sign : {+1, -1}) {
                    const auto branches =
                        level_branches(sys, levels[li], cfg.portrait_x_lo, cfg.portrait_x_hi,
                                       cfg.portrait_samples, sign);
                    for (std::size_t b = 0; b < branches.size(); ++b) {
                        std::snprintf(tagbuf, sizeof tagbuf, "a%zu_level%02zu_%s%zu.csv", wi,
                                      li, sign > 0 ? "upper" : "lower", b);
                        slots[li].files.emplace_back(tagbuf);
                        slots[li].bodies.push_back(planar_path_csv(branches[b]));
                    }
                }
            },
            openmp_compiled() ? Exec::OpenMP : Exec::Serial);

        Json wj = Json::object();
        wj.set_num("a", cfg.portrait_a[wi]);
        wj.set_num("center_level", cl.center);
        wj.set_num("saddle0_level", cl.saddle0);
        wj.set_num("saddle1_level", cl.saddle1);
        Json lv = Json::array();
        for (std::size_t li = 0; li < levels.size(); ++li) {
            const LevelClass lc = classify_level(sys, levels[li]);
            Json l = Json::object();
            l.set_num("c", levels[li]);
            l.set_str("tag", to_string(lc.tag));
            l.set_str("a_case", to_string(lc.acase));
            Json files = Json::array();
            for (std::size_t f = 0; f < slots[li].files.size(); ++f) {
                files.push(Json::str(slots[li].files[f]));
                save_file(join(out_dir, slots[li].files[f]), slots[li].bodies[f]);
            }
            l.set("files", std::move(files));
            lv.push(std::move(l));
        }
        wj.set("levels", std::move(lv));
        weights.push(std::move(wj));
    }
    rep.set("weights", std::move(weights));
    save_file(join(out_dir, "portrait.json"), rep.dump());
    return 0;
}

int cmd_thresholds(const RunConfig& cfg, const std::string& out_dir) {
    const PairParams pair(cfg.a_minus, cfg.a_plus);
    RectConstants c = choose_p(pair);
    const double t1 = t1_star(pair, c);
    c = compute_q(pair, c, t1);
    Thresholds th = compute_thresholds(pair, c);
    const GraphWindows gw = graph_window(cfg.a_minus, cfg.a_plus);
    Thresholds thc = th;
    add_connection_thresholds(thc, pair, c, gw.a_minus_0, gw.a_plus_1);

    Json rep = Json::object();
    rep.set_int("schema_version", kSchemaVersion);
    rep.set_str("command", "thresholds");
    rep.set("config", config_json(cfg, std::numeric_limits<double>::quiet_NaN()));
    Json pj = Json::object();
    pj.set_num("z_minus", homoclinic_apex(pair.minus));
    pj.set_num("z_plus", homoclinic_apex(pair.plus));
    pj.set_bool("linked", linked(pair.minus, pair.plus));
    pj.set_num("p_minus", c.p_minus);
    pj.set_num("p_plus", c.p_plus);
    pj.set_num("q_plus", c.q_plus);
    pj.set_num("q_minus", c.q_minus);
    rep.set("pair", std::move(pj));
    rep.set("thresholds", thresholds_json(thc, cfg.m));
    Json wj = Json::object();
    wj.set_num("a_minus_0", gw.a_minus_0);
    wj.set_num("a_plus_1", gw.a_plus_1);
    rep.set("graph_windows", std::move(wj));

    Json ec = Json::array(), en = Json::array();
    for (int m = 1; m <= cfg.m; ++m) {
        ec.push_num(eps_star(th, m, cfg.delta, ThresholdMode::Chaos));
        en.push_num(eps_star(thc, m, cfg.delta, ThresholdMode::Connection));
    }
    rep.set("eps_star_chaos", std::move(ec));
    rep.set("eps_star_connection", std::move(en));
    save_file(join(out_dir, "thresholds.json"), rep.dump());
    return 0;
}

int cmd_verify_stretch(const RunConfig& cfg, const std::string& out_dir) {
    const PairParams pair(cfg.a_minus, cfg.a_plus);
    const RelationSet rs = standard_relations(pair, cfg.n_twist, cfg.margin, cfg.ode);

    Json rep = Json::object();
    rep.set_int("schema_version", kSchemaVersion);
    rep.set_str("command", "verify-stretch");
    rep.set("config", config_json(cfg, std::numeric_limits<double>::quiet_NaN()));
    rep.set("thresholds", thresholds_json(rs.thresholds, cfg.m));
    rep.set_num("t1_used", rs.t1);
    rep.set_num("t2_used", rs.t2);

    bool all_passed = true;
    Json rels = Json::array();
    for (const StretchProblem& prob : rs.stages) {
        const StretchReport r = verify_stretch(prob, cfg.path_budget, cfg.ode);
        all_passed = all_passed && r.passed;
        rels.push(stretch_report_json(r));
    }
    rep.set("relations", std::move(rels));
    rep.set_bool("all_passed", all_passed);

    if (cfg.include_composition) {
        // transfer into the a_plus annulus followed by its twist: composed
        // crossing number 1 * n_twist through the intermediate rectangle
        const StretchReport r =
            verify_composition(rs.stages[0], rs.stages[1], cfg.path_budget, cfg.ode);
        rep.set("composition", stretch_report_json(r));
    }

    if (cfg.control_below_threshold) {
        Json ctrl = Json::object();
        try {
            const RelationSet low = standard_relations(pair, 1, 0.5, cfg.ode);
            const StretchReport r = verify_stretch(low.stages[0], cfg.path_budget, cfg.ode);
            ctrl.set_bool("completed", true);
            ctrl.set("report", stretch_report_json(r));
        } catch (const Error& e) {
            // below-threshold durations may fail before the crossing search
            // even starts (no admissible q); that is the expected outcome
            ctrl.set_bool("completed", false);
            ctrl.set_str("note", e.what());
        }
        rep.set("control", std::move(ctrl));
    }

    save_file(join(out_dir, "verify_stretch.json"), rep.dump());
    return 0;
}

int cmd_chaos(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.itinerary.empty())
        throw DomainError("chaos needs a nonempty itinerary (list of [n_plus, n_minus])");
    const Itinerary itin(cfg.itinerary, cfg.m);
    const double eps = resolve_epsilon(cfg, ThresholdMode::Chaos);
    const StepProfile prof = profile_from(cfg, eps, 0, 6L * itin.k_blocks());

    const RealizationResult rr = realize_finite(prof, itin, cfg.ode);
    const ValidationReport vr = validate(rr, itin);

    Json rep = Json::object();
    rep.set_int("schema_version", kSchemaVersion);
    rep.set_str("command", "chaos");
    rep.set("config", config_json(cfg, eps));
    rep.set("profile", profile_json(prof));
    rep.set("thresholds",
            thresholds_json(canonical_thresholds(cfg.a_minus, cfg.a_plus, false), cfg.m));
    Json res = Json::object();
    res.set("initial_point", point_json(rr.initial_point));
    res.set_num("t_begin", rr.t_begin);
    res.set_num("t_end", rr.t_end);
    res.set_num("window_lo", static_cast<double>(rr.window_lo));
    res.set_num("window_hi", static_cast<double>(rr.window_hi));
    res.set("turns", turns_json(rr.turns));
    res.set("entry_membership", membership_json(rr.entry_membership));
    rep.set("realization", std::move(res));
    rep.set("validation", validation_json(vr));
    Json files = Json::array();
    files.push(Json::str("trajectory.csv"));
    files.push(Json::str("final_curve.csv"));
    rep.set("files", std::move(files));

    save_file(join(out_dir, "trajectory.csv"), trajectory_csv(rr.trajectory));
    save_file(join(out_dir, "final_curve.csv"), planar_path_csv(rr.final_curve));
    save_file(join(out_dir, "realization.json"), rep.dump());
    return 0;
}

int cmd_connect(const RunConfig& cfg, const std::string& out_dir) {
    const Itinerary itin(cfg.itinerary, cfg.m);
    const double eps = resolve_epsilon(cfg, ThresholdMode::Connection);
    const long k_exit = 6L * itin.k_blocks();
    const StepProfile prof = profile_from(cfg, eps, -1, k_exit + 1);
    const ConnectionKind kind = (cfg.kind == "homoclinic") ? ConnectionKind::Homoclinic
                                                           : ConnectionKind::Heteroclinic;

    const ConnectionResult cr = connect(prof, itin, kind, cfg.ode);

    // section curves for plotting: the unstable continuum at t(-1) and the
    // stable one at t(6K+1), as built inside the solver
    const double window_l =
        20.0 / std::sqrt(std::min(cfg.a_minus, 1.0 - cfg.a_plus));
    const ManifoldGraph ung = unstable_continuum(prof, prof.t(-1), 0, window_l, cfg.ode);
    const ManifoldGraph stg = stable_continuum(
        prof, prof.t(k_exit + 1), kind == ConnectionKind::Heteroclinic ? 1 : 0, window_l,
        cfg.ode);

    Json rep = Json::object();
    rep.set_int("schema_version", kSchemaVersion);
    rep.set_str("command", "connect");
    rep.set("config", config_json(cfg, eps));
    rep.set("profile", profile_json(prof));
    rep.set("thresholds", thresholds_json(cr.thresholds, cfg.m));
    Json res = Json::object();
    res.set_str("kind", cfg.kind);
    res.set("point_at_t0", point_json(cr.point_at_t0));
    res.set_num("sigma_seed", static_cast<double>(cr.sigma_seed));
    res.set_num("intersection_residual", cr.intersection_residual);
    res.set_int("exit_gap_zeros", cr.exit_gap_zeros);
    res.set("backward_tail", tail_json(cr.backward_tail));
    res.set("forward_tail", tail_json(cr.forward_tail));
    res.set("turns", turns_json(cr.realization.turns));
    res.set("entry_membership", membership_json(cr.realization.entry_membership));
    res.set_num("orbit_t_begin", cr.orbit.t_begin());
    res.set_num("orbit_t_end", cr.orbit.t_end());
    rep.set("result", std::move(res));
    Json mg = Json::object();
    mg.set_num("unstable_localization_defect", ung.max_localization_defect);
    mg.set_num("stable_localization_defect", stg.max_localization_defect);
    mg.set_num("unstable_x_hi", ung.x_hi);
    mg.set_num("stable_x_lo", stg.x_lo);
    mg.set_num("stable_x_hi", stg.x_hi);
    rep.set("continua", std::move(mg));
    Json files = Json::array();
    files.push(Json::str("orbit.csv"));
    files.push(Json::str("unstable_curve.csv"));
    files.push(Json::str("stable_curve.csv"));
    files.push(Json::str("final_curve.csv"));
    rep.set("files", std::move(files));

    save_file(join(out_dir, "orbit.csv"), trajectory_csv(cr.orbit));
    save_file(join(out_dir, "unstable_curve.csv"), planar_path_csv(ung.curve));
    save_file(join(out_dir, "stable_curve.csv"), planar_path_csv(stg.curve));
    save_file(join(out_dir, "final_curve.csv"), planar_path_csv(cr.realization.final_curve));
    save_file(join(out_dir, "connection.json"), rep.dump());
    return 0;
}

/* ------------------------------------------------------------------ */
/*  dispatch                                                            */
/* ------------------------------------------------------------------ */

int run_command(const std::string& name, const std::string& config_path,
                const std::string& out_dir) {
    try {
        const RunConfig cfg = load_config(config_path);
        if (name == "portrait") return cmd_portrait(cfg, out_dir);
        if (name == "thresholds") return cmd_thresholds(cfg, out_dir);
        if (name == "verify-stretch") return cmd_verify_stretch(cfg, out_dir);
        if (name == "chaos") return cmd_chaos(cfg, out_dir);
        if (name == "connect") return cmd_connect(cfg, out_dir);
        throw DomainError("unknown command " + name);
    } catch (const DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}

}  // namespace nagumo
