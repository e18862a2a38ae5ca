#include <doctest.h>

#include <nagumo/cli.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace nagumo;
namespace fs = std::filesystem;

namespace {

const char* kTmp = "cli_test_tmp";

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_config(const std::string& name, const std::string& body) {
    const std::string path = std::string(kTmp) + "/" + name;
    save_file(path, body);
    return path;
}

}  // namespace

TEST_CASE("config loading: fields, defaults, validation") {
    fs::remove_all(kTmp);

    const std::string path = write_config("full.json", R"({
        "a_minus": 0.3, "a_plus": 0.7, "delta": 2.0,
        "epsilon": 0.05, "m": 2,
        "itinerary": [[1, 2], [2, 1]],
        "kind": "homoclinic",
        "portrait": {"a": [0.3, 0.5], "levels": 4, "samples": 101},
        "verify": {"n_twist": 2, "margin": 1.2, "path_budget": 3,
                   "composition": true, "control": true},
        "ode": {"rtol": 1e-11, "max_steps": 1000},
        "seed": 42
    })");
    const RunConfig cfg = load_config(path);
    CHECK(cfg.a_minus == 0.3);
    CHECK(cfg.a_plus == 0.7);
    CHECK(cfg.delta == 2.0);
    CHECK_FALSE(cfg.epsilon_auto);
    CHECK(cfg.epsilon == 0.05);
    CHECK(cfg.m == 2);
    REQUIRE(cfg.itinerary.size() == 2);
    CHECK(cfg.itinerary[1].first == 2);
    CHECK(cfg.kind == "homoclinic");
    CHECK(cfg.portrait_a.size() == 2);
    CHECK(cfg.portrait_levels == 4);
    CHECK(cfg.n_twist == 2);
    CHECK(cfg.include_composition);
    CHECK(cfg.ode.rtol == 1e-11);
    CHECK(cfg.ode.max_steps == 1000);
    CHECK(cfg.seed == 42);
    CHECK(cfg.uniform);  // no explicit switch ladder given

    // defaults and the "auto" epsilon spelling
    const RunConfig d = load_config(write_config("auto.json", R"({"epsilon": "auto"})"));
    CHECK(d.epsilon_auto);
    CHECK(d.a_minus == 0.4);
    CHECK(d.a_plus == 0.6);
    CHECK(d.m == 3);

    const RunConfig ex = load_config(write_config("explicit.json", R"({
        "switch_s": [0.0, 1.0, 2.5], "k_first": -1, "epsilon": 0.1, "delta": 1.0
    })"));
    CHECK_FALSE(ex.uniform);
    CHECK(ex.k_first == -1);
    REQUIRE(ex.switch_s.size() == 3);

    CHECK_THROWS_AS(load_config(std::string(kTmp) + "/missing.json"), DomainError);
    CHECK_THROWS_AS(load_config(write_config("broken.json", "{ nope")), DomainError);
    CHECK_THROWS_AS(load_config(write_config("badkind.json", R"({"kind": "saddle"})")),
                    DomainError);
    CHECK_THROWS_AS(load_config(write_config("baddelta.json", R"({"delta": -1})")),
                    DomainError);
    CHECK_THROWS_AS(load_config(write_config("badeps.json", R"({"epsilon": "later"})")),
                    DomainError);
    CHECK_THROWS_AS(load_config(write_config("badit.json", R"({"itinerary": [[1]]})")),
                    DomainError);
}

TEST_CASE("epsilon resolution and profile construction") {
    RunConfig cfg;
    cfg.epsilon_auto = false;
    cfg.epsilon = 0.033;
    CHECK(resolve_epsilon(cfg, ThresholdMode::Chaos) == 0.033);

    cfg.epsilon_auto = true;
    cfg.auto_fraction = 0.9;
    cfg.m = 2;
    const double eps = resolve_epsilon(cfg, ThresholdMode::Chaos);
    const Thresholds th = canonical_thresholds(0.4, 0.6, false);
    CHECK(eps == doctest::Approx(0.9 * eps_star(th, 2, 1.0, ThresholdMode::Chaos))
                     .epsilon(1e-15));
    CHECK(eps > 0.0);
    CHECK(eps < 0.1);

    // uniform profiles cover the requested switch range, widened by the
    // config's explicit window when one was given
    const StepProfile p1 = profile_from(cfg, 0.05, 0, 12);
    CHECK(p1.k_lo() == 0);
    CHECK(p1.k_hi() == 12);
    cfg.k_range_given = true;
    cfg.k_lo = -2;
    cfg.k_hi = 3;
    const StepProfile p2 = profile_from(cfg, 0.05, 0, 12);
    CHECK(p2.k_lo() == -2);
    CHECK(p2.k_hi() == 12);
}

TEST_CASE("threshold and portrait commands are deterministic on disk") {
    const std::string cfg = write_config("thr.json", R"({
        "a_minus": 0.4, "a_plus": 0.6, "m": 2,
        "portrait": {"a": [0.5], "levels": 3, "samples": 101}
    })");

    const std::string out_a = std::string(kTmp) + "/thr_a";
    const std::string out_b = std::string(kTmp) + "/thr_b";
    REQUIRE(run_command("thresholds", cfg, out_a) == 0);
    REQUIRE(run_command("thresholds", cfg, out_b) == 0);
    const std::string ja = slurp(out_a + "/thresholds.json");
    CHECK(ja == slurp(out_b + "/thresholds.json"));
    CHECK(ja.find("\"schema_version\": 1") != std::string::npos);
    CHECK(ja.find("\"t1_star\"") != std::string::npos);
    CHECK(ja.find("\"eps_star_chaos\"") != std::string::npos);
    CHECK(ja.find("\"tau\"") != std::string::npos);

    const std::string po_a = std::string(kTmp) + "/po_a";
    const std::string po_b = std::string(kTmp) + "/po_b";
    REQUIRE(run_command("portrait", cfg, po_a) == 0);
    REQUIRE(run_command("portrait", cfg, po_b) == 0);
    const std::string pj = slurp(po_a + "/portrait.json");
    CHECK(pj == slurp(po_b + "/portrait.json"));
    CHECK(pj.find("heteroclinic_union") != std::string::npos);  // a = 0.5 saddle level

    // at least one polyline file was written and starts with the CSV header
    bool found_csv = false;
    for (const auto& e : fs::directory_iterator(po_a)) {
        if (e.path().extension() == ".csv") {
            found_csv = true;
            CHECK(slurp(e.path().string()).rfind("x,y\n", 0) == 0);
            break;
        }
    }
    CHECK(found_csv);
}

TEST_CASE("exit codes: validation failures and numerical failures") {
    // missing config file
    CHECK(run_command("thresholds", std::string(kTmp) + "/none.json",
                      std::string(kTmp) + "/x") == 2);
    // unknown command
    const std::string cfg = write_config("min.json", R"({"m": 1})");
    CHECK(run_command("frobnicate", cfg, std::string(kTmp) + "/x") == 2);
    // chaos without an itinerary
    CHECK(run_command("chaos", cfg, std::string(kTmp) + "/x") == 2);
    // a step budget far too small for the q recipe integration
    const std::string starved = write_config("starved.json", R"({
        "verify": {"n_twist": 1, "path_budget": 1},
        "ode": {"max_steps": 50}
    })");
    CHECK(run_command("verify-stretch", starved, std::string(kTmp) + "/x") == 3);
}
