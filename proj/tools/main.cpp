#include <nagumo/cli.hpp>

#include <CLI11.hpp>

#include <string>
#include <utility>

int main(int argc, char** argv) {
    CLI::App app{"Phase-plane toolkit for the bistable oscillator with a stepwise weight"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    const std::pair<const char*, const char*> cmds[] = {
        {"portrait", "Frozen-weight energy level sets as plot-ready polylines"},
        {"thresholds", "Duration thresholds, smallness bounds and pair constants"},
        {"verify-stretch", "Stretching certificates for the six block relations"},
        {"chaos", "Finite-itinerary realization inside the switching window"},
        {"connect", "Saddle connection selected by a finite itinerary"},
    };
    for (const auto& [name, desc] : cmds) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (created if missing)")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // bad usage is a validation error
    }
    return nagumo::run_command(app.get_subcommands().front()->get_name(), config_path, out_dir);
}
