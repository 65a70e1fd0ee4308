// rilab command line: one experiment per invocation.
//
//   rilab <experiment> [--config file] [--dim 3] [--u 1.0] ... [--out run.json]
//
// Exit codes: 0 success, 2 configuration error, 3 tolerance not achievable,
// 4 internal invariant violation.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rilab/experiments.hpp"

namespace {

struct Flag {
    const char* key;
    const char* name;
    const char* help;
};

const Flag kFlags[] = {
    {"dim", "--dim", "lattice dimension (3, 4 or 5)"},
    {"u", "--u", "intensity level"},
    {"levels", "--levels", "extra levels sharing the cloud, comma separated"},
    {"window", "--window", "L-infinity radius of the window"},
    {"windows", "--windows", "window radii (bk-audit) or box sides (isoperimetry-table)"},
    {"k", "--k", "K: point, pair, box:L, cube:r, ball:r, file:path; ';' separates several"},
    {"kprime", "--kprime", "K' radii, comma separated"},
    {"t", "--t", "trifurcation radii, comma separated"},
    {"replicas", "--replicas", "number of replicas"},
    {"seed", "--seed", "master seed"},
    {"tolerance_cap", "--tolerance-cap", "target width of capacity enclosures"},
    {"cap_radius_max", "--cap-radius-max", "largest box radius of the capacity solver"},
    {"bridge_tail", "--bridge-tail", "bridge-length tail tolerance"},
    {"horizon", "--horizon", "step cap of Monte Carlo escape walks (0: run to escape)"},
    {"field_format", "--field-format", "trace dump format: rle or coords"},
    {"out", "--out", "JSON output path (stdout when empty)"},
    {"csv", "--csv", "CSV output path for the row table"},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo lab for random interlacements on Z^d"};
    app.set_help_flag("-h,--help", "print this help");
    std::string experiment, config_file;
    bool timing = false, print_config = false, list = false;
    app.add_option("experiment", experiment, "experiment name (see --list)");
    app.add_option("--config", config_file, "flat key = value config file; flags override it");
    app.add_flag("--timing", timing, "record wall-clock seconds in the output (breaks byte determinism)");
    app.add_flag("--print-config", print_config, "print the effective config and exit");
    app.add_flag("--list", list, "list experiments and exit");
    std::map<std::string, std::string> values;
    for (const auto& f : kFlags) app.add_option(f.name, values[f.key], f.help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (list) {
        for (const auto& n : rilab::experiment_names()) std::cout << n << "\n";
        return 0;
    }

    try {
        rilab::ExperimentConfig cfg;
        if (!config_file.empty()) {
            std::ifstream is(config_file);
            if (!is) throw rilab::ConfigError("cannot open config file '" + config_file + "'");
            std::stringstream ss;
            ss << is.rdbuf();
            rilab::apply_config_text(cfg, ss.str());
        }
        if (!experiment.empty()) cfg.experiment = experiment;
        for (const auto& f : kFlags)
            if (app.count(f.name)) rilab::set_config_value(cfg, f.key, values[f.key]);
        rilab::validate(cfg);
        if (print_config) {
            std::cout << rilab::serialize(cfg);
            return 0;
        }
        std::cerr << "effective config:\n" << rilab::serialize(cfg);
        auto rec = rilab::run_experiment(cfg, timing);
        rilab::write_outputs(rec, std::cout);
        const auto& checks = rec.checks;
        for (auto it = checks.begin(); it != checks.end(); ++it)
            std::cerr << (it.value().get<bool>() ? "ok   " : "FAIL ") << it.key() << "\n";
        return 0;
    } catch (const rilab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rilab::ToleranceError& e) {
        std::cerr << "tolerance not achievable: " << e.what() << "\n";
        return 3;
    } catch (const rilab::InvariantError& e) {
        std::cerr << "invariant violated: " << e.what() << "\n";
        return 4;
    } catch (const std::bad_alloc&) {
        std::cerr << "out of memory; reduce the window or the horizon\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
