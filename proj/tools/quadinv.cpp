// quadinv command-line front end: propagate, expand, invariants, ermakov, verify, batch.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "quadinv/scenario.hpp"

namespace {

using nlohmann::json;
using namespace quadinv;

struct Flags {
    std::string config;
    std::string preset;
    std::string solver;
    std::vector<double> times;
    std::optional<double> c0;
    std::optional<int> order;
    std::optional<double> dt;
    std::optional<int> n;
    std::string out;
    bool pinney = false;
};

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError(path, "cannot open configuration file");
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "Scenario JSON file");
    sub->add_option("--preset", f.preset, "free | sho | parametric | caldirola_kanai | skew");
    sub->add_option("--t", f.times, "Output time(s)");
    sub->add_option("--c0", f.c0, "Auxiliary-equation constant C0");
    sub->add_option("--n", f.n, "Grid points (power of two)");
    sub->add_option("--out", f.out, "Output directory (QUADINV_OUT_DIR takes precedence)");
}

// Overlays the flags through the same validation as the config file.
Scenario build_scenario(Command cmd, const Flags& f) {
    Scenario sc;
    sc.command = cmd;
    if (!f.config.empty()) {
        const json j = parse_config_text(read_file(f.config));
        if (j.is_object() && j.contains("command") && j["command"] != std::string(command_name(cmd)))
            throw ConfigError("/command", "config is for a different subcommand");
        sc = scenario_from_json(j, sc);
    }
    json o = json::object();
    if (!f.preset.empty()) o["preset"] = f.preset;
    if (!f.solver.empty()) o["solver"] = f.solver;
    if (!f.times.empty()) o["times"] = f.times;
    if (f.n) o["grid"] = {{"n", *f.n}};
    if (f.dt) o["oracle"] = {{"dt", *f.dt}};
    json e = json::object();
    if (f.c0) e["c0"] = *f.c0;
    if (f.order) e["order"] = *f.order;
    if (!e.empty()) o["expansion"] = e;
    if (f.pinney) o["pinney"] = true;
    if (!f.out.empty()) o["output_dir"] = f.out;
    if (o.contains("preset")) sc.inline_coefficients.reset();
    if (o.contains("grid")) {
        o["grid"]["x_min"] = sc.grid.x_min;
        o["grid"]["x_max"] = sc.grid.x_max;
    }
    try {
        return scenario_from_json(o, sc);
    } catch (const ConfigError& err) {
        throw ConfigError("flag " + err.location(), std::string(err.what()).substr(err.location().size() + 2));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Propagators and dynamical invariants of quadratic Hamiltonians"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_version));

    Flags f;
    CLI::App* propagate = app.add_subcommand("propagate", "Solve the Cauchy problem at the output times");
    CLI::App* expand = app.add_subcommand("expand", "Eigenfunction expansion coefficients and wavefunctions");
    CLI::App* invariants = app.add_subcommand("invariants", "Pairing drift of constructed invariants");
    CLI::App* ermakov = app.add_subcommand("ermakov", "Auxiliary-equation solution, optionally by superposition");
    CLI::App* verify = app.add_subcommand("verify", "Run the identity and pairing suite on a preset");
    for (CLI::App* s : {propagate, expand, invariants, ermakov, verify}) add_common(s, f);
    propagate->add_option("--solver", f.solver, "kernel | expansion | oracle");
    for (CLI::App* s : {propagate, expand}) s->add_option("--order", f.order, "Expansion order N");
    for (CLI::App* s : {propagate, invariants}) s->add_option("--dt", f.dt, "Oracle time step");
    ermakov->add_flag("--pinney", f.pinney, "Also build kappa by superposition of homogeneous solutions");

    std::string batch_file;
    int jobs = 1;
    std::string batch_out = "quadinv_out";
    CLI::App* batch = app.add_subcommand("batch", "Run a file of scenarios concurrently");
    batch->add_option("file", batch_file, "Batch JSON file")->required();
    batch->add_option("--jobs", jobs, "Concurrent scenarios")->check(CLI::PositiveNumber);
    batch->add_option("--out", batch_out, "Output directory (QUADINV_OUT_DIR takes precedence)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_schema;
    }

    if (batch->parsed()) {
        const auto dir = resolve_output_dir(batch_out);
        try {
            return run_batch(parse_config_text(read_file(batch_file)), dir, jobs, std::cout);
        } catch (const ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            write_failure_manifest(dir, "batch", exit_schema, "ConfigError", e.what());
            return exit_schema;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            write_failure_manifest(dir, "batch", exit_numerical, "Error", e.what());
            return exit_numerical;
        }
    }

    Command cmd = Command::propagate;
    for (Command c : {Command::propagate, Command::expand, Command::invariants, Command::ermakov,
                      Command::verify})
        if (app.got_subcommand(std::string(command_name(c)))) cmd = c;

    Scenario sc;
    try {
        sc = build_scenario(cmd, f);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        write_failure_manifest(resolve_output_dir(f.out.empty() ? "quadinv_out" : f.out),
                               std::string(command_name(cmd)), exit_schema, "ConfigError", e.what());
        return exit_schema;
    }
    return run_scenario(sc, resolve_output_dir(sc.output_dir), std::cout).exit_code;
}
