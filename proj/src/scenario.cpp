#include "quadinv/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/version.hpp>
#include <fftw3.h>

#include "quadinv/cauchy.hpp"
#include "quadinv/characteristic.hpp"
#include "quadinv/expr.hpp"
#include "quadinv/invariants.hpp"
#include "quadinv/kernel.hpp"
#include "quadinv/oracle.hpp"

namespace quadinv {

namespace fs = std::filesystem;
using nlohmann::json;

ConfigError::ConfigError(std::string location, const std::string& message)
    : UsageError(location + ": " + message), location_(std::move(location)) {}

std::string_view command_name(Command c) {
    switch (c) {
    case Command::propagate: return "propagate";
    case Command::expand: return "expand";
    case Command::invariants: return "invariants";
    case Command::ermakov: return "ermakov";
    case Command::verify: return "verify";
    }
    return "?";
}

std::optional<Command> parse_command(std::string_view s) {
    for (Command c : {Command::propagate, Command::expand, Command::invariants, Command::ermakov,
                      Command::verify})
        if (command_name(c) == s) return c;
    return std::nullopt;
}

std::string_view solver_name(SolverKind s) {
    switch (s) {
    case SolverKind::kernel: return "kernel";
    case SolverKind::expansion: return "expansion";
    case SolverKind::oracle: return "oracle";
    }
    return "?";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

std::string_view kind_name(InitialDataSpec::Kind k) {
    switch (k) {
    case InitialDataSpec::Kind::gaussian: return "gaussian";
    case InitialDataSpec::Kind::hermite_mode: return "hermite_mode";
    case InitialDataSpec::Kind::chi_special: return "chi_special";
    }
    return "?";
}

void require_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
    for (const auto& [k, v] : j.items()) {
        (void)v;
        if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
            throw ConfigError(path + "/" + k, "unknown field");
    }
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
    return v;
}

long long get_integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<long long>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}

std::array<double, 2> get_pair(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(path, "expected [value, derivative]");
    return {get_number(j[0], path + "/0"), get_number(j[1], path + "/1")};
}

bool is_power_of_two(long long n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace

json parse_config_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::string what = e.what();
        if (auto p = what.find("syntax error"); p != std::string::npos) what = what.substr(p);
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col), what);
    }
}

Scenario scenario_from_json(const json& j, Scenario sc) {
    require_keys(j, "", {"command", "name", "preset", "coefficients", "t_max", "grid", "times",
                         "initial_data", "solver", "expansion", "oracle", "pinney", "output_dir"});
    if (j.contains("command")) {
        const std::string s = get_string(j["command"], "/command");
        auto c = parse_command(s);
        if (!c) throw ConfigError("/command", "unknown command '" + s + "'");
        sc.command = *c;
    }
    if (j.contains("name")) {
        sc.name = get_string(j["name"], "/name");
        if (sc.name.empty() || sc.name.find_first_of("/\\") != std::string::npos)
            throw ConfigError("/name", "must be a non-empty plain file name");
    }
    if (j.contains("preset") && j.contains("coefficients"))
        throw ConfigError("/coefficients", "give either preset or coefficients, not both");
    if (j.contains("preset")) {
        const std::string s = get_string(j["preset"], "/preset");
        auto p = parse_preset(s);
        if (!p) throw ConfigError("/preset", "unknown preset '" + s + "'");
        sc.preset = p;
        sc.inline_coefficients.reset();
    }
    if (j.contains("coefficients")) {
        const json& c = j["coefficients"];
        require_keys(c, "/coefficients", {"a", "b", "c", "d"});
        std::array<std::string, 4> e;
        const char* names[4] = {"a", "b", "c", "d"};
        for (int k = 0; k < 4; ++k) {
            const std::string path = std::string("/coefficients/") + names[k];
            if (!c.contains(names[k])) throw ConfigError(path, "missing");
            e[static_cast<std::size_t>(k)] = get_string(c[names[k]], path);
            try {
                (void)parse_time_function(e[static_cast<std::size_t>(k)]);
            } catch (const UsageError& err) {
                throw ConfigError(path, err.what());
            }
        }
        sc.inline_coefficients = e;
        sc.preset.reset();
    }
    if (j.contains("t_max")) {
        sc.t_max = get_number(j["t_max"], "/t_max");
        if (!(sc.t_max > 0.0)) throw ConfigError("/t_max", "must be positive");
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        require_keys(g, "/grid", {"x_min", "x_max", "n"});
        if (g.contains("x_min")) sc.grid.x_min = get_number(g["x_min"], "/grid/x_min");
        if (g.contains("x_max")) sc.grid.x_max = get_number(g["x_max"], "/grid/x_max");
        if (g.contains("n")) {
            const long long n = get_integer(g["n"], "/grid/n");
            if (!is_power_of_two(n) || n < 16 || n > (1 << 20))
                throw ConfigError("/grid/n", "must be a power of two in [16, 2^20]");
            sc.grid.n = static_cast<std::size_t>(n);
        }
        if (!(sc.grid.x_max > sc.grid.x_min)) throw ConfigError("/grid/x_max", "must exceed x_min");
    }
    if (j.contains("times")) {
        const json& t = j["times"];
        if (!t.is_array() || t.empty()) throw ConfigError("/times", "expected a non-empty array");
        sc.times.clear();
        for (std::size_t i = 0; i < t.size(); ++i)
            sc.times.push_back(get_number(t[i], "/times/" + std::to_string(i)));
    }
    if (j.contains("initial_data")) {
        const json& d = j["initial_data"];
        require_keys(d, "/initial_data", {"type", "center", "width", "momentum", "n", "m"});
        if (!d.contains("type")) throw ConfigError("/initial_data/type", "missing");
        const std::string type = get_string(d["type"], "/initial_data/type");
        InitialDataSpec s;
        if (type == "gaussian") {
            s.kind = InitialDataSpec::Kind::gaussian;
            if (d.contains("center")) s.center = get_number(d["center"], "/initial_data/center");
            if (d.contains("width")) s.width = get_number(d["width"], "/initial_data/width");
            if (d.contains("momentum"))
                s.momentum = get_number(d["momentum"], "/initial_data/momentum");
            if (!(s.width > 0.0)) throw ConfigError("/initial_data/width", "must be positive");
            if (d.contains("n") || d.contains("m"))
                throw ConfigError("/initial_data", "gaussian takes center, width, momentum");
        } else if (type == "hermite_mode" || type == "chi_special") {
            const bool herm = type == "hermite_mode";
            s.kind = herm ? InitialDataSpec::Kind::hermite_mode : InitialDataSpec::Kind::chi_special;
            const char* key = herm ? "n" : "m";
            const std::string path = std::string("/initial_data/") + key;
            if (!d.contains(key)) throw ConfigError(path, "missing");
            const long long n = get_integer(d[key], path);
            if (n < 0 || n > expansion_n_max)
                throw ConfigError(path, "must lie in [0, " + std::to_string(expansion_n_max) + "]");
            s.index = static_cast<int>(n);
            for (const char* other : {"center", "width", "momentum", herm ? "m" : "n"})
                if (d.contains(other))
                    throw ConfigError(std::string("/initial_data/") + other,
                                      "not a field of " + type);
        } else {
            throw ConfigError("/initial_data/type", "unknown type '" + type + "'");
        }
        sc.initial = s;
    }
    if (j.contains("solver")) {
        const std::string s = get_string(j["solver"], "/solver");
        if (s == "kernel") sc.solver = SolverKind::kernel;
        else if (s == "expansion") sc.solver = SolverKind::expansion;
        else if (s == "oracle") sc.solver = SolverKind::oracle;
        else throw ConfigError("/solver", "unknown solver '" + s + "'");
    }
    if (j.contains("expansion")) {
        const json& e = j["expansion"];
        require_keys(e, "/expansion", {"order", "c0", "kappa", "kappa1", "gamma0"});
        if (e.contains("order")) {
            const long long n = get_integer(e["order"], "/expansion/order");
            if (n < 1 || n > expansion_n_max)
                throw ConfigError("/expansion/order",
                                  "must lie in [1, " + std::to_string(expansion_n_max) + "]");
            sc.expansion.order = static_cast<int>(n);
        }
        if (e.contains("c0")) sc.expansion.c0 = get_number(e["c0"], "/expansion/c0");
        if (e.contains("kappa")) {
            sc.expansion.kappa = get_pair(e["kappa"], "/expansion/kappa");
            if (!((*sc.expansion.kappa)[0] > 0.0))
                throw ConfigError("/expansion/kappa/0", "kappa(0) must be positive");
        }
        if (e.contains("kappa1")) {
            sc.expansion.kappa1 = get_pair(e["kappa1"], "/expansion/kappa1");
            if (sc.expansion.kappa1[0] == 0.0)
                throw ConfigError("/expansion/kappa1/0", "kappa1(0) must be nonzero");
        }
        if (e.contains("gamma0")) sc.expansion.gamma0 = get_number(e["gamma0"], "/expansion/gamma0");
    }
    if (j.contains("oracle")) {
        const json& o = j["oracle"];
        require_keys(o, "/oracle", {"dt"});
        if (o.contains("dt")) {
            sc.oracle_dt = get_number(o["dt"], "/oracle/dt");
            if (!(sc.oracle_dt > 0.0)) throw ConfigError("/oracle/dt", "must be positive");
        }
    }
    if (j.contains("pinney")) {
        if (!j["pinney"].is_boolean()) throw ConfigError("/pinney", "expected true or false");
        sc.pinney = j["pinney"].get<bool>();
    }
    if (j.contains("output_dir")) sc.output_dir = get_string(j["output_dir"], "/output_dir");
    return sc;
}

void validate_scenario(const Scenario& sc) {
    if (!sc.preset && !sc.inline_coefficients)
        throw ConfigError("/preset", "a preset or inline coefficients are required");
    if (!(sc.t_max > 0.0)) throw ConfigError("/t_max", "must be positive");
    if (!(sc.grid.x_max > sc.grid.x_min)) throw ConfigError("/grid/x_max", "must exceed x_min");
    if (!is_power_of_two(static_cast<long long>(sc.grid.n)) || sc.grid.n < 16)
        throw ConfigError("/grid/n", "must be a power of two >= 16");
    const std::vector<double> ts = sc.output_times();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const std::string path = "/times/" + std::to_string(i);
        if (ts[i] < 0.0 || ts[i] > sc.t_max)
            throw ConfigError(path, "outside [0, t_max = " + format_double(sc.t_max) + "]");
        if (i > 0 && !(ts[i] > ts[i - 1])) throw ConfigError(path, "times must increase strictly");
    }
    const bool needs_modes = sc.command == Command::expand ||
                             (sc.command == Command::propagate && sc.solver == SolverKind::expansion) ||
                             sc.initial.kind != InitialDataSpec::Kind::gaussian;
    if (needs_modes && !(sc.expansion.c0 > 0.0))
        throw ConfigError("/expansion/c0", "must be positive for Hermite modes");
    if (sc.command == Command::expand && sc.solver != SolverKind::expansion &&
        sc.solver != SolverKind::kernel)
        throw ConfigError("/solver", "expand runs the expansion route only");
}

CoefficientSet Scenario::coefficients() const {
    if (inline_coefficients) {
        const auto& e = *inline_coefficients;
        return make_inline_coefficients(e[0], e[1], e[2], e[3], t_max);
    }
    return make_preset(preset.value_or(PresetId::sho), t_max);
}

Grid Scenario::make_grid() const { return Grid(grid.x_min, grid.x_max, grid.n); }

std::vector<double> Scenario::output_times() const {
    if (!times.empty()) return times;
    switch (command) {
    case Command::invariants: {
        std::vector<double> t;
        for (int k = 1; k <= 15; ++k)
            if (0.1 * k <= t_max) t.push_back(0.1 * k);
        return t;
    }
    case Command::ermakov: return {std::min(2.0, t_max)};
    default: return {std::min(1.0, t_max)};
    }
}

json Scenario::to_json() const {
    json j;
    j["command"] = std::string(command_name(command));
    j["name"] = name;
    if (inline_coefficients) {
        const auto& e = *inline_coefficients;
        j["coefficients"] = {{"a", e[0]}, {"b", e[1]}, {"c", e[2]}, {"d", e[3]}};
    } else {
        j["preset"] = std::string(preset_name(preset.value_or(PresetId::sho)));
    }
    j["t_max"] = t_max;
    j["grid"] = {{"x_min", grid.x_min}, {"x_max", grid.x_max}, {"n", grid.n}};
    j["times"] = output_times();
    json d{{"type", std::string(kind_name(initial.kind))}};
    if (initial.kind == InitialDataSpec::Kind::gaussian) {
        d["center"] = initial.center;
        d["width"] = initial.width;
        d["momentum"] = initial.momentum;
    } else {
        d[initial.kind == InitialDataSpec::Kind::hermite_mode ? "n" : "m"] = initial.index;
    }
    j["initial_data"] = d;
    j["solver"] = std::string(solver_name(solver));
    json e{{"order", expansion.order}, {"c0", expansion.c0}, {"kappa1", expansion.kappa1},
           {"gamma0", expansion.gamma0}};
    if (expansion.kappa) e["kappa"] = *expansion.kappa;
    j["expansion"] = e;
    j["oracle"] = {{"dt", oracle_dt}};
    j["pinney"] = pinney;
    j["output_dir"] = output_dir;
    return j;
}

fs::path resolve_output_dir(const std::string& fallback) {
    if (const char* env = std::getenv("QUADINV_OUT_DIR"); env && *env) return fs::path(env);
    return fs::path(fallback);
}

// ---------------------------------------------------------------------------
// Running

namespace {

constexpr double tol_pairing = 1e-5;
constexpr double tol_route = 1e-4;
constexpr double tol_pinney = 1e-6;
constexpr double tol_ermakov_drift = 1e-8;

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw NumericalError("cannot write " + p.string());
    f << s;
    if (!f) throw NumericalError("write failed for " + p.string());
}

std::string csv_wavefunction(const WaveFunction& wf) {
    std::string s = "x,re,im,abs2\n";
    for (std::size_t i = 0; i < wf.grid.size(); ++i) {
        const cplx z = wf.samples[i];
        s += format_double(wf.grid.x(i)) + ',' + format_double(z.real()) + ',' +
             format_double(z.imag()) + ',' + format_double(std::norm(z)) + '\n';
    }
    return s;
}

std::string csv_coefficients(const std::vector<cplx>& c) {
    std::string s = "n,abs,arg\n";
    for (std::size_t n = 0; n < c.size(); ++n)
        s += std::to_string(n) + ',' + format_double(std::abs(c[n])) + ',' +
             format_double(std::arg(c[n])) + '\n';
    return s;
}

std::string index_tag(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "t%03zu", i);
    return buf;
}

json check_json(const CheckResult& c) {
    json j{{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}};
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "ConfigError";
    if (dynamic_cast<const SingularityError*>(&e)) return "SingularityError";
    if (dynamic_cast<const IntegrationError*>(&e)) return "IntegrationError";
    if (dynamic_cast<const DomainError*>(&e)) return "DomainError";
    if (dynamic_cast<const ResolutionError*>(&e)) return "ResolutionError";
    if (dynamic_cast<const ModeError*>(&e)) return "ModeError";
    if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
    if (dynamic_cast<const UsageError*>(&e)) return "UsageError";
    if (dynamic_cast<const Error*>(&e)) return "Error";
    return "std::exception";
}

json versions() {
    return {{"quadinv", tool_version},
            {"fftw", std::string(fftw_version)},
            {"boost", std::string(BOOST_LIB_VERSION)},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

json tolerances() {
    return {{"pairing_relative_drift", tol_pairing},
            {"route_l2", tol_route},
            {"pinney_relative", tol_pinney},
            {"ermakov_invariant_drift", tol_ermakov_drift},
            {"kernel_phase_per_cell", std::numbers::pi / 4.0},
            {"expansion_truncation", truncation_threshold},
            {"boundary_decay", boundary_decay_ratio}};
}

WaveFunction gaussian_state(const Grid& g, double x0, double w, double k) {
    const double norm = std::pow(std::numbers::pi, -0.25) / std::sqrt(w);
    return WaveFunction::sample(g, [=](double x) {
        const double u = (x - x0) / w;
        return norm * std::exp(-0.5 * u * u) * std::polar(1.0, k * x);
    });
}

std::array<double, 2> kappa_data(const Scenario& sc) {
    return sc.expansion.kappa.value_or(std::array<double, 2>{1.0, 0.0});
}

LadderData ladder_at_zero(const CoefficientSet& h, const Scenario& sc) {
    const auto k = kappa_data(sc);
    return {k[0], k[1], h.c(0.0) + h.d(0.0), h.a(0.0), 2.0 * std::sqrt(sc.expansion.c0)};
}

ExpansionState expansion_state(const CoefficientSet& h, const Scenario& sc, double t_end) {
    const auto k1d = sc.expansion.kappa1;
    ErmakovSolution k1 = solve_ermakov(h, 0.0, k1d[0], k1d[1], t_end);
    if (sc.expansion.kappa) {
        const auto k = *sc.expansion.kappa;
        return ExpansionState(h, k1, solve_ermakov(h, sc.expansion.c0, k[0], k[1], t_end),
                              sc.expansion.gamma0);
    }
    return ExpansionState(h, k1, matching_kappa(h, k1, sc.expansion.c0, sc.expansion.gamma0),
                          sc.expansion.gamma0);
}

using InitialFn = std::function<WaveFunction(const Grid&)>;

InitialFn initial_function(const CoefficientSet& h, const Scenario& sc, double t_end) {
    const InitialDataSpec d = sc.initial;
    switch (d.kind) {
    case InitialDataSpec::Kind::gaussian:
        return [d](const Grid& g) { return gaussian_state(g, d.center, d.width, d.momentum); };
    case InitialDataSpec::Kind::hermite_mode: {
        const LadderData ld = ladder_at_zero(h, sc);
        ld.validate();
        return [ld, d](const Grid& g) { return hermite_mode(d.index, ld, g); };
    }
    case InitialDataSpec::Kind::chi_special: {
        auto st = std::make_shared<ExpansionState>(expansion_state(h, sc, t_end));
        return [st, d](const Grid& g) { return special_initial_data(*st, d.index, g); };
    }
    }
    throw UsageError("unknown initial data");
}

// Green-kernel quadrature with the y-grid refined until the phase check passes.
WaveFunction kernel_solve(const GreenKernel& gk, const InitialFn& init, const Grid& g, double t) {
    if (t < kernel_t_min) return init(g);
    const KernelParameters p = gk.parameters(t);
    std::size_t ny = g.size();
    while (ny < (std::size_t{1} << 20) &&
           !(kernel_phase_resolution(p, Grid(g.x_min(), g.x_max(), ny)) < 0.9 * std::numbers::pi / 4.0))
        ny *= 2;
    return evolve_by_kernel(p, init(Grid(g.x_min(), g.x_max(), ny)), g);
}

struct RunContext {
    const Scenario& sc;
    const CoefficientSet& h;
    fs::path dir;
    std::ostream& log;
    std::vector<CheckResult>& checks;
    json& outputs;
    json& warnings;

    void save(const std::string& file, const std::string& body, json meta = json::object()) {
        write_text(dir / file, body);
        meta["file"] = file;
        outputs.push_back(meta);
    }
    void warn(const std::vector<std::string>& w, const std::string& where) {
        for (const auto& s : w) warnings.push_back(where + ": " + s);
    }
};

void run_propagate(RunContext& c) {
    const Scenario& sc = c.sc;
    const Grid g = sc.make_grid();
    const std::vector<double> ts = sc.output_times();
    const double t_end = ts.back();
    const InitialFn init = initial_function(c.h, sc, std::max(t_end, 1e-3));
    const std::string tag(solver_name(sc.solver));
    std::optional<GreenKernel> gk;
    std::optional<ErmakovSolution> k;
    if (sc.solver == SolverKind::kernel && t_end >= kernel_t_min) gk.emplace(c.h, t_end);
    if (sc.solver == SolverKind::expansion) {
        const auto kd = kappa_data(sc);
        k.emplace(solve_ermakov(c.h, sc.expansion.c0, kd[0], kd[1], std::max(t_end, 1e-3)));
    }
    const WaveFunction phi0 = init(g);
    std::vector<WaveFunction> oracle_states;
    if (sc.solver == SolverKind::oracle) {
        OracleConfig cfg;
        cfg.dt = sc.oracle_dt;
        oracle_states = evolve_oracle_series(c.h, phi0, ts, cfg);
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        WaveFunction psi = phi0;
        json meta{{"t", t}, {"kind", "wavefunction"}};
        switch (sc.solver) {
        case SolverKind::kernel:
            psi = kernel_solve(*gk, init, g, t);
            break;
        case SolverKind::expansion: {
            ExpansionResult r = cauchy_expansion(c.h, *k, phi0, t, sc.expansion.order);
            meta["truncated"] = r.truncated;
            psi = std::move(r.psi);
            break;
        }
        case SolverKind::oracle:
            psi = oracle_states[i];
            break;
        }
        meta["norm"] = l2_norm(psi);
        c.warn(psi.warnings, "t = " + format_double(t));
        c.save("psi_" + tag + "_" + index_tag(i) + ".csv", csv_wavefunction(psi), meta);
        c.log << "t = " << format_double(t) << "  norm = " << format_double(l2_norm(psi)) << '\n';
    }
}

void run_expand(RunContext& c) {
    const Scenario& sc = c.sc;
    const Grid g = sc.make_grid();
    const std::vector<double> ts = sc.output_times();
    const double t_end = std::max(ts.back(), 1e-3);
    const ExpansionState st = expansion_state(c.h, sc, t_end);
    const WaveFunction chi = initial_function(c.h, sc, t_end)(g);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        const ExpansionResult r = eigenfunction_expansion(st, chi, t, sc.expansion.order);
        const std::string tag = index_tag(i);
        c.save("coefficients_" + tag + ".csv", csv_coefficients(r.coefficients),
               {{"t", t}, {"kind", "coefficients"}, {"truncated", r.truncated}});
        c.save("psi_expansion_" + tag + ".csv", csv_wavefunction(r.psi),
               {{"t", t}, {"kind", "wavefunction"}, {"norm", l2_norm(r.psi)}});
        c.warn(r.psi.warnings, "t = " + format_double(t));
        c.log << "t = " << format_double(t) << "  phi = " << format_double(st.phi(t))
              << (r.truncated ? "  (truncated)" : "") << '\n';
    }
}

// <chi(t), O(t) psi(t)> along oracle-evolved chi, psi for several invariants O.
struct PairingSeries {
    std::vector<std::string> names;
    std::vector<std::vector<cplx>> values; // [invariant][time]
};

PairingSeries pairing_series(const CoefficientSet& h, const std::vector<double>& ts,
                             const WaveFunction& psi0, const WaveFunction& chi0, double c0,
                             std::array<double, 2> kappa, double dt) {
    const double t_end = ts.back();
    const LinearInvariant p1(solve_characteristic(h, 1.0, 0.0, t_end), 0.0);
    const LinearInvariant p2(solve_characteristic(h, 0.0, 1.0, t_end), 0.3);
    const QuadraticInvariant e(solve_ermakov(h, c0, kappa[0], kappa[1], t_end));
    PairingSeries s;
    s.names = {"linear", "linear_inhomogeneous", "quadratic", "product", "simplest"};
    s.values.assign(s.names.size(), {});
    OracleConfig cfg;
    cfg.dt = dt;
    const std::vector<WaveFunction> psis = evolve_oracle_series(h, psi0, ts, cfg);
    const std::vector<WaveFunction> chis = evolve_oracle_series(h, chi0, ts, cfg);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double t = ts[i];
        const WaveFunction& psi = psis[i];
        const WaveFunction& chi = chis[i];
        const double lam = e.lambda(t);
        s.values[0].push_back(inner_product(chi, p1.apply(t, psi)));
        s.values[1].push_back(inner_product(chi, p2.apply(t, psi)));
        s.values[2].push_back(inner_product(chi, e.apply(t, psi)));
        s.values[3].push_back(inner_product(chi, p1.apply(t, p2.apply(t, psi))) / lam);
        s.values[4].push_back(inner_product(chi, psi) * lam);
    }
    return s;
}

double relative_drift(const std::vector<cplx>& v, std::size_t k) {
    return std::abs(v[k] - v[0]) / std::abs(v[0]);
}

void run_invariants(RunContext& c) {
    const Scenario& sc = c.sc;
    const Grid g = sc.make_grid();
    const std::vector<double> ts = sc.output_times();
    const double t_end = std::max(ts.back(), 1e-3);
    const WaveFunction psi0 = initial_function(c.h, sc, t_end)(g);
    const WaveFunction chi0 =
        gaussian_state(g, sc.initial.center + 0.5, 1.2 * sc.initial.width, sc.initial.momentum + 0.3);
    const PairingSeries s =
        pairing_series(c.h, ts, psi0, chi0, sc.expansion.c0, kappa_data(sc), sc.oracle_dt);
    for (std::size_t k = 0; k < s.names.size(); ++k) {
        std::string body = "t,re,im,relative_drift\n";
        double worst = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const cplx v = s.values[k][i];
            const double d = relative_drift(s.values[k], i);
            worst = std::max(worst, d);
            body += format_double(ts[i]) + ',' + format_double(v.real()) + ',' +
                    format_double(v.imag()) + ',' + format_double(d) + '\n';
        }
        c.save("invariant_" + s.names[k] + ".csv", body, {{"kind", "invariant_drift"}});
        c.checks.push_back({"pairing_" + s.names[k], worst, tol_pairing, worst < tol_pairing, ""});
    }
}

void run_ermakov(RunContext& c) {
    const Scenario& sc = c.sc;
    const double T = std::max(sc.output_times().back(), 1e-3);
    const auto kd = kappa_data(sc);
    const double c0 = sc.expansion.c0;
    const ErmakovSolution direct = solve_ermakov(c.h, c0, kd[0], kd[1], T);
    const ErmakovSolution k1 = solve_ermakov(c.h, 0.0, 1.0, 0.0, T);
    std::optional<ErmakovSolution> pin;
    if (sc.pinney) {
        const ErmakovSolution k2 = solve_ermakov(c.h, 0.0, 0.0, 1.0, T);
        // kappa^2 = C1 k1^2 + C2 k2^2 + 2 C3 k1 k2 matched to (kappa(0), kappa'(0), C0).
        const double A = 2.0 * c.h.a(0.0);
        const double C1 = kd[0] * kd[0], C3 = kd[0] * kd[1];
        const double C2 = (c0 * A * A + C3 * C3) / C1;
        pin.emplace(pinney(c.h, k1, k2, C1, C2, C3));
    }
    constexpr int samples = 201;
    std::string body = sc.pinney ? "t,kappa_direct,kappa_pinney,abs_diff\n" : "t,kappa_direct\n";
    double worst = 0.0, drift = 0.0;
    const double inv0 = c0 != 0.0 ? ermakov_invariant(c.h, k1, direct, 0.0) : 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = T * i / (samples - 1);
        const double kd_t = direct.kappa(t);
        body += format_double(t) + ',' + format_double(kd_t);
        if (pin) {
            const double kp = pin->kappa(t);
            worst = std::max(worst, std::abs(kp - kd_t) / std::abs(kd_t));
            body += ',' + format_double(kp) + ',' + format_double(std::abs(kp - kd_t));
        }
        body += '\n';
        if (c0 != 0.0)
            drift = std::max(drift, std::abs(ermakov_invariant(c.h, k1, direct, t) - inv0) /
                                        std::abs(inv0));
    }
    c.save("kappa.csv", body, {{"kind", "kappa"}});
    if (pin) {
        c.checks.push_back({"pinney_vs_direct", worst, tol_pinney, worst < tol_pinney, ""});
        c.log << "max discrepancy (relative): " << format_double(worst) << '\n';
    }
    if (c0 != 0.0)
        c.checks.push_back(
            {"ermakov_invariant_drift", drift, tol_ermakov_drift, drift < tol_ermakov_drift, ""});
}

// ---------------------------------------------------------------------------
// verify

template <class F>
CheckResult guarded(const std::string& name, double tol, F&& f) {
    try {
        const double v = f();
        return {name, v, tol, std::isfinite(v) && v < tol, ""};
    } catch (const SingularityError& e) {
        return {name, 0.0, tol, true, std::string("not applicable: ") + e.what()};
    } catch (const std::exception& e) {
        return {name, std::numeric_limits<double>::infinity(), tol, false, e.what()};
    }
}

double max_over(const std::vector<double>& ts, const std::function<double(double)>& f) {
    double m = 0.0;
    for (double t : ts) m = std::max(m, f(t));
    return m;
}

std::vector<double> interior(const std::vector<double>& nodes, double t_hi) {
    std::vector<double> r;
    for (double t : nodes)
        if (t > 1e-9 && t < t_hi - 1e-9) r.push_back(t);
    return r;
}

void run_verify(RunContext& c) {
    const CoefficientSet& h = c.h;
    const double T = h.t_max();
    const double Tp = std::min(1.5, T);
    auto& out = c.checks;

    out.push_back(guarded("characteristic_residual", 1e-8, [&] {
        const auto s = solve_characteristic(h, 1.0, 0.3, T);
        return max_over(s.nodes(), [&](double t) {
            const auto [tau, sigma] = tau_sigma(h, t);
            const double m2 = s.mu_second_interpolated(t);
            return std::abs(m2 - tau * s.mu_prime(t) + 4 * sigma * s.mu(t)) / (1 + std::abs(m2));
        });
    }));
    out.push_back(guarded("abel_identity", 1e-8, [&] {
        const auto s1 = solve_characteristic(h, 1.0, 0.0, T);
        const auto s2 = solve_characteristic(h, 0.0, 1.0, T);
        const double w0 = wronskian(s1, s2, 0.0);
        return max_over(s1.nodes(), [&](double t) {
            const double want = w0 * h.a(t) / h.a(0.0) * std::pow(s1.lambda(t), 2);
            return std::abs(wronskian(s1, s2, t) - want) / std::abs(want);
        });
    }));
    out.push_back(guarded("linear_system_residual", 1e-8, [&] {
        const LinearInvariant P(solve_characteristic(h, 1.0, 0.3, T), 0.5);
        return max_over(interior(P.source().nodes(), T), [&](double t) {
            const auto r = P.residuals(t);
            return std::max({r[0], r[1], r[2]});
        });
    }));
    out.push_back(guarded("quadratic_system_residual", 1e-8, [&] {
        const QuadraticInvariant E(solve_ermakov(h, 1.0, 1.0, 0.1, T));
        return max_over(interior(E.kappa_source().nodes(), T), [&](double t) {
            const auto r = E.residuals(t);
            return std::max({r[0], r[1], r[2]});
        });
    }));
    out.push_back(guarded("kernel_schrodinger_residual", 1e-6, [&] {
        const GreenKernel gk(h, std::min(0.6, T));
        return schrodinger_residual(h, gk.family(), Grid(-6, 6, 1024), 0.5, 1e-4);
    }));
    out.push_back(guarded("kernel_eigenrelation", 1e-6, [&] {
        const GeneralKernel k(h, {0.0, 1.0, 0.0, 1.0}, std::min(1.0, T));
        const Grid g(-6, 6, 512);
        double m = 0.0;
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9})
            for (double y : {-2.0, -1.0, 0.0, 1.0, 2.0})
                m = std::max(m, eigenrelation_residual(k, t, y, g));
        return m;
    }));
    out.push_back(guarded("kernel_mu_routes", 1e-7, [&] {
        const GeneralKernel k(h, {0.0, 1.0, 0.0, 1.0}, std::min(1.0, T));
        double m = 0.0;
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const double mu = k.parameters(t).mu;
            m = std::max(m, std::abs(mu - k.mu_direct(t)) / std::abs(k.mu_direct(t)));
        }
        return m;
    }));

    {
        const Grid g = c.sc.make_grid();
        std::vector<double> ts;
        for (int k = 1; k <= 15; ++k) ts.push_back(Tp * k / 15.0);
        const WaveFunction psi0 = gaussian_state(g, 0.0, 1.0, 0.0);
        const WaveFunction chi0 = gaussian_state(g, 0.5, 1.2, 0.3);
        try {
            const PairingSeries s = pairing_series(h, ts, psi0, chi0, 1.0, {1.0, 0.0}, 1e-3);
            for (std::size_t k = 0; k < s.names.size(); ++k) {
                double worst = 0.0;
                for (std::size_t i = 0; i < ts.size(); ++i)
                    worst = std::max(worst, relative_drift(s.values[k], i));
                out.push_back({"pairing_" + s.names[k], worst, tol_pairing, worst < tol_pairing, ""});
            }
        } catch (const std::exception& e) {
            out.push_back({"pairing", std::numeric_limits<double>::infinity(), tol_pairing, false,
                           e.what()});
        }
    }

    const double t1 = std::min(1.0, T);
    out.push_back(guarded("ladder_commutator", 1e-8, [&] {
        const ErmakovSolution k = solve_ermakov(h, 1.0, 1.0, 0.0, t1);
        const QuadraticInvariant E(k);
        const LadderData ld = E.ladder_data(t1);
        const Grid g(-12, 12, 512);
        const WaveFunction psi = gaussian_state(g, 0.3, 1.1, 0.2);
        const WaveFunction up = ladder(ld, ladder(ld, psi, LadderDirection::raise), LadderDirection::lower);
        const WaveFunction dn = ladder(ld, ladder(ld, psi, LadderDirection::lower), LadderDirection::raise);
        return max_abs((up - dn - psi).samples);
    }));
    out.push_back(guarded("oscillator_spectrum", 1e-6, [&] {
        const ErmakovSolution k = solve_ermakov(h, 1.0, 1.0, 0.0, t1);
        const QuadraticInvariant E(k);
        const LadderData ld = E.ladder_data(t1);
        const double omega = ld.omega0 * E.lambda(t1);
        const Grid g(-12, 12, 512);
        double m = 0.0;
        for (int n = 0; n <= 5; ++n) {
            const WaveFunction psi = hermite_mode(n, ld, g);
            const WaveFunction r = E.apply(t1, psi) - cplx(omega * (n + 0.5)) * psi;
            m = std::max(m, l2_norm(r) / (omega * (n + 0.5)));
        }
        return m;
    }));

    const double t2 = std::min(2.0, T);
    out.push_back(guarded("pinney_vs_direct", tol_pinney, [&] {
        const ErmakovSolution k1 = solve_ermakov(h, 0.0, 1.0, 0.0, t2);
        const ErmakovSolution k2 = solve_ermakov(h, 0.0, 0.0, 1.0, t2);
        // W(0) = 1, so C0 = C1 C2 / (2a(0))^2 = 1.
        const double A = 2.0 * h.a(0.0);
        const ErmakovSolution p = pinney(h, k1, k2, 4.0, A * A / 4.0, 0.0);
        const ErmakovSolution d = solve_ermakov(h, p.c0(), 2.0, 0.0, t2);
        double m = 0.0;
        for (int i = 0; i <= 200; ++i) {
            const double t = t2 * i / 200.0;
            m = std::max(m, std::abs(p.kappa(t) - d.kappa(t)) / d.kappa(t));
        }
        return m;
    }));
    out.push_back(guarded("ermakov_invariant_drift", tol_ermakov_drift, [&] {
        const ErmakovSolution k1 = solve_ermakov(h, 0.0, 1.0, 0.0, T);
        const ErmakovSolution k = solve_ermakov(h, 1.0, 1.0, 0.2, T);
        const double i0 = ermakov_invariant(h, k1, k, 0.0);
        return max_over(k.nodes(), [&](double t) {
            return std::abs(ermakov_invariant(h, k1, k, t) - i0) / i0;
        });
    }));
    out.push_back(guarded("general_superposition_residual", 1e-7, [&] {
        const ErmakovSolution e1 = solve_ermakov(h, 1.0, 1.0, 0.0, T);
        const ErmakovSolution e2 = solve_ermakov(h, 2.0, 1.5, 0.3, T);
        const ErmakovSolution s = general_superposition(h, e1, e2, 1.0, 0.5);
        return max_over(interior(s.nodes(), T), [&](double t) {
            const KappaState st = s.at(t);
            return std::abs(aux_residual(h, s.c0(), t, st)) / (1.0 + std::abs(st.kappa_second));
        });
    }));
    out.push_back(guarded("wronskian_identities", 1e-7, [&] {
        const ErmakovSolution k1 = solve_ermakov(h, 1.0, 1.0, 0.0, T);
        const ErmakovSolution k2 = solve_ermakov(h, 2.0, 1.5, 0.3, T);
        const double inv0 = wronskian_identities(h, k1, k2, 0.0).constant;
        double m = 0.0;
        for (int i = 0; i < 200; ++i) {
            const double t = T * (i + 0.5) / 200.0;
            const WronskianResiduals r = wronskian_identities(h, k1, k2, t);
            m = std::max({m, std::abs(r.abel), std::abs(r.another),
                          std::abs(r.constant - inv0) / inv0});
        }
        return m;
    }));

    const Grid g = c.sc.make_grid();
    const WaveFunction phi = gaussian_state(g, 0.0, 1.0, 0.0);
    std::optional<WaveFunction> oracle_psi;
    auto oracle = [&]() -> const WaveFunction& {
        if (!oracle_psi) {
            OracleConfig cfg;
            cfg.dt = 5e-4;
            oracle_psi = evolve_oracle(h, phi, t1, cfg);
        }
        return *oracle_psi;
    };
    out.push_back(guarded("kernel_vs_oracle", tol_route, [&] {
        const GreenKernel gk(h, t1);
        const InitialFn init = [](const Grid& y) { return gaussian_state(y, 0.0, 1.0, 0.0); };
        return l2_distance(kernel_solve(gk, init, g, t1), oracle());
    }));
    out.push_back(guarded("expansion_vs_oracle", tol_route, [&] {
        const ErmakovSolution k = solve_ermakov(h, 1.0, 1.0, 0.0, t1);
        return l2_distance(cauchy_expansion(h, k, phi, t1, expansion_default_order).psi, oracle());
    }));
}

} // namespace

RunOutcome run_scenario(const Scenario& sc, const fs::path& out_dir, std::ostream& log) {
    RunOutcome r;
    json& m = r.manifest;
    m["tool"] = "quadinv";
    m["command"] = std::string(command_name(sc.command));
    m["versions"] = versions();
    m["tolerances"] = tolerances();
    m["scenario"] = sc.to_json();
    m["output_dir"] = out_dir.generic_string();
    std::vector<CheckResult> checks;
    json outputs = json::array(), warnings = json::array();
    try {
        validate_scenario(sc);
        const CoefficientSet h = sc.coefficients();
        fs::create_directories(out_dir);
        RunContext ctx{sc, h, out_dir, log, checks, outputs, warnings};
        switch (sc.command) {
        case Command::propagate: run_propagate(ctx); break;
        case Command::expand: run_expand(ctx); break;
        case Command::invariants: run_invariants(ctx); break;
        case Command::ermakov: run_ermakov(ctx); break;
        case Command::verify: run_verify(ctx); break;
        }
        const bool all = std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
        r.exit_code = all ? exit_ok : exit_numerical;
        m["status"] = all ? "ok" : "failed";
    } catch (const ConfigError& e) {
        r.exit_code = exit_schema;
        m["status"] = "error";
        m["error"] = {{"type", error_type(e)}, {"message", e.what()}, {"location", e.location()}};
    } catch (const std::exception& e) {
        r.exit_code = exit_numerical;
        m["status"] = "error";
        m["error"] = {{"type", error_type(e)}, {"message", e.what()}};
        if (auto* le = dynamic_cast<const LocatedError*>(&e)) m["error"]["t"] = le->where();
    }
    json cj = json::array();
    for (const auto& c : checks) cj.push_back(check_json(c));
    m["checks"] = cj;
    m["outputs"] = outputs;
    m["warnings"] = warnings;
    m["exit_code"] = r.exit_code;

    if (!checks.empty()) {
        char line[256];
        std::snprintf(line, sizeof line, "%-34s %-12s %-10s %s\n", "check", "value", "tolerance", "result");
        log << line;
        for (const auto& c : checks) {
            std::snprintf(line, sizeof line, "%-34s %-12.3e %-10.1e %s\n", c.name.c_str(), c.value,
                          c.tolerance, c.pass ? "PASS" : "FAIL");
            log << line;
            if (!c.note.empty()) log << "    " << c.note << '\n';
        }
    }
    if (m.contains("error")) log << "error: " << m["error"]["message"].get<std::string>() << '\n';

    try {
        fs::create_directories(out_dir);
        write_text(out_dir / "manifest.json", m.dump(2) + "\n");
    } catch (const std::exception& e) {
        log << "error: manifest not written: " << e.what() << '\n';
        if (r.exit_code == exit_ok) r.exit_code = exit_numerical;
    }
    return r;
}

void write_failure_manifest(const fs::path& out_dir, const std::string& command, int exit_code,
                            const std::string& type, const std::string& message) {
    json m;
    m["tool"] = "quadinv";
    m["command"] = command;
    m["versions"] = versions();
    m["tolerances"] = tolerances();
    m["status"] = "error";
    m["error"] = {{"type", type}, {"message", message}};
    m["checks"] = json::array();
    m["outputs"] = json::array();
    m["warnings"] = json::array();
    m["exit_code"] = exit_code;
    try {
        fs::create_directories(out_dir);
        write_text(out_dir / "manifest.json", m.dump(2) + "\n");
    } catch (const std::exception&) {
    }
}

int run_batch(const json& batch, const fs::path& out_dir, int jobs, std::ostream& log) {
    if (!batch.is_object() || !batch.contains("scenarios") || !batch["scenarios"].is_array())
        throw ConfigError("/scenarios", "expected an array of scenarios");
    const json& list = batch["scenarios"];
    for (const auto& [k, v] : batch.items()) {
        (void)v;
        if (k != "scenarios") throw ConfigError("/" + k, "unknown field");
    }
    const std::size_t n = list.size();
    std::vector<Scenario> scenarios(n);
    std::vector<std::optional<ConfigError>> bad(n);
    for (std::size_t i = 0; i < n; ++i) {
        try {
            if (!list[i].is_object() || !list[i].contains("command"))
                throw ConfigError("/command", "each scenario needs a command");
            scenarios[i] = scenario_from_json(list[i]);
            scenarios[i].name = list[i].value("name", "scenario");
        } catch (const ConfigError& e) {
            bad[i].emplace("/scenarios/" + std::to_string(i) + e.location(),
                           std::string(e.what()).substr(e.location().size() + 2));
        }
    }
    std::vector<std::string> logs(n);
    std::vector<int> codes(n, exit_ok);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            char prefix[16];
            std::snprintf(prefix, sizeof prefix, "%03zu_", i);
            const fs::path dir = out_dir / (prefix + scenarios[i].name);
            std::ostringstream os;
            if (bad[i]) {
                codes[i] = exit_schema;
                os << "error: " << bad[i]->what() << '\n';
                write_failure_manifest(dir, "batch", exit_schema, "ConfigError", bad[i]->what());
            } else {
                codes[i] = run_scenario(scenarios[i], dir, os).exit_code;
            }
            logs[i] = os.str();
        }
    };
    const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int code = exit_ok;
    for (std::size_t i = 0; i < n; ++i) {
        log << "[" << i << "] " << scenarios[i].name << ": exit " << codes[i] << '\n' << logs[i];
        code = std::max(code, codes[i]);
    }
    return code;
}

} // namespace quadinv
