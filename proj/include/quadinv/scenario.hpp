#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "quadinv/coeffs.hpp"
#include "quadinv/errors.hpp"
#include "quadinv/grid.hpp"

namespace quadinv {

inline constexpr const char* tool_version = "0.1.0";

// A configuration that does not satisfy the scenario schema. location is a JSON
// pointer ("/grid/n") or "line L, column C" for syntax errors.
class ConfigError : public UsageError {
public:
    ConfigError(std::string location, const std::string& message);
    const std::string& location() const noexcept { return location_; }

private:
    std::string location_;
};

enum class Command { propagate, expand, invariants, ermakov, verify };
enum class SolverKind { kernel, expansion, oracle };

std::string_view command_name(Command c);
std::optional<Command> parse_command(std::string_view s);
std::string_view solver_name(SolverKind s);

struct GridSpec {
    double x_min = -12.0;
    double x_max = 12.0;
    std::size_t n = 512;
};

struct InitialDataSpec {
    enum class Kind { gaussian, hermite_mode, chi_special };
    Kind kind = Kind::gaussian;
    double center = 0.0;
    double width = 1.0;
    double momentum = 0.0;
    int index = 0; // n for hermite_mode, m for chi_special
};

struct ExpansionSpec {
    int order = 48;
    double c0 = 1.0;
    // kappa(0), kappa'(0); for the expand command an absent value selects matching_kappa.
    std::optional<std::array<double, 2>> kappa;
    std::array<double, 2> kappa1{1.0, 0.0};
    double gamma0 = 0.0;
};

struct Scenario {
    Command command = Command::propagate;
    std::string name = "scenario";
    std::optional<PresetId> preset = PresetId::sho;
    std::optional<std::array<std::string, 4>> inline_coefficients;
    double t_max = default_t_max;
    GridSpec grid;
    std::vector<double> times;
    InitialDataSpec initial;
    SolverKind solver = SolverKind::kernel;
    ExpansionSpec expansion;
    double oracle_dt = 1e-3;
    bool pinney = false;
    std::string output_dir = "quadinv_out";

    CoefficientSet coefficients() const;
    Grid make_grid() const;
    // times, or the command's default when none were given.
    std::vector<double> output_times() const;
    nlohmann::json to_json() const;
};

// Parses JSON text; syntax errors become ConfigError with line and column.
nlohmann::json parse_config_text(const std::string& text);

// Overlays the fields of j on base, validating each one.
Scenario scenario_from_json(const nlohmann::json& j, Scenario base = {});

// Checks cross-field constraints (time ordering and range, solver/command pairing).
void validate_scenario(const Scenario& sc);

// One row of a verification table.
struct CheckResult {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct RunOutcome {
    int exit_code = 0;
    nlohmann::json manifest;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_schema = 2;
inline constexpr int exit_numerical = 3;

// Runs the scenario, writing datasets and manifest.json into out_dir. The manifest is
// written on every path, including failures. Human-readable progress goes to log.
RunOutcome run_scenario(const Scenario& sc, const std::filesystem::path& out_dir,
                        std::ostream& log);

// Writes manifest.json for a run that failed before a Scenario existed.
void write_failure_manifest(const std::filesystem::path& out_dir, const std::string& command,
                            int exit_code, const std::string& type, const std::string& message);

// Runs every scenario of a batch file concurrently, at most jobs at a time. Each
// scenario writes into out_dir / <index>_<name>. Logs are emitted in scenario order.
int run_batch(const nlohmann::json& batch, const std::filesystem::path& out_dir, int jobs,
              std::ostream& log);

// Resolves the output directory: QUADINV_OUT_DIR when set, else the given default.
std::filesystem::path resolve_output_dir(const std::string& fallback);

// "%.17g" without locale dependence.
std::string format_double(double v);

} // namespace quadinv
