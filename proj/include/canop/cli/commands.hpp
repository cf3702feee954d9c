// Subcommands of the canop tool: run, caustic, index, specfn, verify.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "canop/cli/scenario.hpp"

namespace canop::cli {

/// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

/// Command-line overrides applied on top of a scenario.
struct Overrides {
    std::optional<double> h;
    std::optional<GridSpec> grid;
    std::optional<std::string> method;
    std::optional<double> tol;
    std::optional<unsigned> threads;
};

void apply_overrides(Scenario& sc, const Overrides& ov);

struct RunResult {
    std::vector<FieldSample> samples;
    std::size_t failed = 0;
};

/// Evaluates the scenario grid with its method (auto | wkb | integral | airy | pearcey).
/// ConfigError when airy/pearcey is asked for and the manifold has no such focal points.
RunResult evaluate_scenario(const Scenario& sc);

/// "%.17g", with nan and inf spelled without sign noise.
std::string format_number(double v);

extern const char* const kFieldHeader;    // x1,x2,re_u,im_u,abs_u,method,branches,dist_caustic
extern const char* const kCausticHeader;  // tau,psi,x1,x2,kind

void write_field_csv(std::ostream& out, const std::vector<FieldSample>& samples);
void write_caustic_csv(std::ostream& out, const ManifoldPatch& patch);

/// Whole tool; returns the process exit code. Diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace canop::cli
