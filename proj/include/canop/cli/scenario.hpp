// Scenario files: flat `key = value` text with [sections] and '#' comments.
//
//   name = parabola            top level: name, manifold, h
//   manifold = parabola-family
//   h = 0.01
//   [manifold]                 parameters of the chosen manifold
//   a = 0.5
//   [amplitude]                A (expression in tau, psi, x1, x2), mu (default | 1 | invariant | expression)
//   [grid]                     x1 = lo:hi:n, x2 = lo:hi:n
//   [cover]                    mode = auto | charts, chart = <kind> tau=lo:hi psi=lo:hi plateau=p taper=tau,psi
//   [numerics]                 method, tol, threads, dispatch_factor, radius_factor
//
// Full key list in docs/scenario-format.md.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "canop/cli/expr.hpp"
#include "canop/evaluator.hpp"
#include "canop/families.hpp"

namespace canop::cli {

/// Scenario syntax or invariant violation, located in the source text.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg);
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_, column_;
};

enum class ManifoldKind { FlatCylinder, ParabolaFamily, RadialMedium, ParaxialBeam, FlowBuilt };
std::string to_string(ManifoldKind k);

struct Scenario {
    std::string name;
    ManifoldKind kind = ManifoldKind::FlatCylinder;
    std::optional<ManifoldPatch> patch;
    std::shared_ptr<const RadialProfile> profile;   // radial medium only
    Expr amplitude;                                  // variables tau, psi, x1, x2
    double h = 0.1;
    GridSpec grid;
    bool auto_cover = true;
    std::vector<Chart> charts;
    double action_phase = 0.0;     // fields are multiplied by exp(i action_phase / h)
    std::string method = "auto";
    double tol = 1e-10;
    unsigned threads = 1;
    double dispatch_factor = 3.0;
    double radius_factor = 0.5;
    /// Resolved settings, defaults included, as (section.key, value).
    std::vector<std::pair<std::string, std::string>> resolved;

    const ManifoldPatch& manifold() const { return *patch; }
    Amplitude amplitude_fn() const;
    ChartCover cover() const { return auto_cover ? ChartCover() : ChartCover(charts); }
    /// One "key = value" line per resolved setting.
    std::string echo() const;
};

Scenario parse_scenario(std::string_view text, const std::string& source = "<inline>");
/// Reads a file, or a built-in scenario when `path` names one and no such file exists.
Scenario load_scenario(const std::string& path);

std::vector<std::string> builtin_scenarios();
/// Text of a built-in scenario; ConfigError for unknown names.
std::string builtin_scenario_text(const std::string& name);

/// "lo:hi:n" grid axis.
void parse_axis(std::string_view text, Interval& range, std::size_t& count);
/// "x1min:x1max:n1,x2min:x2max:n2"
GridSpec parse_grid(std::string_view text);

}  // namespace canop::cli
