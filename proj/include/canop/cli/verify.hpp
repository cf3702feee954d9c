// Named verification checks with measured numbers; "all" runs the acceptance suite.
#pragma once

#include <string>
#include <vector>

namespace canop::cli {

struct CheckReport {
    int id = 0;                 // acceptance number, 1..12
    std::string name;           // verify name, e.g. "flat-bessel"
    std::string title;
    bool passed = false;
    std::string summary;        // measured vs tolerance, one line
    std::vector<std::string> details;
    double seconds = 0.0;
};

/// Check names in acceptance order.
std::vector<std::string> verify_names();

/// Runs one named check, or all of them for "all". ConfigError for unknown names.
std::vector<CheckReport> run_verify(const std::string& name, unsigned threads = 1);

/// "PASS  1 flat-bessel      Bessel identity: ..." style line.
std::string format_report_line(const CheckReport& r);

}  // namespace canop::cli
