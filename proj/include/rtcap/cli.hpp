#pragma once

#include "rtcap/analytics.hpp"
#include "rtcap/experiments.hpp"
#include "rtcap/simcore.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace rtcap::cli {

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "RTCAP_OUT_DIR";

/// Everything a command can be configured with. Config file values are
/// applied first; command-line flags override them.
struct CliConfig {
    std::string command;
    std::string config_path;
    std::string out_dir = ".";
    int verbosity = 0;

    // analyze
    analytics::AnalyticParams analytic{250, 250000, 10, 2, 5, 10, 8, 4};
    std::string topology_class = "balanced";
    std::string scheduler = "both";
    std::string mode = "exact";
    bool clamp = false;
    bool ratio = false;
    std::string vqs;  // comma list for feasibility reports
    double delta = 1.0;
    std::string csv_path;

    // simulate / sweep
    experiments::GridSpec grid;
    sim::SimConfig sim;
    std::string deadlines = "0.5,1,2";
    std::string placement = "subgrid";
    bool ramp = false;
    std::string event_log_path;
    std::string topology_out;

    // sweep
    std::string kind = "balanced_curves";
    std::string values;
    double ramp_peak_factor = 6.0;
    double ramp_duration = 60.0;
};

std::vector<double> parse_list(const std::string& text);

/// Applies a flat `key = value` file with [analytics], [topology], [sim] and
/// [sweep] sections. Returns the offending keys (unknown or unparsable).
std::vector<std::string> apply_config_text(const std::string& text, CliConfig& cfg);

/// Full command-line entry point: 0 on success, 1 on usage error, 2 on
/// solver or simulation failure.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace rtcap::cli
