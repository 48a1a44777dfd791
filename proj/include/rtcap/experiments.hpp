#pragma once

// Parameter sweeps pairing analytic capacity bounds with simulated critical
// capacity, and their CSV serialization.

#include "rtcap/analytics.hpp"
#include "rtcap/simcore.hpp"
#include "rtcap/topology.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rtcap::experiments {

inline constexpr const char* kToolVersion = "rtcap 1.0.0";

enum class ExperimentKind {
    BalancedCurves,     // swept: path length N
    ConvergecastCurves, // swept: max hops K_d
    RadioSweep,         // swept: radio range in grid spacings
    SinkSweep,          // swept: sink count
    MissRatioSweep,     // swept: offered load / analytic DM bound
};

std::string_view to_string(ExperimentKind kind);
/// Accepts the snake_case names (balanced_curves, ...). Throws InvalidInput.
ExperimentKind parse_kind(std::string_view name);

struct GridSpec {
    int rows = 20;
    int cols = 40;
    double spacing = 10;
    double jitter = 0.25;
    std::uint64_t seed = 1;
    double range_factor = 2.0;  // radio range / spacing
    int sinks = 12;
    topology::SinkPlacement placement = topology::SinkPlacement::SubGrid;
};

struct SweepSpec {
    ExperimentKind kind = ExperimentKind::BalancedCurves;
    std::vector<double> values;
    analytics::AnalyticParams analytic;  // analytic kinds; alpha is used by all kinds
    analytics::SolveMode mode = analytics::SolveMode::Exact;
    sim::SimConfig sim;                  // replications and base seed live here
    GridSpec grid;
    /// Critical-capacity runs ramp the offered demand up to this multiple of
    /// the analytic DM bound over `ramp_duration` and stop at the first miss.
    double ramp_peak_factor = 6.0;
    double ramp_duration = 60.0;

    bool simulated() const;
    void validate() const;
};

/// Geometric load factors start * step^k up to and including `stop`.
std::vector<double> geometric_levels(double start, double stop, double step);

/// Canonical ordered description of a spec (also the CSV header block).
std::vector<std::pair<std::string, std::string>> describe(const SweepSpec& spec);
/// 64-bit FNV-1a of the canonical description, as 16 hex digits.
std::string config_hash(const SweepSpec& spec);

struct ResultRow {
    double swept = 0;
    double analytic_dm = 0;
    double analytic_edf = 0;
    std::optional<double> simulated_critical;  // min over replications
    std::optional<double> critical_mean;
    std::optional<double> critical_max;
    int replications_with_miss = 0;
    std::optional<double> miss_ratio;          // mean over replications
    std::optional<double> offered_demand;      // mean over replications
    // Measured on the instance (simulation kinds) or nominal (analytic kinds).
    int u = 0;
    int m = 0;
    double mean_neighborhood = 0;
    int max_hops = 0;
    int sinks = 0;
    double range = 0;
    std::uint64_t seed_first = 0;
    std::uint64_t seed_last = 0;
    std::string config_hash;
    bool failed = false;
    std::string error;
};

struct Aggregate {
    std::optional<double> min;
    std::optional<double> mean;
    std::optional<double> max;
    int count = 0;
};

/// Order-independent min/mean/max of the present values.
Aggregate aggregate(std::vector<std::optional<double>> samples);

struct Instance {
    topology::Topology topo;
    topology::RouteTable routes;
    topology::TopologyStats stats;
    double mean_path_hops = 0;  // over non-sink nodes
};

/// Grid, range and sinks from `grid`; throws RoutingError when disconnected.
Instance build_instance(const GridSpec& grid);

/// Analytic parameters measured from a concrete instance.
analytics::AnalyticParams measured_params(const Instance& inst, double bandwidth, double alpha);

/// Per-node arrival rate whose expected offered demand (hop-bits/s) is `demand`.
double arrival_rate_for_demand(const Instance& inst, double demand, double packet_size);

std::vector<ResultRow> run_sweep(const SweepSpec& spec);

/// Comment block, column header row and one fixed-precision line per row.
void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const SweepSpec& spec);
/// Writes into `directory` under `<kind>_<nodecount>_<confighash>.csv`.
std::filesystem::path emit_csv(const std::vector<ResultRow>& rows, const SweepSpec& spec,
                               const std::filesystem::path& directory);
std::string csv_file_name(const SweepSpec& spec);

} // namespace rtcap::experiments
