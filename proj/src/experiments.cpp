#include "rtcap/experiments.hpp"

#include "rtcap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace rtcap::experiments {

using analytics::Scheduler;

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

bool is_integral(double v) { return std::isfinite(v) && std::floor(v) == v; }

} // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::BalancedCurves: return "balanced_curves";
    case ExperimentKind::ConvergecastCurves: return "convergecast_curves";
    case ExperimentKind::RadioSweep: return "radio_sweep";
    case ExperimentKind::SinkSweep: return "sink_sweep";
    case ExperimentKind::MissRatioSweep: return "missratio_sweep";
    }
    return "unknown";
}

ExperimentKind parse_kind(std::string_view name) {
    for (auto k : {ExperimentKind::BalancedCurves, ExperimentKind::ConvergecastCurves,
                   ExperimentKind::RadioSweep, ExperimentKind::SinkSweep,
                   ExperimentKind::MissRatioSweep})
        if (to_string(k) == name) return k;
    throw InvalidInput("unknown experiment kind '" + std::string(name) + "'");
}

bool SweepSpec::simulated() const {
    return kind == ExperimentKind::RadioSweep || kind == ExperimentKind::SinkSweep ||
           kind == ExperimentKind::MissRatioSweep;
}

void SweepSpec::validate() const {
    if (values.empty()) throw InvalidInput("sweep needs at least one value");
    if (!std::is_sorted(values.begin(), values.end()))
        throw InvalidInput("sweep values must be sorted ascending");
    for (double v : values) {
        switch (kind) {
        case ExperimentKind::BalancedCurves:
            if (!(v >= 1)) throw InvalidInput("path lengths must be >= 1");
            break;
        case ExperimentKind::ConvergecastCurves:
            if (!(v >= 1)) throw InvalidInput("hop counts must be >= 1");
            if (mode == analytics::SolveMode::Exact && !is_integral(v))
                throw InvalidInput("exact convergecast curves need integral hop counts");
            break;
        case ExperimentKind::RadioSweep:
            if (!(v > 0)) throw InvalidInput("radio range factors must be positive");
            break;
        case ExperimentKind::SinkSweep:
            if (!is_integral(v) || v < 1 || v > static_cast<double>(grid.rows) * grid.cols)
                throw InvalidInput("sink counts must be integers in [1, node count]");
            break;
        case ExperimentKind::MissRatioSweep:
            if (!(v >= 0)) throw InvalidInput("load factors must be nonnegative");
            break;
        }
    }
    analytic.validate();
    if (simulated()) {
        sim.validate();
        if (grid.rows < 1 || grid.cols < 1 || !(grid.spacing > 0) || !(grid.range_factor > 0))
            throw InvalidInput("grid needs positive dimensions, spacing and range");
        if (grid.sinks < 1) throw InvalidInput("grid needs at least one sink");
        if (!(ramp_peak_factor > 0) || !(ramp_duration > 0))
            throw InvalidInput("ramp peak factor and duration must be positive");
    }
}

std::vector<double> geometric_levels(double start, double stop, double step) {
    if (!(start > 0) || !(stop >= start) || !(step > 1))
        throw InvalidInput("geometric levels need 0 < start <= stop and step > 1");
    std::vector<double> out;
    double v = start;
    for (int k = 0; v <= stop * (1 + 1e-12); ++k) {
        out.push_back(v);
        v = start * std::pow(step, k + 1);
    }
    if (std::abs(out.back() - stop) > 1e-9 * stop) out.push_back(stop);
    return out;
}

std::vector<std::pair<std::string, std::string>> describe(const SweepSpec& spec) {
    std::vector<std::pair<std::string, std::string>> d;
    d.emplace_back("kind", std::string(to_string(spec.kind)));
    std::string values;
    for (double v : spec.values) values += (values.empty() ? "" : ";") + fmt(v);
    d.emplace_back("values", values);
    d.emplace_back("mode", std::string(analytics::to_string(spec.mode)));
    d.emplace_back("alpha", fmt(spec.analytic.alpha));
    if (!spec.simulated()) {
        const auto& a = spec.analytic;
        d.emplace_back("node_count", fmt(a.node_count));
        d.emplace_back("bandwidth", fmt(a.bandwidth));
        d.emplace_back("neighborhood_bound", fmt(a.neighborhood_bound));
        d.emplace_back("path_length", fmt(a.path_length));
        d.emplace_back("nodes_per_disk", fmt(a.nodes_per_disk));
        d.emplace_back("max_hops", fmt(a.max_hops));
        d.emplace_back("sink_count", fmt(a.sink_count));
        return d;
    }
    const auto& s = spec.sim;
    const auto& g = spec.grid;
    d.emplace_back("bandwidth", fmt(s.bandwidth));
    d.emplace_back("packet_size", fmt(s.packet_size));
    std::string deadlines;
    for (double v : s.deadline_set) deadlines += (deadlines.empty() ? "" : ";") + fmt(v);
    d.emplace_back("deadline_set", deadlines);
    d.emplace_back("duration", fmt(s.duration));
    d.emplace_back("drop_on_miss", s.drop_on_miss ? "true" : "false");
    d.emplace_back("seed", std::to_string(s.seed));
    d.emplace_back("replications", std::to_string(s.replications));
    d.emplace_back("arrival_process", "poisson");
    d.emplace_back("grid_rows", std::to_string(g.rows));
    d.emplace_back("grid_cols", std::to_string(g.cols));
    d.emplace_back("grid_spacing", fmt(g.spacing));
    d.emplace_back("grid_jitter", fmt(g.jitter));
    d.emplace_back("grid_seed", std::to_string(g.seed));
    d.emplace_back("range_factor", fmt(g.range_factor));
    d.emplace_back("sinks", std::to_string(g.sinks));
    d.emplace_back("sink_placement",
                   g.placement == topology::SinkPlacement::SubGrid ? "subgrid" : "random");
    d.emplace_back("ramp_peak_factor", fmt(spec.ramp_peak_factor));
    d.emplace_back("ramp_duration", fmt(spec.ramp_duration));
    return d;
}

std::string config_hash(const SweepSpec& spec) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [k, v] : describe(spec)) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Aggregate aggregate(std::vector<std::optional<double>> samples) {
    std::vector<double> present;
    for (const auto& s : samples)
        if (s) present.push_back(*s);
    Aggregate a;
    a.count = static_cast<int>(present.size());
    if (present.empty()) return a;
    std::sort(present.begin(), present.end());
    double sum = 0;
    for (double v : present) sum += v;
    a.min = present.front();
    a.max = present.back();
    a.mean = sum / static_cast<double>(present.size());
    return a;
}

Instance build_instance(const GridSpec& grid) {
    Instance inst;
    inst.topo = topology::generate_perturbed_grid(grid.rows, grid.cols, grid.spacing, grid.jitter,
                                                  grid.seed);
    topology::connect(inst.topo, grid.range_factor * grid.spacing);
    topology::place_sinks(inst.topo, grid.sinks, grid.placement, grid.seed);
    inst.routes = topology::build_routes(inst.topo);
    inst.stats = topology::topology_stats(inst.topo, inst.routes);
    double hops = 0;
    int sources = 0;
    for (const auto& n : inst.topo.nodes) {
        if (n.is_sink) continue;
        hops += inst.routes.hop_count[n.id];
        ++sources;
    }
    inst.mean_path_hops = sources > 0 ? hops / sources : 0;
    return inst;
}

analytics::AnalyticParams measured_params(const Instance& inst, double bandwidth, double alpha) {
    analytics::AnalyticParams p;
    p.node_count = static_cast<double>(inst.topo.size());
    p.bandwidth = bandwidth;
    p.neighborhood_bound = inst.stats.u;
    p.alpha = alpha;
    p.nodes_per_disk = std::max(inst.stats.m, 1);
    p.max_hops = std::max(inst.stats.max_hops, 1);
    p.path_length = p.max_hops;
    p.sink_count = static_cast<double>(inst.topo.sinks().size());
    return p;
}

double arrival_rate_for_demand(const Instance& inst, double demand, double packet_size) {
    double hops = 0;
    for (const auto& n : inst.topo.nodes)
        if (!n.is_sink) hops += inst.routes.hop_count[n.id];
    if (hops <= 0) return 0;
    return demand / (hops * packet_size);
}

namespace {

ResultRow analytic_row(const SweepSpec& spec, double value) {
    ResultRow row;
    row.swept = value;
    auto p = spec.analytic;
    if (spec.kind == ExperimentKind::BalancedCurves) {
        p.path_length = value;
        row.analytic_dm = analytics::rtcc_balanced(Scheduler::DM, p).value;
        row.analytic_edf = analytics::rtcc_balanced(Scheduler::EDF, p).value;
        row.max_hops = static_cast<int>(std::lround(value));
    } else {
        p.max_hops = value;
        row.analytic_dm = analytics::rtcc_convergecast(Scheduler::DM, p, spec.mode).value;
        row.analytic_edf = analytics::rtcc_convergecast(Scheduler::EDF, p, spec.mode).value;
        row.max_hops = static_cast<int>(std::lround(value));
    }
    row.u = static_cast<int>(std::lround(p.neighborhood_bound));
    row.m = static_cast<int>(std::lround(p.nodes_per_disk));
    row.mean_neighborhood = p.nodes_per_disk;
    row.sinks = static_cast<int>(std::lround(p.sink_count));
    return row;
}

ResultRow simulated_row(const SweepSpec& spec, double value) {
    ResultRow row;
    row.swept = value;
    row.seed_first = spec.sim.seed;
    row.seed_last = spec.sim.seed + static_cast<std::uint64_t>(spec.sim.replications) - 1;

    GridSpec grid = spec.grid;
    if (spec.kind == ExperimentKind::RadioSweep) grid.range_factor = value;
    if (spec.kind == ExperimentKind::SinkSweep) grid.sinks = static_cast<int>(value);
    row.sinks = grid.sinks;
    row.range = grid.range_factor * grid.spacing;

    try {
        const Instance inst = build_instance(grid);
        row.u = inst.stats.u;
        row.m = inst.stats.m;
        row.mean_neighborhood = inst.stats.mean_contention;
        row.max_hops = inst.stats.max_hops;

        // Analytic side always comes from the measured instance.
        const auto params = measured_params(inst, spec.sim.bandwidth, spec.analytic.alpha);
        row.analytic_dm = analytics::rtcc_convergecast(Scheduler::DM, params, spec.mode).value;
        row.analytic_edf = analytics::rtcc_convergecast(Scheduler::EDF, params, spec.mode).value;

        sim::SimConfig cfg = spec.sim;
        if (spec.kind == ExperimentKind::MissRatioSweep) {
            cfg.profile = sim::LoadProfile::Constant;
            cfg.stop_at_first_miss = false;
            cfg.arrival_rate =
                arrival_rate_for_demand(inst, value * row.analytic_dm, cfg.packet_size);
        } else {
            cfg.profile = sim::LoadProfile::Ramp;
            cfg.stop_at_first_miss = true;
            cfg.duration = spec.ramp_duration;
            cfg.arrival_rate = arrival_rate_for_demand(
                inst, spec.ramp_peak_factor * row.analytic_dm, cfg.packet_size);
        }

        const auto runs = sim::run_replications(inst.topo, inst.routes, cfg);
        std::vector<std::optional<double>> first_miss, ratios, demand;
        for (const auto& r : runs) {
            first_miss.push_back(r.capacity_consumption_at_first_miss);
            ratios.push_back(r.miss_ratio);
            demand.push_back(r.offered_demand);
        }
        const auto crit = aggregate(first_miss);
        row.simulated_critical = sim::critical_capacity(runs).value;
        row.critical_mean = crit.mean;
        row.critical_max = crit.max;
        row.replications_with_miss = crit.count;
        if (spec.kind == ExperimentKind::MissRatioSweep) {
            row.miss_ratio = aggregate(ratios).mean;
            row.offered_demand = aggregate(demand).mean;
        }
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
    }
    return row;
}

} // namespace

std::vector<ResultRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    const std::string hash = config_hash(spec);
    std::vector<ResultRow> rows;
    rows.reserve(spec.values.size());
    for (double v : spec.values) {
        ResultRow row = spec.simulated() ? simulated_row(spec, v) : analytic_row(spec, v);
        row.config_hash = hash;
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const SweepSpec& spec) {
    if (rows.empty()) throw InvalidInput("no rows to write");
    out << "# " << kToolVersion << '\n';
    out << "# config_hash: " << config_hash(spec) << '\n';
    for (const auto& [k, v] : describe(spec)) out << "# " << k << ": " << v << '\n';
    out << "swept,analytic_dm,analytic_edf,simulated_critical,critical_mean,critical_max,"
           "reps_with_miss,miss_ratio,offered_demand,u,m,mean_neighborhood,max_hops,sinks,range,"
           "seed_first,seed_last,config_hash,status\n";
    for (const auto& r : rows) {
        std::string status = r.failed ? "error: " + r.error : "ok";
        std::replace(status.begin(), status.end(), ',', ';');
        out << fmt(r.swept) << ',' << fmt(r.analytic_dm) << ',' << fmt(r.analytic_edf) << ','
            << fmt(r.simulated_critical) << ',' << fmt(r.critical_mean) << ','
            << fmt(r.critical_max) << ',' << r.replications_with_miss << ','
            << fmt(r.miss_ratio) << ',' << fmt(r.offered_demand) << ',' << r.u << ',' << r.m
            << ',' << fmt(r.mean_neighborhood) << ',' << r.max_hops << ',' << r.sinks << ','
            << fmt(r.range) << ',' << r.seed_first << ',' << r.seed_last << ',' << r.config_hash
            << ',' << status << '\n';
    }
}

std::string csv_file_name(const SweepSpec& spec) {
    const long long nodes = spec.simulated()
                                ? static_cast<long long>(spec.grid.rows) * spec.grid.cols
                                : std::llround(spec.analytic.node_count);
    return std::string(to_string(spec.kind)) + "_" + std::to_string(nodes) + "_" +
           config_hash(spec) + ".csv";
}

std::filesystem::path emit_csv(const std::vector<ResultRow>& rows, const SweepSpec& spec,
                               const std::filesystem::path& directory) {
    if (rows.empty()) throw InvalidInput("no rows to write");
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    const auto path = directory / csv_file_name(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_csv(out, rows, spec);
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
    return path;
}

} // namespace rtcap::experiments
