#include "rtcap/cli.hpp"

#include "rtcap/errors.hpp"
#include "rtcap/topology.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace rtcap::cli {

using analytics::CapacityBound;
using analytics::Scheduler;
using analytics::SolveMode;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
}

long long to_integer(const std::string& v) {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument(v);
}

using Setter = std::function<void(const std::string&)>;

std::map<std::string, Setter> config_keys(CliConfig& c) {
    auto dbl = [](double& t) { return Setter([&t](const std::string& v) { t = to_double(v); }); };
    auto i32 = [](int& t) {
        return Setter([&t](const std::string& v) { t = static_cast<int>(to_integer(v)); });
    };
    auto u64 = [](std::uint64_t& t) {
        return Setter([&t](const std::string& v) { t = static_cast<std::uint64_t>(to_integer(v)); });
    };
    auto str = [](std::string& t) { return Setter([&t](const std::string& v) { t = v; }); };
    auto flag = [](bool& t) { return Setter([&t](const std::string& v) { t = to_bool(v); }); };
    return {
        {"analytics.n", dbl(c.analytic.node_count)},
        {"analytics.B", dbl(c.analytic.bandwidth)},
        {"analytics.u", dbl(c.analytic.neighborhood_bound)},
        {"analytics.alpha", dbl(c.analytic.alpha)},
        {"analytics.N", dbl(c.analytic.path_length)},
        {"analytics.m", dbl(c.analytic.nodes_per_disk)},
        {"analytics.Kd", dbl(c.analytic.max_hops)},
        {"analytics.sinks", dbl(c.analytic.sink_count)},
        {"analytics.topology", str(c.topology_class)},
        {"analytics.scheduler", str(c.scheduler)},
        {"analytics.mode", str(c.mode)},
        {"analytics.clamp", flag(c.clamp)},
        {"analytics.delta", dbl(c.delta)},
        {"topology.rows", i32(c.grid.rows)},
        {"topology.cols", i32(c.grid.cols)},
        {"topology.spacing", dbl(c.grid.spacing)},
        {"topology.jitter", dbl(c.grid.jitter)},
        {"topology.grid_seed", u64(c.grid.seed)},
        {"topology.range", dbl(c.grid.range_factor)},
        {"topology.sinks", i32(c.grid.sinks)},
        {"topology.placement", str(c.placement)},
        {"sim.bandwidth", dbl(c.sim.bandwidth)},
        {"sim.packet_size", dbl(c.sim.packet_size)},
        {"sim.deadlines", str(c.deadlines)},
        {"sim.rate", dbl(c.sim.arrival_rate)},
        {"sim.duration", dbl(c.sim.duration)},
        {"sim.drop_on_miss", flag(c.sim.drop_on_miss)},
        {"sim.seed", u64(c.sim.seed)},
        {"sim.replications", i32(c.sim.replications)},
        {"sim.ramp", flag(c.ramp)},
        {"sim.stop_at_first_miss", flag(c.sim.stop_at_first_miss)},
        {"sweep.kind", str(c.kind)},
        {"sweep.values", str(c.values)},
        {"sweep.ramp_peak", dbl(c.ramp_peak_factor)},
        {"sweep.ramp_duration", dbl(c.ramp_duration)},
        {"sweep.out_dir", str(c.out_dir)},
    };
}

SolveMode parse_mode(const std::string& m) {
    if (m == "exact") return SolveMode::Exact;
    if (m == "approx" || m == "approximate") return SolveMode::Approximate;
    throw InvalidInput("mode must be exact or approx");
}

std::vector<Scheduler> parse_schedulers(const std::string& s) {
    if (s == "dm") return {Scheduler::DM};
    if (s == "edf") return {Scheduler::EDF};
    if (s == "both") return {Scheduler::DM, Scheduler::EDF};
    throw InvalidInput("scheduler must be dm, edf or both");
}

topology::SinkPlacement parse_placement(const std::string& p) {
    if (p == "subgrid") return topology::SinkPlacement::SubGrid;
    if (p == "random") return topology::SinkPlacement::Random;
    throw InvalidInput("placement must be subgrid or random");
}

void finalize_sim(CliConfig& c) {
    c.sim.deadline_set = parse_list(c.deadlines);
    c.sim.profile = c.ramp ? sim::LoadProfile::Ramp : sim::LoadProfile::Constant;
    c.grid.placement = parse_placement(c.placement);
}

int run_analyze(CliConfig& c, std::ostream& out) {
    const SolveMode mode = parse_mode(c.mode);
    std::vector<CapacityBound> bounds;

    if (c.ratio) {
        const double r = analytics::balanced_vs_convergecast_ratio(c.analytic.max_hops);
        out << "ratio balanced/convergecast (K_d=" << exact(c.analytic.max_hops) << ")  " << exact(r)
            << '\n';
    } else {
        for (Scheduler s : parse_schedulers(c.scheduler)) {
            if (c.topology_class == "balanced") {
                bounds.push_back(analytics::rtcc_balanced(s, c.analytic));
            } else if (c.topology_class == "convergecast") {
                bounds.push_back(analytics::rtcc_convergecast(s, c.analytic, mode, c.clamp));
            } else {
                throw InvalidInput("topology must be balanced or convergecast");
            }
        }
        char line[256];
        std::snprintf(line, sizeof line, "%-4s %-13s %-12s %26s  %s\n", "sched", "topology", "mode",
                      "capacity", "bottleneck utilization");
        out << line;
        for (const auto& b : bounds) {
            const std::string value = exact(b.value) + " bits/s";
            std::snprintf(line, sizeof line, "%-4s  %-13s %-12s %26s  %s%s\n",
                          std::string(analytics::to_string(b.scheduler)).c_str(),
                          std::string(analytics::to_string(b.topology)).c_str(),
                          std::string(analytics::to_string(b.mode)).c_str(), value.c_str(),
                          exact(b.utilization_at_bottleneck).c_str(),
                          b.saturated ? "  (sink utilization saturated)" : "");
            out << line;
        }
    }

    if (!c.vqs.empty()) {
        const auto vqs = parse_list(c.vqs);
        const auto dm = analytics::dm_path_feasible(vqs, c.delta);
        const auto edf = analytics::edf_path_feasible(vqs);
        for (const auto& [name, r] : {std::pair{"DM ", dm}, std::pair{"EDF", edf}}) {
            out << name << " path " << (r.feasible ? "feasible  " : "infeasible") << "  lhs "
                << exact(r.lhs) << "  bound " << exact(r.bound) << "  margin " << exact(r.margin)
                << '\n';
        }
    }

    if (!c.csv_path.empty()) {
        std::ofstream csv(c.csv_path);
        if (!csv) throw IoError("cannot write " + c.csv_path);
        csv << "scheduler,topology,mode,capacity_bits_per_s,bottleneck_utilization,saturated\n";
        for (const auto& b : bounds)
            csv << analytics::to_string(b.scheduler) << ',' << analytics::to_string(b.topology)
                << ',' << analytics::to_string(b.mode) << ',' << exact(b.value) << ','
                << exact(b.utilization_at_bottleneck) << ',' << (b.saturated ? 1 : 0) << '\n';
    }
    return 0;
}

int run_simulate(CliConfig& c, std::ostream& out) {
    finalize_sim(c);
    const auto inst = experiments::build_instance(c.grid);
    const auto params = experiments::measured_params(inst, c.sim.bandwidth, c.analytic.alpha);
    const auto dm = analytics::rtcc_convergecast(Scheduler::DM, params, SolveMode::Exact);
    const auto edf = analytics::rtcc_convergecast(Scheduler::EDF, params, SolveMode::Exact);

    if (!c.topology_out.empty()) {
        std::ofstream t(c.topology_out);
        if (!t) throw IoError("cannot write " + c.topology_out);
        topology::write_topology(t, inst.topo);
    }

    std::ofstream log;
    sim::RunHooks hooks;
    if (!c.event_log_path.empty()) {
        log.open(c.event_log_path);
        if (!log) throw IoError("cannot write " + c.event_log_path);
        hooks.event_log = &log;
    }
    const auto workload = sim::generate_workload(inst.topo, inst.routes, c.sim, c.sim.seed);
    const auto m = sim::run_simulation(inst.topo, inst.routes, workload, c.sim, hooks);

    out << "# grid " << c.grid.rows << "x" << c.grid.cols << " spacing " << exact(c.grid.spacing)
        << " jitter " << exact(c.grid.jitter) << " grid_seed " << c.grid.seed << " range "
        << exact(c.grid.range_factor * c.grid.spacing) << " sinks " << c.grid.sinks << '\n';
    out << "# bandwidth " << exact(c.sim.bandwidth) << " packet_size " << exact(c.sim.packet_size)
        << " deadlines " << c.deadlines << " rate " << exact(c.sim.arrival_rate) << " duration "
        << exact(c.sim.duration) << " profile " << (c.ramp ? "ramp" : "constant")
        << " drop_on_miss " << (c.sim.drop_on_miss ? "true" : "false") << " seed " << c.sim.seed
        << " alpha " << exact(c.analytic.alpha) << '\n';
    out << "measured u " << inst.stats.u << "  m " << inst.stats.m << "  K_d "
        << inst.stats.max_hops << "  mean path " << exact(inst.mean_path_hops) << " hops\n";
    out << "analytic DM bound     " << exact(dm.value) << " bits/s\n";
    out << "analytic EDF bound    " << exact(edf.value) << " bits/s\n";
    out << "offered demand        " << exact(m.offered_demand) << " bits/s"
        << (m.overload_warning ? "  (overload warning)" : "") << '\n';
    out << "generated             " << m.generated << '\n';
    out << "delivered             " << m.delivered << '\n';
    out << "missed                " << m.missed << '\n';
    out << "in flight             " << m.in_flight << '\n';
    out << "miss ratio            " << exact(m.miss_ratio) << '\n';
    if (m.capacity_consumption_at_first_miss) {
        out << "first miss at         " << exact(*m.first_miss_time) << " s\n";
        out << "consumption at miss   " << exact(*m.capacity_consumption_at_first_miss)
            << " bits/s\n";
    } else {
        out << "first miss            none\n";
    }
    return 0;
}

std::vector<double> default_values(experiments::ExperimentKind kind) {
    using experiments::ExperimentKind;
    std::vector<double> v;
    switch (kind) {
    case ExperimentKind::BalancedCurves:
        for (int n = 1; n <= 30; ++n) v.push_back(n);
        break;
    case ExperimentKind::ConvergecastCurves:
        for (int k = 1; k <= 64; ++k) v.push_back(k);
        break;
    case ExperimentKind::RadioSweep: v = {1.5, 2.0, 2.5, 3.0}; break;
    case ExperimentKind::SinkSweep: v = {1, 2, 4, 8, 16}; break;
    case ExperimentKind::MissRatioSweep: v = experiments::geometric_levels(0.25, 4.0, 1.25); break;
    }
    return v;
}

int run_sweep(CliConfig& c, std::ostream& out) {
    finalize_sim(c);
    experiments::SweepSpec spec;
    spec.kind = experiments::parse_kind(c.kind);
    spec.values = c.values.empty() ? default_values(spec.kind) : parse_list(c.values);
    spec.analytic = c.analytic;
    spec.mode = parse_mode(c.mode);
    spec.sim = c.sim;
    spec.grid = c.grid;
    spec.ramp_peak_factor = c.ramp_peak_factor;
    spec.ramp_duration = c.ramp_duration;

    const auto rows = experiments::run_sweep(spec);
    const auto path = experiments::emit_csv(rows, spec, c.out_dir);
    int failed = 0;
    for (const auto& r : rows) {
        if (c.verbosity > 0 || r.failed) {
            out << experiments::to_string(spec.kind) << " " << exact(r.swept) << "  dm "
                << exact(r.analytic_dm) << "  edf " << exact(r.analytic_edf);
            if (r.simulated_critical) out << "  critical " << exact(*r.simulated_critical);
            if (r.miss_ratio) out << "  miss_ratio " << exact(*r.miss_ratio);
            if (r.failed) out << "  error: " << r.error;
            out << '\n';
        }
        failed += r.failed ? 1 : 0;
    }
    out << "wrote " << rows.size() << " rows to " << path.string() << '\n';
    return failed > 0 ? 2 : 0;
}

void add_analytic_flags(CLI::App& app, CliConfig& c) {
    app.add_option("--n", c.analytic.node_count, "node count n");
    app.add_option("--B", c.analytic.bandwidth, "effective bandwidth B (bits/s)");
    app.add_option("--u", c.analytic.neighborhood_bound, "neighborhood size bound u");
    app.add_option("--N", c.analytic.path_length, "path length (balanced)");
    app.add_option("--alpha", c.analytic.alpha, "priority inversion factor in [1, 2]");
    app.add_option("--m", c.analytic.nodes_per_disk, "nodes per radio disk m");
    app.add_option("--Kd", c.analytic.max_hops, "max convergecast hops K_d");
    app.add_option("--aggregation-points", c.analytic.sink_count, "sink count (convergecast)");
    app.add_option("--mode", c.mode, "exact or approx");
}

void add_sim_flags(CLI::App& app, CliConfig& c) {
    app.add_option("--rows", c.grid.rows, "grid rows");
    app.add_option("--cols", c.grid.cols, "grid columns");
    app.add_option("--spacing", c.grid.spacing, "grid spacing (m)");
    app.add_option("--jitter", c.grid.jitter, "placement jitter, fraction of spacing");
    app.add_option("--grid-seed", c.grid.seed, "placement seed");
    app.add_option("--range", c.grid.range_factor, "radio range in grid spacings");
    app.add_option("--sinks", c.grid.sinks, "sink count");
    app.add_option("--placement", c.placement, "subgrid or random");
    app.add_option("--bandwidth", c.sim.bandwidth, "bandwidth (bits/s)");
    app.add_option("--packet-size", c.sim.packet_size, "packet size (bits)");
    app.add_option("--deadlines", c.deadlines, "comma-separated deadline set (s)");
    app.add_option("--duration", c.sim.duration, "arrival window (s)");
    app.add_option("--drop-on-miss", c.sim.drop_on_miss, "drop packets once they miss");
    app.add_option("--seed", c.sim.seed, "workload seed");
}

} // namespace

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(to_double(item));
        } catch (const std::exception&) {
            throw InvalidInput("not a number: '" + item + "'");
        }
    }
    return out;
}

std::vector<std::string> apply_config_text(const std::string& text, CliConfig& cfg) {
    auto keys = config_keys(cfg);
    std::vector<std::string> offending;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            offending.push_back(line + " (expected key = value)");
            continue;
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = keys.find(key);
        if (it == keys.end()) {
            offending.push_back(key);
            continue;
        }
        try {
            it->second(value);
        } catch (const std::exception&) {
            offending.push_back(key + " (bad value '" + value + "')");
        }
    }
    return offending;
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CliConfig c;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) c.out_dir = env;

    // The config file is applied before flags so that flags take precedence.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") c.config_path = argv[i + 1];
    }
    if (!c.config_path.empty()) {
        std::ifstream f(c.config_path);
        if (!f) {
            err << "error: cannot read config file " << c.config_path << '\n';
            return 1;
        }
        std::stringstream buf;
        buf << f.rdbuf();
        const auto bad = apply_config_text(buf.str(), c);
        if (!bad.empty()) {
            err << "error: invalid config keys in " << c.config_path << ":\n";
            for (const auto& k : bad) err << "  " << k << '\n';
            return 1;
        }
    }

    CLI::App app{"Real-time capacity bounds and convergecast simulation for wireless sensor networks",
                 "rtcap"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
    app.add_option("--out-dir", c.out_dir, std::string("output directory (default $") + kOutDirEnv + ")");
    app.add_flag("-v,--verbose", c.verbosity, "more output");

    auto* analyze = app.add_subcommand("analyze", "evaluate capacity bounds and path feasibility");
    add_analytic_flags(*analyze, c);
    analyze->add_option("--topology", c.topology_class, "balanced or convergecast");
    analyze->add_option("--scheduler", c.scheduler, "dm, edf or both");
    analyze->add_option("--sinks", c.analytic.sink_count, "sink count (convergecast)");
    analyze->add_flag("--clamp", c.clamp, "clamp sink utilization at 1");
    analyze->add_flag("--ratio", c.ratio, "print the balanced/convergecast ratio for --Kd");
    analyze->add_option("--vq", c.vqs, "comma-separated neighborhood utilizations of a path");
    analyze->add_option("--delta", c.delta, "deadline ratio bound of the fixed-priority test");
    analyze->add_option("--csv", c.csv_path, "also write the bounds as CSV");

    auto* simulate = app.add_subcommand("simulate", "run one seeded simulation");
    add_sim_flags(*simulate, c);
    simulate->add_option("--alpha", c.analytic.alpha, "priority inversion factor for the bound");
    simulate->add_option("--rate", c.sim.arrival_rate, "packets/s per non-sink node");
    simulate->add_flag("--ramp", c.ramp, "ramp the rate linearly from zero");
    simulate->add_flag("--stop-at-first-miss", c.sim.stop_at_first_miss, "end the run at the first miss");
    simulate->add_option("--event-log", c.event_log_path, "write the event log here");
    simulate->add_option("--topology-out", c.topology_out, "write the node list here");

    auto* sweep = app.add_subcommand("sweep", "regenerate a figure's data series as CSV");
    add_sim_flags(*sweep, c);
    add_analytic_flags(*sweep, c);
    sweep->add_option("--kind", c.kind,
                      "balanced_curves, convergecast_curves, radio_sweep, sink_sweep or missratio_sweep");
    sweep->add_option("--values", c.values, "comma-separated swept values");
    sweep->add_option("--reps", c.sim.replications, "replications per swept value");
    sweep->add_option("--ramp-peak", c.ramp_peak_factor, "ramp peak as a multiple of the DM bound");
    sweep->add_option("--ramp-duration", c.ramp_duration, "ramp length (s)");

    if (argc <= 1) {
        err << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (analyze->parsed()) return run_analyze(c, out);
        if (simulate->parsed()) return run_simulate(c, out);
        if (sweep->parsed()) return run_sweep(c, out);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

} // namespace rtcap::cli
