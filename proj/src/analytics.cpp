#include "rtcap/analytics.hpp"

#include "rtcap/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace rtcap {

PoleError::PoleError(double vq)
    : std::domain_error("stage delay bound diverges at utilization " + std::to_string(vq)),
      vq_(vq) {}

SolverError::SolverError(const std::string& what, double lo_, double hi_, double residual_,
                         int iterations_)
    : std::runtime_error([&] {
          std::ostringstream os;
          os.precision(17);
          os << what << " (bracket [" << lo_ << ", " << hi_ << "], residual " << residual_
             << ", " << iterations_ << " iterations)";
          return os.str();
      }()),
      lo(lo_), hi(hi_), residual(residual_), iterations(iterations_) {}

RoutingError::RoutingError(std::vector<int> unreachable)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "no route to any sink from " << unreachable.size() << " node(s):";
          for (std::size_t i = 0; i < unreachable.size() && i < 32; ++i) os << ' ' << unreachable[i];
          if (unreachable.size() > 32) os << " ...";
          return os.str();
      }()),
      unreachable_(std::move(unreachable)) {}

} // namespace rtcap

namespace rtcap::analytics {

namespace {

constexpr double kUpperEpsilon = 1e-12;

void require(bool ok, const char* message) {
    if (!ok) throw InvalidInput(message);
}

bool is_integral(double x) { return std::isfinite(x) && std::floor(x) == x; }

} // namespace

std::string_view to_string(Scheduler s) { return s == Scheduler::DM ? "DM" : "EDF"; }

std::string_view to_string(TopologyClass t) {
    return t == TopologyClass::Balanced ? "balanced" : "convergecast";
}

std::string_view to_string(SolveMode m) { return m == SolveMode::Exact ? "exact" : "approximate"; }

void AnalyticParams::validate() const {
    require(node_count >= 1, "node_count must be >= 1");
    require(bandwidth > 0 && std::isfinite(bandwidth), "bandwidth must be positive");
    require(neighborhood_bound >= 1, "neighborhood_bound must be >= 1");
    require(alpha >= 1 && alpha <= 2, "alpha must lie in [1, 2]");
    require(path_length >= 1, "path_length must be >= 1");
    require(nodes_per_disk >= 1, "nodes_per_disk must be >= 1");
    require(max_hops >= 1, "max_hops must be >= 1");
    require(sink_count >= 1, "sink_count must be >= 1");
}

double node_utilization(std::span<const PacketLoad> loads) {
    double sum = 0;
    for (const auto& load : loads) {
        require(load.transmission_time > 0 && load.relative_deadline > 0,
                "packet load needs positive transmission time and deadline");
        require(load.transmission_time <= load.relative_deadline,
                "transmission time exceeds relative deadline");
        sum += load.transmission_time / load.relative_deadline;
    }
    return sum;
}

double neighborhood_utilization(const std::unordered_map<NodeId, double>& node_utils,
                                const std::unordered_set<NodeId>& neighborhood) {
    double sum = 0;
    for (NodeId id : neighborhood) {
        auto it = node_utils.find(id);
        if (it == node_utils.end())
            throw InvalidInput("no utilization entry for node " + std::to_string(id));
        sum += it->second;
    }
    return sum;
}

double network_capacity_demand(const std::unordered_map<NodeId, double>& node_utils,
                               double bandwidth) {
    require(bandwidth > 0, "bandwidth must be positive");
    double sum = 0;
    for (const auto& [id, ut] : node_utils) {
        require(ut >= 0, "node utilization must be nonnegative");
        sum += ut;
    }
    return bandwidth * sum;
}

double stage_delay_term(double vq) {
    require(!std::isnan(vq), "utilization is NaN");
    require(vq >= 0, "utilization must be nonnegative");
    if (vq >= 1) throw PoleError(vq);
    return vq * (1 - vq / 2) / (1 - vq);
}

double path_delay_bound(std::span<const double> vqs, double max_deadline) {
    require(max_deadline > 0, "D_max must be positive");
    double sum = 0;
    for (double vq : vqs) sum += stage_delay_term(vq);
    return max_deadline * sum;
}

FeasibilityReport dm_path_feasible(std::span<const double> vqs, double delta) {
    require(delta > 0 && delta <= 1, "delta must lie in (0, 1]");
    FeasibilityReport r;
    r.bound = delta;
    try {
        for (double vq : vqs) r.lhs += stage_delay_term(vq);
    } catch (const PoleError&) {
        r.lhs = std::numeric_limits<double>::infinity();
    }
    r.feasible = r.lhs <= r.bound;
    r.margin = r.bound - r.lhs;
    return r;
}

FeasibilityReport edf_path_feasible(std::span<const double> vqs) {
    FeasibilityReport r;
    for (double vq : vqs) {
        require(vq >= 0, "utilization must be nonnegative");
        r.lhs += vq;
    }
    r.bound = 1;
    r.feasible = r.lhs <= r.bound;
    r.margin = r.bound - r.lhs;
    return r;
}

double balanced_vq_bound(double path_length) {
    require(path_length >= 1, "path length must be >= 1");
    // 1/N + 1 - sqrt(1/N^2 + 1), rewritten to avoid cancellation at large N.
    const double a = 1 / path_length;
    return a - a * a / (1 + std::sqrt(1 + a * a));
}

CapacityBound rtcc_balanced(Scheduler scheduler, const AnalyticParams& p) {
    p.validate();
    CapacityBound b;
    b.scheduler = scheduler;
    b.topology = TopologyClass::Balanced;
    b.mode = SolveMode::Exact;
    const double scale = p.node_count * p.bandwidth / (p.neighborhood_bound * p.alpha);
    b.utilization_at_bottleneck =
        scheduler == Scheduler::DM ? balanced_vq_bound(p.path_length) : 1 / p.path_length;
    b.value = scale * b.utilization_at_bottleneck;
    return b;
}

double convergecast_ring_population(int ring, double nodes_per_disk) {
    require(ring >= 1, "ring index must be >= 1");
    require(nodes_per_disk >= 1, "nodes_per_disk must be >= 1");
    return (2.0 * ring - 1) * nodes_per_disk;
}

RootResult bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                             double tolerance, int max_iterations) {
    require(tolerance > 0, "tolerance must be positive");
    require(lo < hi, "empty bracket");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo > 0 || fhi < 0) throw SolverError("root not bracketed", lo, hi, flo, 0);
    if (std::abs(flo) <= tolerance) return {lo, flo, 0};
    if (std::abs(fhi) <= tolerance) return {hi, fhi, 0};
    for (int it = 1; it <= max_iterations; ++it) {
        const double mid = lo + (hi - lo) / 2;
        const double fm = f(mid);
        if (std::abs(fm) <= tolerance) return {mid, fm, it};
        if (mid <= lo || mid >= hi) throw SolverError("bracket collapsed", lo, hi, fm, it);
        if (fm < 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw SolverError("iteration cap reached", lo, hi, f(lo + (hi - lo) / 2), max_iterations);
}

// With v = D / ((2x-1) m):
//   v (1 - v/2) / (1 - v) = (v/2) (2 - v) / (1 - v) = (v/2) (1 + 1/(1 - v))
//                         = D / (2 (2x-1) m) * (1 + (2x-1) m / ((2x-1) m - D)),
// the last being the closed ring form of the convergecast DM test.
double convergecast_dm_lhs(double sink_utilization, double nodes_per_disk, int max_hops) {
    double sum = 0;
    for (int x = max_hops; x >= 1; --x)
        sum += stage_delay_term(sink_utilization / convergecast_ring_population(x, nodes_per_disk));
    return sum;
}

double convergecast_dm_sink_utilization(double nodes_per_disk, int max_hops, double tolerance) {
    require(nodes_per_disk >= 1, "nodes_per_disk must be >= 1");
    require(max_hops >= 1, "max_hops must be >= 1");
    // The sum is strictly increasing in D and diverges as D -> m.
    auto f = [&](double d) { return convergecast_dm_lhs(d, nodes_per_disk, max_hops) - 1; };
    return bisect_increasing(f, 0.0, nodes_per_disk * (1 - kUpperEpsilon), tolerance).root;
}

double harmonic_odd_sum(double max_hops, SolveMode mode) {
    require(max_hops >= 1, "max_hops must be >= 1");
    if (mode == SolveMode::Approximate) return 1 + 0.5 * std::log(max_hops);
    require(is_integral(max_hops), "exact harmonic sum needs an integral hop count");
    double sum = 0;
    for (long x = static_cast<long>(max_hops); x >= 1; --x) sum += 1.0 / (2.0 * x - 1);
    return sum;
}

SinkUtilization convergecast_edf_sink_utilization(double nodes_per_disk, double max_hops,
                                                  SolveMode mode) {
    require(nodes_per_disk >= 1, "nodes_per_disk must be >= 1");
    SinkUtilization s;
    s.value = nodes_per_disk / harmonic_odd_sum(max_hops, mode);
    s.saturated = s.value > 1;
    return s;
}

CapacityBound rtcc_convergecast(Scheduler scheduler, const AnalyticParams& p, SolveMode mode,
                                bool clamp_sink_utilization) {
    p.validate();
    double sink = 0;
    if (scheduler == Scheduler::DM && mode == SolveMode::Exact) {
        require(is_integral(p.max_hops), "exact DM bound needs an integral max_hops");
        sink = convergecast_dm_sink_utilization(p.nodes_per_disk, static_cast<int>(p.max_hops));
    } else {
        sink = convergecast_edf_sink_utilization(p.nodes_per_disk, p.max_hops, mode).value;
    }
    CapacityBound b;
    b.scheduler = scheduler;
    b.topology = TopologyClass::Convergecast;
    b.mode = mode;
    b.saturated = sink > 1;
    const double used = clamp_sink_utilization ? std::min(sink, 1.0) : sink;
    b.utilization_at_bottleneck = used / p.nodes_per_disk;
    b.value = p.sink_count * p.bandwidth * p.max_hops * b.utilization_at_bottleneck / p.alpha;
    return b;
}

double balanced_vs_convergecast_ratio(double max_hops) {
    require(max_hops >= 1, "max_hops must be >= 1");
    return 1 + 0.5 * std::log(max_hops);
}

} // namespace rtcap::analytics
