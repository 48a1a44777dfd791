#pragma once

// Real-time capacity expressions for multi-hop wireless networks under
// deadline-monotonic (DM) and earliest-deadline-first (EDF) scheduling.
//
// Every function here is pure. Utilizations are dimensionless, bandwidths
// and capacities are bits/s, times are seconds.

#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace rtcap::analytics {

using NodeId = int;

enum class Scheduler { DM, EDF };
enum class TopologyClass { Balanced, Convergecast };
enum class SolveMode { Exact, Approximate };

std::string_view to_string(Scheduler s);
std::string_view to_string(TopologyClass t);
std::string_view to_string(SolveMode m);

/// Symbols feeding the closed-form bounds.
///
/// `path_length` is the hop bound of the load-balanced case; `sink_count`
/// is the number of aggregation points of the convergecast case. Path and
/// ring quantities are real-valued so the limit behaviour can be evaluated.
struct AnalyticParams {
    double node_count = 1;           // n
    double bandwidth = 250000;       // B, bits/s
    double neighborhood_bound = 1;   // u
    double alpha = 2;                // pseudo priority inversion factor
    double path_length = 1;          // N (balanced)
    double nodes_per_disk = 1;       // m
    double max_hops = 1;             // K_d
    double sink_count = 1;           // N (convergecast)

    /// Throws InvalidInput naming the first violated constraint.
    void validate() const;
};

struct PacketLoad {
    double transmission_time;  // per hop
    double relative_deadline;
};

struct CapacityBound {
    double value = 0;  // bits/s
    Scheduler scheduler = Scheduler::DM;
    TopologyClass topology = TopologyClass::Balanced;
    SolveMode mode = SolveMode::Exact;
    /// Neighborhood utilization of the most loaded contention set.
    double utilization_at_bottleneck = 0;
    /// Raw sink utilization exceeded 1 (convergecast only).
    bool saturated = false;
};

struct FeasibilityReport {
    bool feasible = true;
    double lhs = 0;
    double bound = 1;
    double margin = 1;  // bound - lhs
};

struct SinkUtilization {
    double value = 0;
    bool saturated = false;  // value > 1
};

struct RootResult {
    double root = 0;
    double residual = 0;  // f(root), signed
    int iterations = 0;
};

// ---------------------------------------------------------------------------
// utilization bookkeeping

/// Sum of T_i / D_i over the packets whose path includes a node.
double node_utilization(std::span<const PacketLoad> loads);

/// Sum of node utilizations over a contention set (the node itself included).
double neighborhood_utilization(const std::unordered_map<NodeId, double>& node_utils,
                                const std::unordered_set<NodeId>& neighborhood);

/// B times the summed node utilization of the whole network.
double network_capacity_demand(const std::unordered_map<NodeId, double>& node_utils,
                               double bandwidth);

// ---------------------------------------------------------------------------
// feasibility

/// vq (1 - vq/2) / (1 - vq): the per-hop delay in units of D_max.
/// Throws PoleError for vq >= 1 and InvalidInput for vq < 0.
double stage_delay_term(double vq);

/// D_max times the summed stage delay terms along a path.
double path_delay_bound(std::span<const double> vqs, double max_deadline);

/// Fixed-priority path test; `delta` is the minimum deadline ratio of the
/// policy (1 for deadline monotonic). A utilization at the pole makes the
/// report infeasible with an infinite left side.
FeasibilityReport dm_path_feasible(std::span<const double> vqs, double delta = 1.0);

/// EDF pipeline test: summed neighborhood utilization at most 1.
FeasibilityReport edf_path_feasible(std::span<const double> vqs);

// ---------------------------------------------------------------------------
// load-balanced traffic

/// Common neighborhood utilization that makes an N-hop path exactly DM-feasible.
double balanced_vq_bound(double path_length);

CapacityBound rtcc_balanced(Scheduler scheduler, const AnalyticParams& params);

// ---------------------------------------------------------------------------
// convergecast traffic

/// Nodes in the x-th hop ring around an aggregation point: (2x - 1) m.
double convergecast_ring_population(int ring, double nodes_per_disk);

inline constexpr double kDefaultSolverTolerance = 1e-10;
inline constexpr int kSolverIterationCap = 200;

/// Bisection for an increasing function on [lo, hi] with f(lo) <= 0 <= f(hi).
/// Stops when |f| <= tolerance; throws SolverError after `max_iterations`.
RootResult bisect_increasing(const std::function<double(double)>& f, double lo, double hi,
                             double tolerance = kDefaultSolverTolerance,
                             int max_iterations = kSolverIterationCap);

/// Left side of the convergecast DM test for sink utilization D:
/// sum over rings x = 1..K_d of stage_delay_term(D / ((2x - 1) m)).
double convergecast_dm_lhs(double sink_utilization, double nodes_per_disk, int max_hops);

/// Sink utilization D at which the convergecast DM test holds with equality.
double convergecast_dm_sink_utilization(double nodes_per_disk, int max_hops,
                                        double tolerance = kDefaultSolverTolerance);

/// sum_{x=1..K_d} 1/(2x - 1) (exact, K_d integral) or 1 + 0.5 ln K_d.
double harmonic_odd_sum(double max_hops, SolveMode mode);

/// m / harmonic_odd_sum(K_d, mode), flagged when above 1.
SinkUtilization convergecast_edf_sink_utilization(double nodes_per_disk, double max_hops,
                                                  SolveMode mode);

/// Convergecast capacity N_sinks B K_d (D/m) / alpha.
///
/// With `clamp_sink_utilization` the sink utilization D is replaced by
/// min(D, 1) before normalization. DM in approximate mode uses the EDF
/// closed form the DM bound tends to.
CapacityBound rtcc_convergecast(Scheduler scheduler, const AnalyticParams& params,
                                SolveMode mode, bool clamp_sink_utilization = false);

/// Load-balanced over convergecast capacity for equal path lengths, 1 + 0.5 ln K_d.
double balanced_vs_convergecast_ratio(double max_hops);

} // namespace rtcap::analytics
