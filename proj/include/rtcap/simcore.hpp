#pragma once

// Packet-level discrete-event simulator for convergecast traffic over a
// disk-model network with an ideal deadline-monotonic MAC.
//
// The MAC is a centralized greedy arbiter: whenever the state changes, the
// head-of-queue packets of all idle nodes are visited in priority order and a
// transmission is granted iff neither endpoint is busy, the sender hears no
// active receiver and the receiver hears no active sender.

#include "rtcap/topology.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rtcap::sim {

using topology::NodeId;
using PacketId = std::int64_t;

enum class PacketStatus { Queued, InFlight, Delivered, Missed };

/// How the per-node arrival rate evolves over the run.
enum class LoadProfile {
    Constant,  // rate throughout
    Ramp,      // rises linearly from 0 to rate at `duration`
};

struct SimConfig {
    double bandwidth = 250000;  // bits/s
    double packet_size = 1000;  // bits
    std::vector<double> deadline_set{0.5, 1.0, 2.0};
    double arrival_rate = 1.0;  // packets/s per non-sink node
    double duration = 10.0;     // arrivals are generated on [0, duration)
    bool drop_on_miss = true;
    std::uint64_t seed = 1;
    int replications = 10;
    LoadProfile profile = LoadProfile::Constant;
    bool stop_at_first_miss = false;
    /// Re-check every grant against the full active set.
    bool audit_exclusion = true;

    double transmission_time() const { return packet_size / bandwidth; }
    void validate() const;
};

/// Total order used for medium arbitration: smaller relative deadline first,
/// then earlier release, then the random draw, then id.
struct PriorityKey {
    double relative_deadline = 0;
    double arrival_time = 0;
    std::uint64_t tie_break = 0;
    PacketId id = 0;

    friend auto operator<=>(const PriorityKey&, const PriorityKey&) = default;
};

struct Arrival {
    double time = 0;
    NodeId origin = 0;
    NodeId sink = 0;
    double relative_deadline = 0;
    std::uint64_t tie_break = 0;
    int path_hops = 0;
};

struct Workload {
    std::vector<Arrival> arrivals;  // sorted by (time, origin)
    /// Expected mean per-node transmit utilization reaches 1.
    bool overload_warning = false;
    /// Sum of path_hops * size over arrivals, divided by duration (bits/s).
    double offered_demand = 0;
};

Workload generate_workload(const topology::Topology& topo, const topology::RouteTable& routes,
                           const SimConfig& config, std::uint64_t seed);

struct Packet {
    PacketId id = 0;
    NodeId origin = 0;
    NodeId destination = 0;
    double arrival_time = 0;
    double relative_deadline = 0;
    double size = 0;  // bits
    double transmission_time = 0;
    NodeId current = 0;
    int hops_traversed = 0;
    PacketStatus status = PacketStatus::Queued;
    double delivery_time = -1;
    std::uint64_t tie_break = 0;

    double absolute_deadline() const { return arrival_time + relative_deadline; }
    PriorityKey key() const { return {relative_deadline, arrival_time, tie_break, id}; }
};

struct ActiveTransmission {
    NodeId sender = 0;
    NodeId receiver = 0;
    PacketId packet = 0;
    double completion_time = 0;
};

struct Candidate {
    NodeId sender = 0;
    NodeId receiver = 0;
    PacketId packet = 0;
    PriorityKey key;
};

/// Per-node counters of nearby activity; the grant rule lives here.
class ExclusionState {
public:
    explicit ExclusionState(const topology::Topology& topo);

    bool can_grant(NodeId sender, NodeId receiver) const;
    void add(NodeId sender, NodeId receiver);
    void remove(NodeId sender, NodeId receiver);
    bool busy(NodeId v) const { return busy_[v] != 0; }

private:
    const topology::Topology* topo_;
    std::vector<int> busy_;
    std::vector<int> near_receiver_;  // active receivers within range
    std::vector<int> near_sender_;    // active senders within range
};

/// Greedy grant in priority order over `candidates` given ongoing `active`
/// transmissions. Returns the granted candidates in grant order.
std::vector<Candidate> admissible_transmissions(std::span<const Candidate> candidates,
                                                std::span<const ActiveTransmission> active,
                                                const topology::Topology& topo);

/// True iff the set violates the exclusion rule (used for audits).
bool violates_exclusion(std::span<const ActiveTransmission> active,
                        const topology::Topology& topo);

/// Sum over packets of hops_traversed * T_i * B / D_i (bits/s).
double measured_capacity_consumption(std::span<const Packet> in_transit, double bandwidth);

struct RunMetrics {
    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    std::int64_t missed = 0;
    std::int64_t in_flight = 0;  // unresolved when the run ended
    std::int64_t transmissions = 0;
    double miss_ratio = 0;
    std::optional<double> first_miss_time;
    std::optional<double> capacity_consumption_at_first_miss;
    double offered_demand = 0;
    bool overload_warning = false;
    std::vector<double> delays;  // delivered packets, in delivery order
};

/// One arbitration pass, for audits.
struct ArbitrationRecord {
    double time = 0;
    std::vector<ActiveTransmission> active_before;
    std::vector<Candidate> candidates;  // priority order
    std::vector<Candidate> granted;
};

struct RunHooks {
    std::ostream* event_log = nullptr;
    std::function<void(const ArbitrationRecord&)> on_arbitration;
};

RunMetrics run_simulation(const topology::Topology& topo, const topology::RouteTable& routes,
                          const Workload& workload, const SimConfig& config,
                          const RunHooks& hooks = {});

/// Seeds config.seed, config.seed + 1, ... ; results in seed order.
std::vector<RunMetrics> run_replications(const topology::Topology& topo,
                                         const topology::RouteTable& routes,
                                         const SimConfig& config);

struct CriticalCapacity {
    std::optional<double> value;  // empty: no miss observed
    int replications = 0;
    int replications_with_miss = 0;
};

/// Minimum first-miss capacity consumption over replications.
CriticalCapacity critical_capacity(std::span<const RunMetrics> runs);

/// Peak over time of each node's neighborhood utilization under a workload.
/// A packet loads every transmitting node of its path during
/// [arrival, arrival + deadline); a node's contention set includes itself.
std::vector<double> peak_neighborhood_utilization(const topology::Topology& topo,
                                                  const topology::RouteTable& routes,
                                                  const Workload& workload,
                                                  const SimConfig& config);

} // namespace rtcap::sim
