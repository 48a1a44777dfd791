#pragma once

// Evaluation networks: perturbed grid placement, closed-disk radio
// connectivity, sink placement and shortest-hop convergecast routes.

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace rtcap::topology {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

struct Position {
    double x = 0;
    double y = 0;
};

double distance(Position a, Position b);

struct Node {
    NodeId id = 0;
    Position position;
    bool is_sink = false;
};

struct GridShape {
    int rows = 0;
    int cols = 0;
    double spacing = 0;
    double jitter = 0;  // fraction of spacing
    std::uint64_t seed = 0;
};

enum class SinkPlacement { SubGrid, Random };

/// Node set plus disk-model adjacency. Node ids equal their index.
struct Topology {
    std::vector<Node> nodes;
    double radio_range = 0;
    GridShape grid;
    /// Sorted neighbor lists, self excluded.
    std::vector<std::vector<NodeId>> adjacency;

    std::size_t size() const { return nodes.size(); }
    bool adjacent(NodeId a, NodeId b) const;
    /// Neighbors plus the node itself, sorted.
    std::vector<NodeId> contention_set(NodeId v) const;
    std::vector<NodeId> sinks() const;
    std::vector<NodeId> isolated_nodes() const;
};

/// Node (r, c) sits at (c s + dx, r s + dy), dx, dy ~ U[-jitter s, jitter s].
/// Ids are row-major. Adjacency is left empty until `connect`.
Topology generate_perturbed_grid(int rows, int cols, double spacing, double jitter,
                                 std::uint64_t seed);

/// Arbitrary placement, e.g. for hand-built test instances.
Topology from_positions(const std::vector<Position>& positions);

/// a ~ b iff |a - b| <= range (closed disk).
std::vector<std::vector<NodeId>> compute_adjacency(const std::vector<Node>& nodes, double range);

/// Sets the radio range and recomputes adjacency.
void connect(Topology& topo, double range);

/// Marks `sink_count` nodes as sinks and returns their ids (sorted).
///
/// SubGrid picks an evenly spaced sr x sc selection of grid rows and columns
/// (cell i of a dimension with n entries split k ways is floor((2i+1) n / 2k)).
/// Random samples uniformly with `seed`. Non-grid topologies always use
/// evenly spaced ids.
std::vector<NodeId> place_sinks(Topology& topo, int sink_count,
                                SinkPlacement placement = SinkPlacement::SubGrid,
                                std::uint64_t seed = 0);

struct RouteTable {
    std::vector<NodeId> next_hop;       // kNoNode for sinks
    std::vector<int> hop_count;         // 0 for sinks
    std::vector<NodeId> assigned_sink;  // sinks map to themselves

    /// Nodes visited from `origin` to its sink, both ends included.
    std::vector<NodeId> path(NodeId origin) const;
};

/// Multi-source BFS from the flagged sinks. The next hop is the neighbor with
/// the smallest hop count, ties to the smallest id. Throws RoutingError listing
/// nodes that cannot reach a sink.
RouteTable build_routes(const Topology& topo);

struct TopologyStats {
    int u = 0;          // max contention set size
    int max_hops = 0;   // K_d
    int m = 0;          // mean contention set size, rounded
    double mean_contention = 0;
};

TopologyStats topology_stats(const Topology& topo, const RouteTable& routes);

/// Plain-text node list with a commented header carrying range and grid.
void write_topology(std::ostream& out, const Topology& topo);
/// Inverse of write_topology; adjacency is recomputed from the range.
Topology read_topology(std::istream& in);

} // namespace rtcap::topology
