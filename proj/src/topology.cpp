#include "rtcap/topology.hpp"

#include "rtcap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace rtcap::topology {

double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Topology::adjacent(NodeId a, NodeId b) const {
    const auto& adj = adjacency.at(a);
    return std::binary_search(adj.begin(), adj.end(), b);
}

std::vector<NodeId> Topology::contention_set(NodeId v) const {
    std::vector<NodeId> set = adjacency.at(v);
    set.insert(std::upper_bound(set.begin(), set.end(), v), v);
    return set;
}

std::vector<NodeId> Topology::sinks() const {
    std::vector<NodeId> out;
    for (const auto& n : nodes)
        if (n.is_sink) out.push_back(n.id);
    return out;
}

std::vector<NodeId> Topology::isolated_nodes() const {
    std::vector<NodeId> out;
    for (std::size_t v = 0; v < adjacency.size(); ++v)
        if (adjacency[v].empty()) out.push_back(static_cast<NodeId>(v));
    return out;
}

Topology generate_perturbed_grid(int rows, int cols, double spacing, double jitter,
                                 std::uint64_t seed) {
    if (rows < 1 || cols < 1) throw InvalidInput("grid needs at least one row and column");
    if (!(spacing > 0)) throw InvalidInput("grid spacing must be positive");
    if (!(jitter >= 0 && jitter < 0.5)) throw InvalidInput("jitter must lie in [0, 0.5)");

    Topology topo;
    topo.grid = {rows, cols, spacing, jitter, seed};
    topo.nodes.reserve(static_cast<std::size_t>(rows) * cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> offset(-jitter * spacing, jitter * spacing);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            Node n;
            n.id = static_cast<NodeId>(topo.nodes.size());
            n.position = {c * spacing, r * spacing};
            if (jitter > 0) {
                n.position.x += offset(rng);
                n.position.y += offset(rng);
            }
            topo.nodes.push_back(n);
        }
    }
    topo.adjacency.assign(topo.nodes.size(), {});
    return topo;
}

Topology from_positions(const std::vector<Position>& positions) {
    Topology topo;
    for (const auto& p : positions) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("non-finite position");
        topo.nodes.push_back({static_cast<NodeId>(topo.nodes.size()), p, false});
    }
    topo.adjacency.assign(topo.nodes.size(), {});
    return topo;
}

std::vector<std::vector<NodeId>> compute_adjacency(const std::vector<Node>& nodes, double range) {
    if (!(range > 0)) throw InvalidInput("radio range must be positive");
    std::vector<std::vector<NodeId>> adj(nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a) {
        for (std::size_t b = a + 1; b < nodes.size(); ++b) {
            if (distance(nodes[a].position, nodes[b].position) <= range) {
                adj[a].push_back(static_cast<NodeId>(b));
                adj[b].push_back(static_cast<NodeId>(a));
            }
        }
    }
    // Lists come out sorted: smaller ids are appended before larger ones.
    return adj;
}

void connect(Topology& topo, double range) {
    topo.adjacency = compute_adjacency(topo.nodes, range);
    topo.radio_range = range;
}

namespace {

// Split k = sr * sc so that sr/sc best matches rows/cols; ties go to the
// squarer split. Returns {0, 0} if no factorization fits the grid.
std::pair<int, int> factor_sink_grid(int k, int rows, int cols) {
    std::pair<int, int> best{0, 0};
    double best_score = std::numeric_limits<double>::infinity();
    const double target = std::log(static_cast<double>(rows) / cols);
    for (int sr = 1; sr <= k; ++sr) {
        if (k % sr != 0) continue;
        const int sc = k / sr;
        if (sr > rows || sc > cols) continue;
        const double score = std::abs(std::log(static_cast<double>(sr) / sc) - target);
        const bool squarer = std::abs(sr - sc) < std::abs(best.first - best.second);
        if (score < best_score - 1e-12 || (std::abs(score - best_score) <= 1e-12 && squarer)) {
            best = {sr, sc};
            best_score = score;
        }
    }
    return best;
}

int spread_index(int i, int n, int k) {
    return static_cast<int>((2LL * i + 1) * n / (2LL * k));
}

} // namespace

std::vector<NodeId> place_sinks(Topology& topo, int sink_count, SinkPlacement placement,
                                std::uint64_t seed) {
    const int n = static_cast<int>(topo.nodes.size());
    if (sink_count < 1) throw InvalidInput("sink_count must be >= 1");
    if (sink_count > n) throw InvalidInput("sink_count exceeds node count");
    for (auto& node : topo.nodes) node.is_sink = false;

    std::vector<NodeId> chosen;
    const auto& g = topo.grid;
    const bool is_grid = g.rows > 0 && g.cols > 0 && g.rows * g.cols == n;

    if (placement == SinkPlacement::Random) {
        std::vector<NodeId> ids(n);
        std::iota(ids.begin(), ids.end(), 0);
        std::mt19937_64 rng(seed);
        std::shuffle(ids.begin(), ids.end(), rng);
        chosen.assign(ids.begin(), ids.begin() + sink_count);
    } else if (is_grid) {
        auto [sr, sc] = factor_sink_grid(sink_count, g.rows, g.cols);
        if (sr > 0) {
            for (int i = 0; i < sr; ++i)
                for (int j = 0; j < sc; ++j)
                    chosen.push_back(spread_index(i, g.rows, sr) * g.cols +
                                     spread_index(j, g.cols, sc));
        } else {
            // No exact split: take a larger sub-grid and spread sinks over its cells.
            const double aspect = static_cast<double>(g.rows) / g.cols;
            sr = std::clamp(static_cast<int>(std::ceil(std::sqrt(sink_count * aspect))), 1, g.rows);
            sc = std::min(g.cols, (sink_count + sr - 1) / sr);
            while (sr * sc < sink_count) sr < g.rows ? ++sr : ++sc;
            const int cells = sr * sc;
            for (int s = 0; s < sink_count; ++s) {
                const int cell = static_cast<int>(static_cast<long long>(s) * cells / sink_count);
                chosen.push_back(spread_index(cell / sc, g.rows, sr) * g.cols +
                                 spread_index(cell % sc, g.cols, sc));
            }
        }
    } else {
        for (int s = 0; s < sink_count; ++s) chosen.push_back(spread_index(s, n, sink_count));
    }

    std::sort(chosen.begin(), chosen.end());
    for (NodeId id : chosen) topo.nodes[id].is_sink = true;
    return chosen;
}

std::vector<NodeId> RouteTable::path(NodeId origin) const {
    std::vector<NodeId> p{origin};
    while (next_hop.at(p.back()) != kNoNode) p.push_back(next_hop[p.back()]);
    return p;
}

RouteTable build_routes(const Topology& topo) {
    const std::size_t n = topo.nodes.size();
    if (topo.adjacency.size() != n) throw InvalidInput("topology adjacency not computed");
    RouteTable rt;
    rt.next_hop.assign(n, kNoNode);
    rt.hop_count.assign(n, -1);
    rt.assigned_sink.assign(n, kNoNode);

    std::deque<NodeId> frontier;
    for (const auto& node : topo.nodes) {
        if (node.is_sink) {
            rt.hop_count[node.id] = 0;
            rt.assigned_sink[node.id] = node.id;
            frontier.push_back(node.id);
        }
    }
    if (frontier.empty()) throw InvalidInput("topology has no sinks");

    std::vector<NodeId> order;
    order.reserve(n);
    while (!frontier.empty()) {
        const NodeId v = frontier.front();
        frontier.pop_front();
        order.push_back(v);
        for (NodeId w : topo.adjacency[v]) {
            if (rt.hop_count[w] < 0) {
                rt.hop_count[w] = rt.hop_count[v] + 1;
                frontier.push_back(w);
            }
        }
    }

    std::vector<NodeId> unreachable;
    for (std::size_t v = 0; v < n; ++v)
        if (rt.hop_count[v] < 0) unreachable.push_back(static_cast<NodeId>(v));
    if (!unreachable.empty()) throw RoutingError(std::move(unreachable));

    // BFS order guarantees next hops are resolved before their upstream nodes.
    for (NodeId v : order) {
        if (rt.hop_count[v] == 0) continue;
        for (NodeId w : topo.adjacency[v]) {
            if (rt.hop_count[w] == rt.hop_count[v] - 1) {
                rt.next_hop[v] = w;
                break;
            }
        }
        rt.assigned_sink[v] = rt.assigned_sink[rt.next_hop[v]];
    }
    return rt;
}

TopologyStats topology_stats(const Topology& topo, const RouteTable& routes) {
    TopologyStats s;
    if (topo.nodes.empty()) return s;
    double total = 0;
    for (const auto& adj : topo.adjacency) {
        const int size = static_cast<int>(adj.size()) + 1;
        s.u = std::max(s.u, size);
        total += size;
    }
    s.mean_contention = total / static_cast<double>(topo.nodes.size());
    s.m = static_cast<int>(std::lround(s.mean_contention));
    for (int h : routes.hop_count) s.max_hops = std::max(s.max_hops, h);
    return s;
}

void write_topology(std::ostream& out, const Topology& topo) {
    char buf[160];
    out << "# rtcap topology v1\n";
    std::snprintf(buf, sizeof buf, "# range %.17g\n", topo.radio_range);
    out << buf;
    std::snprintf(buf, sizeof buf, "# grid %d %d %.17g %.17g %llu\n", topo.grid.rows,
                  topo.grid.cols, topo.grid.spacing, topo.grid.jitter,
                  static_cast<unsigned long long>(topo.grid.seed));
    out << buf;
    out << "# id x y is_sink\n";
    for (const auto& n : topo.nodes) {
        std::snprintf(buf, sizeof buf, "%d %.17g %.17g %d\n", n.id, n.position.x, n.position.y,
                      n.is_sink ? 1 : 0);
        out << buf;
    }
}

Topology read_topology(std::istream& in) {
    Topology topo;
    std::string line;
    int lineno = 0;
    bool have_range = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        if (line[0] == '#') {
            std::string hash, key;
            ls >> hash >> key;
            if (key == "range") {
                ls >> topo.radio_range;
                have_range = !ls.fail();
            } else if (key == "grid") {
                unsigned long long seed = 0;
                ls >> topo.grid.rows >> topo.grid.cols >> topo.grid.spacing >> topo.grid.jitter >> seed;
                topo.grid.seed = seed;
            }
            if (ls.fail()) throw IoError("malformed header at line " + std::to_string(lineno));
            continue;
        }
        Node n;
        int sink = 0;
        ls >> n.id >> n.position.x >> n.position.y >> sink;
        if (ls.fail() || n.id != static_cast<NodeId>(topo.nodes.size()))
            throw IoError("malformed node record at line " + std::to_string(lineno));
        n.is_sink = sink != 0;
        topo.nodes.push_back(n);
    }
    if (!have_range) throw IoError("topology file has no range header");
    if (topo.radio_range > 0) {
        connect(topo, topo.radio_range);
    } else {
        topo.adjacency.assign(topo.nodes.size(), {});
    }
    return topo;
}

} // namespace rtcap::topology
