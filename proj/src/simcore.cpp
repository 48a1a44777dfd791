#include "rtcap/simcore.hpp"

#include "rtcap/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <thread>

namespace rtcap::sim {

using topology::kNoNode;
using topology::RouteTable;
using topology::Topology;

void SimConfig::validate() const {
    if (!(bandwidth > 0)) throw InvalidInput("bandwidth must be positive");
    if (!(packet_size > 0)) throw InvalidInput("packet_size must be positive");
    if (deadline_set.empty()) throw InvalidInput("deadline_set must not be empty");
    for (double d : deadline_set) {
        if (!(d > 0)) throw InvalidInput("deadlines must be positive");
        if (d < transmission_time()) throw InvalidInput("deadline shorter than one transmission");
    }
    if (!(arrival_rate >= 0) || !std::isfinite(arrival_rate))
        throw InvalidInput("arrival_rate must be finite and nonnegative");
    if (!(duration > 0)) throw InvalidInput("duration must be positive");
    if (replications < 1) throw InvalidInput("replications must be >= 1");
}

// ---------------------------------------------------------------------------
// workload

Workload generate_workload(const Topology& topo, const RouteTable& routes, const SimConfig& config,
                           std::uint64_t seed) {
    config.validate();
    if (routes.hop_count.size() != topo.size()) throw InvalidInput("routes do not match topology");

    Workload w;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, config.deadline_set.size() - 1);
    const double rate = config.arrival_rate;

    std::vector<double> transmit_count(topo.size(), 0.0);
    double hop_bits = 0;
    for (const auto& node : topo.nodes) {
        if (node.is_sink) continue;
        const int hops = routes.hop_count[node.id];
        for (NodeId v = node.id; routes.next_hop[v] != kNoNode; v = routes.next_hop[v])
            transmit_count[v] += 1;
        if (rate <= 0) continue;

        std::exponential_distribution<double> gap(config.profile == LoadProfile::Constant ? rate : 1.0);
        double clock = 0;
        for (;;) {
            clock += gap(rng);
            // Ramp: cumulative intensity rate t^2 / (2 duration), inverted.
            const double t = config.profile == LoadProfile::Constant
                                 ? clock
                                 : std::sqrt(2 * config.duration * clock / rate);
            if (t >= config.duration) break;
            Arrival a;
            a.time = t;
            a.origin = node.id;
            a.sink = routes.assigned_sink[node.id];
            a.relative_deadline = config.deadline_set[pick(rng)];
            a.tie_break = rng();
            a.path_hops = hops;
            hop_bits += hops * config.packet_size;
            w.arrivals.push_back(a);
        }
    }
    std::sort(w.arrivals.begin(), w.arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return a.time != b.time ? a.time < b.time : a.origin < b.origin;
    });

    w.offered_demand = hop_bits / config.duration;
    if (!topo.nodes.empty()) {
        double mean = 0;
        for (double c : transmit_count) mean += c * rate * config.transmission_time();
        mean /= static_cast<double>(topo.size());
        w.overload_warning = mean >= 1;
    }
    return w;
}

// ---------------------------------------------------------------------------
// arbitration

ExclusionState::ExclusionState(const Topology& topo)
    : topo_(&topo),
      busy_(topo.size(), 0),
      near_receiver_(topo.size(), 0),
      near_sender_(topo.size(), 0) {}

bool ExclusionState::can_grant(NodeId sender, NodeId receiver) const {
    return busy_[sender] == 0 && busy_[receiver] == 0 && near_receiver_[sender] == 0 &&
           near_sender_[receiver] == 0;
}

void ExclusionState::add(NodeId sender, NodeId receiver) {
    ++busy_[sender];
    ++busy_[receiver];
    for (NodeId w : topo_->adjacency[receiver]) ++near_receiver_[w];
    for (NodeId w : topo_->adjacency[sender]) ++near_sender_[w];
}

void ExclusionState::remove(NodeId sender, NodeId receiver) {
    --busy_[sender];
    --busy_[receiver];
    for (NodeId w : topo_->adjacency[receiver]) --near_receiver_[w];
    for (NodeId w : topo_->adjacency[sender]) --near_sender_[w];
}

namespace {

bool conflicts(NodeId s, NodeId r, NodeId s2, NodeId r2, const Topology& topo) {
    return s == s2 || s == r2 || r == s2 || r == r2 || topo.adjacent(s, r2) || topo.adjacent(r, s2);
}

} // namespace

std::vector<Candidate> admissible_transmissions(std::span<const Candidate> candidates,
                                                std::span<const ActiveTransmission> active,
                                                const Topology& topo) {
    ExclusionState state(topo);
    for (const auto& a : active) state.add(a.sender, a.receiver);
    std::vector<Candidate> order(candidates.begin(), candidates.end());
    std::sort(order.begin(), order.end(),
              [](const Candidate& a, const Candidate& b) { return a.key < b.key; });
    std::vector<Candidate> granted;
    for (const auto& c : order) {
        if (!state.can_grant(c.sender, c.receiver)) continue;
        state.add(c.sender, c.receiver);
        granted.push_back(c);
    }
    return granted;
}

bool violates_exclusion(std::span<const ActiveTransmission> active, const Topology& topo) {
    for (std::size_t i = 0; i < active.size(); ++i)
        for (std::size_t j = i + 1; j < active.size(); ++j)
            if (conflicts(active[i].sender, active[i].receiver, active[j].sender,
                          active[j].receiver, topo))
                return true;
    return false;
}

double measured_capacity_consumption(std::span<const Packet> in_transit, double bandwidth) {
    double sum = 0;
    for (const auto& p : in_transit)
        sum += p.hops_traversed * p.transmission_time * bandwidth / p.relative_deadline;
    return sum;
}

// ---------------------------------------------------------------------------
// event loop

namespace {

enum class EventKind : int { Completion = 0, Arrival = 1, Deadline = 2 };

struct Event {
    double time;
    EventKind kind;
    std::int64_t seq;
    std::int64_t ref;  // sender for completions, packet id for deadlines

    bool operator>(const Event& o) const {
        if (time != o.time) return time > o.time;
        if (kind != o.kind) return kind > o.kind;
        return seq > o.seq;
    }
};

class Simulator {
public:
    Simulator(const Topology& topo, const RouteTable& routes, const Workload& workload,
              const SimConfig& config, const RunHooks& hooks)
        : topo_(topo), routes_(routes), workload_(workload), config_(config), hooks_(hooks),
          exclusion_(topo), queues_(topo.size()), head_(topo.size()), tx_(topo.size()) {
        packets_.reserve(workload.arrivals.size());
    }

    RunMetrics run();

private:
    void log(double t, const char* kind, NodeId a, NodeId b, PacketId p) {
        if (!hooks_.event_log) return;
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.9f %s %d %d %lld\n", t, kind, a, b,
                      static_cast<long long>(p));
        *hooks_.event_log << buf;
    }

    void push(double t, EventKind kind, std::int64_t ref) { events_.push({t, kind, seq_++, ref}); }

    void refresh_head(NodeId v) {
        if (head_[v]) waiting_.erase({*head_[v], v});
        if (queues_[v].empty()) {
            head_[v].reset();
        } else {
            head_[v] = *queues_[v].begin();
            waiting_.insert({*head_[v], v});
        }
    }

    void enqueue(Packet& p, NodeId at) {
        p.current = at;
        if (p.status != PacketStatus::Missed) p.status = PacketStatus::Queued;
        queues_[at].insert(p.key());
        refresh_head(at);
    }

    void on_arrival(double t);
    void on_completion(double t, NodeId sender);
    void on_deadline(double t, PacketId id);
    void arbitrate(double t);
    void audit(NodeId s, NodeId r) const;
    double consumption_now(double t) const;

    const Topology& topo_;
    const RouteTable& routes_;
    const Workload& workload_;
    const SimConfig& config_;
    const RunHooks& hooks_;

    ExclusionState exclusion_;
    std::vector<std::set<PriorityKey>> queues_;
    std::vector<std::optional<PriorityKey>> head_;
    std::set<std::pair<PriorityKey, NodeId>> waiting_;
    std::vector<std::optional<ActiveTransmission>> tx_;  // by sender
    std::vector<NodeId> active_senders_;
    std::vector<Packet> packets_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::int64_t seq_ = 0;
    std::size_t next_arrival_ = 0;
    bool first_miss_pending_ = false;
    RunMetrics m_;
};

void Simulator::on_arrival(double t) {
    const Arrival& a = workload_.arrivals[next_arrival_++];
    Packet p;
    p.id = static_cast<PacketId>(packets_.size());
    p.origin = a.origin;
    p.destination = a.sink;
    p.arrival_time = a.time;
    p.relative_deadline = a.relative_deadline;
    p.size = config_.packet_size;
    p.transmission_time = config_.transmission_time();
    p.tie_break = a.tie_break;
    packets_.push_back(p);
    ++m_.generated;
    log(t, "arrive", a.origin, a.sink, p.id);
    enqueue(packets_.back(), a.origin);
    push(packets_.back().absolute_deadline(), EventKind::Deadline, p.id);
}

void Simulator::on_completion(double t, NodeId sender) {
    const ActiveTransmission tx = *tx_[sender];
    tx_[sender].reset();
    active_senders_.erase(std::find(active_senders_.begin(), active_senders_.end(), sender));
    exclusion_.remove(tx.sender, tx.receiver);

    Packet& p = packets_[tx.packet];
    ++p.hops_traversed;
    log(t, "hop", tx.sender, tx.receiver, p.id);
    if (p.status == PacketStatus::Missed && config_.drop_on_miss) {
        log(t, "drop", tx.receiver, -1, p.id);
        return;
    }
    if (tx.receiver == p.destination) {
        p.current = tx.receiver;
        if (p.status != PacketStatus::Missed) {
            p.status = PacketStatus::Delivered;
            p.delivery_time = t;
            ++m_.delivered;
            m_.delays.push_back(t - p.arrival_time);
            log(t, "deliver", tx.receiver, -1, p.id);
        }
        return;
    }
    enqueue(p, tx.receiver);
}

void Simulator::on_deadline(double t, PacketId id) {
    Packet& p = packets_[id];
    if (p.status == PacketStatus::Delivered || p.status == PacketStatus::Missed) return;
    const bool queued = p.status == PacketStatus::Queued;
    p.status = PacketStatus::Missed;
    ++m_.missed;
    log(t, "miss", p.current, -1, p.id);
    if (!m_.first_miss_time) {
        m_.first_miss_time = t;
        first_miss_pending_ = true;
    }
    if (queued && config_.drop_on_miss) {
        queues_[p.current].erase(p.key());
        refresh_head(p.current);
        log(t, "drop", p.current, -1, p.id);
    }
}

void Simulator::audit(NodeId s, NodeId r) const {
    if (!topo_.adjacent(s, r))
        throw SimulationError("grant between non-adjacent nodes");
    for (NodeId s2 : active_senders_) {
        if (s2 == s) continue;
        if (conflicts(s, r, s2, tx_[s2]->receiver, topo_))
            throw SimulationError("exclusion rule violated by grant " + std::to_string(s) + "->" +
                                  std::to_string(r));
    }
}

void Simulator::arbitrate(double t) {
    ArbitrationRecord record;
    const bool recording = static_cast<bool>(hooks_.on_arbitration);
    if (recording) {
        record.time = t;
        for (NodeId s : active_senders_) record.active_before.push_back(*tx_[s]);
    }

    std::vector<Candidate> grants;
    for (const auto& [key, v] : waiting_) {
        if (exclusion_.busy(v)) continue;
        const NodeId r = routes_.next_hop[v];
        Candidate c{v, r, key.id, key};
        if (recording) record.candidates.push_back(c);
        if (!exclusion_.can_grant(v, r)) continue;
        exclusion_.add(v, r);
        grants.push_back(c);
    }

    for (const auto& g : grants) {
        queues_[g.sender].erase(g.key);
        refresh_head(g.sender);
        Packet& p = packets_[g.packet];
        if (p.status != PacketStatus::Missed) p.status = PacketStatus::InFlight;
        ActiveTransmission tx{g.sender, g.receiver, g.packet, t + p.transmission_time};
        if (config_.audit_exclusion) audit(g.sender, g.receiver);
        tx_[g.sender] = tx;
        active_senders_.push_back(g.sender);
        ++m_.transmissions;
        push(tx.completion_time, EventKind::Completion, g.sender);
        log(t, "grant", g.sender, g.receiver, g.packet);
    }

    if (recording) {
        record.granted = std::move(grants);
        hooks_.on_arbitration(record);
    }
}

double Simulator::consumption_now(double t) const {
    std::vector<Packet> window;
    for (const auto& p : packets_)
        if (p.arrival_time <= t && t < p.absolute_deadline() && p.status != PacketStatus::Missed)
            window.push_back(p);
    return measured_capacity_consumption(window, config_.bandwidth);
}

RunMetrics Simulator::run() {
    const auto& arrivals = workload_.arrivals;
    double now = -std::numeric_limits<double>::infinity();
    for (;;) {
        const bool have_event = !events_.empty();
        const bool have_arrival = next_arrival_ < arrivals.size();
        if (!have_event && !have_arrival) break;
        double t = have_event ? events_.top().time : arrivals[next_arrival_].time;
        if (have_arrival) t = std::min(t, arrivals[next_arrival_].time);
        if (t < now) throw SimulationError("event time went backwards");
        now = t;

        while (!events_.empty() && events_.top().time == t &&
               events_.top().kind == EventKind::Completion) {
            const Event e = events_.top();
            events_.pop();
            on_completion(t, static_cast<NodeId>(e.ref));
        }
        while (next_arrival_ < arrivals.size() && arrivals[next_arrival_].time == t) on_arrival(t);
        while (!events_.empty() && events_.top().time == t) {
            const Event e = events_.top();
            events_.pop();
            if (e.kind != EventKind::Deadline) throw SimulationError("event order corrupted");
            on_deadline(t, e.ref);
        }

        if (first_miss_pending_) {
            m_.capacity_consumption_at_first_miss = consumption_now(t);
            first_miss_pending_ = false;
            if (config_.stop_at_first_miss) break;
        }
        arbitrate(t);
    }

    m_.in_flight = m_.generated - m_.delivered - m_.missed;
    m_.miss_ratio = m_.generated > 0 ? static_cast<double>(m_.missed) / m_.generated : 0.0;
    m_.offered_demand = workload_.offered_demand;
    m_.overload_warning = workload_.overload_warning;
    return m_;
}

} // namespace

RunMetrics run_simulation(const Topology& topo, const RouteTable& routes, const Workload& workload,
                          const SimConfig& config, const RunHooks& hooks) {
    config.validate();
    if (routes.next_hop.size() != topo.size()) throw InvalidInput("routes do not match topology");
    Simulator sim(topo, routes, workload, config, hooks);
    return sim.run();
}

std::vector<RunMetrics> run_replications(const Topology& topo, const RouteTable& routes,
                                         const SimConfig& config) {
    config.validate();
    const int reps = config.replications;
    std::vector<RunMetrics> out(reps);
    std::vector<std::exception_ptr> errors(reps);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < reps; i = next++) {
            try {
                const auto w = generate_workload(topo, routes, config, config.seed + i);
                out[i] = run_simulation(topo, routes, w, config);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads =
        std::clamp<unsigned>(std::thread::hardware_concurrency(), 1, static_cast<unsigned>(reps));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

CriticalCapacity critical_capacity(std::span<const RunMetrics> runs) {
    if (runs.empty()) throw InvalidInput("critical capacity needs at least one replication");
    CriticalCapacity c;
    c.replications = static_cast<int>(runs.size());
    for (const auto& r : runs) {
        if (!r.capacity_consumption_at_first_miss) continue;
        ++c.replications_with_miss;
        const double v = *r.capacity_consumption_at_first_miss;
        c.value = c.value ? std::min(*c.value, v) : v;
    }
    return c;
}

std::vector<double> peak_neighborhood_utilization(const Topology& topo, const RouteTable& routes,
                                                  const Workload& workload,
                                                  const SimConfig& config) {
    struct Edge {
        double time;
        double delta;
        bool operator<(const Edge& o) const {
            // Expiries at t precede releases at t: windows are half-open.
            return time != o.time ? time < o.time : delta < o.delta;
        }
    };
    std::vector<std::vector<Edge>> edges(topo.size());
    const double tx = config.transmission_time();
    for (const auto& a : workload.arrivals) {
        const double ut = tx / a.relative_deadline;
        for (NodeId v = a.origin; routes.next_hop[v] != kNoNode; v = routes.next_hop[v]) {
            for (NodeId w : topo.contention_set(v)) {
                edges[w].push_back({a.time, ut});
                edges[w].push_back({a.time + a.relative_deadline, -ut});
            }
        }
    }
    std::vector<double> peak(topo.size(), 0.0);
    for (std::size_t w = 0; w < topo.size(); ++w) {
        auto& list = edges[w];
        std::sort(list.begin(), list.end());
        double level = 0;
        for (const auto& e : list) {
            level += e.delta;
            peak[w] = std::max(peak[w], level);
        }
    }
    return peak;
}

} // namespace rtcap::sim
