#include "oracles.hpp"
#include "rtcap/analytics.hpp"
#include "rtcap/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace rtcap;
using namespace rtcap::analytics;
using doctest::Approx;

namespace {

AnalyticParams balanced_example() {
    AnalyticParams p;
    p.node_count = 100;
    p.bandwidth = 250000;
    p.neighborhood_bound = 10;
    p.path_length = 5;
    p.alpha = 2;
    return p;
}

} // namespace

TEST_SUITE("analytics") {

TEST_CASE("node utilization sums per-hop ratios") {
    CHECK(node_utilization({}) == 0);
    std::vector<PacketLoad> one{{0.1, 1}};
    CHECK(node_utilization(one) == Approx(0.1));
    std::vector<PacketLoad> three{{0.1, 1}, {0.2, 2}, {0.05, 0.5}};
    CHECK(node_utilization(three) == Approx(0.3).epsilon(1e-12));
    std::vector<PacketLoad> bad{{0, 1}};
    CHECK_THROWS_AS(node_utilization(bad), InvalidInput);
    std::vector<PacketLoad> bad_deadline{{0.1, 0}};
    CHECK_THROWS_AS(node_utilization(bad_deadline), InvalidInput);
}

TEST_CASE("neighborhood utilization") {
    CHECK(neighborhood_utilization({{1, 0.1}}, {1}) == Approx(0.1));
    CHECK(neighborhood_utilization({{1, 0.1}, {2, 0.2}, {3, 0.3}}, {1, 2}) == Approx(0.3));
    CHECK(neighborhood_utilization({{1, 0.0}, {2, 0.0}}, {1, 2}) == 0);
    CHECK_THROWS_AS(neighborhood_utilization({{1, 0.1}}, {1, 7}), InvalidInput);
}

TEST_CASE("network capacity demand") {
    CHECK(network_capacity_demand({}, 1e6) == 0);
    CHECK(network_capacity_demand({{1, 0.5}}, 1e6) == Approx(5e5));
    CHECK(network_capacity_demand({{1, 0.2}, {2, 0.3}}, 2e6) == Approx(1e6));
    CHECK_THROWS_AS(network_capacity_demand({}, 0), InvalidInput);
}

TEST_CASE("stage delay term") {
    CHECK(stage_delay_term(0) == 0);
    CHECK(stage_delay_term(0.5) == Approx(0.75));
    CHECK_THROWS_AS(stage_delay_term(1.0), PoleError);
    CHECK_THROWS_AS(stage_delay_term(1.5), PoleError);
    CHECK_THROWS_AS(stage_delay_term(-0.1), InvalidInput);
}

TEST_CASE("stage delay term is increasing and convex on random pairs") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 0.999);
    for (int i = 0; i < 2000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        if (b - a < 1e-9) continue;
        CHECK(stage_delay_term(a) < stage_delay_term(b));
        const double mid = 0.5 * (a + b);
        CHECK(stage_delay_term(mid) <= 0.5 * (stage_delay_term(a) + stage_delay_term(b)) + 1e-12);
        CHECK(stage_delay_term(a) >= a);
    }
}

TEST_CASE("path delay bound") {
    CHECK(path_delay_bound({}, 1) == 0);
    std::vector<double> two{0.5, 0.5};
    CHECK(path_delay_bound(two, 2) == Approx(3.0));
    std::vector<double> zero{0};
    CHECK(path_delay_bound(zero, 5) == 0);
    std::vector<double> pole{0.2, 1.0};
    CHECK_THROWS_AS(path_delay_bound(pole, 1), PoleError);
}

TEST_CASE("DM path feasibility") {
    auto empty = dm_path_feasible({});
    CHECK(empty.feasible);
    CHECK(empty.lhs == 0);

    const double root = 0.381966011250105;
    std::vector<double> boundary{root, root};
    auto b = dm_path_feasible(boundary);
    CHECK(b.lhs == Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(b.margin) < 1e-6);

    std::vector<double> over{0.6};
    auto o = dm_path_feasible(over);
    CHECK_FALSE(o.feasible);
    CHECK(o.lhs == Approx(1.05));
    CHECK(o.margin == Approx(-0.05));

    std::vector<double> pole{0.1, 1.0};
    auto p = dm_path_feasible(pole);
    CHECK_FALSE(p.feasible);
    CHECK(std::isinf(p.lhs));

    std::vector<double> small{0.2};
    auto d = dm_path_feasible(small, 0.2);
    CHECK(d.bound == 0.2);
    CHECK_FALSE(d.feasible);  // 0.2 * 0.9 / 0.8 = 0.225
    CHECK_THROWS_AS(dm_path_feasible(small, 0), InvalidInput);
    CHECK_THROWS_AS(dm_path_feasible(small, 1.5), InvalidInput);
}

TEST_CASE("EDF path feasibility") {
    CHECK(edf_path_feasible({}).feasible);
    std::vector<double> edge{0.5, 0.5};
    auto e = edf_path_feasible(edge);
    CHECK(e.feasible);
    CHECK(e.lhs == 1);
    std::vector<double> over{0.6, 0.5};
    auto o = edf_path_feasible(over);
    CHECK_FALSE(o.feasible);
    CHECK(o.lhs == Approx(1.1));
}

TEST_CASE("balanced root matches bisection oracle") {
    CHECK(balanced_vq_bound(1) == Approx(0.585786).epsilon(1e-6));
    CHECK(balanced_vq_bound(2) == Approx(0.381966).epsilon(1e-6));
    CHECK(std::abs(balanced_vq_bound(1) - oracle::balanced_root(1)) < 1e-8);
    CHECK(std::abs(balanced_vq_bound(2) - oracle::balanced_root(2)) < 1e-8);
    for (double n : {3.0, 7.0, 25.0, 113.0, 5000.0})
        CHECK(std::abs(balanced_vq_bound(n) - oracle::balanced_root(n)) < 1e-8);
    CHECK_THROWS_AS(balanced_vq_bound(0.5), InvalidInput);
}

TEST_CASE("balanced root limit: N * VQ(N) -> 1") {
    CHECK(balanced_vq_bound(1e6) < 1e-5);
    CHECK(1e6 * balanced_vq_bound(1e6) == Approx(1.0).epsilon(1e-5));
    CHECK(1e9 * balanced_vq_bound(1e9) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("balanced root consistency over N in [1, 1e4]") {
    for (int n = 1; n <= 10000; n += (n < 100 ? 1 : 37))
        CHECK(std::abs(stage_delay_term(balanced_vq_bound(n)) - 1.0 / n) < 1e-9);
}

TEST_CASE("balanced capacities") {
    auto p = balanced_example();
    auto edf = rtcc_balanced(Scheduler::EDF, p);
    CHECK(edf.value == Approx(250000).epsilon(1e-12));
    CHECK(edf.scheduler == Scheduler::EDF);
    CHECK(edf.topology == TopologyClass::Balanced);
    auto dm = rtcc_balanced(Scheduler::DM, p);
    CHECK(std::abs(dm.value - 225245.1216) < 1);
    CHECK(dm.value <= edf.value);

    p.path_length = 1;
    const double ratio = rtcc_balanced(Scheduler::DM, p).value / rtcc_balanced(Scheduler::EDF, p).value;
    CHECK(ratio == Approx(0.585786).epsilon(1e-6));

    for (int n = 1; n <= 200; ++n) {
        p.path_length = n;
        CHECK(rtcc_balanced(Scheduler::DM, p).value <= rtcc_balanced(Scheduler::EDF, p).value);
    }
    p.alpha = 2.5;
    CHECK_THROWS_AS(rtcc_balanced(Scheduler::DM, p), InvalidInput);
}

TEST_CASE("ring population") {
    CHECK(convergecast_ring_population(1, 10) == 10);
    CHECK(convergecast_ring_population(3, 10) == 50);
    for (int k = 1; k <= 20; ++k) {
        double sum = 0;
        for (int x = 1; x <= k; ++x) sum += convergecast_ring_population(x, 10);
        CHECK(sum == k * k * 10);
    }
    CHECK_THROWS_AS(convergecast_ring_population(0, 10), InvalidInput);
}

TEST_CASE("convergecast DM sink utilization") {
    const double k1 = convergecast_dm_sink_utilization(10, 1);
    CHECK(k1 == Approx(10 * (2 - std::sqrt(2.0))).epsilon(1e-9));
    CHECK(std::abs(k1 - 5.857864) < 1e-5);
    CHECK(std::abs(k1 - oracle::convergecast_dm_root(10, 1)) < 1e-8);

    const double k2 = convergecast_dm_sink_utilization(10, 2);
    CHECK(std::abs(k2 - 5.222) < 1e-2);
    CHECK(std::abs(k2 - oracle::convergecast_dm_root(10, 2)) < 1e-8);

    for (double tol : {1e-4, 1e-8, 1e-12}) {
        const double d = convergecast_dm_sink_utilization(7, 9, tol);
        CHECK(std::abs(convergecast_dm_lhs(d, 7, 9) - 1) <= tol);
        CHECK(d > 0);
        CHECK(d < 7);
    }
}

TEST_CASE("convergecast DM closed ring form is the same function") {
    // D/(2(2x-1)m) (1 + (2x-1)m / ((2x-1)m - D)) summed over rings.
    auto ring_form = [](double d, double m, int k) {
        double s = 0;
        for (int x = 1; x <= k; ++x) {
            const double pop = (2.0 * x - 1) * m;
            s += d / (2 * pop) * (1 + pop / (pop - d));
        }
        return s;
    };
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        const double m = std::uniform_real_distribution<double>(1, 100)(rng);
        const int k = std::uniform_int_distribution<int>(1, 50)(rng);
        const double d = std::uniform_real_distribution<double>(0, 0.999)(rng) * m;
        CHECK(convergecast_dm_lhs(d, m, k) == Approx(ring_form(d, m, k)).epsilon(1e-12));
    }
}

TEST_CASE("bisection reports failure with its bracket") {
    auto never = [](double) { return 1.0; };
    CHECK_THROWS_AS(bisect_increasing(never, 0, 1), SolverError);
    auto slow = [](double x) { return x - 0.3; };
    try {
        bisect_increasing(slow, 0, 1, 1e-30, 5);
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(e.iterations == 5);
        CHECK(e.lo <= 0.3);
        CHECK(e.hi >= 0.3);
    }
}

TEST_CASE("odd harmonic sums") {
    CHECK(harmonic_odd_sum(1, SolveMode::Exact) == 1);
    CHECK(harmonic_odd_sum(3, SolveMode::Exact) == Approx(1.533333).epsilon(1e-6));
    CHECK(std::abs(harmonic_odd_sum(100, SolveMode::Exact) - 3.284342) < 1e-5);
    CHECK(std::abs(harmonic_odd_sum(100, SolveMode::Approximate) - 3.302585) < 1e-5);
    CHECK(harmonic_odd_sum(100, SolveMode::Exact) == Approx(oracle::odd_harmonic(100)).epsilon(1e-14));
    CHECK_THROWS_AS(harmonic_odd_sum(2.5, SolveMode::Exact), InvalidInput);
    CHECK_THROWS_AS(harmonic_odd_sum(0, SolveMode::Approximate), InvalidInput);
}

TEST_CASE("harmonic approximation error stays within 0.02") {
    for (long k = 1; k <= 1000000; k = k < 1000 ? k + 1 : k * 11 / 10) {
        const double d = std::abs(harmonic_odd_sum(static_cast<double>(k), SolveMode::Exact) -
                                  harmonic_odd_sum(static_cast<double>(k), SolveMode::Approximate));
        CHECK(d <= 0.02);
    }
}

TEST_CASE("convergecast EDF sink utilization") {
    auto k1 = convergecast_edf_sink_utilization(10, 1, SolveMode::Exact);
    CHECK(k1.value == 10);
    CHECK(k1.saturated);
    auto approx = convergecast_edf_sink_utilization(10, 100, SolveMode::Approximate);
    CHECK(std::abs(approx.value - 3.027935) < 1e-5);
    auto ex = convergecast_edf_sink_utilization(10, 100, SolveMode::Exact);
    CHECK(std::abs(ex.value - 3.044748) < 1e-5);
    // Closed form matches a bisection on the EDF ring condition D/m * S = 1.
    for (int k : {1, 4, 64, 1000}) {
        for (auto mode : {SolveMode::Exact, SolveMode::Approximate}) {
            const double s = harmonic_odd_sum(k, mode);
            const double root = oracle::bisect([&](double d) { return d / 12.0 * s - 1; }, 0, 1000);
            CHECK(std::abs(convergecast_edf_sink_utilization(12, k, mode).value - root) < 1e-8);
        }
    }
}

TEST_CASE("convergecast capacities") {
    AnalyticParams p;
    p.sink_count = 4;
    p.bandwidth = 1000;
    p.max_hops = std::exp(2.0);
    p.alpha = 1;
    p.nodes_per_disk = 10;
    auto edf = rtcc_convergecast(Scheduler::EDF, p, SolveMode::Approximate);
    CHECK(std::abs(edf.value - 14778.11) < 0.1);
    CHECK_THROWS_AS(rtcc_convergecast(Scheduler::DM, p, SolveMode::Exact), InvalidInput);

    p.max_hops = 1;
    CHECK(rtcc_convergecast(Scheduler::EDF, p, SolveMode::Exact).value == Approx(4 * 1000));

    p.alpha = 2;
    p.bandwidth = 250000;
    auto gap = [&](double k) {
        p.max_hops = k;
        const double dm = rtcc_convergecast(Scheduler::DM, p, SolveMode::Exact).value;
        const double ed = rtcc_convergecast(Scheduler::EDF, p, SolveMode::Exact).value;
        CHECK(dm <= ed);
        return (ed - dm) / ed;
    };
    CHECK(gap(64) < gap(1));

    // Approximate DM is the EDF closed form.
    p.max_hops = 10;
    CHECK(rtcc_convergecast(Scheduler::DM, p, SolveMode::Approximate).value ==
          rtcc_convergecast(Scheduler::EDF, p, SolveMode::Approximate).value);
}

TEST_CASE("clamped convergecast capacity") {
    AnalyticParams p;
    p.nodes_per_disk = 10;
    p.max_hops = 1;
    p.sink_count = 2;
    p.bandwidth = 1000;
    p.alpha = 1;
    auto raw = rtcc_convergecast(Scheduler::EDF, p, SolveMode::Exact);
    auto clamped = rtcc_convergecast(Scheduler::EDF, p, SolveMode::Exact, true);
    CHECK(raw.saturated);
    CHECK(clamped.saturated);
    CHECK(raw.utilization_at_bottleneck == Approx(1.0));
    CHECK(clamped.utilization_at_bottleneck == Approx(0.1));
    CHECK(clamped.value < raw.value);
}

TEST_CASE("convergecast ordering DM <= EDF over m and K") {
    for (int m = 1; m <= 100; m += 9) {
        for (int k = 1; k <= 256; k = k * 2 + 1) {
            CHECK(convergecast_dm_sink_utilization(m, k) <=
                  convergecast_edf_sink_utilization(m, k, SolveMode::Exact).value);
        }
    }
}

TEST_CASE("balanced/convergecast ratio") {
    CHECK(balanced_vs_convergecast_ratio(1) == 1.0);
    CHECK(balanced_vs_convergecast_ratio(std::exp(2.0)) == Approx(2.0));
    CHECK(balanced_vs_convergecast_ratio(4) > balanced_vs_convergecast_ratio(2));
}

TEST_CASE("parameter validation") {
    AnalyticParams p;
    CHECK_NOTHROW(p.validate());
    p.alpha = 0.5;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = {};
    p.bandwidth = 0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p = {};
    p.sink_count = 0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
}

}
