#include "rtcap/analytics.hpp"
#include "rtcap/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace rtcap;
using namespace rtcap::cli;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "rtcap");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Outcome o;
    o.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

/// Parses the number printed right before " bits/s" on the line for `sched`.
double printed_capacity(const std::string& text, const std::string& sched) {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (line.rfind(sched + " ", 0) != 0) continue;
        const auto end = line.find(" bits/s");
        const auto begin = line.rfind(' ', end - 1) + 1;
        return std::strtod(line.substr(begin, end - begin).c_str(), nullptr);
    }
    return -1;
}

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("list parsing") {
    CHECK(parse_list("0.5, 1,2") == std::vector<double>{0.5, 1, 2});
    CHECK(parse_list("").empty());
    CHECK_THROWS(parse_list("1,x"));
}

TEST_CASE("config text") {
    CliConfig c;
    const auto bad = apply_config_text(
        "# comment\n[analytics]\nn = 100\nalpha = 1.5\n[sim]\nseed = 9\ndeadlines = 1,2\n", c);
    CHECK(bad.empty());
    CHECK(c.analytic.node_count == 100);
    CHECK(c.analytic.alpha == 1.5);
    CHECK(c.sim.seed == 9);
    CHECK(c.deadlines == "1,2");

    CliConfig d;
    const auto typos = apply_config_text("[analytics]\nalfa = 2\n[sim]\nseed = many\nnoequals\n", d);
    REQUIRE(typos.size() == 3);
    CHECK(typos[0] == "analytics.alfa");
    CHECK(typos[1].rfind("sim.seed", 0) == 0);
}

TEST_CASE("no arguments prints usage and fails") {
    const auto o = run({});
    CHECK(o.code == 1);
    CHECK(o.err.find("analyze") != std::string::npos);
}

TEST_CASE("bad input exits 1") {
    CHECK(run({"analyze", "--alpha", "3"}).code == 1);
    CHECK(run({"analyze", "--scheduler", "rr"}).code == 1);
    CHECK(run({"analyze", "--no-such-flag"}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
}

TEST_CASE("balanced EDF example") {
    const auto o = run({"analyze", "--topology", "balanced", "--scheduler", "edf", "--n", "100",
                        "--B", "250000", "--u", "10", "--N", "5", "--alpha", "2"});
    CHECK(o.code == 0);
    CHECK(o.out.find(" 250000 bits/s") != std::string::npos);
}

TEST_CASE("ratio at one hop prints 1") {
    const auto o = run({"analyze", "--ratio", "--Kd", "1"});
    CHECK(o.code == 0);
    CHECK(o.out.find(")  1\n") != std::string::npos);
}

TEST_CASE("printed bounds equal library values bit for bit") {
    analytics::AnalyticParams p{137, 123457, 13, 1.7, 7, 11, 23, 5};
    const std::vector<std::string> common{"--n", "137", "--B", "123457", "--u", "13",
                                          "--N", "7", "--alpha", "1.7", "--m", "11",
                                          "--Kd", "23", "--aggregation-points", "5"};
    auto with = [&](std::vector<std::string> head) {
        head.insert(head.end(), common.begin(), common.end());
        return run(head);
    };
    const auto bal = with({"analyze", "--topology", "balanced"});
    REQUIRE(bal.code == 0);
    CHECK(printed_capacity(bal.out, "DM") ==
          analytics::rtcc_balanced(analytics::Scheduler::DM, p).value);
    CHECK(printed_capacity(bal.out, "EDF") ==
          analytics::rtcc_balanced(analytics::Scheduler::EDF, p).value);

    for (const std::string mode : {"exact", "approx"}) {
        const auto cc = with({"analyze", "--topology", "convergecast", "--mode", mode});
        REQUIRE(cc.code == 0);
        const auto m = mode == "exact" ? analytics::SolveMode::Exact : analytics::SolveMode::Approximate;
        CHECK(printed_capacity(cc.out, "DM") ==
              analytics::rtcc_convergecast(analytics::Scheduler::DM, p, m).value);
        CHECK(printed_capacity(cc.out, "EDF") ==
              analytics::rtcc_convergecast(analytics::Scheduler::EDF, p, m).value);
    }
}

TEST_CASE("path feasibility report") {
    const auto o = run({"analyze", "--vq", "0.6"});
    CHECK(o.code == 0);
    CHECK(o.out.find("DM  path infeasible  lhs 1.0") != std::string::npos);
    CHECK(o.out.find("EDF path feasible") != std::string::npos);
}

TEST_CASE("config file precedence and validation") {
    const auto good = write_temp("rtcap_cli_good.conf", "[analytics]\nN = 1\nscheduler = edf\n");
    const auto o = run({"analyze", "--config", good.string(), "--N", "5", "--n", "100", "--u", "10"});
    CHECK(o.code == 0);
    CHECK(o.out.find(" 250000 bits/s") != std::string::npos);  // from the file's scheduler

    const auto bad = write_temp("rtcap_cli_bad.conf", "[analytics]\nN = 1\nscheduller = edf\n");
    const auto b = run({"analyze", "--config", bad.string()});
    CHECK(b.code == 1);
    CHECK(b.err.find("analytics.scheduller") != std::string::npos);

    CHECK(run({"analyze", "--config", "/nonexistent/rtcap.conf"}).code == 1);
    std::filesystem::remove(good);
    std::filesystem::remove(bad);
}

TEST_CASE("simulate runs a small seeded instance") {
    const std::vector<std::string> args{"simulate", "--rows", "5", "--cols", "5", "--sinks", "1",
                                        "--rate", "2", "--duration", "2", "--seed", "3"};
    const auto a = run(args);
    const auto b = run(args);
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.find("measured u ") != std::string::npos);
    CHECK(a.out.find("miss ratio") != std::string::npos);
}

TEST_CASE("sweep writes into the output directory") {
    const auto dir = std::filesystem::temp_directory_path() / "rtcap_cli_sweep";
    std::filesystem::remove_all(dir);
    const auto o = run({"sweep", "--kind", "balanced_curves", "--values", "1,2,3", "--out-dir",
                        dir.string()});
    CHECK(o.code == 0);
    int files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        ++files;
        CHECK(e.path().filename().string().rfind("balanced_curves_", 0) == 0);
    }
    CHECK(files == 1);
    std::filesystem::remove_all(dir);
}

}
