// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#include <doctest.h>

#include <sstream>
#include <string>
#include <vector>

#include "config.h"
#include "metrics.h"

using namespace atpsim;

TEST_CASE("jain fairness index") {
    CHECK(jain_index({5, 5, 5, 5}) == doctest::Approx(1.0));
    CHECK(jain_index({3}) == doctest::Approx(1.0));
    CHECK(jain_index({1, 0, 0, 0}) == doctest::Approx(0.25));  // 1/n for one hog
    CHECK(jain_index({1, 2, 3}) == doctest::Approx(6.0 / 7.0));
    CHECK(jain_index({0, 0}) == doctest::Approx(1.0));  // all-idle counts as even
    CHECK_THROWS_AS(jain_index({}), SimError);
    CHECK_THROWS_AS(jain_index({1, -2}), SimError);
}

TEST_CASE("nearest-rank percentile") {
    std::vector<double> xs;
    for (int i = 100; i >= 1; --i)
        xs.push_back(i);
    CHECK(percentile(xs, 99) == 99);
    CHECK(percentile(xs, 100) == 100);
    CHECK(percentile(xs, 50) == 50);
    CHECK(percentile(xs, 1) == 1);
    CHECK(percentile({42}, 99) == 42);
    CHECK(percentile({1, 2}, 50) == 1);
    CHECK(percentile({1, 2}, 51) == 2);
    CHECK_THROWS_AS(percentile({}, 50), SimError);
    CHECK_THROWS_AS(percentile({1}, 0), SimError);
    CHECK_THROWS_AS(percentile({1}, 101), SimError);
}

TEST_CASE("mean") {
    CHECK(mean({1, 2, 3, 4}) == doctest::Approx(2.5));
    // Empty input means "no completed flows" to the aggregator, which reports
    // the average as zero rather than failing the whole sweep.
    CHECK(mean({}) == 0.0);
}

namespace {

FlowRecord record_with_windows(std::vector<WindowSample> ws) {
    FlowRecord rec;
    rec.windows = std::move(ws);
    return rec;
}

WindowSample w(uint64_t sent, uint64_t rcv) {
    WindowSample s;
    s.n_sent = sent;
    s.n_rcv = rcv;
    s.loss = sent == 0 ? 0.0 : static_cast<double>(sent - rcv) / static_cast<double>(sent);
    return s;
}

}  // namespace

TEST_CASE("steady window loss skips warmup and weights by packets sent") {
    // Three warmup windows (ignored however lossy), then 150 sent / 135
    // confirmed pooled -> 0.1.
    FlowRecord rec = record_with_windows(
        {w(10, 0), w(10, 2), w(10, 5), w(100, 90), w(0, 0), w(50, 45)});
    CHECK(steady_window_loss(rec) == doctest::Approx(0.1));
    // Nothing after warmup: defined as zero.
    CHECK(steady_window_loss(record_with_windows({w(5, 5), w(7, 0)})) == 0.0);
    CHECK(steady_window_loss(record_with_windows({})) == 0.0);
    // Stale acks can exceed sends in a window; the excess never goes negative.
    CHECK(steady_window_loss(record_with_windows(
              {w(1, 1), w(1, 1), w(1, 1), w(10, 12), w(10, 8)})) ==
          doctest::Approx(0.1));
    // Custom warmup length.
    CHECK(steady_window_loss(record_with_windows({w(10, 0), w(10, 10)}), 1) == 0.0);
}

namespace {

RunRow make_row(uint64_t seed, double mlr, const std::string& proto, uint32_t flow_id,
                SimTime start, SimTime end, bool completed) {
    RunRow row;
    row.seed = seed;
    row.mlr = mlr;
    row.load_scale = 1;
    row.rec.flow_id = flow_id;
    row.rec.protocol = proto;
    row.rec.start = start;
    row.rec.end = end;
    row.rec.completed = completed;
    row.rec.messages_total = 10;
    row.rec.messages_delivered = completed ? 10 : 3;
    row.rec.bytes_sent = 14600;
    row.rec.delivered_payload = completed ? 14600 : 4380;
    return row;
}

}  // namespace

TEST_CASE("aggregation groups by sweep point and protocol") {
    std::vector<RunRow> rows;
    rows.push_back(make_row(1, 0.1, "atp-full", 0, 0, 1000, true));
    rows.push_back(make_row(1, 0.1, "atp-full", 1, 0, 3000, true));
    rows.push_back(make_row(2, 0.1, "atp-full", 0, 0, 2000, true));
    rows.push_back(make_row(1, 0.1, "reliable", 2, 0, 5000, true));
    rows.push_back(make_row(1, 0.25, "atp-full", 0, 0, 4000, false));

    std::vector<AggregateRow> agg = aggregate_rows(rows);
    REQUIRE(agg.size() == 3);

    const AggregateRow* atp01 = nullptr;
    const AggregateRow* rel01 = nullptr;
    const AggregateRow* atp025 = nullptr;
    for (const AggregateRow& a : agg) {
        if (a.protocol == "atp-full" && a.mlr == 0.1)
            atp01 = &a;
        if (a.protocol == "reliable")
            rel01 = &a;
        if (a.mlr == 0.25)
            atp025 = &a;
    }
    REQUIRE(atp01 != nullptr);
    REQUIRE(rel01 != nullptr);
    REQUIRE(atp025 != nullptr);

    CHECK(atp01->flows == 3);
    CHECK(atp01->completed == 3);
    CHECK(atp01->seeds == 2);
    CHECK(atp01->mean_jct_ns == doctest::Approx(2000.0));
    CHECK(rel01->flows == 1);
    CHECK(atp025->completed == 0);
    CHECK(atp025->mean_jct_ns == 0.0);  // no completed flow to average
}

TEST_CASE("csv writers emit stable headers and one row per record") {
    std::vector<RunRow> rows;
    rows.push_back(make_row(1, 0.1, "atp-full", 0, 0, 1000, true));
    rows.push_back(make_row(1, 0.1, "udp", 1, 500, 1700, false));

    std::ostringstream flows1, flows2;
    write_flows_csv(flows1, rows);
    write_flows_csv(flows2, rows);
    CHECK(flows1.str() == flows2.str());  // byte-identical on identical input

    std::istringstream in(flows1.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "#atpsim-flows-v1");
    std::getline(in, line);
    CHECK(line.rfind("seed,mlr,load_scale,flow_id,protocol", 0) == 0);
    int data_lines = 0;
    while (std::getline(in, line))
        if (!line.empty())
            ++data_lines;
    CHECK(data_lines == 2);

    std::ostringstream agg;
    write_aggregate_csv(agg, aggregate_rows(rows));
    std::istringstream ain(agg.str());
    std::getline(ain, line);
    CHECK(line == "#atpsim-aggregate-v1");
    std::getline(ain, line);
    CHECK(line ==
          "mlr,load_scale,protocol,seeds,flows,completed,mean_jct_ns,p99_jct_ns,"
          "mean_goodput_bps,jain_goodput,mean_measured_loss,window_loss");
    data_lines = 0;
    while (std::getline(ain, line))
        if (!line.empty())
            ++data_lines;
    CHECK(data_lines == 2);  // atp-full and udp groups
}

namespace {

Ini ini_text(const std::string& text) {
    std::istringstream in(text);
    return Ini::parse(in, "test.ini");
}

std::string config_error(const std::string& text) {
    try {
        SimConfig::from_ini(ini_text(text), ".");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const std::string kMinimal =
    "[topology]\nkind = dumbbell\n"
    "[workload]\nkind = pairs\npair_senders = 1\n"
    "[protocol]\nprotocol = reliable\n";

}  // namespace

TEST_CASE("ini parsing") {
    SUBCASE("values, comments, sections") {
        Ini ini = ini_text("# comment\n[a]\nx = 1\ny = hello ; trailing\n[b]\nx = 2.5\n");
        CHECK(ini.integer("a", "x", 0) == 1);
        CHECK(ini.str("a", "y", "") == "hello");
        CHECK(ini.num("b", "x", 0) == doctest::Approx(2.5));
        CHECK(ini.num("b", "missing", 7.5) == doctest::Approx(7.5));
        ini.finish();  // everything consumed
    }
    SUBCASE("unknown keys are reported") {
        Ini ini = ini_text("[a]\nx = 1\ntypo_key = 2\n");
        CHECK(ini.integer("a", "x", 0) == 1);
        CHECK_THROWS_WITH_AS(ini.finish(),
                             doctest::Contains("typo_key"), ConfigError);
    }
    SUBCASE("duplicate keys rejected at parse time") {
        CHECK_THROWS_AS(ini_text("[a]\nx = 1\nx = 2\n"), ConfigError);
    }
    SUBCASE("key outside any section rejected") {
        CHECK_THROWS_AS(ini_text("x = 1\n[a]\n"), ConfigError);
    }
    SUBCASE("bad numbers carry file and line") {
        Ini ini = ini_text("[a]\nx = abc\n");
        CHECK_THROWS_WITH_AS(ini.integer("a", "x", 0),
                             doctest::Contains("test.ini:2"), ConfigError);
    }
    SUBCASE("bandwidth suffixes") {
        Ini ini = ini_text("[a]\ng = 10G\nm = 250M\nk = 64K\nplain = 5000\n");
        CHECK(ini.bandwidth("a", "g", 0) == 10 * GBPS);
        CHECK(ini.bandwidth("a", "m", 0) == 250'000'000);
        CHECK(ini.bandwidth("a", "k", 0) == 64'000);
        CHECK(ini.bandwidth("a", "plain", 0) == 5000);
        ini.finish();
    }
    SUBCASE("lists") {
        Ini ini = ini_text("[a]\nxs = 0.05, 0.25, 0.5\nseeds = 1,2,3\n");
        CHECK(ini.num_list("a", "xs", {}) == std::vector<double>{0.05, 0.25, 0.5});
        CHECK(ini.int_list("a", "seeds", {}) == std::vector<uint64_t>{1, 2, 3});
    }
}

TEST_CASE("run configuration validation") {
    SUBCASE("minimal config loads with defaults") {
        SimConfig cfg = SimConfig::from_ini(ini_text(kMinimal), ".");
        CHECK(cfg.topology.kind == TopologyConfig::Kind::Dumbbell);
        CHECK(cfg.protocol.protocol == "reliable");
        CHECK(cfg.run.seeds == std::vector<uint64_t>{1});
        CHECK(cfg.run.duration_ns == 60 * NS_PER_SEC);
        CHECK(cfg.mix == TrafficMix::None);
        CHECK(cfg.workload.messages_per_flow == 1);
    }
    SUBCASE("tolerated loss ratio must stay below one") {
        CHECK(config_error(kMinimal + "[protocol]x\n") != "");  // sanity: bad text errors
        CHECK(config_error("[topology]\nkind = dumbbell\n"
                           "[workload]\nkind = pairs\npair_senders = 1\n"
                           "[protocol]\nprotocol = atp\nmlr = 1.0\n")
                  .find("mlr") != std::string::npos);
        CHECK(config_error("[topology]\nkind = dumbbell\n"
                           "[workload]\nkind = pairs\npair_senders = 1\n"
                           "[protocol]\nprotocol = atp\nmlr = -0.1\n")
                  .find("mlr") != std::string::npos);
    }
    SUBCASE("cdf workloads require a distribution file") {
        CHECK(config_error("[topology]\nkind = dumbbell\n"
                           "[workload]\nkind = cdf\ntotal_messages = 10\n"
                           "[protocol]\nprotocol = udp\n")
                  .find("cdf") != std::string::npos);
    }
    SUBCASE("duration must be positive") {
        CHECK(config_error(kMinimal + "[run]\nduration_ns = 0\n") != "");
    }
    SUBCASE("load scale must be positive") {
        CHECK(config_error(kMinimal + "[workload]x\n") != "");  // sanity
        CHECK(config_error("[topology]\nkind = dumbbell\n"
                           "[workload]\nkind = pairs\npair_senders = 1\nload_scale = 0\n"
                           "[protocol]\nprotocol = reliable\n") != "");
    }
    SUBCASE("sweep values are validated like their scalar forms") {
        CHECK(config_error(kMinimal + "[run]\nsweep_mlr = 0.1, 1.5\n").find("mlr") !=
              std::string::npos);
        CHECK(config_error(kMinimal + "[run]\nsweep_load_scale = 1, 0\n") != "");
    }
    SUBCASE("unknown protocol name") {
        CHECK(config_error("[topology]\nkind = dumbbell\n"
                           "[workload]\nkind = pairs\npair_senders = 1\n"
                           "[protocol]\nprotocol = carrier-pigeon\n")
                  .find("carrier-pigeon") != std::string::npos);
    }
    SUBCASE("switch buffer must exceed the approximate reservation") {
        CHECK(config_error(kMinimal + "[switch]\nbuffer_packets = 31\n") != "");
    }
    SUBCASE("red thresholds sane") {
        CHECK(config_error(kMinimal + "[switch]\nred_min = 5\nred_max = 2\n") != "");
    }
    SUBCASE("geometry errors surface at load time") {
        CHECK(config_error("[topology]\nkind = fat_tree\ncores = 3\naggs = 2\n"
                           "[workload]\nkind = pairs\npair_senders = 1\n"
                           "[protocol]\nprotocol = udp\n") != "");
    }
}
