#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <atomic>
#include <cmath>

#include "devchain/bench/bench.hpp"
#include "devchain/node/client.hpp"
#include "devchain/node/node.hpp"
#include "devchain/state.hpp"

using namespace devchain;
using namespace devchain::bench;

namespace {

round_spec counted_round(uint64_t count, double tps) {
    round_spec s;
    s.index = 0;
    s.label = "QueryPrivateData";
    s.termination = termination_kind::tx_number;
    s.count = count;
    s.rate = rate_kind::fixed_rate;
    s.start_tps = tps;
    s.end_tps = tps;
    return s;
}

round_spec linear_round(uint64_t count, double a, double b) {
    round_spec s = counted_round(count, a);
    s.rate = rate_kind::linear_rate;
    s.start_tps = a;
    s.end_tps = b;
    return s;
}

errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const chain_error& e) {
        return e.code();
    }
    return errc::ok;
}

// Simulation oracle for the linear ramp: integrate the instantaneous rate in
// tiny steps and emit a send whenever the accumulated mass crosses the next
// integer.
std::vector<double> simulated_linear_instants(double a, double b, double horizon, size_t n) {
    std::vector<double> instants;
    const double dt = horizon / 2e6;
    double mass = 0;
    for (double t = 0; t <= horizon + dt && instants.size() < n; t += dt) {
        while (instants.size() < n && mass >= double(instants.size())) instants.push_back(t);
        mass += (a + (b - a) * t / horizon) * dt;
    }
    return instants;
}

struct benchnet {
    std::filesystem::path root;
    keypair orderer_keys = generate_identity(role::owner, "orderer-org");
    keypair funded = generate_identity(role::owner, "org1");
    keypair broke = generate_identity(role::developer, "org1");
    node::network_config cfg;
    std::vector<std::unique_ptr<node::node>> nodes;

    benchnet() {
        static std::atomic<int> counter{0};
        const int id = counter.fetch_add(1);
        root = std::filesystem::temp_directory_path() /
               ("devchain_bench_" + std::to_string(getpid()) + "_" + std::to_string(id));
        std::filesystem::create_directories(root);
        const std::string base = "inproc://bench" + std::to_string(id);
        cfg.orgs.push_back({"org1", base + "-org1"});
        cfg.orderer_endpoint = base + "-orderer";
        cfg.orderer_identity = orderer_keys.id;
        cfg.policy.max_batch_wait_ms = 10;
        cfg.heartbeat_interval_ms = 100;
        cfg.genesis_members = {funded.id, broke.id};
        cfg.genesis_allocations = {{funded.id.member_id, 1'000'000}};
        cfg.data_dir = root.string();
        nodes.push_back(std::make_unique<node::node>(
            node::node_options{cfg, node::node_role::orderer, 0, orderer_keys}));
        nodes.push_back(
            std::make_unique<node::node>(node::node_options{cfg, node::node_role::peer, 0, {}}));
        for (auto& n : nodes) n->start();
        node::node_client rpc(nodes[1]->rpc_endpoint());
        REQUIRE(rpc.wait_for_height(0, 5000));
        REQUIRE(rpc.wait_for_key(keys::token(funded.id.member_id.hex()), 5000));
    }

    ~benchnet() {
        for (auto& n : nodes) n->stop();
        std::error_code ec;
        std::filesystem::remove_all(root, ec);
    }

    std::string peer_rpc() const { return nodes[1]->rpc_endpoint(); }
    std::string peer_ep() const { return nodes[1]->peer_endpoint(); }
    std::string orderer_rpc() const { return nodes[0]->rpc_endpoint(); }
};

}  // namespace

TEST_CASE("round names combine index, label, termination and rate") {
    round_spec s = counted_round(2500, 143.7);
    CHECK(s.name() == "Round0-QueryPrivateData-TxNumber-FixedRate");
    s.index = 2;
    s.rate = rate_kind::linear_rate;
    CHECK(s.name() == "Round2-QueryPrivateData-TxNumber-LinearRate");
    s.index = 3;
    s.termination = termination_kind::tx_duration;
    s.seconds = 60;
    CHECK(s.name() == "Round3-QueryPrivateData-TxDuration-LinearRate");
    s.rate = rate_kind::fixed_rate;
    s.label = "TokenTransfer";
    CHECK(s.name() == "Round3-TokenTransfer-TxDuration-FixedRate");
}

TEST_CASE("fixed-rate schedules send every 1/r seconds") {
    std::vector<double> ten = send_offsets(counted_round(10, 100));
    REQUIRE(ten.size() == 10);
    for (size_t k = 0; k < 10; ++k) CHECK(ten[k] == doctest::Approx(0.01 * double(k)).epsilon(1e-12));

    std::vector<double> paper = send_offsets(counted_round(2500, 143.7));
    REQUIRE(paper.size() == 2500);
    const double gap = paper[1] - paper[0];
    CHECK(gap == doctest::Approx(1.0 / 143.7).epsilon(1e-12));
    CHECK(gap == doctest::Approx(0.00696).epsilon(1e-3));

    round_spec timed = counted_round(1, 80);
    timed.termination = termination_kind::tx_duration;
    timed.seconds = 2.0;
    std::vector<double> within = send_offsets(timed);
    CHECK(within.size() == 160);  // 80 tps for 2 s
    for (double t : within) CHECK(t < 2.0);
}

TEST_CASE("linear ramp follows the closed-form cumulative curve") {
    // 50 -> 150 tps with 1000 sends puts the horizon at 10 s and the midpoint
    // crossing at exactly 375 sends.
    std::vector<double> up = send_offsets(linear_round(1000, 50, 150));
    REQUIRE(up.size() == 1000);
    CHECK(up[0] == 0.0);
    CHECK(up[375] == doctest::Approx(5.0).epsilon(1e-9));
    for (size_t k = 1; k < up.size(); ++k) CHECK(up[k] > up[k - 1]);
    CHECK(up.back() < 10.0);

    // Numeric integration agrees with the closed form.
    std::vector<double> sim = simulated_linear_instants(50, 150, 10.0, 1000);
    for (size_t k : {size_t(1), size_t(100), size_t(375), size_t(500), size_t(999)})
        CHECK(up[k] == doctest::Approx(sim[k]).epsilon(1e-3));

    // A downward ramp is the mirror image: what the rising schedule reaches
    // quickly, the falling one reaches late.
    std::vector<double> down = send_offsets(linear_round(1000, 150, 50));
    REQUIRE(down.size() == 1000);
    for (size_t k = 1; k < down.size(); ++k) CHECK(down[k] > down[k - 1]);
    CHECK(down[500] < up[500]);

    // Duration-terminated ramps stop at the window edge: N(10) = 10*(50+150)/2.
    round_spec timed = linear_round(1, 50, 150);
    timed.termination = termination_kind::tx_duration;
    timed.seconds = 10.0;
    std::vector<double> window = send_offsets(timed);
    CHECK(window.size() == 1000);
    for (double t : window) CHECK(t < 10.0);

    // Equal endpoints degenerate to the fixed controller.
    std::vector<double> flat = send_offsets(linear_round(100, 80, 80));
    std::vector<double> fixed = send_offsets(counted_round(100, 80));
    for (size_t k = 0; k < 100; ++k) CHECK(flat[k] == doctest::Approx(fixed[k]).epsilon(1e-12));
}

TEST_CASE("round specs validate and round-trip through documents") {
    round_spec s = linear_round(2500, 50, 150);
    s.index = 2;
    s.workers = 4;
    s.workload_params = doc{{"key", "project/app"}};
    round_spec back = round_spec::from_doc(s.to_doc());
    CHECK(back.name() == s.name());
    CHECK(back.count == s.count);
    CHECK(back.start_tps == doctest::Approx(s.start_tps));
    CHECK(back.end_tps == doctest::Approx(s.end_tps));
    CHECK(back.workers == 4);
    CHECK(back.workload_params == s.workload_params);

    // Canonically encodable: fractional rates travel as strings.
    round_spec frac = counted_round(10, 143.7);
    CHECK_NOTHROW(canonical_encode(frac.to_doc()));
    CHECK(round_spec::from_doc(frac.to_doc()).start_tps == doctest::Approx(143.7));

    doc d = counted_round(10, 100).to_doc();
    doc bad = d;
    bad["tps"] = "0";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["tps"] = "brisk";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["count"] = 0;
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["workers"] = 0;
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["label"] = "two-part";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["rate"] = "warp";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["termination"] = "whenever";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad["workload"] = "mine_blocks";
    CHECK(code_of([&] { round_spec::from_doc(bad); }) == errc::bad_args);
}

namespace {

struct scripted_adapter : sut_adapter {
    std::function<bool(size_t, size_t)> fn;
    std::atomic<uint64_t> calls{0};
    explicit scripted_adapter(std::function<bool(size_t, size_t)> f) : fn(std::move(f)) {}
    bool issue(size_t w, size_t k) override {
        calls.fetch_add(1);
        return fn(w, k);
    }
};

}  // namespace

TEST_CASE("run_round aggregates latencies and counts") {
    round_spec spec = counted_round(100, 500);
    spec.workers = 4;

    scripted_adapter ok([](size_t, size_t k) {
        std::this_thread::sleep_for(std::chrono::milliseconds(k % 2 ? 1 : 3));
        return true;
    });
    round_metrics m = run_round(spec, ok);
    CHECK(m.name == "Round0-QueryPrivateData-TxNumber-FixedRate");
    CHECK(m.succ == 100);
    CHECK(m.fail == 0);
    CHECK_FALSE(m.partial);
    CHECK(m.min_latency_s >= 0.001);
    CHECK(m.min_latency_s <= m.avg_latency_s);
    CHECK(m.avg_latency_s <= m.max_latency_s);
    CHECK(m.max_latency_s >= 0.003);
    CHECK(m.send_rate_tps > 0);
    CHECK(m.throughput_tps <= m.send_rate_tps * 1.01);

    scripted_adapter tenth([](size_t, size_t k) { return k % 10 != 9; });
    round_metrics mixed = run_round(spec, tenth);
    CHECK(mixed.succ == 90);
    CHECK(mixed.fail == 10);
    CHECK(mixed.succ + mixed.fail == spec.count);

    scripted_adapter dying([](size_t, size_t k) -> bool {
        if (k == 37) raise(errc::adapter_unavailable, "gone");
        return true;
    });
    round_metrics partial = run_round(spec, dying);
    CHECK(partial.partial);
    CHECK(partial.succ + partial.fail < spec.count);
}

TEST_CASE("markdown report matches the published table formats") {
    round_metrics paper;
    paper.name = "Round0-QueryPrivateData-TxNumber-FixedRate";
    paper.succ = 2500;
    paper.fail = 0;
    paper.send_rate_tps = 143.7;
    paper.max_latency_s = 0.30;
    paper.min_latency_s = 0.01;
    paper.avg_latency_s = 0.02;
    paper.throughput_tps = 143.6;

    const std::string header =
        "| Name | Succ | Fail | Send Rate (TPS) | Max Latency (s) | Min Latency (s) "
        "| Avg Latency (s) | Throughput (TPS) |";
    const std::string row =
        "| Round0-QueryPrivateData-TxNumber-FixedRate | 2500 | 0 | 143.7 | 0.30 | 0.01 "
        "| 0.02 | 143.6 |";

    std::string md = render_markdown({paper}, {});
    CHECK(md.find(header) != std::string::npos);
    CHECK(md.find(row) != std::string::npos);

    // Header-only when there is nothing to report.
    std::string blank = render_markdown({}, {});
    CHECK(blank.find(header) != std::string::npos);
    CHECK(blank.find("| Round") == std::string::npos);

    // Resource tables carry the published columns.
    resource_summary peer;
    peer.name = "/peer0.org1";
    peer.cpu_max_pct = 1.46;
    peer.cpu_avg_pct = 1.16;
    peer.mem_max_mb = 42.4;
    peer.mem_avg_mb = 42.4;
    peer.traffic_in_mb = 0.05;
    peer.traffic_out_mb = 0.0164;
    std::string with_res = render_markdown({paper}, {{paper.name, {peer}}});
    CHECK(with_res.find("| Name | CPU% (max) | CPU% (avg) | Memory(max) [MB] | Memory(avg) [MB] "
                        "| Traffic In [MB] | Traffic Out [MB] | Disc Write [B] | Disc Read [B] |") !=
          std::string::npos);
    CHECK(with_res.find("| /peer0.org1 | 1.46 | 1.16 | 42.4 | 42.4 | 0.0500 | 0.0164 | 0.00 | 0.00 |") !=
          std::string::npos);

    // JSON reparses to the same values.
    doc j = render_json({paper}, {{paper.name, {peer}}});
    doc parsed = doc::parse(j.dump());
    round_metrics back = round_metrics::from_doc(parsed.at("rounds").at(0));
    CHECK(back.name == paper.name);
    CHECK(back.succ == 2500);
    CHECK(back.send_rate_tps == doctest::Approx(143.7));
    CHECK(back.throughput_tps == doctest::Approx(143.6));
    resource_summary rs = resource_summary::from_doc(parsed.at("resources").at(0).at("processes").at(0));
    CHECK(rs.name == peer.name);
    CHECK(rs.traffic_out_mb == doctest::Approx(0.0164));
}

TEST_CASE("live query round meets the relational invariants") {
    benchnet net;
    round_spec spec = counted_round(300, 150);
    spec.workers = 2;
    spec.workload_params = doc{{"key", keys::token(net.funded.id.member_id.hex())}};

    auto adapter = make_adapter(spec, net.peer_rpc(), "", std::nullopt);
    resource_monitor mon({{"orderer", net.orderer_rpc()}, {"org1", net.peer_rpc()}}, 100);
    mon.start();
    round_metrics m = run_round(spec, *adapter);
    std::vector<resource_summary> res = mon.stop();

    CHECK(m.succ + m.fail == 300);
    CHECK(m.succ == 300);
    CHECK_FALSE(m.partial);
    CHECK(m.min_latency_s <= m.avg_latency_s);
    CHECK(m.avg_latency_s <= m.max_latency_s);
    CHECK(m.send_rate_tps == doctest::Approx(150).epsilon(0.05));
    CHECK(m.throughput_tps <= m.send_rate_tps * 1.01);

    REQUIRE(res.size() == 2);
    for (const resource_summary& s : res) {
        CHECK_FALSE(s.partial);
        CHECK(s.cpu_max_pct >= s.cpu_avg_pct);
        CHECK(s.cpu_avg_pct >= 0);
        CHECK(s.mem_max_mb >= s.mem_avg_mb);
        CHECK(s.mem_avg_mb > 0);  // the host process is certainly resident
    }
    // The peer answered every query; its transport counters moved.
    CHECK(res[1].name == "org1");
    CHECK(res[1].traffic_in_mb > 0);
    CHECK(res[1].traffic_out_mb > 0);

    // A query against a key that never existed still responds, as a failure.
    round_spec miss = counted_round(5, 100);
    miss.workload_params = doc{{"key", "project/ghost"}};
    auto miss_adapter = make_adapter(miss, net.peer_rpc(), "", std::nullopt);
    round_metrics mm = run_round(miss, *miss_adapter);
    CHECK(mm.fail == 5);
    CHECK(mm.succ == 0);
}

TEST_CASE("live write round confirms commits and preserves balances") {
    benchnet net;
    node::node_client rpc(net.peer_rpc());
    const std::string balance_key = keys::token(net.funded.id.member_id.hex());
    const int64_t before = require_int(*rpc.query_state(balance_key), "balance_cents");

    round_spec spec = counted_round(60, 40);
    spec.label = "TokenTransfer";
    spec.workload = workload_kind::submit_write;
    spec.workers = 2;

    auto adapter = make_adapter(spec, net.peer_rpc(), net.peer_ep(), net.funded);
    round_metrics m = run_round(spec, *adapter);
    CHECK(m.succ == 60);
    CHECK(m.fail == 0);
    CHECK_FALSE(m.partial);
    // Commit latency includes at least the batching delay.
    CHECK(m.min_latency_s > 0);
    CHECK(m.avg_latency_s >= m.min_latency_s);
    CHECK(m.throughput_tps <= m.send_rate_tps * 1.01);

    // Self-transfers leave the balance untouched (and every tx was valid).
    const int64_t after = require_int(*rpc.query_state(balance_key), "balance_cents");
    CHECK(after == before);

    // A signer with no funds commits invalid transfers: confirmed failures.
    round_spec poor = spec;
    poor.count = 5;
    poor.workload_params = doc{{"contract", "token"},
                               {"op", "transfer"},
                               {"args", doc{{"to", net.funded.id.member_id.hex()},
                                            {"amount_cents", 25}}}};
    auto broke_adapter = make_adapter(poor, net.peer_rpc(), net.peer_ep(), net.broke);
    round_metrics pm = run_round(poor, *broke_adapter);
    CHECK(pm.fail == 5);
    CHECK(pm.succ == 0);

    // Write rounds refuse to start without a signer or confirmation feed.
    CHECK(code_of([&] { make_adapter(spec, net.peer_rpc(), net.peer_ep(), std::nullopt); }) ==
          errc::bad_args);
    CHECK(code_of([&] { make_adapter(spec, net.peer_rpc(), "", net.funded); }) == errc::bad_args);
}

TEST_CASE("benchmark config drives multi-round runs end to end") {
    benchnet net;
    bench_config cfg;
    cfg.target_rpc = net.peer_rpc();
    cfg.target_peer = net.peer_ep();
    cfg.signer = net.funded;
    cfg.monitor = {{"org1", net.peer_rpc()}};
    cfg.interval_ms = 100;

    round_spec reads = counted_round(40, 100);
    reads.workload_params = doc{{"key", keys::token(net.funded.id.member_id.hex())}};
    round_spec writes = counted_round(20, 40);
    writes.index = 1;
    writes.label = "TokenTransfer";
    writes.workload = workload_kind::submit_write;
    cfg.rounds = {reads, writes};

    // The config document is canonical and round-trips.
    doc d = cfg.to_doc();
    CHECK_NOTHROW(canonical_encode(d));
    bench_config loaded = bench_config::from_doc(d);
    CHECK(loaded.target_rpc == cfg.target_rpc);
    CHECK(loaded.rounds.size() == 2);
    CHECK(loaded.rounds[1].name() == "Round1-TokenTransfer-TxNumber-FixedRate");
    CHECK(loaded.signer.has_value());
    CHECK(loaded.signer->id.member_id == net.funded.id.member_id);
    CHECK(loaded.monitor.size() == 1);

    bench_result result = run_benchmark(loaded);
    REQUIRE(result.rounds.size() == 2);
    CHECK(result.rounds[0].succ == 40);
    CHECK(result.rounds[1].succ == 20);
    REQUIRE(result.resources.size() == 2);
    CHECK(result.resources[0].round == result.rounds[0].name);
    REQUIRE(result.resources[0].processes.size() == 1);

    const std::string md = render_markdown(result.rounds, result.resources);
    CHECK(md.find("| Round0-QueryPrivateData-TxNumber-FixedRate | 40 | 0 |") != std::string::npos);
    CHECK(md.find("| Round1-TokenTransfer-TxNumber-FixedRate | 20 | 0 |") != std::string::npos);
    CHECK(md.find("## Resource utilization: Round1-TokenTransfer-TxNumber-FixedRate") !=
          std::string::npos);

    doc bad = d;
    bad["rounds"] = doc::array();
    CHECK(code_of([&] { bench_config::from_doc(bad); }) == errc::bad_args);
    bad = d;
    bad.erase("secret_hex");
    CHECK(code_of([&] { bench_config::from_doc(bad); }) == errc::bad_args);
}
