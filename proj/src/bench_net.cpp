#include <unistd.h>

#include <chrono>
#include <fstream>
#include <future>
#include <map>
#include <mutex>
#include <sstream>

#include "devchain/bench/bench.hpp"
#include "devchain/block.hpp"
#include "devchain/errors.hpp"
#include "devchain/net/transport.hpp"
#include "devchain/node/client.hpp"
#include "devchain/node/node.hpp"

namespace devchain::bench {

namespace {

uint64_t wall_ms() {
    return uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count());
}

// ---- workload adapters ----------------------------------------------------

class query_adapter final : public sut_adapter {
  public:
    query_adapter(const round_spec& spec, const std::string& rpc_endpoint)
        : key_(require_string(spec.workload_params, "key")) {
        clients_.reserve(spec.workers);
        for (size_t i = 0; i < spec.workers; ++i)
            clients_.push_back(std::make_unique<node::node_client>(rpc_endpoint));
    }

    bool issue(size_t worker, size_t) override {
        return clients_[worker]->query_state(key_).has_value();
    }

  private:
    std::string key_;
    std::vector<std::unique_ptr<node::node_client>> clients_;
};

// Watches the committed block feed and resolves each submitted transaction
// to its validity flag, so write latency spans send to commit.
class commit_tracker {
  public:
    commit_tracker(const std::string& rpc_endpoint, const std::string& peer_endpoint)
        : rpc_(std::make_unique<node::node_client>(rpc_endpoint)) {
        const int64_t head = rpc_->head_height();
        conn_ = net::dial(peer_endpoint, 5000);
        conn_->send(net::frame{
            net::msg_type::event_sub,
            canonical_encode(doc{{"kind", "blocks"}, {"since", uint64_t(head + 1)}})});
        thread_ = std::thread([this] { loop(); });
    }

    ~commit_tracker() {
        conn_->close();
        if (thread_.joinable()) thread_.join();
    }

    std::future<bool> expect(const std::string& tx_hex) {
        std::lock_guard lock(mu_);
        if (down_) raise(errc::adapter_unavailable, "commit feed closed");
        return waiting_[tx_hex].get_future();
    }

    void forget(const std::string& tx_hex) {
        std::lock_guard lock(mu_);
        waiting_.erase(tx_hex);
    }

  private:
    void loop() {
        try {
            for (;;) {
                net::frame f;
                const net::recv_status s = conn_->receive(f, 1000);
                if (s == net::recv_status::eof) break;
                if (s == net::recv_status::timed_out) continue;
                if (f.type != net::msg_type::block) continue;
                const block announced = block::from_doc(parse_doc(f.payload));
                // The validity bitmap lives with the replica, one RPC per block.
                auto [b, validity] = rpc_->query_block(announced.header.height);
                std::lock_guard lock(mu_);
                for (size_t i = 0; i < b.txs.size(); ++i) {
                    auto it = waiting_.find(b.txs[i].tx_id.hex());
                    if (it == waiting_.end()) continue;
                    it->second.set_value(i < validity.size() && validity[i]);
                    waiting_.erase(it);
                }
            }
        } catch (...) {
        }
        std::lock_guard lock(mu_);
        down_ = true;
        waiting_.clear();  // pending futures observe a broken promise
    }

    std::unique_ptr<node::node_client> rpc_;
    net::connection_ptr conn_;
    std::thread thread_;
    std::mutex mu_;
    std::map<std::string, std::promise<bool>> waiting_;
    bool down_ = false;
};

class write_adapter final : public sut_adapter {
  public:
    write_adapter(const round_spec& spec, const std::string& rpc_endpoint,
                  const std::string& peer_endpoint, keypair signer)
        : signer_(std::move(signer)), tracker_(rpc_endpoint, peer_endpoint) {
        clients_.reserve(spec.workers);
        for (size_t i = 0; i < spec.workers; ++i)
            clients_.push_back(std::make_unique<node::node_client>(rpc_endpoint));
        const doc& p = spec.workload_params;
        if (p.is_object() && p.contains("op")) {
            project_ = p.contains("project_id") ? require_string(p, "project_id") : "";
            contract_ = require_string(p, "contract");
            op_ = require_string(p, "op");
            args_ = require_field(p, "args");
        } else {
            // default write: a one-cent transfer back to the signer
            contract_ = "token";
            op_ = "transfer";
            args_ = doc{{"to", signer_.id.member_id.hex()}, {"amount_cents", 1}};
        }
        // Fresh nonce space per run; k indexes within it.
        nonce_base_ = wall_ms() * 1000000;
    }

    bool issue(size_t worker, size_t k) override {
        const tx_body body{project_, contract_, op_, args_, wall_ms(),
                           nonce_base_ + k};
        const transaction tx = sign_transaction(body, signer_);
        const std::string id = tx.tx_id.hex();
        std::future<bool> confirmed = tracker_.expect(id);
        try {
            clients_[worker]->submit(tx);
        } catch (const chain_error& e) {
            tracker_.forget(id);
            if (e.code() == errc::connection_failed || e.code() == errc::timeout)
                raise(errc::adapter_unavailable, e.what());
            return false;  // admission rejection is a per-transaction failure
        }
        if (confirmed.wait_for(std::chrono::seconds(30)) != std::future_status::ready) {
            tracker_.forget(id);
            return false;
        }
        return confirmed.get();  // throws if the feed died; aborts the round
    }

  private:
    keypair signer_;
    commit_tracker tracker_;
    std::vector<std::unique_ptr<node::node_client>> clients_;
    std::string project_;
    std::string contract_;
    std::string op_;
    doc args_ = doc::object();
    uint64_t nonce_base_ = 0;
};

// ---- host process sampling ------------------------------------------------

struct proc_snapshot {
    double cpu_seconds = 0;
    double rss_mb = 0;
    double read_b = 0;
    double write_b = 0;
    bool ok = false;
};

proc_snapshot read_proc(uint64_t pid) {
    proc_snapshot snap;
    const std::string base = "/proc/" + std::to_string(pid);
    std::ifstream stat(base + "/stat");
    std::string line;
    if (!std::getline(stat, line)) return snap;
    const size_t comm_end = line.rfind(')');
    if (comm_end == std::string::npos) return snap;
    std::istringstream rest(line.substr(comm_end + 2));
    std::string field;
    uint64_t utime = 0, stime = 0;
    // tokens after the command name start at field 3; utime/stime are 14/15
    for (int idx = 3; rest >> field; ++idx) {
        if (idx == 14) utime = std::stoull(field);
        if (idx == 15) {
            stime = std::stoull(field);
            break;
        }
    }
    static const double hz = double(sysconf(_SC_CLK_TCK));
    static const double page_mb = double(sysconf(_SC_PAGESIZE)) / (1024.0 * 1024.0);
    snap.cpu_seconds = double(utime + stime) / hz;

    std::ifstream statm(base + "/statm");
    uint64_t total_pages = 0, resident_pages = 0;
    if (statm >> total_pages >> resident_pages) snap.rss_mb = double(resident_pages) * page_mb;

    std::ifstream io(base + "/io");  // absent on some kernels; zeros then
    while (std::getline(io, line)) {
        if (line.rfind("read_bytes:", 0) == 0) snap.read_b = std::stod(line.substr(11));
        if (line.rfind("write_bytes:", 0) == 0) snap.write_b = std::stod(line.substr(12));
    }
    snap.ok = true;
    return snap;
}

}  // namespace

std::unique_ptr<sut_adapter> make_adapter(const round_spec& spec, const std::string& rpc_endpoint,
                                          const std::string& peer_endpoint,
                                          const std::optional<keypair>& signer) {
    if (spec.workload == workload_kind::query_state)
        return std::make_unique<query_adapter>(spec, rpc_endpoint);
    if (!signer) raise(errc::bad_args, "submit_write rounds need a signing identity");
    if (peer_endpoint.empty())
        raise(errc::bad_args, "submit_write rounds need a peer endpoint for confirmations");
    return std::make_unique<write_adapter>(spec, rpc_endpoint, peer_endpoint, *signer);
}

// ---- resource monitor -------------------------------------------------------

struct resource_monitor::probe {
    monitor_target target;
    std::unique_ptr<node::node_client> client;
    bool vanished = false;
    bool primed = false;
    double first_in_b = 0, last_in_b = 0;
    double first_out_b = 0, last_out_b = 0;
    double first_read_b = 0, last_read_b = 0;
    double first_write_b = 0, last_write_b = 0;
    double prev_cpu_s = 0;
    std::chrono::steady_clock::time_point prev_at;
    std::vector<double> cpu_pct;
    std::vector<double> mem_mb;

    void tick() {
        if (vanished) return;
        try {
            const doc stats = client->stats();
            const proc_snapshot snap = read_proc(require_uint(stats, "pid"));
            const auto now = std::chrono::steady_clock::now();
            const double in_b = double(require_uint(stats, "bytes_in"));
            const double out_b = double(require_uint(stats, "bytes_out"));
            if (!primed) {
                first_in_b = in_b;
                first_out_b = out_b;
                first_read_b = snap.read_b;
                first_write_b = snap.write_b;
                primed = true;
            } else if (snap.ok) {
                const double wall = std::chrono::duration<double>(now - prev_at).count();
                if (wall > 0)
                    cpu_pct.push_back(std::max(snap.cpu_seconds - prev_cpu_s, 0.0) / wall * 100.0);
            }
            if (snap.ok) {
                mem_mb.push_back(snap.rss_mb);
                prev_cpu_s = snap.cpu_seconds;
                prev_at = now;
                last_read_b = snap.read_b;
                last_write_b = snap.write_b;
            }
            last_in_b = in_b;
            last_out_b = out_b;
        } catch (const chain_error&) {
            vanished = true;
        }
    }

    resource_summary summarize() const {
        resource_summary s;
        s.name = target.name;
        s.partial = vanished;
        for (double c : cpu_pct) {
            s.cpu_max_pct = std::max(s.cpu_max_pct, c);
            s.cpu_avg_pct += c;
        }
        if (!cpu_pct.empty()) s.cpu_avg_pct /= double(cpu_pct.size());
        for (double m : mem_mb) {
            s.mem_max_mb = std::max(s.mem_max_mb, m);
            s.mem_avg_mb += m;
        }
        if (!mem_mb.empty()) s.mem_avg_mb /= double(mem_mb.size());
        s.traffic_in_mb = std::max(last_in_b - first_in_b, 0.0) / (1024.0 * 1024.0);
        s.traffic_out_mb = std::max(last_out_b - first_out_b, 0.0) / (1024.0 * 1024.0);
        s.disc_read_b = std::max(last_read_b - first_read_b, 0.0);
        s.disc_write_b = std::max(last_write_b - first_write_b, 0.0);
        return s;
    }
};

resource_monitor::resource_monitor(std::vector<monitor_target> targets, uint64_t interval_ms)
    : interval_ms_(interval_ms == 0 ? 1000 : interval_ms) {
    for (monitor_target& t : targets) {
        auto p = std::make_unique<probe>();
        p->target = std::move(t);
        probes_.push_back(std::move(p));
    }
}

resource_monitor::~resource_monitor() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
}

void resource_monitor::start() {
    if (running_) return;
    running_ = true;
    for (auto& p : probes_) {
        try {
            p->client = std::make_unique<node::node_client>(p->target.rpc_endpoint);
        } catch (const chain_error&) {
            p->vanished = true;
        }
        p->tick();
    }
    thread_ = std::thread([this] { loop(); });
}

void resource_monitor::loop() {
    // sleep in short steps so stop() never waits a full interval
    uint64_t acc = 0;
    while (!stop_.load()) {
        const uint64_t step = std::min<uint64_t>(interval_ms_, 50);
        std::this_thread::sleep_for(std::chrono::milliseconds(step));
        acc += step;
        if (acc < interval_ms_) continue;
        acc = 0;
        for (auto& p : probes_) p->tick();
    }
}

std::vector<resource_summary> resource_monitor::stop() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
    std::vector<resource_summary> out;
    for (auto& p : probes_) {
        if (running_) p->tick();  // closing sample captures final counters
        out.push_back(p->summarize());
    }
    running_ = false;
    return out;
}

// ---- config + orchestration -------------------------------------------------

doc bench_config::to_doc() const {
    doc mons = doc::array();
    for (const monitor_target& t : monitor)
        mons.push_back(doc{{"name", t.name}, {"rpc", t.rpc_endpoint}});
    doc rs = doc::array();
    for (const round_spec& r : rounds) rs.push_back(r.to_doc());
    doc d{{"target_rpc", target_rpc},
          {"target_peer", target_peer},
          {"monitor", std::move(mons)},
          {"interval_ms", interval_ms},
          {"rounds", std::move(rs)}};
    if (signer) {
        d["identity"] = signer->id.to_doc();
        d["secret_hex"] = signer->secret.hex();
    }
    return d;
}

bench_config bench_config::from_doc(const doc& d) {
    bench_config cfg;
    cfg.target_rpc = require_string(d, "target_rpc");
    if (d.contains("target_peer")) cfg.target_peer = require_string(d, "target_peer");
    if (d.contains("identity") != d.contains("secret_hex"))
        raise(errc::bad_args, "identity and secret_hex must be given together");
    if (d.contains("identity")) {
        keypair kp;
        kp.id = identity::from_doc(d.at("identity"));
        kp.secret = secret_key::from_hex(require_string(d, "secret_hex"));
        cfg.signer = kp;
    }
    if (d.contains("monitor")) {
        const doc& mons = d.at("monitor");
        if (!mons.is_array()) raise(errc::bad_args, "monitor must be an array");
        for (const doc& m : mons)
            cfg.monitor.push_back({require_string(m, "name"), require_string(m, "rpc")});
    }
    if (d.contains("interval_ms")) cfg.interval_ms = require_uint(d, "interval_ms");
    const doc& rs = require_field(d, "rounds");
    if (!rs.is_array() || rs.empty()) raise(errc::bad_args, "rounds must be a non-empty array");
    for (const doc& r : rs) cfg.rounds.push_back(round_spec::from_doc(r));
    return cfg;
}

bench_config bench_config::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) raise(errc::bad_args, "cannot read benchmark config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_doc(parse_doc(text));
}

bench_result run_benchmark(const bench_config& cfg) {
    bench_result out;
    for (const round_spec& spec : cfg.rounds) {
        std::unique_ptr<sut_adapter> adapter =
            make_adapter(spec, cfg.target_rpc, cfg.target_peer, cfg.signer);
        resource_monitor mon(cfg.monitor, cfg.interval_ms);
        mon.start();
        round_metrics m = run_round(spec, *adapter);
        std::vector<resource_summary> procs = mon.stop();
        if (!cfg.monitor.empty()) out.resources.push_back({m.name, std::move(procs)});
        out.rounds.push_back(std::move(m));
    }
    return out;
}

}  // namespace devchain::bench
