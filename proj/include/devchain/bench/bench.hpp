#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "devchain/keys.hpp"
#include "devchain/value.hpp"

namespace devchain::bench {

// workload round = termination policy x rate controller x workload body.
enum class workload_kind { query_state, submit_write };
enum class termination_kind { tx_number, tx_duration };
enum class rate_kind { fixed_rate, linear_rate };

std::string_view workload_name(workload_kind w);
workload_kind workload_from_name(std::string_view name);
std::string_view termination_name(termination_kind t);
termination_kind termination_from_name(std::string_view name);
std::string_view rate_name(rate_kind r);
rate_kind rate_from_name(std::string_view name);

struct round_spec {
    size_t index = 0;
    std::string label;
    workload_kind workload = workload_kind::query_state;
    // query_state: {"key": <state key>}; submit_write: {"project_id", "contract",
    // "op", "args"} (empty = a one-cent self transfer from the configured signer).
    doc workload_params = doc::object();
    termination_kind termination = termination_kind::tx_number;
    uint64_t count = 0;     // tx_number: exact transactions to attempt
    double seconds = 0.0;   // tx_duration: sending window
    rate_kind rate = rate_kind::fixed_rate;
    double start_tps = 0.0;  // fixed_rate reads only start_tps
    double end_tps = 0.0;
    size_t workers = 1;

    // "Round<i>-<label>-<TxNumber|TxDuration>-<FixedRate|LinearRate>"
    std::string name() const;

    doc to_doc() const;
    static round_spec from_doc(const doc& d);  // throws bad_args
};

// Precomputed send instants, in seconds from round start, strictly
// nondecreasing. FixedRate(r) sends at k/r. LinearRate(a,b) ramps the
// instantaneous rate linearly from a to b over the horizon H (the configured
// duration, or 2*count/(a+b) for counted rounds), so the cumulative send
// curve is N(t) = a*t + (b-a)*t^2/(2H) and instant k solves N(t) = k.
std::vector<double> send_offsets(const round_spec& spec);

struct round_metrics {
    std::string name;
    uint64_t succ = 0;
    uint64_t fail = 0;
    double send_rate_tps = 0.0;
    double max_latency_s = 0.0;
    double min_latency_s = 0.0;
    double avg_latency_s = 0.0;
    double throughput_tps = 0.0;
    bool partial = false;  // the adapter died mid-round; counts cover what ran

    doc to_doc() const;
    static round_metrics from_doc(const doc& d);
};

// System-under-test hook. One call per scheduled transaction; `worker` is a
// stable lane index < spec.workers so implementations can keep one connection
// per lane. Returns true when the transaction is confirmed successful, false
// for a per-transaction failure. Any exception aborts the round; the metrics
// come back flagged partial.
struct sut_adapter {
    virtual ~sut_adapter() = default;
    virtual bool issue(size_t worker, size_t k) = 0;
};

// Plays the schedule with spec.workers concurrent lanes and aggregates:
// latency = confirm - send per transaction, send rate = attempted over the
// span of sends, throughput = successes over the span from first send to
// last confirmation.
round_metrics run_round(const round_spec& spec, sut_adapter& sut);

// Live adapters against a running node. query_state rounds need only the
// RPC endpoint; submit_write rounds also subscribe to `peer_endpoint` for
// commit confirmations and sign with `signer`.
std::unique_ptr<sut_adapter> make_adapter(const round_spec& spec, const std::string& rpc_endpoint,
                                          const std::string& peer_endpoint,
                                          const std::optional<keypair>& signer);

// Per-process resource figures over one round, sampled at a fixed interval.
// CPU and memory come from the host process tables; traffic comes from the
// node transport byte counters so the numbers are comparable across hosts.
struct resource_summary {
    std::string name;
    double cpu_max_pct = 0.0;
    double cpu_avg_pct = 0.0;
    double mem_max_mb = 0.0;
    double mem_avg_mb = 0.0;
    double traffic_in_mb = 0.0;
    double traffic_out_mb = 0.0;
    double disc_write_b = 0.0;
    double disc_read_b = 0.0;
    bool partial = false;  // process vanished mid-round

    doc to_doc() const;
    static resource_summary from_doc(const doc& d);
};

struct monitor_target {
    std::string name;
    std::string rpc_endpoint;
};

class resource_monitor {
  public:
    explicit resource_monitor(std::vector<monitor_target> targets, uint64_t interval_ms = 1000);
    ~resource_monitor();

    void start();
    std::vector<resource_summary> stop();  // joins the sampler and summarizes

  private:
    struct probe;
    void loop();

    std::vector<std::unique_ptr<probe>> probes_;
    uint64_t interval_ms_;
    std::atomic<bool> stop_{false};
    std::thread thread_;
    bool running_ = false;
};

// Rendering is a pure function of the metric inputs.
struct round_resources {
    std::string round;
    std::vector<resource_summary> processes;
};

std::string render_markdown(const std::vector<round_metrics>& rounds,
                            const std::vector<round_resources>& resources);
doc render_json(const std::vector<round_metrics>& rounds,
                const std::vector<round_resources>& resources);

struct bench_config {
    std::string target_rpc;   // endpoint workload requests go to
    std::string target_peer;  // block feed for write confirmations
    std::optional<keypair> signer;
    std::vector<monitor_target> monitor;
    uint64_t interval_ms = 1000;
    std::vector<round_spec> rounds;

    doc to_doc() const;
    static bench_config from_doc(const doc& d);
    static bench_config load_file(const std::string& path);
};

struct bench_result {
    std::vector<round_metrics> rounds;
    std::vector<round_resources> resources;
};

// Runs every configured round in order, sampling the monitor targets for the
// duration of each round.
bench_result run_benchmark(const bench_config& cfg);

}  // namespace devchain::bench
