#pragma once

#include <atomic>
#include <functional>
#include <thread>

#include "devchain/node/client.hpp"
#include "devchain/pipeline/package.hpp"

namespace devchain::pipeline {

enum class stage_kind { review, unit, integration };

std::string_view stage_name(stage_kind s);
stage_kind stage_from_name(std::string_view name);  // throws bad_args

// One deterministic check over a tree snapshot — a stand-in for lint/test
// tooling. Pure function of the snapshot: no network, no clock.
struct check_rule {
    std::string kind;  // max_file_bytes | forbidden_pattern | required_path | manifest_assertion
    std::string description;
    uint64_t limit = 0;           // max_file_bytes
    bytes pattern;                // forbidden_pattern (non-empty)
    std::string path;             // required_path / manifest_assertion
    std::string expected_digest;  // manifest_assertion

    doc to_doc() const;
    static check_rule from_doc(const doc& d);  // throws bad_args
};

struct stage_spec {
    stage_kind stage = stage_kind::review;
    std::vector<check_rule> checks;
};

struct package_spec {
    std::string name;
    std::string version_template = "0.1.<head_seq>";
    std::vector<std::string> include_paths;
};

struct pipeline_config {
    std::vector<stage_spec> stages;  // strictly review -> unit -> integration
    package_spec package;
    std::string deploy_target;  // directory path; may be empty when unused

    doc to_doc() const;
    static pipeline_config from_doc(const doc& d);  // validates order and rules
    static pipeline_config load_file(const std::string& path);
    // The in-repo convention: a canonical-encoded `devchain.pipeline` file
    // at the snapshot root.
    static pipeline_config load_tree(const castore::store& cs, const std::string& tree_cid);
};

struct stage_failure {
    std::string rule_description;
    std::string path;
};

struct stage_result {
    stage_kind stage = stage_kind::review;
    bool passed = true;  // == failures.empty()
    std::vector<stage_failure> failures;
};

std::vector<stage_failure> eval_checks(const castore::store& cs, const std::string& tree_cid,
                                       const std::vector<check_rule>& checks);

struct repo_head {
    uint64_t head_seq = 0;
    std::string commit_cid;
};

struct build_outcome {
    std::string name;
    std::string version;
    std::string status;  // "built" | "failed"
    std::vector<stage_result> stages;
    std::optional<std::string> package_cid;
    hash32 tx_id;
    doc record;  // the committed on-chain build document
};

struct deploy_outcome {
    std::string placed_path;
    std::string package_cid;
    hash32 tx_id;
    doc record;  // on-chain record, status "deployed"
};

using clock_fn = std::function<uint64_t()>;  // epoch milliseconds

// CI worker for one project: evaluates stages against the local object
// store, anchors every outcome on chain through a node, and performs gated
// deployment. Chain submission retries transient failures with backoff —
// a completed run is never silently dropped.
class runner {
  public:
    runner(node::node_client& chain, castore::store& objects, keypair submitter,
           std::string project_id);

    build_outcome run_pipeline(const repo_head& head, const pipeline_config& cfg,
                               const clock_fn& clock);
    deploy_outcome execute_deploy(const std::string& name, const std::string& version,
                                  const std::string& target);
    repo_head latest_head();

  private:
    hash32 submit_with_retry(const std::string& contract, const std::string& op, doc args);
    bool tx_committed_valid(const hash32& tx_id, int64_t from_height, int timeout_ms);
    bytes fetch_verified_package(const std::string& cid);

    node::node_client& chain_;
    castore::store& objects_;
    keypair submitter_;
    std::string project_id_;
    uint64_t nonce_;
};

// Follows RepoHeadUpdated events for one project and invokes `on_head`
// exactly once per head_seq, in order. Reconnects resubscribe from the
// start (delivery is at-least-once) and gaps are re-synced from chain
// state, so duplicates are dropped and nothing is missed.
class repo_watcher {
  public:
    repo_watcher(std::string peer_endpoint, std::string rpc_endpoint, std::string project_id,
                 std::function<void(const repo_head&)> on_head);
    ~repo_watcher();

    void start();
    void stop();
    uint64_t last_seq() const { return last_seq_.load(); }

  private:
    void loop();
    void deliver(node::node_client& rpc, uint64_t seq, const std::string& commit_cid);
    void run_once(const repo_head& h);

    std::string peer_endpoint_;
    std::string rpc_endpoint_;
    std::string project_id_;
    std::function<void(const repo_head&)> on_head_;
    std::unique_ptr<node::event_subscriber> sub_;
    std::mutex sub_mu_;
    std::thread thread_;
    std::atomic<uint64_t> last_seq_{0};
    std::atomic<bool> stop_{false};
};

}  // namespace devchain::pipeline
