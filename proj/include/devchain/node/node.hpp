#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <thread>

#include "devchain/castore/castore.hpp"
#include "devchain/consensus/orderer.hpp"
#include "devchain/net/rpc.hpp"
#include "devchain/node/blocklog.hpp"
#include "devchain/node/netconfig.hpp"

namespace devchain::node {

enum class node_role { peer, orderer };

struct node_options {
    network_config config;
    node_role role = node_role::peer;
    size_t org_index = 0;                 // which org this peer serves
    std::optional<keypair> orderer_keys;  // required when role == orderer
};

// One daemon: chain replica + contract state + content store behind the
// peer wire protocol and an RPC port. The orderer variant also hosts the
// batching core and streams blocks to subscribed peers. Peers replay their
// block log on startup and then follow the orderer, reconnecting as needed.
class node {
  public:
    explicit node(node_options opts);
    ~node();

    node(const node&) = delete;
    node& operator=(const node&) = delete;

    void start();  // throws port_in_use / corrupt_chain / bad_args
    void stop();

    const std::string& name() const { return name_; }
    node_role role() const { return opts_.role; }
    std::string peer_endpoint() const { return endpoint_; }
    std::string rpc_endpoint() const { return rpc_endpoint_; }

    int64_t head() const;  // committed tip height, -1 before genesis
    hash32 state_digest() const;
    castore::store& object_store() { return *castore_; }
    std::vector<block> blocks() const;  // snapshot, for audits and tests

  private:
    static uint64_t now_ms();

    // Applies one block to the node replica (and log when persist). Returns
    // false when the block is already committed. Throws on structural faults.
    bool apply_block(const block& b, bool persist);

    void cutter_loop();  // orderer: batch cutting + heartbeats
    void sync_loop();    // peer: follow the orderer's block stream
    void accept_loop();
    void serve_peer_conn(const net::connection_ptr& conn);
    void pump_loop();  // pushes blocks/events to subscribers
    void register_rpc();

    doc ack_for_submit(const transaction& tx);
    doc rpc_castore_get(const doc& params);
    bytes fetch_remote_object(const std::string& cid);

    node_options opts_;
    std::string name_;
    std::string endpoint_;
    std::string rpc_endpoint_;
    std::filesystem::path dir_;

    std::unique_ptr<consensus::replica> replica_;
    std::unique_ptr<consensus::orderer_core> orderer_;
    std::unique_ptr<block_log> log_;
    std::unique_ptr<castore::store> castore_;
    std::vector<std::vector<bool>> validity_;
    std::vector<contracts::event> events_;
    mutable std::mutex chain_mu_;

    net::counters_ptr counters_;
    net::listener_ptr listener_;
    std::unique_ptr<net::rpc_server> rpc_;

    struct event_sub {
        net::connection_ptr conn;
        std::optional<contracts::audience> filter;
        size_t cursor = 0;
        bool dead = false;
    };
    struct block_sub {
        net::connection_ptr conn;
        uint64_t next = 0;
        bool dead = false;
    };
    std::vector<event_sub> event_subs_;
    std::vector<block_sub> block_subs_;
    std::mutex subs_mu_;

    net::connection_ptr submit_conn_;  // peer -> orderer forwarding lane
    std::mutex submit_mu_;

    std::thread main_thread_;
    std::thread accept_thread_;
    std::thread pump_thread_;
    std::vector<std::thread> conn_threads_;
    std::mutex threads_mu_;

    std::atomic<bool> stop_{false};
    std::atomic<bool> started_{false};
    std::atomic<uint64_t> last_block_real_ms_{0};
};

}  // namespace devchain::node
