#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "devchain/block.hpp"
#include "devchain/contracts/engine.hpp"
#include "devchain/net/rpc.hpp"

namespace devchain::node {

// Typed convenience wrapper over a node's RPC port, shared by the CLI,
// the pipeline runner and the benchmark driver. Thread-safe (calls are
// serialized on the underlying client).
class node_client {
  public:
    explicit node_client(const std::string& rpc_endpoint, int timeout_ms = 5000);

    doc call(const std::string& method, const doc& params);

    hash32 submit(const transaction& tx);
    std::optional<doc> query_state(const std::string& key);  // nullopt when absent
    std::vector<std::pair<std::string, doc>> query_prefix(const std::string& prefix);
    std::pair<block, std::vector<bool>> query_block(uint64_t height);
    int64_t head_height();
    std::vector<contracts::event> query_events(uint64_t since,
                                               std::optional<contracts::audience> aud = {});
    std::string castore_put(bytes_view content, bool structured = false);
    bool castore_has(const std::string& cid);
    bytes castore_get(const std::string& cid);
    doc stats();

    // Polls until the node's head reaches `height` (or a key appears).
    bool wait_for_height(int64_t height, int timeout_ms);
    std::optional<doc> wait_for_key(const std::string& key, int timeout_ms);

  private:
    std::unique_ptr<net::rpc_client> rpc_;  // movable despite the client's lock
    int timeout_ms_;
};

// Live event feed over a node's peer port. Events arrive only after their
// block is committed on that node; `since` replays history from a height.
class event_subscriber {
  public:
    event_subscriber(const std::string& peer_endpoint, uint64_t since = 0,
                     std::optional<contracts::audience> aud = {});

    // Next matching event, or nullopt when `timeout_ms` elapses.
    std::optional<contracts::event> next(int timeout_ms);
    void close();

  private:
    net::connection_ptr conn_;
};

}  // namespace devchain::node
