#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "devchain/net/transport.hpp"
#include "devchain/value.hpp"

namespace devchain::net {

// Request/response documents over rpc_request/rpc_response frames.
// Request:  {"id": n, "method": "...", "params": <doc>}
// Response: {"id": n, "result": <doc>} | {"id": n, "error": {"code", "message"}}
// Every request receives exactly one response; unknown methods map to
// method_not_found.

class rpc_client {
  public:
    explicit rpc_client(connection_ptr conn) : conn_(std::move(conn)) {}

    // Throws the server-side chain_error (reconstructed from the error code)
    // or timeout/connection_failed for transport faults. Thread-safe; calls
    // on one client are serialized.
    doc call(const std::string& method, const doc& params, int timeout_ms = 5000);

    connection& conn() { return *conn_; }

  private:
    connection_ptr conn_;
    std::mutex mu_;
    uint64_t next_id_ = 1;
};

class rpc_server {
  public:
    using handler = std::function<doc(const doc& params)>;

    explicit rpc_server(listener_ptr lst);
    ~rpc_server();

    void register_method(const std::string& name, handler h);
    void start();
    void stop();
    const std::string& endpoint() const { return endpoint_; }

  private:
    void accept_loop();
    void serve_connection(const connection_ptr& conn);

    listener_ptr listener_;
    std::string endpoint_;
    std::map<std::string, handler> methods_;
    std::thread accept_thread_;
    std::mutex threads_mu_;
    std::vector<std::thread> conn_threads_;
    std::atomic<bool> stop_{false};
};

}  // namespace devchain::net
