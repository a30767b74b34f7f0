#include "devchain/node/client.hpp"

#include <chrono>
#include <thread>

#include "devchain/block.hpp"

namespace devchain::node {

node_client::node_client(const std::string& rpc_endpoint, int timeout_ms)
    : rpc_(std::make_unique<net::rpc_client>(net::dial(rpc_endpoint, timeout_ms))),
      timeout_ms_(timeout_ms) {}

doc node_client::call(const std::string& method, const doc& params) {
    return rpc_->call(method, params, timeout_ms_);
}

hash32 node_client::submit(const transaction& tx) {
    doc r = call("submit_tx", doc{{"tx", tx.to_doc()}});
    return hash32::from_hex(require_string(r, "tx_id"));
}

std::optional<doc> node_client::query_state(const std::string& key) {
    try {
        return std::optional<doc>(require_field(call("query_state", doc{{"key", key}}), "value"));
    } catch (const chain_error& e) {
        if (e.code() == errc::not_found) return std::nullopt;
        throw;
    }
}

std::vector<std::pair<std::string, doc>> node_client::query_prefix(const std::string& prefix) {
    doc r = call("query_prefix", doc{{"prefix", prefix}});
    std::vector<std::pair<std::string, doc>> out;
    for (const doc& e : require_field(r, "entries"))
        out.emplace_back(require_string(e, "key"), require_field(e, "value"));
    return out;
}

std::pair<block, std::vector<bool>> node_client::query_block(uint64_t height) {
    doc r = call("query_block", doc{{"height", height}});
    std::vector<bool> validity;
    for (const doc& v : require_field(r, "validity")) validity.push_back(v.get<bool>());
    return {block::from_doc(require_field(r, "block")), std::move(validity)};
}

int64_t node_client::head_height() {
    return require_int(call("head_height", doc::object()), "height");
}

std::vector<contracts::event> node_client::query_events(uint64_t since,
                                                        std::optional<contracts::audience> aud) {
    doc params{{"since", since}};
    if (aud) params["audience"] = std::string(contracts::audience_name(*aud));
    doc r = call("query_events", params);
    std::vector<contracts::event> out;
    for (const doc& e : require_field(r, "events")) out.push_back(contracts::event::from_doc(e));
    return out;
}

std::string node_client::castore_put(bytes_view content, bool structured) {
    doc params{{"content_b64", base64_encode(content)}};
    if (structured) params["structured"] = true;
    doc r = call("castore_put", std::move(params));
    return require_string(r, "cid");
}

bool node_client::castore_has(const std::string& cid) {
    return require_bool(call("castore_has", doc{{"cid", cid}}), "present");
}

bytes node_client::castore_get(const std::string& cid) {
    doc r = call("castore_get", doc{{"cid", cid}});
    bytes out;
    if (!base64_decode(require_string(r, "content_b64"), out))
        raise(errc::malformed_document, "castore_get returned invalid base64");
    return out;
}

doc node_client::stats() { return call("node_stats", doc::object()); }

bool node_client::wait_for_height(int64_t height, int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (std::chrono::steady_clock::now() < deadline) {
        if (head_height() >= height) return true;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    return head_height() >= height;
}

std::optional<doc> node_client::wait_for_key(const std::string& key, int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        std::optional<doc> v = query_state(key);
        if (v || std::chrono::steady_clock::now() >= deadline) return v;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

event_subscriber::event_subscriber(const std::string& peer_endpoint, uint64_t since,
                                   std::optional<contracts::audience> aud) {
    conn_ = net::dial(peer_endpoint, 5000);
    doc req{{"kind", "events"}, {"since", since}};
    if (aud) req["audience"] = std::string(contracts::audience_name(*aud));
    conn_->send(net::frame{net::msg_type::event_sub, canonical_encode(req)});
}

std::optional<contracts::event> event_subscriber::next(int timeout_ms) {
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left <= 0) return std::nullopt;
        net::frame f;
        net::recv_status s = conn_->receive(f, int(left));
        if (s == net::recv_status::timed_out) return std::nullopt;
        if (s == net::recv_status::eof) raise(errc::connection_failed, "subscription closed");
        if (f.type != net::msg_type::event) continue;
        return contracts::event::from_doc(parse_doc(f.payload));
    }
}

void event_subscriber::close() {
    if (conn_) conn_->close();
}

}  // namespace devchain::node
