#include "devchain/net/rpc.hpp"

#include <chrono>

namespace devchain::net {

namespace {

using clock = std::chrono::steady_clock;

doc error_response(const doc& id, errc code, const std::string& message) {
    return doc{{"id", id},
               {"error", doc{{"code", std::string(errc_name(code))},
                             {"message", message}}}};
}

}  // namespace

doc rpc_client::call(const std::string& method, const doc& params, int timeout_ms) {
    std::lock_guard lock(mu_);
    uint64_t id = next_id_++;
    doc request{{"id", id}, {"method", method}, {"params", params}};
    conn_->send(frame{msg_type::rpc_request, canonical_encode(request)});

    auto start = clock::now();
    while (true) {
        int left = timeout_ms;
        if (timeout_ms >= 0) {
            auto spent = std::chrono::duration_cast<std::chrono::milliseconds>(
                             clock::now() - start)
                             .count();
            left = timeout_ms - static_cast<int>(spent);
            if (left < 0) left = 0;
        }
        frame f;
        switch (conn_->receive(f, left)) {
            case recv_status::timed_out:
                raise(errc::timeout, "rpc call '" + method + "' timed out");
            case recv_status::eof:
                raise(errc::connection_failed, "rpc connection closed");
            case recv_status::got:
                break;
        }
        if (f.type != msg_type::rpc_response) continue;
        doc resp;
        try {
            resp = parse_doc(f.payload);
        } catch (const chain_error&) {
            raise(errc::bad_request, "unparseable rpc response");
        }
        if (!resp.is_object() || resp.value("id", doc()) != doc(id))
            continue;  // stale response from an earlier timed-out call
        if (resp.contains("error")) {
            const doc& e = resp["error"];
            raise(errc_from_name(e.value("code", "bad_request")),
                  e.value("message", "rpc error"));
        }
        return resp.value("result", doc());
    }
}

rpc_server::rpc_server(listener_ptr lst)
    : listener_(std::move(lst)), endpoint_(listener_->endpoint()) {}

rpc_server::~rpc_server() { stop(); }

void rpc_server::register_method(const std::string& name, handler h) {
    methods_[name] = std::move(h);
}

void rpc_server::start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void rpc_server::stop() {
    if (stop_.exchange(true)) return;
    listener_->close();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> drained;
    {
        std::lock_guard lock(threads_mu_);
        drained.swap(conn_threads_);
    }
    for (auto& t : drained)
        if (t.joinable()) t.join();
}

void rpc_server::accept_loop() {
    while (!stop_.load()) {
        auto conn = listener_->accept(200);
        if (!conn) continue;
        std::lock_guard lock(threads_mu_);
        if (stop_.load()) {
            (*conn)->close();
            return;
        }
        conn_threads_.emplace_back(
            [this, c = std::move(*conn)] { serve_connection(c); });
    }
}

void rpc_server::serve_connection(const connection_ptr& conn) {
    while (!stop_.load()) {
        frame f;
        recv_status s;
        try {
            s = conn->receive(f, 200);
        } catch (const chain_error&) {
            break;  // malformed framing: the stream is unrecoverable
        }
        if (s == recv_status::timed_out) continue;
        if (s == recv_status::eof) break;

        doc id;  // null until the request proves parseable
        doc response;
        try {
            if (f.type != msg_type::rpc_request)
                raise(errc::bad_request, "unexpected frame type on rpc port");
            doc request = parse_doc(f.payload);
            if (request.contains("id")) id = request["id"];
            std::string method = require_string(request, "method");
            auto it = methods_.find(method);
            if (it == methods_.end())
                raise(errc::method_not_found, "no such method '" + method + "'");
            doc result = it->second(request.value("params", doc()));
            response = doc{{"id", id}, {"result", std::move(result)}};
        } catch (const chain_error& e) {
            response = error_response(id, e.code(), e.what());
        } catch (const std::exception& e) {
            response = error_response(id, errc::bad_request, e.what());
        }
        bytes payload;
        try {
            payload = canonical_encode(response);
        } catch (const chain_error& e) {  // handler produced a non-canonical doc
            payload = canonical_encode(error_response(id, e.code(), e.what()));
        }
        try {
            conn->send(frame{msg_type::rpc_response, std::move(payload)});
        } catch (const chain_error&) {
            break;  // peer vanished mid-response
        }
    }
    conn->close();
}

}  // namespace devchain::net
