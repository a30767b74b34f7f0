#include "devchain/node/node.hpp"

#include <unistd.h>

#include <chrono>

namespace devchain::node {

namespace fs = std::filesystem;

uint64_t node::now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

static bool audience_match(contracts::audience aud,
                           const std::optional<contracts::audience>& filter) {
    return aud == contracts::audience::all_members || !filter || aud == *filter;
}

node::node(node_options opts) : opts_(std::move(opts)) {
    const network_config& cfg = opts_.config;
    if (opts_.role == node_role::orderer) {
        if (!opts_.orderer_keys) raise(errc::bad_args, "orderer role needs a keypair");
        if (opts_.orderer_keys->id.pub != cfg.orderer_identity.pub)
            raise(errc::bad_args, "orderer key does not match the configured identity");
        name_ = "orderer";
        endpoint_ = cfg.orderer_endpoint;
    } else {
        const org_config& org = cfg.org_at(opts_.org_index);
        name_ = org.name;
        endpoint_ = org.peer_endpoint;
    }
    rpc_endpoint_ = rpc_endpoint_of(endpoint_);
    dir_ = fs::path(cfg.data_dir) / name_;
}

node::~node() { stop(); }

void node::start() {
    if (started_.load()) raise(errc::bad_request, "node already started");
    const network_config& cfg = opts_.config;

    castore_ = std::make_unique<castore::store>(dir_ / "castore");
    log_ = std::make_unique<block_log>(dir_ / "blocks");
    replica_ = std::make_unique<consensus::replica>(cfg.orderer_identity.pub, cfg.genesis_members,
                                                    cfg.genesis_allocations);
    if (opts_.role == node_role::orderer)
        orderer_ = std::make_unique<consensus::orderer_core>(*opts_.orderer_keys, cfg.policy,
                                                             cfg.genesis_members,
                                                             cfg.genesis_allocations);

    // Replay the persisted chain; any structural fault in a stored block
    // means the log bytes no longer describe a valid chain.
    try {
        for (const block& b : log_->read_all()) {
            if (orderer_) orderer_->restore(b);
            apply_block(b, false);
        }
    } catch (const chain_error& e) {
        if (e.code() == errc::corrupt_chain) throw;
        raise(errc::corrupt_chain, std::string("replay failed: ") + e.what());
    }

    counters_ = std::make_shared<net::io_counters>();
    listener_ = net::listen(endpoint_, counters_);
    rpc_ = std::make_unique<net::rpc_server>(net::listen(rpc_endpoint_, counters_));
    register_rpc();

    if (orderer_ && log_->size() == 0) apply_block(orderer_->cut_genesis(now_ms()), true);
    last_block_real_ms_.store(now_ms());

    rpc_->start();
    accept_thread_ = std::thread([this] { accept_loop(); });
    pump_thread_ = std::thread([this] { pump_loop(); });
    main_thread_ = std::thread([this] {
        if (orderer_)
            cutter_loop();
        else
            sync_loop();
    });
    started_ = true;
}

void node::stop() {
    if (stop_.exchange(true)) return;
    if (rpc_) rpc_->stop();
    if (listener_) listener_->close();
    {
        std::lock_guard lock(submit_mu_);
        if (submit_conn_) submit_conn_->close();
    }
    {
        std::lock_guard lock(subs_mu_);
        for (auto& s : event_subs_) s.conn->close();
        for (auto& s : block_subs_) s.conn->close();
    }
    if (main_thread_.joinable()) main_thread_.join();
    if (accept_thread_.joinable()) accept_thread_.join();
    if (pump_thread_.joinable()) pump_thread_.join();
    std::vector<std::thread> drained;
    {
        std::lock_guard lock(threads_mu_);
        drained.swap(conn_threads_);
    }
    for (auto& t : drained)
        if (t.joinable()) t.join();
}

int64_t node::head() const {
    std::lock_guard lock(chain_mu_);
    return replica_->chain().empty() ? -1 : int64_t(replica_->chain().height());
}

hash32 node::state_digest() const {
    std::lock_guard lock(chain_mu_);
    return replica_->state().digest();
}

std::vector<block> node::blocks() const {
    std::lock_guard lock(chain_mu_);
    return replica_->chain().blocks();
}

bool node::apply_block(const block& b, bool persist) {
    std::lock_guard lock(chain_mu_);
    if (b.header.height < replica_->next_height()) return false;  // already committed
    consensus::commit_result res = replica_->commit(b);
    if (persist) log_->append(b);
    validity_.push_back(res.validity);
    for (auto& e : res.events) events_.push_back(std::move(e));
    return true;
}

void node::cutter_loop() {
    const uint64_t heartbeat_ms = opts_.config.heartbeat_interval_ms;
    while (!stop_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        const uint64_t now = now_ms();
        std::optional<block> blk;
        {
            std::lock_guard lock(chain_mu_);
            blk = orderer_->cut_block(now);
            if (!blk && now - last_block_real_ms_.load() >= heartbeat_ms)
                blk = orderer_->cut_heartbeat(now);
        }
        if (!blk) continue;
        apply_block(*blk, true);
        last_block_real_ms_.store(now);
    }
}

void node::sync_loop() {
    const std::string& orderer_ep = opts_.config.orderer_endpoint;
    while (!stop_.load()) {
        net::connection_ptr conn;
        try {
            conn = net::dial(orderer_ep, 500, counters_);
            uint64_t since;
            {
                std::lock_guard lock(chain_mu_);
                since = replica_->next_height();
            }
            conn->send(net::frame{net::msg_type::event_sub,
                                  canonical_encode(doc{{"kind", "blocks"}, {"since", since}})});
            net::frame f;
            while (!stop_.load()) {
                net::recv_status s = conn->receive(f, 200);
                if (s == net::recv_status::timed_out) continue;
                if (s == net::recv_status::eof) break;
                if (f.type != net::msg_type::block) continue;
                apply_block(block::from_doc(parse_doc(f.payload)), true);
            }
        } catch (const chain_error&) {
            // orderer unreachable or the stream broke mid-block: resubscribe
        }
        if (conn) conn->close();
        if (!stop_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
}

void node::accept_loop() {
    while (!stop_.load()) {
        std::optional<net::connection_ptr> conn;
        try {
            conn = listener_->accept(200);
        } catch (const chain_error&) {
            return;  // listener closed
        }
        if (!conn) continue;
        std::lock_guard lock(threads_mu_);
        if (stop_.load()) {
            (*conn)->close();
            return;
        }
        conn_threads_.emplace_back([this, c = std::move(*conn)] { serve_peer_conn(c); });
    }
}

void node::serve_peer_conn(const net::connection_ptr& conn) {
    bool registered = false;
    while (!stop_.load()) {
        net::frame f;
        net::recv_status s;
        try {
            s = conn->receive(f, 200);
        } catch (const chain_error&) {
            break;
        }
        if (s == net::recv_status::timed_out) continue;
        if (s == net::recv_status::eof) break;
        try {
            if (f.type == net::msg_type::submit_tx) {
                doc ack;
                try {
                    ack = ack_for_submit(transaction::from_doc(parse_doc(f.payload)));
                } catch (const chain_error& e) {
                    ack = doc{{"ok", false},
                              {"code", std::string(errc_name(e.code()))},
                              {"message", e.what()}};
                }
                conn->send(net::frame{net::msg_type::ack, canonical_encode(ack)});
            } else if (f.type == net::msg_type::event_sub) {
                doc req = parse_doc(f.payload);
                std::string kind = require_string(req, "kind");
                uint64_t since = req.contains("since") ? require_uint(req, "since") : 0;
                if (kind == "blocks") {
                    std::lock_guard lock(subs_mu_);
                    block_subs_.push_back({conn, since, false});
                    registered = true;
                } else if (kind == "events") {
                    std::optional<contracts::audience> filter;
                    if (req.contains("audience") && req["audience"].is_string())
                        filter = contracts::audience_from_name(req["audience"].get<std::string>());
                    size_t cursor = 0;
                    {
                        std::lock_guard lock(chain_mu_);
                        while (cursor < events_.size() && events_[cursor].block_height < since)
                            ++cursor;
                    }
                    std::lock_guard lock(subs_mu_);
                    event_subs_.push_back({conn, filter, cursor, false});
                    registered = true;
                } else {
                    raise(errc::bad_args, "unknown subscription kind '" + kind + "'");
                }
            }
            // other frame types are ignored
        } catch (const chain_error&) {
            break;  // malformed payload: drop the connection
        }
    }
    conn->close();
    if (registered) {
        std::lock_guard lock(subs_mu_);
        for (auto& s : event_subs_)
            if (s.conn == conn) s.dead = true;
        for (auto& s : block_subs_)
            if (s.conn == conn) s.dead = true;
    }
}

void node::pump_loop() {
    while (!stop_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        std::lock_guard subs_lock(subs_mu_);
        for (auto& sub : event_subs_) {
            while (!sub.dead) {
                std::optional<contracts::event> ev;
                {
                    std::lock_guard lock(chain_mu_);
                    if (sub.cursor < events_.size()) ev = events_[sub.cursor];
                }
                if (!ev) break;
                ++sub.cursor;
                if (!audience_match(ev->aud, sub.filter)) continue;
                try {
                    sub.conn->send(net::frame{net::msg_type::event, canonical_encode(ev->to_doc())});
                } catch (const chain_error&) {
                    sub.dead = true;
                }
            }
        }
        std::erase_if(event_subs_, [](const event_sub& s) { return s.dead; });
        for (auto& sub : block_subs_) {
            while (!sub.dead) {
                std::optional<block> b;
                {
                    std::lock_guard lock(chain_mu_);
                    if (sub.next < log_->size()) b = log_->read(sub.next);
                }
                if (!b) break;
                try {
                    sub.conn->send(net::frame{net::msg_type::block, canonical_encode(b->to_doc())});
                    ++sub.next;
                } catch (const chain_error&) {
                    sub.dead = true;
                }
            }
        }
        std::erase_if(block_subs_, [](const block_sub& s) { return s.dead; });
    }
}

doc node::ack_for_submit(const transaction& tx) {
    if (orderer_) {
        std::lock_guard lock(chain_mu_);
        orderer_->submit(tx, now_ms());  // throws on rejection
        return doc{{"ok", true}, {"tx_id", tx.tx_id.hex()}};
    }
    // Peer: forward on a persistent lane to the orderer and relay its ack.
    std::lock_guard lock(submit_mu_);
    for (int attempt = 0; attempt < 2; ++attempt) {
        try {
            if (!submit_conn_)
                submit_conn_ = net::dial(opts_.config.orderer_endpoint, 500, counters_);
            submit_conn_->send(
                net::frame{net::msg_type::submit_tx, canonical_encode(tx.to_doc())});
            net::frame f;
            net::recv_status s = submit_conn_->receive(f, 5000);
            if (s == net::recv_status::got && f.type == net::msg_type::ack)
                return parse_doc(f.payload);
        } catch (const chain_error&) {
            // fall through to reconnect
        }
        if (submit_conn_) submit_conn_->close();
        submit_conn_.reset();
    }
    raise(errc::connection_failed, "cannot reach the orderer");
}

void node::register_rpc() {
    rpc_->register_method("submit_tx", [this](const doc& p) {
        transaction tx = transaction::from_doc(require_field(p, "tx"));
        doc ack = ack_for_submit(tx);
        if (!require_bool(ack, "ok"))
            raise(errc_from_name(require_string(ack, "code")), require_string(ack, "message"));
        return doc{{"tx_id", require_string(ack, "tx_id")}};
    });
    rpc_->register_method("query_state", [this](const doc& p) {
        std::string key = require_string(p, "key");
        std::lock_guard lock(chain_mu_);
        std::optional<doc> v = replica_->state().get(key);
        if (!v) raise(errc::not_found, "no document at '" + key + "'");
        return doc{{"key", key}, {"value", *v}};
    });
    rpc_->register_method("query_prefix", [this](const doc& p) {
        std::string prefix = require_string(p, "prefix");
        std::lock_guard lock(chain_mu_);
        doc entries = doc::array();
        for (const std::string& k : replica_->state().keys_with_prefix(prefix))
            entries.push_back(doc{{"key", k}, {"value", *replica_->state().get(k)}});
        return doc{{"entries", std::move(entries)}};
    });
    rpc_->register_method("query_block", [this](const doc& p) {
        uint64_t h = require_uint(p, "height");
        std::lock_guard lock(chain_mu_);
        if (replica_->chain().empty() || h > replica_->chain().height())
            raise(errc::not_found, "no block at height " + std::to_string(h));
        doc validity = doc::array();
        for (bool v : validity_[h]) validity.push_back(v);
        return doc{{"block", replica_->chain().at(h).to_doc()}, {"validity", std::move(validity)}};
    });
    rpc_->register_method("head_height", [this](const doc&) {
        std::lock_guard lock(chain_mu_);
        int64_t h = replica_->chain().empty() ? -1 : int64_t(replica_->chain().height());
        return doc{{"height", h}};
    });
    rpc_->register_method("query_events", [this](const doc& p) {
        uint64_t since = p.contains("since") ? require_uint(p, "since") : 0;
        std::optional<contracts::audience> filter;
        if (p.contains("audience") && p["audience"].is_string())
            filter = contracts::audience_from_name(p["audience"].get<std::string>());
        std::lock_guard lock(chain_mu_);
        doc out = doc::array();
        for (const contracts::event& e : events_)
            if (e.block_height >= since && audience_match(e.aud, filter))
                out.push_back(e.to_doc());
        return doc{{"events", std::move(out)}};
    });
    rpc_->register_method("castore_put", [this](const doc& p) {
        bytes content;
        if (!base64_decode(require_string(p, "content_b64"), content))
            raise(errc::bad_args, "content_b64 is not valid base64");
        // structured uploads (trees, commits) go through digest-checked
        // adoption so the object keeps its kind in the index
        if (p.contains("structured") && p.at("structured").get<bool>())
            return doc{{"cid", castore_->adopt_object(bytes_view(content), true)}};
        return doc{{"cid", castore_->put_blob(bytes_view(content))}};
    });
    rpc_->register_method("castore_get", [this](const doc& p) { return rpc_castore_get(p); });
    rpc_->register_method("castore_has", [this](const doc& p) {
        const std::string cid = require_string(p, "cid");
        if (!castore::well_formed(cid)) raise(errc::bad_args, "malformed cid: " + cid);
        return doc{{"present", castore_->has(cid)}};
    });
    rpc_->register_method("node_stats", [this](const doc&) {
        std::lock_guard lock(chain_mu_);
        doc out{{"pid", int64_t(getpid())},
                {"role", orderer_ ? "orderer" : "peer"},
                {"name", name_},
                {"height", replica_->chain().empty() ? -1 : int64_t(replica_->chain().height())},
                {"bytes_in", int64_t(counters_->bytes_in.load())},
                {"bytes_out", int64_t(counters_->bytes_out.load())},
                {"pending", int64_t(orderer_ ? orderer_->pending() : 0)}};
        return out;
    });
}

doc node::rpc_castore_get(const doc& params) {
    std::string cid = require_string(params, "cid");
    bool local_only = params.contains("local_only") && params["local_only"].is_boolean() &&
                      params["local_only"].get<bool>();
    if (!castore_->has(cid)) {
        if (local_only) raise(errc::not_found, "no object " + cid);
        fetch_remote_object(cid);
    }
    if (castore_->is_structured(cid)) {
        doc obj = castore_->get_object(cid);
        if (require_string(obj, "kind") == "blob-manifest") {
            bytes content = castore_->get_blob(cid);
            return doc{{"kind", "blob"}, {"content_b64", base64_encode(content)}};
        }
        bytes raw = castore_->get_raw(cid);
        return doc{{"kind", "object"}, {"structured", true}, {"content_b64", base64_encode(raw)}};
    }
    bytes raw = castore_->get_raw(cid);
    return doc{{"kind", "blob"}, {"content_b64", base64_encode(raw)}};
}

// Pulls a missing object from any other node's RPC port and stores it
// locally (chunked blobs are re-chunked; the digests must agree). Returns
// the logical content bytes.
bytes node::fetch_remote_object(const std::string& cid) {
    const network_config& cfg = opts_.config;
    std::vector<std::string> candidates;
    for (const org_config& o : cfg.orgs)
        if (o.peer_endpoint != endpoint_) candidates.push_back(rpc_endpoint_of(o.peer_endpoint));
    if (cfg.orderer_endpoint != endpoint_)
        candidates.push_back(rpc_endpoint_of(cfg.orderer_endpoint));

    for (const std::string& ep : candidates) {
        if (stop_.load()) break;
        try {
            net::rpc_client peer(net::dial(ep, 300, counters_));
            doc r = peer.call("castore_get", doc{{"cid", cid}, {"local_only", true}}, 5000);
            bytes content;
            if (!base64_decode(require_string(r, "content_b64"), content)) continue;
            bool structured = require_string(r, "kind") == "object";
            std::string got = structured ? castore_->adopt_object(bytes_view(content), true)
                                         : castore_->put_blob(bytes_view(content));
            if (got == cid) return content;
            // digest mismatch: that node served different bytes, try the next
        } catch (const chain_error&) {
            // unreachable or missing there, try the next
        }
    }
    raise(errc::not_found, "object " + cid + " not found on any node");
}

}  // namespace devchain::node
