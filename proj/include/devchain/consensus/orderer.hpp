#pragma once

#include <deque>
#include <optional>
#include <set>

#include "devchain/consensus/committer.hpp"

namespace devchain::consensus {

struct ordering_policy {
    size_t max_batch_size = 500;
    uint64_t max_batch_wait_ms = 250;
    size_t max_queue = 100000;
};

// Single-orderer batching core. Deliberately clockless: callers pass
// `now_ms` in, so tests drive time explicitly and the daemon uses the
// wall clock. Not thread safe; the node serializes access.
class orderer_core {
  public:
    orderer_core(keypair orderer_keys, ordering_policy policy,
                 std::vector<identity> genesis_members,
                 std::vector<std::pair<hash32, int64_t>> genesis_allocations);

    // Admission control: signature, registry and nonce checks against the
    // orderer's own replica plus the pending queue. Throws
    // bad_signature / unknown_submitter / replayed_nonce / queue_full /
    // malformed_document on rejection.
    void submit(const transaction& tx, uint64_t now_ms);

    // Applies the batching policy: a full batch cuts immediately; a partial
    // batch cuts once `max_batch_wait_ms` elapsed since the queue became
    // nonempty. Returns the committed block, already applied to the
    // orderer's replica, or nullopt when no cut is due.
    std::optional<block> cut_block(uint64_t now_ms);

    // Empty block so deadline-driven contract hooks observe time passing
    // during quiet periods. Never cuts while transactions are pending.
    std::optional<block> cut_heartbeat(uint64_t now_ms);

    size_t pending() const { return queue_.size(); }
    const replica& self() const { return replica_; }
    const identity& id() const { return keys_.id; }

    // Genesis block (height 0, empty) cut at startup.
    block cut_genesis(uint64_t now_ms);

    // Replays a previously committed block into the orderer's own replica
    // when restarting from a persisted log. Only legal with an empty queue.
    void restore(const block& b);

  private:
    block seal(std::vector<transaction> txs, uint64_t now_ms);

    keypair keys_;
    ordering_policy policy_;
    replica replica_;
    std::deque<transaction> queue_;
    std::set<std::tuple<std::string, hash32, uint64_t>> queued_nonces_;
    uint64_t deadline_ms_ = 0;
    bool deadline_armed_ = false;
};

}  // namespace devchain::consensus
