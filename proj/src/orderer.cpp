#include "devchain/consensus/orderer.hpp"

#include <algorithm>

namespace devchain::consensus {

orderer_core::orderer_core(keypair orderer_keys, ordering_policy policy,
                           std::vector<identity> genesis_members,
                           std::vector<std::pair<hash32, int64_t>> genesis_allocations)
    : keys_(std::move(orderer_keys)),
      policy_(policy),
      replica_(keys_.id.pub, std::move(genesis_members), std::move(genesis_allocations)) {}

block orderer_core::cut_genesis(uint64_t now_ms) {
    if (!replica_.chain().empty()) raise(errc::bad_height, "genesis already cut");
    block genesis = make_block(0, hash32{}, now_ms, {}, keys_.secret);
    replica_.commit(genesis);
    return genesis;
}

void orderer_core::submit(const transaction& tx, uint64_t now_ms) {
    if (queue_.size() >= policy_.max_queue)
        raise(errc::queue_full, "orderer queue at capacity");
    verify_transaction(
        tx, [&](const hash32& mid) { return registry_lookup(replica_.state(), mid); });
    auto nonce_id = std::tuple{tx.project_id, tx.submitter, tx.nonce};
    if (replica_.state().exists(
            keys::nonce(tx.project_id, tx.submitter.hex(), tx.nonce)) ||
        queued_nonces_.count(nonce_id))
        raise(errc::replayed_nonce, "nonce already consumed or pending");

    if (queue_.empty()) {
        deadline_ms_ = now_ms + policy_.max_batch_wait_ms;
        deadline_armed_ = true;
    }
    queued_nonces_.insert(nonce_id);
    queue_.push_back(tx);
}

block orderer_core::seal(std::vector<transaction> txs, uint64_t now_ms) {
    const block* tip = replica_.chain().tip();
    if (tip == nullptr) raise(errc::bad_height, "cut before genesis");
    // Strictly increasing timestamps even when blocks cut within one tick.
    uint64_t ts = std::max(now_ms, tip->header.block_timestamp + 1);
    for (const auto& tx : txs)
        queued_nonces_.erase({tx.project_id, tx.submitter, tx.nonce});
    block b = make_block(tip->header.height + 1, tip->header.hash(), ts, std::move(txs),
                         keys_.secret);
    replica_.commit(b);
    return b;
}

std::optional<block> orderer_core::cut_block(uint64_t now_ms) {
    if (queue_.empty()) return std::nullopt;
    std::vector<transaction> batch;
    if (queue_.size() >= policy_.max_batch_size) {
        batch.assign(queue_.begin(), queue_.begin() + policy_.max_batch_size);
        queue_.erase(queue_.begin(), queue_.begin() + policy_.max_batch_size);
    } else if (deadline_armed_ && now_ms >= deadline_ms_) {
        batch.assign(queue_.begin(), queue_.end());
        queue_.clear();
    } else {
        return std::nullopt;
    }
    // Re-arm the wait timer for whatever remains queued.
    if (queue_.empty())
        deadline_armed_ = false;
    else
        deadline_ms_ = now_ms + policy_.max_batch_wait_ms;
    return seal(std::move(batch), now_ms);
}

std::optional<block> orderer_core::cut_heartbeat(uint64_t now_ms) {
    if (!queue_.empty()) return std::nullopt;  // a real cut is coming
    return seal({}, now_ms);
}

void orderer_core::restore(const block& b) {
    if (!queue_.empty()) raise(errc::bad_request, "restore with pending txs");
    replica_.commit(b);
}

}  // namespace devchain::consensus
