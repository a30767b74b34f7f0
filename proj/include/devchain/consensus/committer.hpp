#pragma once

#include "devchain/chain.hpp"
#include "devchain/contracts/engine.hpp"
#include "devchain/state.hpp"

namespace devchain::consensus {

// Everything a committed block produced, in deterministic order.
struct commit_result {
    uint64_t height = 0;
    std::vector<bool> validity;  // one bit per tx, in block order
    std::vector<contracts::tx_receipt> receipts;
    std::vector<contracts::event> events;
    hash32 state_digest;
};

// Deterministic state machine: identical block sequences produce identical
// state digests, receipts and events on every peer. Invalid transactions
// are marked in the validity bitmap; they never reject the block.
class replica {
  public:
    replica(public_key orderer_pk, std::vector<identity> genesis_members,
            std::vector<std::pair<hash32, int64_t>> genesis_allocations);

    // Structural violations (linkage, height, timestamps, merkle, orderer
    // signature) throw and leave the replica untouched.
    commit_result commit(const block& b);

    const state_store& state() const { return state_; }
    const block_chain& chain() const { return chain_; }
    const contracts::engine& get_engine() const { return engine_; }
    const public_key& orderer_pk() const { return orderer_pk_; }
    const std::vector<identity>& genesis_members() const { return genesis_members_; }

    uint64_t next_height() const { return chain_.empty() ? 0 : chain_.height() + 1; }

  private:
    public_key orderer_pk_;
    std::vector<identity> genesis_members_;
    contracts::engine engine_;
    block_chain chain_;
    state_store state_;
};

}  // namespace devchain::consensus
