#include "devchain/consensus/committer.hpp"

namespace devchain::consensus {

replica::replica(public_key orderer_pk, std::vector<identity> genesis_members,
                 std::vector<std::pair<hash32, int64_t>> genesis_allocations)
    : orderer_pk_(orderer_pk), genesis_members_(std::move(genesis_members)) {
    contracts::engine::apply_genesis(state_, genesis_members_, genesis_allocations);
}

commit_result replica::commit(const block& b) {
    chain_.append(b, orderer_pk_);  // throws on structural violations

    commit_result out;
    out.height = b.header.height;
    out.validity.reserve(b.txs.size());
    out.receipts.reserve(b.txs.size());
    for (uint32_t i = 0; i < b.txs.size(); ++i) {
        contracts::tx_receipt r = engine_.execute(state_, b.txs[i], b.header.height,
                                                  b.header.block_timestamp, i, out.events);
        out.validity.push_back(r.valid);
        out.receipts.push_back(std::move(r));
    }
    engine_.on_block(state_, b.header.height, b.header.block_timestamp, out.events);
    state_.set_version(b.header.height);
    out.state_digest = state_.digest();
    return out;
}

}  // namespace devchain::consensus
