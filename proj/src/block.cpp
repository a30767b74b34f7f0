#include "devchain/block.hpp"

namespace devchain {

doc block_header::to_doc() const {
    return doc{{"height", height},
               {"prev_hash", prev_hash.hex()},
               {"block_timestamp", block_timestamp},
               {"merkle_root", merkle_root.hex()}};
}

block_header block_header::from_doc(const doc& d) {
    block_header h;
    h.height = require_uint(d, "height");
    h.prev_hash = hash32::from_hex(require_string(d, "prev_hash"));
    h.block_timestamp = require_uint(d, "block_timestamp");
    h.merkle_root = hash32::from_hex(require_string(d, "merkle_root"));
    return h;
}

doc block::to_doc() const {
    doc txs_doc = doc::array();
    for (const auto& tx : txs) txs_doc.push_back(tx.to_doc());
    return doc{{"header", header.to_doc()},
               {"txs", std::move(txs_doc)},
               {"orderer_signature", orderer_signature.hex()}};
}

block block::from_doc(const doc& d) {
    block b;
    b.header = block_header::from_doc(require_field(d, "header"));
    const doc& txs = require_field(d, "txs");
    if (!txs.is_array()) raise(errc::malformed_document, "txs must be an array");
    for (const auto& t : txs) b.txs.push_back(transaction::from_doc(t));
    b.orderer_signature = signature::from_hex(require_string(d, "orderer_signature"));
    return b;
}

hash32 compute_merkle_root(const std::vector<hash32>& tx_ids) {
    if (tx_ids.empty()) return sha256(bytes_view());
    std::vector<hash32> level = tx_ids;
    // A single leaf hashes against itself, so leaf values never collide
    // with root values.
    if (level.size() == 1) level.push_back(level[0]);
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<hash32> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) {
            bytes joined;
            joined.reserve(64);
            joined.insert(joined.end(), level[i].data.begin(), level[i].data.end());
            joined.insert(joined.end(), level[i + 1].data.begin(), level[i + 1].data.end());
            next.push_back(sha256(bytes_view(joined.data(), joined.size())));
        }
        level = std::move(next);
    }
    return level[0];
}

std::vector<hash32> tx_ids_of(const std::vector<transaction>& txs) {
    std::vector<hash32> ids;
    ids.reserve(txs.size());
    for (const auto& tx : txs) ids.push_back(tx.tx_id);
    return ids;
}

block make_block(uint64_t height, const hash32& prev_hash, uint64_t timestamp,
                 std::vector<transaction> txs, const secret_key& orderer_key) {
    block b;
    b.header.height = height;
    b.header.prev_hash = prev_hash;
    b.header.block_timestamp = timestamp;
    b.header.merkle_root = compute_merkle_root(tx_ids_of(txs));
    b.txs = std::move(txs);
    auto header_bytes = canonical_encode(b.header.to_doc());
    b.orderer_signature =
        sign_bytes(bytes_view(header_bytes.data(), header_bytes.size()), orderer_key);
    return b;
}

}  // namespace devchain
