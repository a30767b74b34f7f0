#include "devchain/chain.hpp"

#include <map>
#include <set>
#include <tuple>

namespace devchain {

doc audit_report::to_doc() const {
    doc list = doc::array();
    for (const auto& v : violations)
        list.push_back(doc{{"height", v.height},
                           {"kind", std::string(errc_name(v.kind))},
                           {"detail", v.detail}});
    return doc{{"violations", std::move(list)}};
}

void block_chain::check_append(const block* tip, const block& b,
                               const public_key& orderer_pk) {
    if (tip == nullptr) {
        if (b.header.height != 0)
            raise(errc::bad_height, "genesis must have height 0");
        if (!b.header.prev_hash.is_zero())
            raise(errc::bad_linkage, "genesis prev_hash must be zero");
    } else {
        if (b.header.height != tip->header.height + 1)
            raise(errc::bad_height, "expected height " +
                                        std::to_string(tip->header.height + 1) + ", got " +
                                        std::to_string(b.header.height));
        if (b.header.prev_hash != tip->header.hash())
            raise(errc::bad_linkage, "prev_hash does not match tip header");
        if (b.header.block_timestamp <= tip->header.block_timestamp)
            raise(errc::non_monotonic_timestamp, "block timestamp not strictly increasing");
    }
    if (compute_merkle_root(tx_ids_of(b.txs)) != b.header.merkle_root)
        raise(errc::bad_merkle_root, "merkle root does not recompute from txs");
    auto header_bytes = canonical_encode(b.header.to_doc());
    if (!verify_bytes(bytes_view(header_bytes.data(), header_bytes.size()),
                      b.orderer_signature, orderer_pk))
        raise(errc::bad_orderer_signature, "orderer signature does not verify");
}

void block_chain::append(const block& b, const public_key& orderer_pk) {
    check_append(tip(), b, orderer_pk);
    blocks_.push_back(b);
}

const block& block_chain::at(uint64_t height) const {
    if (height >= blocks_.size())
        raise(errc::not_found, "no block at height " + std::to_string(height));
    return blocks_[height];
}

const block* block_chain::tip() const {
    return blocks_.empty() ? nullptr : &blocks_.back();
}

uint64_t block_chain::height() const {
    if (blocks_.empty()) raise(errc::not_found, "empty chain");
    return blocks_.back().header.height;
}

namespace {

// Member keys are self-certifying (member_id == sha256(public_key)), so the
// audit can rebuild the registry from key material embedded in the chain
// itself plus the genesis identities, without re-running contract logic.
void collect_announced_keys(const transaction& tx,
                            std::map<hash32, public_key>& registry) {
    if (!tx.args.is_object() || !tx.args.contains("member")) return;
    const doc& m = tx.args.at("member");
    if (!m.is_object() || !m.contains("public_key") || !m.at("public_key").is_string())
        return;
    public_key pk;
    bytes raw;
    if (!hex_decode(m.at("public_key").get<std::string>(), raw) || raw.size() != 32) return;
    std::copy(raw.begin(), raw.end(), pk.data.begin());
    registry.emplace(sha256(bytes_view(pk.data.data(), 32)), pk);
}

}  // namespace

audit_report verify_chain(const std::vector<block>& blocks, const public_key& orderer_pk,
                          const std::map<hash32, public_key>& genesis_registry) {
    audit_report report;
    auto note = [&](uint64_t h, errc kind, std::string detail) {
        report.violations.push_back({h, kind, std::move(detail)});
    };
    std::map<hash32, public_key> registry = genesis_registry;
    std::set<std::tuple<std::string, hash32, uint64_t>> seen_nonces;

    for (size_t i = 0; i < blocks.size(); ++i) {
        const block& b = blocks[i];
        uint64_t h = b.header.height;
        if (b.header.height != i)
            note(i, errc::bad_height,
                 "expected height " + std::to_string(i) + ", found " + std::to_string(h));
        if (i == 0) {
            if (!b.header.prev_hash.is_zero())
                note(h, errc::bad_linkage, "genesis prev_hash not zero");
        } else {
            if (b.header.prev_hash != blocks[i - 1].header.hash())
                note(h, errc::bad_linkage, "prev_hash does not match previous header");
            if (b.header.block_timestamp <= blocks[i - 1].header.block_timestamp)
                note(h, errc::non_monotonic_timestamp, "timestamp not strictly increasing");
        }
        if (compute_merkle_root(tx_ids_of(b.txs)) != b.header.merkle_root)
            note(h, errc::bad_merkle_root, "merkle root mismatch");
        auto header_bytes = canonical_encode(b.header.to_doc());
        if (!verify_bytes(bytes_view(header_bytes.data(), header_bytes.size()),
                          b.orderer_signature, orderer_pk))
            note(h, errc::bad_orderer_signature, "orderer signature does not verify");

        for (const auto& tx : b.txs) {
            if (tx.body_digest() != tx.tx_id) {
                note(h, errc::bad_tx_digest,
                     "tx body does not redigest to tx_id " + tx.tx_id.hex());
                continue;
            }
            auto body = canonical_encode(tx.body_doc());
            auto it = registry.find(tx.submitter);
            if (it == registry.end()) {
                note(h, errc::unknown_submitter,
                     "no registered key for submitter " + tx.submitter.hex());
            } else if (!verify_bytes(bytes_view(body.data(), body.size()), tx.sig,
                                     it->second)) {
                note(h, errc::bad_signature, "tx signature invalid: " + tx.tx_id.hex());
            }
            if (!seen_nonces.emplace(tx.project_id, tx.submitter, tx.nonce).second)
                note(h, errc::replayed_nonce, "nonce reused: " + tx.tx_id.hex());
            collect_announced_keys(tx, registry);
        }
    }
    return report;
}

}  // namespace devchain
