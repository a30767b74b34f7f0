#pragma once

#include <cstdint>
#include <vector>

#include "devchain/tx.hpp"

namespace devchain {

struct block_header {
    uint64_t height = 0;
    hash32 prev_hash;  // 32 zero bytes for genesis
    uint64_t block_timestamp = 0;  // ms, assigned by the orderer
    hash32 merkle_root;

    doc to_doc() const;
    static block_header from_doc(const doc& d);

    hash32 hash() const { return digest_of(to_doc()); }
};

struct block {
    block_header header;
    std::vector<transaction> txs;
    signature orderer_signature;  // over the canonical header

    doc to_doc() const;
    static block from_doc(const doc& d);
};

// Binary merkle tree over tx ids. Odd levels duplicate the last node;
// the empty list yields sha256 of the empty byte string.
hash32 compute_merkle_root(const std::vector<hash32>& tx_ids);

std::vector<hash32> tx_ids_of(const std::vector<transaction>& txs);

block make_block(uint64_t height, const hash32& prev_hash, uint64_t timestamp,
                 std::vector<transaction> txs, const secret_key& orderer_key);

}  // namespace devchain
